"""Textual instance format (AIR) and GML topology ingestion.

AIR is a line-oriented UTF-8 format with ``#`` comments:

    SCHEMA comm=bitmask tags=c1,c2        # or: comm=counter width=2
    NODES r1 r2 ...                       # may continue over lines
    EDGES r1->r2 r2->r1 ...
    DEST r1
    POLICY r1->r2:
      match comm_has(c1) => set_lp(200)
      match true => allow
    FAILED r2->r3 ...                     # optional

The SCHEMA line also accepts init_lp=/init_comm=/init_med= for the
destination's initial announcement.  GML files use standard node/edge blocks;
an optional per-edge ``rel`` attribute in {cp, pc, pp} carries the business
relationship of source relative to target.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .srp import Attribute, AttributeSchema, CommMode, Topology
from .policy import (
    Action,
    ActionKind,
    EdgePolicy,
    Match,
    MatchActionRule,
    MatchKind,
    PathPattern,
    PolicyIR,
)


class AirParseError(Exception):
    def __init__(self, msg: str, line: Optional[int] = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{msg}{where}")


class AirSemanticError(Exception):
    pass


_SECTIONS = ("SCHEMA", "NODES", "EDGES", "DEST", "POLICY", "FAILED", "RELS")


@dataclass
class _Line:
    no: int
    text: str


def _logical_lines(text: str):
    out = []
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            out.append(_Line(no, body))
    return out


def _parse_edge_token(tok: str, line: int) -> tuple:
    if "->" not in tok:
        raise AirParseError(f"expected an a->b edge, got {tok!r}", line)
    a, b = tok.split("->", 1)
    if not a or not b:
        raise AirParseError(f"malformed edge {tok!r}", line)
    return a, b


def _parse_call(tok: str, line: int):
    """Split name(arg) syntax; bare names get an empty arg."""
    m = re.fullmatch(r"([a-z_]+)(?:\((.*)\))?", tok.strip())
    if not m:
        raise AirParseError(f"malformed term {tok!r}", line)
    return m.group(1), m.group(2)


def _parse_match(src: str, line: int, names: dict) -> Match:
    name, arg = _parse_call(src, line)
    if name == "true":
        return Match(MatchKind.ALWAYS)
    if name == "comm_has":
        if not arg:
            raise AirParseError("comm_has needs a tag", line)
        return Match(MatchKind.COMM_HAS, arg.strip())
    if name in ("comm_equals", "comm_eq"):
        try:
            return Match(MatchKind.COMM_EQUALS, int(arg))
        except (TypeError, ValueError):
            raise AirParseError(f"comm_equals needs an integer, got {arg!r}", line)
    if name == "path_contains":
        if not arg:
            raise AirParseError("path_contains needs a pattern", line)
        items = [s.strip() for s in arg.split(",") if s.strip()]
        edge = None
        nodes = []
        for i, item in enumerate(items):
            if "->" in item:
                if i != 0:
                    raise AirParseError("pattern edge must come first", line)
                a, b = _parse_edge_token(item, line)
                edge = (_resolve(a, names, line), _resolve(b, names, line))
            else:
                nodes.append(_resolve(item, names, line))
        return Match(MatchKind.PATH_CONTAINS, PathPattern(edge, tuple(nodes)))
    raise AirParseError(f"unknown match {name!r}", line)


def _parse_action(src: str, line: int) -> Action:
    name, arg = _parse_call(src, line)
    try:
        if name == "set_lp":
            return Action(ActionKind.SET_LP, int(arg))
        if name == "set_comm":
            return Action(ActionKind.SET_COMM, int(arg))
        if name == "incr_comm":
            return Action(ActionKind.INCR_COMM, int(arg if arg else 1))
    except (TypeError, ValueError):
        raise AirParseError(f"{name} needs an integer argument", line)
    if name == "add_tag":
        if not arg:
            raise AirParseError("add_tag needs a tag", line)
        return Action(ActionKind.ADD_TAG, arg.strip())
    if name == "drop":
        return Action(ActionKind.DROP)
    if name == "allow":
        return Action(ActionKind.ALLOW)
    raise AirParseError(f"unknown action {name!r}", line)


def _resolve(name: str, names: dict, line: int) -> int:
    if name not in names:
        raise AirParseError(f"unknown node {name!r}", line)
    return names[name]


def _parse_schema(tokens, line: int):
    kv = {}
    for tok in tokens:
        if "=" not in tok:
            raise AirParseError(f"SCHEMA expects key=value, got {tok!r}", line)
        k, v = tok.split("=", 1)
        kv[k] = v
    mode = kv.pop("comm", "bitmask")
    try:
        init = {
            "lp": int(kv.pop("init_lp", 100)),
            "comms": int(kv.pop("init_comm", 0)),
            "med": int(kv.pop("init_med", 0)),
        }
    except ValueError:
        raise AirParseError("SCHEMA init values must be integers", line)
    if mode == "bitmask":
        tags = tuple(t for t in kv.pop("tags", "").split(",") if t)
        schema = AttributeSchema(
            comm_mode=CommMode.BITMASK, comm_width=max(len(tags), 1), tags=tags
        )
    elif mode == "counter":
        try:
            width = int(kv.pop("width"))
        except KeyError:
            raise AirParseError("counter schema needs width=", line)
        except ValueError:
            raise AirParseError("counter width must be an integer", line)
        schema = AttributeSchema(comm_mode=CommMode.COUNTER, comm_width=width)
    else:
        raise AirParseError(f"unknown comm mode {mode!r}", line)
    if kv:
        raise AirParseError(f"unknown SCHEMA keys {sorted(kv)}", line)
    return schema, init


def parse_air(text: str):
    """Parse AIR text into (Topology, PolicyIR, init Attribute, failed edges)."""
    lines = _logical_lines(text)
    schema = AttributeSchema(comm_mode=CommMode.BITMASK, comm_width=1, tags=())
    init = {"lp": 100, "comms": 0, "med": 0}
    node_names: list = []
    edge_tokens: list = []
    dest_name = None
    failed_tokens: list = []
    rel_tokens: list = []
    policy_blocks: list = []  # (line, edge token, [rule lines])

    section = None
    current_block = None
    for ln in lines:
        tokens = ln.text.split()
        head = tokens[0].upper()
        if head in _SECTIONS:
            current_block = None
            if head == "SCHEMA":
                schema, init = _parse_schema(tokens[1:], ln.no)
                section = None
            elif head == "NODES":
                node_names.extend((t, ln.no) for t in tokens[1:])
                section = "NODES"
            elif head == "EDGES":
                edge_tokens.extend((t, ln.no) for t in tokens[1:])
                section = "EDGES"
            elif head == "FAILED":
                failed_tokens.extend((t, ln.no) for t in tokens[1:])
                section = "FAILED"
            elif head == "RELS":
                rel_tokens.extend((t, ln.no) for t in tokens[1:])
                section = "RELS"
            elif head == "DEST":
                if len(tokens) != 2:
                    raise AirParseError("DEST expects one node", ln.no)
                dest_name = (tokens[1], ln.no)
                section = None
            elif head == "POLICY":
                spec = ln.text[len("POLICY"):].strip()
                if not spec.endswith(":"):
                    raise AirParseError("POLICY header must end with ':'", ln.no)
                current_block = (ln.no, spec[:-1].strip(), [])
                policy_blocks.append(current_block)
                section = None
            continue
        if tokens[0] == "match":
            if current_block is None:
                raise AirParseError("rule outside a POLICY block", ln.no)
            current_block[2].append(ln)
            continue
        if section in ("NODES", "EDGES", "FAILED", "RELS"):
            target = {
                "NODES": node_names,
                "EDGES": edge_tokens,
                "FAILED": failed_tokens,
                "RELS": rel_tokens,
            }[section]
            target.extend((t, ln.no) for t in tokens)
            continue
        raise AirParseError(f"unexpected line {ln.text!r}", ln.no)

    if not node_names:
        raise AirParseError("no NODES section")
    if dest_name is None:
        raise AirParseError("no DEST section")

    names: dict = {}
    for name, no in node_names:
        if name in names:
            raise AirParseError(f"duplicate node {name!r}", no)
        names[name] = len(names)

    edges = []
    edge_set = set()
    for tok, no in edge_tokens:
        a, b = _parse_edge_token(tok, no)
        e = (_resolve(a, names, no), _resolve(b, names, no))
        if e[0] == e[1]:
            raise AirParseError(f"self-loop {tok!r}", no)
        if e in edge_set:
            raise AirParseError(f"duplicate edge {tok!r}", no)
        edge_set.add(e)
        edges.append(e)

    dest = _resolve(dest_name[0], names, dest_name[1])
    topo = Topology(
        n=len(names), edges=tuple(edges), dest=dest, names=tuple(names)
    )

    failed = set()
    for tok, no in failed_tokens:
        a, b = _parse_edge_token(tok, no)
        e = (_resolve(a, names, no), _resolve(b, names, no))
        if e not in edge_set:
            raise AirParseError(f"failed edge {tok!r} not in EDGES", no)
        failed.add(e)

    rels = {}
    for tok, no in rel_tokens:
        if "=" not in tok:
            raise AirParseError(f"RELS expects a->b=rel, got {tok!r}", no)
        pair, rel = tok.rsplit("=", 1)
        if rel not in ("cp", "pc", "pp", "intra"):
            raise AirParseError(f"unknown relationship {rel!r}", no)
        a, b = _parse_edge_token(pair, no)
        e = (_resolve(a, names, no), _resolve(b, names, no))
        if e not in edge_set:
            raise AirParseError(f"relationship on non-edge {tok!r}", no)
        rels[e] = rel

    edge_policies = {}
    for no, spec, rule_lines in policy_blocks:
        a, b = _parse_edge_token(spec, no)
        e = (_resolve(a, names, no), _resolve(b, names, no))
        if e not in edge_set:
            raise AirParseError(f"policy on unknown edge {spec!r}", no)
        if e in edge_policies:
            raise AirParseError(f"duplicate POLICY block for {spec!r}", no)
        rules = []
        for rl in rule_lines:
            body = rl.text[len("match"):].strip()
            if "=>" not in body:
                raise AirParseError("rule needs 'match <pred> => <actions>'", rl.no)
            pred_src, act_src = body.split("=>", 1)
            match = _parse_match(pred_src.strip(), rl.no, names)
            actions = tuple(
                _parse_action(s, rl.no) for s in act_src.split(",") if s.strip()
            )
            if not actions:
                raise AirParseError("rule needs at least one action", rl.no)
            rules.append(MatchActionRule(match, actions))
        edge_policies[e] = EdgePolicy(e, tuple(rules))

    policy = PolicyIR(schema=schema, edge_policies=edge_policies, relationships=rels)
    try:
        policy.validate(topo)
        _check_tags(policy)
    except Exception as exc:
        raise AirSemanticError(str(exc)) from exc

    init_attr = Attribute(
        lp=init["lp"], pathlen=0, comms=init["comms"], med=init["med"],
        rid=dest, as_path=(),
    )
    if init_attr.comms >= (1 << schema.comm_width):
        raise AirSemanticError("init_comm exceeds community width")
    return topo, policy, init_attr, frozenset(failed)


def _check_tags(policy: PolicyIR) -> None:
    for e, ep in policy.edge_policies.items():
        for i, rule in enumerate(ep.rules):
            refs = []
            if rule.match.kind is MatchKind.COMM_HAS:
                refs.append(rule.match.value)
            refs.extend(
                a.value for a in rule.actions if a.kind is ActionKind.ADD_TAG
            )
            for tag in refs:
                if tag not in policy.schema.tags:
                    raise AirSemanticError(
                        f"rule {i + 1} on edge {e} references undeclared tag {tag!r}"
                    )


# ---------------------------------------------------------------------------
# printing


def _format_match(m: Match, topo: Topology) -> str:
    if m.kind is MatchKind.ALWAYS:
        return "true"
    if m.kind is MatchKind.COMM_HAS:
        return f"comm_has({m.value})"
    if m.kind is MatchKind.COMM_EQUALS:
        return f"comm_equals({m.value})"
    pat = m.value
    items = []
    if pat.edge is not None:
        items.append(f"{topo.name(pat.edge[0])}->{topo.name(pat.edge[1])}")
    items.extend(topo.name(n) for n in pat.nodes)
    return f"path_contains({','.join(items)})"


def _format_action(a: Action) -> str:
    if a.kind in (ActionKind.DROP, ActionKind.ALLOW):
        return a.kind.value
    return f"{a.kind.value}({a.value})"


def _wrap(prefix: str, tokens, per_line: int = 12) -> list:
    out = []
    for i in range(0, len(tokens), per_line):
        head = prefix if i == 0 else " " * len(prefix)
        out.append(head + " ".join(tokens[i : i + per_line]))
    return out or [prefix.rstrip()]


def print_air(topo: Topology, policy: PolicyIR, init_attr: Attribute,
              failed=frozenset()) -> str:
    """Render an instance back to AIR text (inverse of parse_air)."""
    schema = policy.schema
    parts = []
    if schema.comm_mode is CommMode.BITMASK:
        schema_line = "SCHEMA comm=bitmask"
        if schema.tags:
            schema_line += " tags=" + ",".join(schema.tags)
    else:
        schema_line = f"SCHEMA comm=counter width={schema.comm_width}"
    if init_attr.lp != 100:
        schema_line += f" init_lp={init_attr.lp}"
    if init_attr.comms:
        schema_line += f" init_comm={init_attr.comms}"
    if init_attr.med:
        schema_line += f" init_med={init_attr.med}"
    parts.append(schema_line)
    parts.extend(_wrap("NODES ", [topo.name(v) for v in topo.nodes]))
    edge_toks = [f"{topo.name(v)}->{topo.name(u)}" for v, u in topo.edges]
    parts.extend(_wrap("EDGES ", edge_toks, per_line=8))
    parts.append(f"DEST {topo.name(topo.dest)}")
    if failed:
        toks = sorted(f"{topo.name(v)}->{topo.name(u)}" for v, u in failed)
        parts.extend(_wrap("FAILED ", toks, per_line=8))
    if policy.relationships:
        toks = [
            f"{topo.name(v)}->{topo.name(u)}={policy.relationships[(v, u)]}"
            for v, u in sorted(policy.relationships)
        ]
        parts.extend(_wrap("RELS ", toks, per_line=6))
    for e in sorted(policy.edge_policies):
        ep = policy.edge_policies[e]
        if not ep.rules:
            continue
        parts.append(f"POLICY {topo.name(e[0])}->{topo.name(e[1])}:")
        for rule in ep.rules:
            acts = ", ".join(_format_action(a) for a in rule.actions)
            parts.append(f"  match {_format_match(rule.match, topo)} => {acts}")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# GML


class GmlError(Exception):
    pass


_GML_TOKEN = re.compile(r'"((?:[^"\\]|\\.)*)"|\[|\]|[^\s\[\]]+')


def _gml_tokens(text: str):
    for m in _GML_TOKEN.finditer(text):
        if m.group(1) is not None:
            yield ("str", m.group(1))
        else:
            yield ("tok", m.group(0))


def _gml_parse(tokens, depth=0):
    """Parse a GML object body into a list of (key, value) pairs."""
    out = []
    it = tokens
    while True:
        try:
            kind, key = next(it)
        except StopIteration:
            if depth:
                raise GmlError("unexpected end of file inside a block")
            return out
        if kind == "tok" and key == "]":
            if not depth:
                raise GmlError("unbalanced ']'")
            return out
        if kind != "tok":
            raise GmlError(f"expected a key, got string {key!r}")
        try:
            vk, val = next(it)
        except StopIteration:
            raise GmlError(f"key {key!r} has no value")
        if vk == "tok" and val == "[":
            out.append((key, _gml_parse(it, depth + 1)))
        elif vk == "str":
            out.append((key, val))
        else:
            try:
                out.append((key, int(val)))
            except ValueError:
                try:
                    out.append((key, float(val)))
                except ValueError:
                    out.append((key, val))
    return out


def ingest_gml(text: str, relationships: Optional[dict] = None, dest: int = 0):
    """Build (Topology, PolicyIR) from GML, materializing both edge directions.

    ``relationships`` optionally maps (source_id, target_id) GML id pairs to
    cp/pc/pp labels, overriding per-edge ``rel`` attributes.  When any edge is
    labeled, all must be, and the Gao-Rexford policy is instantiated;
    otherwise the default policy is used.  ``dest`` is the dense index of the
    destination (GML carries no destination itself).
    """
    doc = _gml_parse(iter(_gml_tokens(text)))
    graphs = [v for k, v in doc if k == "graph"]
    if not graphs:
        raise GmlError("no graph block")
    body = graphs[0]

    ids: dict = {}
    labels = []
    for key, val in body:
        if key != "node":
            continue
        fields = dict(val)
        if "id" not in fields:
            raise GmlError("node without id")
        nid = fields["id"]
        if nid in ids:
            raise GmlError(f"duplicate node id {nid}")
        ids[nid] = len(ids)
        labels.append(str(fields.get("label", f"n{nid}")))
    # GML labels may repeat across nodes; disambiguate for display names
    seen: dict = {}
    names = []
    for lbl in labels:
        lbl = lbl.replace(" ", "_")
        count = seen.get(lbl, 0)
        seen[lbl] = count + 1
        names.append(lbl if count == 0 else f"{lbl}_{count}")

    flip = {"cp": "pc", "pc": "cp", "pp": "pp", "intra": "intra"}
    edges = []
    rels: dict = {}
    edge_set = set()
    for key, val in body:
        if key != "edge":
            continue
        fields = dict(val)
        try:
            s, t = ids[fields["source"]], ids[fields["target"]]
        except KeyError as exc:
            raise GmlError(f"edge references unknown node {exc}")
        if s == t:
            continue
        rel = fields.get("rel")
        if relationships and (fields["source"], fields["target"]) in relationships:
            rel = relationships[(fields["source"], fields["target"])]
        if rel is not None and rel not in flip:
            raise GmlError(f"unknown relationship {rel!r}")
        for e, r in (((s, t), rel), ((t, s), flip[rel] if rel else None)):
            if e in edge_set:
                continue
            edge_set.add(e)
            edges.append(e)
            if r is not None:
                rels[e] = r

    topo = Topology(n=len(ids), edges=tuple(edges), dest=dest, names=tuple(names))
    if rels:
        missing = [e for e in edges if e not in rels]
        if missing:
            raise GmlError(f"edges without relationship labels: {missing[:3]}")
        from .benchgen import gao_rexford_policy

        policy = gao_rexford_policy(topo, rels)
    else:
        schema = AttributeSchema(comm_mode=CommMode.BITMASK, comm_width=1, tags=())
        policy = PolicyIR(schema=schema)
    return topo, policy
