"""Graph-CNF solving: DIMACS clauses plus symbolic-graph reachability atoms.

File format (one directed graph per ``digraph`` line):

    c optional comments
    p cnf <vars> <clauses>
    digraph <nodes> <edges> <graph-id>
    edge <graph-id> <src> <dst> <dimacs-var>
    reach <graph-id> <src> <dst> <dimacs-var>
    <clause lines, 0-terminated>

Reachability is enforced lazily: full propositional models are checked
against the real graph; a true-but-unreachable atom learns a frontier-cut
clause, a false-but-reachable atom learns a path clause.
"""

from __future__ import annotations

from collections import deque

from .core import Sat


class GnfError(Exception):
    pass


class Graph:
    def __init__(self, n: int, gid: int):
        self.n = n
        self.gid = gid
        self.edges = []  # (src, dst, sat var)
        self.reaches = []  # (src, dst, sat var)


def parse_gnf(text: str):
    n_vars = 0
    clauses = []
    graphs = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            n_vars = int(parts[2])
        elif parts[0] == "digraph":
            gid = int(parts[3])
            graphs[gid] = Graph(int(parts[1]), gid)
        elif parts[0] == "edge":
            gid, s, t, var = (int(x) for x in parts[1:5])
            graphs[gid].edges.append((s, t, var))
        elif parts[0] == "reach":
            gid, s, t, var = (int(x) for x in parts[1:5])
            graphs[gid].reaches.append((s, t, var))
        else:
            lits = [int(x) for x in parts]
            if lits[-1] != 0:
                raise GnfError(f"clause not 0-terminated: {line!r}")
            clauses.append(lits[:-1])
    return n_vars, clauses, list(graphs.values())


def _to_internal(lit: int) -> int:
    v = abs(lit) - 1
    return v << 1 | (1 if lit < 0 else 0)


def solve_gnf(text: str):
    """Returns (status, model-bools or None); status in {'sat', 'unsat'}."""
    n_vars, clauses, graphs = parse_gnf(text)
    sat = Sat()
    max_var = n_vars
    for g in graphs:
        for _, _, var in g.edges + g.reaches:
            max_var = max(max_var, var)
    for _ in range(max_var):
        sat.new_var()
    for cl in clauses:
        sat.add_clause([_to_internal(l) for l in cl])

    while True:
        if not sat.solve():
            return "unsat", None
        model = sat.model()
        lemmas = _reach_lemmas(graphs, model)
        if not lemmas:
            return "sat", model
        sat.reset_to_root()
        for cl in lemmas:
            if not sat.add_clause(cl):
                return "unsat", None


def _reach_lemmas(graphs, model):
    lemmas = []
    for g in graphs:
        adj = {}
        for s, t, var in g.edges:
            if model[var - 1]:
                adj.setdefault(s, []).append((t, var))
        by_src = {}
        for s, t, var in g.reaches:
            by_src.setdefault(s, []).append((t, var))
        for src, wants in by_src.items():
            seen = {src: None}  # node -> edge var used to enter it
            q = deque([src])
            while q:
                x = q.popleft()
                for y, var in adj.get(x, ()):
                    if y not in seen:
                        seen[y] = (x, var)
                        q.append(y)
            for dst, avar in wants:
                is_true = model[avar - 1]
                reached = dst in seen
                if is_true and not reached:
                    # atom -> some currently-false frontier edge must flip on
                    cut = [
                        (var - 1) << 1
                        for s, t, var in g.edges
                        if s in seen and t not in seen
                    ]
                    lemmas.append([(avar - 1) << 1 | 1] + cut)
                elif not is_true and reached:
                    path_edges = []
                    x = dst
                    while x != src:
                        px, var = seen[x]
                        path_edges.append(var)
                        x = px
                    lemmas.append(
                        [(avar - 1) << 1] + [(v - 1) << 1 | 1 for v in path_edges]
                    )
    return lemmas
