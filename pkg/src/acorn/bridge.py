"""Run an external solver process on an emitted script and decode results.

One process per query: the system is serialized to a temp file, the command
template's ``{file}`` placeholder is substituted, stdout is parsed back into
a name->value model.  The default command invokes the bundled solver module;
set ACORN_SOLVER to swap in any SMT-LIB solver (e.g. ``z3 {file}``).
"""

from __future__ import annotations

import os
import shlex
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from . import formula as F
from .emit import to_gnf, to_smt2
from .minismt.smtparse import parse_sexprs, tokenize

STANDARD = "standard"
GRAPH = "graph"

ENV_SOLVER = "ACORN_SOLVER"


class BridgeError(Exception):
    pass


@dataclass(frozen=True)
class SolverConfig:
    command: str
    timeout: float = 600.0
    backend: str = STANDARD
    keep_files: bool = False

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


def default_command() -> str:
    return f"{shlex.quote(sys.executable)} -m acorn.minismt {{file}}"


def default_config(backend: str = STANDARD, timeout: float = 600.0) -> SolverConfig:
    command = os.environ.get(ENV_SOLVER) or default_command()
    return SolverConfig(command=command, timeout=timeout, backend=backend)


@dataclass(frozen=True)
class Model:
    values: dict  # name -> bool | int

    def __getitem__(self, name):
        return self.values[name]

    def get(self, name, default=None):
        return self.values.get(name, default)


@dataclass(frozen=True)
class SolverOutcome:
    status: str  # sat | unsat | timeout | error
    model: Optional[Model] = None
    wall_time: float = 0.0
    detail: str = ""

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"


def _subprocess_env() -> dict:
    """Make the package importable by `python -m acorn.minismt` subprocesses."""
    env = dict(os.environ)
    pkg_root = str(Path(__file__).resolve().parent.parent)
    extra = env.get("PYTHONPATH")
    env["PYTHONPATH"] = pkg_root if not extra else pkg_root + os.pathsep + extra
    return env


def _parse_model_value(sx):
    if sx == "true":
        return True
    if sx == "false":
        return False
    if isinstance(sx, str) and sx.startswith("#b"):
        return int(sx[2:], 2)
    if isinstance(sx, str) and sx.startswith("#x"):
        return int(sx[2:], 16)
    if isinstance(sx, list) and len(sx) == 3 and sx[0] == "_":
        return int(sx[1][2:])
    raise BridgeError(f"unparsable model value {sx!r}")


def _parse_smt2_output(out: str, system: F.ConstraintSystem) -> SolverOutcome:
    lines = [ln.strip() for ln in out.splitlines() if ln.strip()]
    if not lines:
        return SolverOutcome(status="error", detail="empty solver output")
    status = lines[0]
    if status == "unsat":
        return SolverOutcome(status="unsat")
    if status != "sat":
        return SolverOutcome(status="error", detail=f"solver said {status!r}")
    rest = "\n".join(lines[1:])
    values = {}
    try:
        for sx in parse_sexprs(tokenize(rest)):
            entries = sx
            if entries and entries[0] == "model":
                entries = entries[1:]
            for entry in entries:
                if not isinstance(entry, list) or not entry or entry[0] != "define-fun":
                    continue
                name = entry[1]
                values[name] = _parse_model_value(entry[-1])
    except Exception as exc:
        return SolverOutcome(status="error", detail=f"model parse failed: {exc}")
    full = {}
    for name, sort in system.variables.items():
        if name in values:
            full[name] = values[name]
        else:
            full[name] = False if isinstance(sort, F.BoolSort) else 0
    return SolverOutcome(status="sat", model=Model(full))


def _parse_gnf_output(out: str, system: F.ConstraintSystem, names: dict) -> SolverOutcome:
    status = None
    true_vars = set()
    for line in out.splitlines():
        line = line.strip()
        if line.startswith("s "):
            status = line[2:].strip()
        elif line.startswith("v "):
            for tok in line[2:].split():
                val = int(tok)
                if val > 0:
                    true_vars.add(val)
    if status == "UNSATISFIABLE":
        return SolverOutcome(status="unsat")
    if status != "SATISFIABLE":
        return SolverOutcome(status="error", detail=f"no witness status in output")
    full = {}
    for name, sort in system.variables.items():
        enc = names.get(name)
        if enc is None:
            full[name] = False if isinstance(sort, F.BoolSort) else 0
        elif isinstance(enc, int):
            full[name] = enc in true_vars
        else:
            full[name] = sum(1 << i for i, v in enumerate(enc) if v in true_vars)
    return SolverOutcome(status="sat", model=Model(full))


def solve(system: F.ConstraintSystem, cfg: SolverConfig) -> SolverOutcome:
    if cfg.backend == STANDARD:
        script, names, suffix = to_smt2(system), None, ".smt2"
        if system.has_reaches():
            raise BridgeError("reaches atoms need the graph backend")
    elif cfg.backend == GRAPH:
        gnf = to_gnf(system, system.graph_nodes, system.graph_edges)
        script, names, suffix = gnf.text, gnf.names, ".gnf"
    else:
        raise BridgeError(f"unknown backend {cfg.backend!r}")

    fd, path = tempfile.mkstemp(suffix=suffix, prefix="acorn_")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(script)
        cmd = shlex.split(cfg.command.replace("{file}", shlex.quote(path)))
        start = time.monotonic()
        try:
            proc = subprocess.run(
                cmd,
                capture_output=True,
                text=True,
                timeout=cfg.timeout,
                env=_subprocess_env(),
            )
        except subprocess.TimeoutExpired:
            return SolverOutcome(
                status="timeout", wall_time=time.monotonic() - start
            )
        except FileNotFoundError as exc:
            return SolverOutcome(status="error", detail=f"solver missing: {exc}")
        wall = time.monotonic() - start
        out = proc.stdout
        if proc.returncode != 0 and "sat" not in out:
            return SolverOutcome(
                status="error",
                wall_time=wall,
                detail=f"exit {proc.returncode}: {proc.stderr.strip()[:500]}",
            )
        if cfg.backend == STANDARD:
            outcome = _parse_smt2_output(out, system)
        else:
            outcome = _parse_gnf_output(out, system, names)
        return replace(outcome, wall_time=wall)
    finally:
        if cfg.keep_files:
            pass
        else:
            try:
                os.unlink(path)
            except OSError:
                pass


def _nchoice_block(system: F.ConstraintSystem, model: Model) -> F.Term:
    """Blocking clause over the neighbor-choice vector of a model."""
    eqs = []
    for name, sort in system.variables.items():
        if not name.startswith("nchoice_"):
            continue
        eqs.append(
            F.eq(F.BVVar(name, sort.width), F.BVLit(int(model.get(name, 0)), sort.width))
        )
    return F.bnot(F.band(*eqs))


def enumerate_models(system: F.ConstraintSystem, cfg: SolverConfig, limit: int):
    """All models up to ``limit``, blocking each routing tree as it is found."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    work = system.copy()
    models = []
    while len(models) < limit:
        outcome = solve(work, cfg)
        if outcome.is_unsat:
            break
        if not outcome.is_sat:
            raise BridgeError(f"solver failed during enumeration: {outcome.detail}")
        models.append(outcome.model)
        work = work.copy()
        work.add(_nchoice_block(work, outcome.model))
        if isinstance(work.assertions[-1], F.BoolLit) and not work.assertions[-1].value:
            break  # no choice variables at all: a single model exists
    return models
