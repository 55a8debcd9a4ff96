"""Line-based text formats for instances, placements and metrics.

Every block starts with a header line (``dimap+ v1``, ``placement v1`` or
``metric v1``).  A stream may hold several blocks back to back; ``solve``
writes the instance followed by its placement so that ``eval`` can read both
from one pipe.  Floats are written with ``repr`` so parsing round-trips
exactly.  ``#`` starts a comment.
"""

from __future__ import annotations

import math
from typing import Iterable, TextIO

import numpy as np

from pinarrange.model import GridSpec, Instance, InstanceError, Placement, Point, evaluate_cost, validate_instance
from pinarrange.spreading_lp import SpreadingMetric

INSTANCE_HEADER = "dimap+ v1"
PLACEMENT_HEADER = "placement v1"
METRIC_HEADER = "metric v1"
HEADERS = (INSTANCE_HEADER, PLACEMENT_HEADER, METRIC_HEADER)

CLI_MODES = {"unbounded": "unbounded", "bounded": "bounded", "eps": "eps_violation"}
FILE_MODES = {v: k for k, v in CLI_MODES.items()}


def _num(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def _clean(lines: Iterable[str]) -> list[str]:
    out = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def split_blocks(text: str) -> list[tuple[str, list[str]]]:
    """Header-delimited blocks of a stream, comments and blank lines dropped."""
    blocks: list[tuple[str, list[str]]] = []
    for line in _clean(text.splitlines()):
        if line in HEADERS:
            blocks.append((line, []))
        elif not blocks:
            raise InstanceError(f"expected a header line, got {line!r}")
        else:
            blocks[-1][1].append(line)
    return blocks


# ---------------------------------------------------------------- instances


def format_instance(inst: Instance) -> str:
    g = inst.grid
    lines = [INSTANCE_HEADER, f"dim {inst.dim}", f"vertices {inst.n}"]
    if g.mode == "bounded":
        lines.append(f"grid bounded {g.side}")
    elif g.mode == "eps_violation":
        lines.append(f"grid eps {_num(g.eps)}")
    else:
        lines.append("grid unbounded")
    for t in sorted(inst.terminals):
        lines.append(f"terminal {t} at " + " ".join(str(int(c)) for c in inst.pins[t]))
    for u, v, w in inst.edges:
        lines.append(f"edge {u} {v} {_num(w)}")
    return "\n".join(lines) + "\n"


def _int(tok: str, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise InstanceError(f"bad {what}: {tok!r}") from None


def _float(tok: str, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise InstanceError(f"bad {what}: {tok!r}") from None


def parse_instance_lines(lines: list[str]) -> Instance:
    dim = n = None
    grid = GridSpec()
    terminals: list[int] = []
    pins: dict[int, Point] = {}
    edges: list[tuple[int, int, float]] = []
    for line in lines:
        tok = line.split()
        key = tok[0]
        if key == "dim" and len(tok) == 2:
            dim = _int(tok[1], "dimension")
        elif key == "vertices" and len(tok) == 2:
            n = _int(tok[1], "vertex count")
        elif key == "grid" and tok[1:] == ["unbounded"]:
            grid = GridSpec("unbounded")
        elif key == "grid" and len(tok) == 3 and tok[1] == "bounded":
            grid = GridSpec("bounded", _int(tok[2], "grid side"))
        elif key == "grid" and len(tok) == 3 and tok[1] == "eps":
            grid = GridSpec("eps_violation", 0, _float(tok[2], "eps"))
        elif key == "terminal" and len(tok) >= 4 and tok[2] == "at":
            t = _int(tok[1], "vertex-id")
            if t in pins:
                raise InstanceError(f"terminal {t} listed twice")
            terminals.append(t)
            pins[t] = tuple(_int(c, "coordinate") for c in tok[3:])
        elif key == "edge" and len(tok) == 4:
            edges.append((_int(tok[1], "vertex-id"), _int(tok[2], "vertex-id"), _float(tok[3], "weight")))
        else:
            raise InstanceError(f"unrecognised line {line!r}")
    if dim is None or n is None:
        raise InstanceError("instance needs dim and vertices lines")
    return validate_instance(Instance(dim, n, tuple(edges), tuple(terminals), pins, grid))


def parse_instance(text: str) -> Instance:
    blocks = [b for b in split_blocks(text) if b[0] == INSTANCE_HEADER]
    if not blocks:
        raise InstanceError("no instance block found")
    return parse_instance_lines(blocks[0][1])


# ---------------------------------------------------------------- placements


def format_placement(placement: Placement) -> str:
    lines = [PLACEMENT_HEADER]
    for v in sorted(placement.assignment):
        lines.append(f"vertex {v} " + " ".join(str(int(c)) for c in placement.assignment[v]))
    return "\n".join(lines) + "\n"


def parse_assignment_lines(lines: list[str]) -> dict[int, Point]:
    out: dict[int, Point] = {}
    for line in lines:
        tok = line.split()
        if tok[0] != "vertex" or len(tok) < 3:
            raise InstanceError(f"unrecognised line {line!r}")
        v = _int(tok[1], "vertex-id")
        if v in out:
            raise InstanceError(f"vertex {v} placed twice")
        out[v] = tuple(_int(c, "coordinate") for c in tok[2:])
    return out


def parse_placement(text: str, inst: Instance | None = None) -> Placement:
    """Placement block of a stream; cost is evaluated when the instance is known."""
    blocks = [b for b in split_blocks(text) if b[0] == PLACEMENT_HEADER]
    if not blocks:
        raise InstanceError("no placement block found")
    assignment = parse_assignment_lines(blocks[-1][1])
    if inst is None:
        return Placement(dict(sorted(assignment.items())), "unknown", math.nan)
    missing = set(range(inst.n)) - set(assignment)
    if missing:
        raise InstanceError(f"placement misses vertex {min(missing)}")
    return Placement(dict(sorted(assignment.items())), inst.grid.mode, evaluate_cost(inst, assignment))


# ---------------------------------------------------------------- metrics


def format_metric(metric: SpreadingMetric) -> str:
    n = metric.n
    ids = metric.vertices or tuple(range(n))
    lines = [METRIC_HEADER, f"n {n}", f"objective {_num(metric.objective)}"]
    if ids != tuple(range(n)):
        lines.append("ids " + " ".join(map(str, ids)))
    d = metric.dist
    for i in range(n):
        for j in range(i + 1, n):
            lines.append(f"{ids[i]} {ids[j]} {_num(d[i, j])}")
    return "\n".join(lines) + "\n"


def parse_metric(text: str) -> SpreadingMetric:
    blocks = [b for b in split_blocks(text) if b[0] == METRIC_HEADER]
    if not blocks:
        raise InstanceError("no metric block found")
    lines = blocks[0][1]
    n = objective = None
    ids: tuple[int, ...] = ()
    pairs = []
    for line in lines:
        tok = line.split()
        if tok[0] == "n" and len(tok) == 2:
            n = _int(tok[1], "size")
        elif tok[0] == "objective" and len(tok) == 2:
            objective = _float(tok[1], "objective")
        elif tok[0] == "ids":
            ids = tuple(_int(t, "vertex-id") for t in tok[1:])
        elif len(tok) == 3:
            pairs.append((_int(tok[0], "vertex-id"), _int(tok[1], "vertex-id"), _float(tok[2], "distance")))
        else:
            raise InstanceError(f"unrecognised line {line!r}")
    if n is None:
        raise InstanceError("metric needs an n line")
    if len(pairs) != n * (n - 1) // 2:
        raise InstanceError(f"metric of size {n} needs {n * (n - 1) // 2} distances, got {len(pairs)}")
    pos = {v: i for i, v in enumerate(ids or range(n))}
    d = np.zeros((n, n))
    for u, v, x in pairs:
        if u not in pos or v not in pos:
            raise InstanceError(f"bad vertex-id in metric pair ({u}, {v})")
        d[pos[u], pos[v]] = d[pos[v], pos[u]] = x
    return SpreadingMetric(d, math.nan if objective is None else objective, vertices=ids)


def read_text(path: str | None, stdin: TextIO) -> str:
    if path is None or path == "-":
        return stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()
