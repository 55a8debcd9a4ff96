"""Exhaustive search over injections of the free vertices; ground truth for tiny cases."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from pinarrange.model import Instance, Placement, Point

MAX_FREE_BOUNDED = 9
DEFAULT_MARGIN = 2
DEFAULT_CELL_BUDGET = 64
MAX_ENUMERATIONS = 5_000_000
CHUNK = 20_000


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class ExactResult:
    optimum: float
    argmin: Placement
    enumerated: int


def candidate_cells(inst: Instance, margin: int = DEFAULT_MARGIN) -> list[Point]:
    """Free cells the search may use.

    Bounded and relaxed modes: every free cell of the box. Unbounded: the pin
    bounding box grown by ``margin``; exact only relative to that box.
    """
    taken = {tuple(p) for p in inst.pins.values()}
    side = inst.region_side()
    if side is not None:
        ranges = [range(side)] * inst.dim
    else:
        pts = np.array(list(taken))
        lo, hi = pts.min(axis=0) - margin, pts.max(axis=0) + margin
        ranges = [range(int(a), int(b) + 1) for a, b in zip(lo, hi)]
    return [p for p in itertools.product(*ranges) if p not in taken]


def solve_exact(
    inst: Instance,
    cell_budget: int = DEFAULT_CELL_BUDGET,
    margin: int = DEFAULT_MARGIN,
    max_enumerations: int = MAX_ENUMERATIONS,
) -> ExactResult:
    free = inst.free_vertices
    pins = {t: tuple(inst.pins[t]) for t in inst.terminals}
    if not free:
        placement = Placement.build(inst, pins)
        return ExactResult(placement.cost, placement, 1)
    if inst.grid.mode == "bounded" and len(free) > MAX_FREE_BOUNDED:
        raise BudgetExceeded(f"{len(free)} free vertices exceed the limit {MAX_FREE_BOUNDED}")
    cells = candidate_cells(inst, margin)
    if inst.grid.mode != "bounded" and len(cells) > cell_budget:
        raise BudgetExceeded(f"{len(cells)} candidate cells exceed the budget {cell_budget}")
    if len(cells) < len(free):
        raise BudgetExceeded("fewer candidate cells than free vertices")
    total = math.perm(len(cells), len(free))
    if total > max_enumerations:
        raise BudgetExceeded(f"{total} injections exceed the enumeration limit")

    slot = {v: i for i, v in enumerate(free)}
    cell_xy = np.array(cells, dtype=float)
    pin_free: list[tuple[int, Point, float]] = []
    free_free: list[tuple[int, int, float]] = []
    for u, v, w in inst.edges:
        if u in slot and v in slot:
            free_free.append((slot[u], slot[v], w))
        elif u in slot:
            pin_free.append((slot[u], pins[v], w))
        elif v in slot:
            pin_free.append((slot[v], pins[u], w))

    best_cost, best_perm = math.inf, None
    perms = itertools.permutations(range(len(cells)), len(free))
    while True:
        block = np.array(list(itertools.islice(perms, CHUNK)), dtype=int)
        if block.size == 0:
            break
        cost = np.zeros(len(block))
        for a, b, w in free_free:
            diff = cell_xy[block[:, a]] - cell_xy[block[:, b]]
            cost += w * np.sqrt((diff**2).sum(axis=1))
        for a, p, w in pin_free:
            diff = cell_xy[block[:, a]] - np.asarray(p, dtype=float)
            cost += w * np.sqrt((diff**2).sum(axis=1))
        i = int(np.argmin(cost))
        if cost[i] < best_cost:
            best_cost, best_perm = float(cost[i]), block[i]
    assignment = dict(pins)
    for v, c in zip(free, best_perm):
        assignment[v] = cells[int(c)]
    placement = Placement.build(inst, assignment)
    return ExactResult(placement.cost, placement, total)
