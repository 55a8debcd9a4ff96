"""Rounding into the n-cell grid.

Per trial: CKR clustering and rerouting, an anchored ordering per cluster,
dyadic sub-clusters along that ordering, greedy L-infinity carving of one
region per sub-cluster (all first pieces, then all second pieces, ...), a
quad-tree order of each region, a random cyclic shift per sub-cluster, and
finally sub-cluster rank r goes to region cell r.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Mapping, Sequence

import numpy as np

from pinarrange.curves import SubsetOrder, next_power_of_two, subset_order
from pinarrange.metric_tools import Clustering
from pinarrange.model import Instance, InstanceError, Placement, Point, derive_seed
from pinarrange.ordering import Ordering
from pinarrange.place_unbounded import cluster_and_order, pin_map
from pinarrange.spreading_lp import SpreadingMetric, solve_lp
from pinarrange.trials import best_of, run_trials, trial_seeds


@dataclass
class SubClusterPlan:
    terminal: int
    gamma: float
    delta: int
    pieces: list[list[int]]
    shifts: list[int] = field(default_factory=list)


def dyadic_depth(size: int) -> int:
    return max(0, math.floor(math.log2(size / 4))) if size >= 4 else 0


def subcluster_ranges(size: int, gamma: float) -> list[tuple[int, int]]:
    """Rank intervals {0}, [floor(g 2^(j-1)), floor(g 2^j)) for j = 1..delta, then the rest."""
    cuts = [0] + [min(size, math.floor(gamma * 2**j)) for j in range(dyadic_depth(size) + 1)] + [size]
    return [(lo, hi) for lo, hi in zip(cuts, cuts[1:]) if hi > lo]


def build_subclusters(ordering: Ordering, seed: int | None = None, gamma: float | None = None) -> SubClusterPlan:
    if ordering.q[ordering.anchor] != 0:
        raise ValueError("ordering must rank its anchor first")
    if gamma is None:
        gamma = float(np.random.default_rng(seed).uniform(1.0, 2.0))
    seq = ordering.sequence
    size = len(seq)
    delta = dyadic_depth(size)
    pieces = [seq[lo:hi] for lo, hi in subcluster_ranges(size, gamma)]
    return SubClusterPlan(ordering.anchor, gamma, delta, pieces)


def apply_shift(order: Sequence[int], tau: int) -> dict[int, int]:
    """Cyclic shift of a ranking: element at rank p moves to (p + tau) mod m."""
    m = len(order)
    if not 0 <= tau < max(m, 1):
        raise ValueError(f"shift {tau} outside [0, {m})")
    return {v: (p + tau) % m for p, v in enumerate(order)}


@dataclass
class RegionPlan:
    regions: dict[tuple[int, int], list[Point]]
    radius: dict[tuple[int, int], int]
    # unassigned cells within radius - 1 and within radius at carving time
    inner_free: dict[tuple[int, int], int] = field(default_factory=dict)
    outer_free: dict[tuple[int, int], int] = field(default_factory=dict)
    # unassigned / total cells of the grid inside the carving radius
    free_ratio: dict[tuple[int, int], float] = field(default_factory=dict)


def linf(p: Point, q: Point) -> int:
    return max(abs(a - b) for a, b in zip(p, q))


def carve_regions(plans: Sequence[SubClusterPlan], pins: Mapping[int, Point], side: int, dim: int) -> RegionPlan:
    """Greedy regions in order (piece index, cluster index).

    Each region takes the unassigned cells nearest the cluster's pin in
    L-infinity, ties broken by (distance, last coordinate, ..., first).
    """
    cells = list(itertools.product(range(side), repeat=dim))
    free = set(cells)
    out = RegionPlan({}, {})
    depth = max(len(p.pieces) for p in plans)
    for j in range(depth):
        for i, plan in enumerate(plans):
            if j >= len(plan.pieces):
                continue
            size = len(plan.pieces[j])
            centre = tuple(pins[plan.terminal])
            ranked = sorted(free, key=lambda p: (linf(p, centre), *reversed(p)))
            chosen = ranked[:size]
            if len(chosen) < size:
                raise InstanceError("grid too small for the clusters")
            rho = linf(chosen[-1], centre)
            key = (i, j)
            out.regions[key] = chosen
            out.radius[key] = rho
            out.inner_free[key] = sum(1 for p in ranked if linf(p, centre) < rho)
            out.outer_free[key] = sum(1 for p in ranked if linf(p, centre) <= rho)
            ball = sum(1 for p in cells if linf(p, centre) <= rho)
            out.free_ratio[key] = out.outer_free[key] / ball
            free.difference_update(chosen)
    return out


def region_order(region: Sequence[Point], centre: Point, rho: int) -> SubsetOrder:
    """Quad-tree order of a region inside the power-of-two square around its carving ball."""
    side = next_power_of_two(2 * rho + 1)
    origin = tuple(c - rho for c in centre)
    return subset_order(region, anchor_square=(origin, side))


@dataclass
class BoundedTrial:
    placement: Placement
    clustering: Clustering
    orderings: dict[int, Ordering]
    plans: list[SubClusterPlan]
    regions: RegionPlan


def bounded_trial(inst: Instance, metric: SpreadingMetric, seed: int, pipeline: str = "ckr") -> BoundedTrial:
    clustering, _, orderings = cluster_and_order(inst, metric, seed, pipeline)
    rng = np.random.default_rng(derive_seed(seed, 4))
    plans = [build_subclusters(orderings[t], derive_seed(seed, 5, i)) for i, t in enumerate(inst.terminals)]
    pins = pin_map(inst)
    regions = carve_regions(plans, pins, inst.grid.side, inst.dim)
    assignment: dict[int, Point] = {}
    for i, plan in enumerate(plans):
        centre = pins[plan.terminal]
        for j, piece in enumerate(plan.pieces):
            tau = int(rng.integers(len(piece)))
            plan.shifts.append(tau)
            cells = region_order(regions.regions[(i, j)], centre, regions.radius[(i, j)]).order
            for v, r in apply_shift(piece, tau).items():
                assignment[v] = cells[r]
    return BoundedTrial(Placement.build(inst, assignment), clustering, orderings, plans, regions)


def place_bounded(
    inst: Instance,
    seed: int = 0,
    trials: int = 8,
    pipeline: str = "ckr",
    metric: SpreadingMetric | None = None,
) -> Placement:
    if inst.grid.mode != "bounded":
        raise InstanceError(f"place_bounded needs a bounded grid, got {inst.grid.mode}")
    if inst.grid.side**inst.dim != inst.n:
        raise InstanceError("grid size mismatch")
    if inst.k == inst.n:
        return Placement.build(inst, pin_map(inst))
    if metric is None:
        metric, _ = solve_lp(inst)
    runs = run_trials(partial(_bounded_cost_only, inst, metric, pipeline), trial_seeds(seed, trials))
    return best_of(runs, lambda p: p.cost)


def _bounded_cost_only(inst, metric, pipeline, seed):
    return bounded_trial(inst, metric, seed, pipeline).placement
