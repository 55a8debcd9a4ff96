"""Rounding for the open lattice: cluster, reroute, lay out, interleave, repin.

Also the relaxed-box variant, which packs per-bucket quotas of every cluster
into equal sub-squares of a slightly inflated grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Mapping, Sequence

from pinarrange.curves import grid_curve_order, hilbert_point, is_power_of_two
from pinarrange.metric_tools import (
    Clustering,
    Hst,
    alter_instance,
    ckr_partition,
    hst_build,
    tree_zero_extension,
)
from pinarrange.model import Instance, InstanceError, Placement, Point, derive_seed
from pinarrange.ordering import Ordering, rv_order
from pinarrange.spreading_lp import SpreadingMetric, restrict_metric, solve_lp
from pinarrange.trials import best_of, run_trials, trial_seeds

PIPELINES = ("hst", "ckr")


def color_side(k: int, dim: int) -> int:
    """Smallest ell with ell**dim >= k."""
    ell = max(1, math.ceil(k ** (1.0 / dim)))
    while ell**dim < k:
        ell += 1
    while ell > 1 and (ell - 1) ** dim >= k:
        ell -= 1
    return ell


def color_of(i: int, ell: int, dim: int) -> Point:
    digits = []
    for _ in range(dim):
        digits.append(i % ell)
        i //= ell
    return tuple(digits)


def pin_map(inst: Instance) -> dict[int, Point]:
    return {t: tuple(inst.pins[t]) for t in inst.terminals}


# ---------------------------------------------------------------- clustering


def cluster_and_order(
    inst: Instance, metric: SpreadingMetric, seed: int, pipeline: str
) -> tuple[Clustering, Instance, dict[int, Ordering]]:
    """Cluster, reroute cut edges, and order each cluster from its terminal."""
    if pipeline not in PIPELINES:
        raise ValueError(f"unknown pipeline {pipeline!r}")
    hst: Hst | None = None
    if pipeline == "hst":
        hst = hst_build(metric, derive_seed(seed, 1))
        clustering = tree_zero_extension(hst, inst.terminals, derive_seed(seed, 2))
    else:
        clustering = ckr_partition(metric, inst.terminals, derive_seed(seed, 2))
    altered = alter_instance(inst, clustering)
    orderings = {}
    for i, (t, members) in enumerate(clustering.clusters.items()):
        inside = set(members)
        edges = [e for e in altered.edges if e[0] in inside and e[1] in inside]
        sub = restrict_metric(metric, members)
        orderings[t] = rv_order(sub, edges, t, inst.dim, derive_seed(seed, 3, i), hst=hst)
    return clustering, altered, orderings


def curve_layout(sequence: Sequence[int], dim: int) -> dict[int, Point]:
    """Thread ``sequence`` along the Hilbert curve of the smallest fitting power-of-two box."""
    m = len(sequence)
    side = 1
    while side**dim < m:
        side *= 2
    cells = grid_curve_order(side, dim)
    return {v: cells[r] for r, v in enumerate(sequence)}


# ---------------------------------------------------------------- legalization


def interleave(
    cluster_layouts: Sequence[tuple[int, Mapping[int, Point]]],
    pins: Mapping[int, Point],
    k: int | None = None,
) -> dict[int, Point]:
    """Dilate each cluster layout by ell onto its own colour class.

    ``cluster_layouts`` lists (terminal, layout) pairs; the i-th cluster gets
    colour i. Its terminal lands on the colour-i point of the ell-block that
    contains the terminal's pin, and every other vertex sits at that point
    plus ell times its layout offset from the terminal.
    """
    k = len(cluster_layouts) if k is None else k
    if not cluster_layouts:
        return {}
    dim = len(next(iter(pins.values())))
    ell = color_side(k, dim)
    out: dict[int, Point] = {}
    for i, (t, layout) in enumerate(cluster_layouts):
        colour = color_of(i, ell, dim)
        block = tuple(ell * (c // ell) for c in pins[t])
        base = tuple(b + c for b, c in zip(block, colour))
        origin = layout[t]
        for v, p in layout.items():
            out[v] = tuple(b + ell * (x - o) for b, x, o in zip(base, p, origin))
    return out


def block_permutation(sources: Mapping[Point, Point], block: Point, ell: int) -> dict[Point, Point]:
    """Bijection of an ell-block sending each source cell to its target.

    Cells that are neither a source nor a target stay put; the leftover
    targets are paired in sorted order with the vacated sources.
    """
    dim = len(block)
    cells = [tuple(b + o for b, o in zip(block, off)) for off in itertools.product(range(ell), repeat=dim)]
    targets = set(sources.values())
    sigma = dict(sources)
    free_from = sorted(p for p in cells if p not in sources and p in targets)
    free_to = sorted(p for p in cells if p in sources and p not in targets)
    sigma.update(zip(free_from, free_to))
    for p in cells:
        if p not in sources and p not in targets:
            sigma[p] = p
    return sigma


def remap_terminals(mapping: Mapping[int, Point], pins: Mapping[int, Point], ell: int) -> dict[int, Point]:
    """Permute each ell-block holding a pin so every terminal sits on its pin.

    Every terminal must already lie in the same ell-block as its pin. Each
    vertex moves inside its block, so no coordinate changes by more than ell - 1.
    """
    blocks: dict[Point, dict[Point, Point]] = {}
    for t, target in pins.items():
        target = tuple(target)
        here = tuple(mapping[t])
        block = tuple(ell * (c // ell) for c in target)
        if tuple(ell * (c // ell) for c in here) != block:
            raise InstanceError(f"terminal {t} at {here} is not in the block of its pin {target}")
        sources = blocks.setdefault(block, {})
        if here in sources:
            raise InstanceError(f"two terminals share position {here}")
        sources[here] = target
    if len({tuple(p) for p in pins.values()}) != len(pins):
        raise InstanceError("two pins demand the same point")
    sigmas = {b: block_permutation(src, b, ell) for b, src in blocks.items()}
    out = {}
    for v, p in mapping.items():
        p = tuple(p)
        b = tuple(ell * (c // ell) for c in p)
        out[v] = sigmas[b][p] if b in sigmas else p
    return out


def max_displacement(before: Mapping[int, Point], after: Mapping[int, Point]) -> int:
    return max((max(abs(a - b) for a, b in zip(before[v], after[v])) for v in before), default=0)


# ---------------------------------------------------------------- unbounded pipeline


@dataclass
class UnboundedTrial:
    placement: Placement
    clustering: Clustering
    orderings: dict[int, Ordering]
    ell: int
    interleaved: dict[int, Point] = field(default_factory=dict)
    displacement: int = 0


def unbounded_trial(inst: Instance, metric: SpreadingMetric, seed: int, pipeline: str = "hst") -> UnboundedTrial:
    clustering, _, orderings = cluster_and_order(inst, metric, seed, pipeline)
    layouts = [(t, curve_layout(orderings[t].sequence, inst.dim)) for t in inst.terminals]
    pins = pin_map(inst)
    placed = interleave(layouts, pins, inst.k)
    ell = color_side(inst.k, inst.dim)
    final = remap_terminals(placed, pins, ell)
    return UnboundedTrial(
        Placement.build(inst, final), clustering, orderings, ell, placed, max_displacement(placed, final)
    )


def _pinned_only(inst: Instance) -> Placement:
    return Placement.build(inst, pin_map(inst))


def place_unbounded(
    inst: Instance,
    seed: int = 0,
    trials: int = 8,
    pipeline: str = "hst",
    metric: SpreadingMetric | None = None,
) -> Placement:
    """Best of ``trials`` independent roundings of one shared LP solution."""
    if inst.grid.mode != "unbounded":
        raise InstanceError(f"place_unbounded needs an unbounded grid, got {inst.grid.mode}")
    if inst.k == inst.n:
        return _pinned_only(inst)
    if metric is None:
        metric, _ = solve_lp(inst)
    runs = run_trials(partial(_unbounded_cost_only, inst, metric, pipeline), trial_seeds(seed, trials))
    return best_of(runs, lambda p: p.cost)


def _unbounded_cost_only(inst, metric, pipeline, seed):
    return unbounded_trial(inst, metric, seed, pipeline).placement


# ---------------------------------------------------------------- relaxed box


@dataclass
class BucketPlan:
    eps: float
    n: int
    k: int
    bucket_of: dict[int, int]
    counts: dict[int, int]
    quotas: dict[int, int]

    def threshold(self, i: int) -> float:
        return self.eps * self.n / self.k * (1.0 + self.eps) ** i

    def quota_total(self) -> int:
        return sum(self.counts[i] * self.quotas[i] for i in self.counts)

    def quota_bound(self) -> float:
        return (1.0 + 3.0 * self.eps) / self.eps * self.k


def build_bucket_plan(sizes: Mapping[int, int], n: int, eps: float) -> BucketPlan:
    """Bucket clusters by size against thresholds eps (n/k) (1+eps)^i."""
    if not 0 < eps <= 0.5:
        raise ValueError(f"eps must lie in (0, 1/2], got {eps}")
    k = len(sizes)
    base = Fraction(eps) * n / k
    growth = 1 + Fraction(eps)
    bucket_of = {}
    for c, size in sizes.items():
        i, s = 0, base
        while size > s:
            i += 1
            s *= growth
        bucket_of[c] = i
    counts: dict[int, int] = {}
    for i in bucket_of.values():
        counts[i] = counts.get(i, 0) + 1
    quotas = {i: math.ceil(growth**i) for i in counts}
    return BucketPlan(eps, n, k, bucket_of, counts, quotas)


def snake_cells(side: int, dim: int) -> list[Point]:
    """Cells of a side^dim box in curve order: Hilbert when possible, else boustrophedon."""
    if dim == 1:
        return [(i,) for i in range(side)]
    if is_power_of_two(side):
        return [hilbert_point(side, d) for d in range(side * side)]
    return [(x if y % 2 == 0 else side - 1 - x, y) for y in range(side) for x in range(side)]


@dataclass
class SubSquareLayout:
    side: int
    blocks_per_axis: int
    quotas: dict[int, int]


def choose_subsquares(plan: BucketPlan, sizes: Mapping[int, int], region: int, dim: int) -> SubSquareLayout:
    """Sub-square side and per-cluster quotas that fit every cluster.

    Starts from the side whose volume covers the bucket quotas and moves
    outward until each cluster fits in (quota x number of sub-squares).  When
    the bucket quotas fit nowhere (k close to n) they are dropped and only the
    size-based quotas remain; the full region as one sub-square then fits.
    """
    base_quota = {c: plan.quotas[plan.bucket_of[c]] for c in sizes}
    for floor in (base_quota, {c: 1 for c in sizes}):
        total = sum(floor.values())
        a0 = max(1, math.ceil(total ** (1.0 / dim)))
        for a in sorted(range(1, region + 1), key=lambda a: (abs(a - a0), a)):
            g = region // a
            m = g**dim
            quotas = {c: max(floor[c], -(-sizes[c] // m)) for c in sizes}
            if sum(quotas.values()) <= a**dim:
                return SubSquareLayout(a, g, quotas)
    raise InstanceError("clusters do not fit in the relaxed box")


@dataclass
class EpsTrial:
    placement: Placement
    clustering: Clustering
    plan: BucketPlan
    layout: SubSquareLayout


def eps_trial(inst: Instance, metric: SpreadingMetric, seed: int, pipeline: str = "hst") -> EpsTrial:
    eps = inst.grid.eps
    region = inst.region_side()
    dim = inst.dim
    clustering, _, orderings = cluster_and_order(inst, metric, seed, pipeline)
    sizes = {t: len(m) for t, m in clustering.clusters.items()}
    plan = build_bucket_plan(sizes, inst.n, eps)
    lay = choose_subsquares(plan, sizes, region, dim)
    a, g = lay.side, lay.blocks_per_axis
    coarse = snake_cells(g, dim)
    coarse_index = {p: i for i, p in enumerate(coarse)}
    inner = snake_cells(a, dim)
    m = len(coarse)

    pins = pin_map(inst)
    block_of = lambda p: tuple(min(c // a, g - 1) for c in p)
    # demand[b] lists (terminal, vertices) chunks routed into coarse block b
    demand: list[list[tuple[int, list[int]]]] = [[] for _ in range(m)]
    for t in inst.terminals:
        seq = orderings[t].sequence
        q = lay.quotas[t]
        start = coarse_index[block_of(pins[t])]
        chunks = [seq[1:q]] + [seq[j : j + q] for j in range(q, len(seq), q)]
        for j, chunk in enumerate(chunks):
            if chunk:
                demand[(start + j) % m].append((t, chunk))

    taken = set(pins.values())
    assignment = dict(pins)
    for b, chunks in enumerate(demand):
        corner = tuple(a * c for c in coarse[b])
        free = (tuple(c + o for c, o in zip(corner, off)) for off in inner)
        free = (p for p in free if p not in taken)
        for _, chunk in chunks:
            for v in chunk:
                p = next(free)
                assignment[v] = p
                taken.add(p)
    return EpsTrial(Placement.build(inst, assignment), clustering, plan, lay)


def place_eps_violation(
    inst: Instance,
    seed: int = 0,
    trials: int = 8,
    pipeline: str = "hst",
    metric: SpreadingMetric | None = None,
) -> Placement:
    if inst.grid.mode != "eps_violation":
        raise InstanceError(f"place_eps_violation needs an eps grid, got {inst.grid.mode}")
    if not 0 < inst.grid.eps <= 0.5:
        raise InstanceError(f"eps must lie in (0, 1/2], got {inst.grid.eps}")
    if inst.k == inst.n:
        return _pinned_only(inst)
    if metric is None:
        metric, _ = solve_lp(inst)
    runs = run_trials(partial(_eps_cost_only, inst, metric, pipeline), trial_seeds(seed, trials))
    return best_of(runs, lambda p: p.cost)


def _eps_cost_only(inst, metric, pipeline, seed):
    return eps_trial(inst, metric, seed, pipeline).placement
