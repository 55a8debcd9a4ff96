"""Lower-bound instance families.

* ``gen_bounded_gap``: n-cell grid, every cell but two opposite corners pinned,
  one unit edge between the two free vertices.
* ``gen_unbounded_gap``: 3s x 3s pinned grid with a t-spaced hole lattice in
  its middle third, vertically matched free vertices, weighted edges to the
  pin just above each hole.
* ``gen_3partition_bounded`` / ``gen_3partition_unbounded``: stars that must
  be packed into B-cell holes of a pinned grid, optionally inside a large
  pinned frame whose centre pulls on every star vertex.

The two gap families carry a hand-built fractional metric with its cost.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import floyd_warshall

from pinarrange.model import GridSpec, Instance, Placement, Point, validate_instance
from pinarrange.spreading_lp import SpreadingMetric, metric_cost

DEFAULT_MAX_CELLS = 2_000_000


@dataclass
class GapCertificate:
    instance: Instance
    fractional_metric: SpreadingMetric
    fractional_cost: float
    forced_integral_cost: float | None = None
    notes: dict = field(default_factory=dict)


def _euclid(p: Sequence[int], q: Sequence[int]) -> float:
    return math.dist(p, q)


def gen_bounded_gap(n: int) -> GapCertificate:
    r = math.isqrt(n)
    if n < 9 or r * r != n:
        raise ValueError(f"n must be a perfect square >= 9, got {n}")
    corners = {(0, 0), (r - 1, r - 1)}
    cells = [c for c in itertools.product(range(r), repeat=2) if c not in corners]
    k = n - 2
    pins = {i: c for i, c in enumerate(cells)}
    u, v = k, k + 1
    inst = validate_instance(
        Instance(2, n, ((u, v, 1.0),), tuple(range(k)), pins, GridSpec("bounded", r))
    )
    far = math.sqrt(2 * n)
    d = np.full((n, n), far)
    xy = np.array(cells, dtype=float)
    d[:k, :k] = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2))
    d[u, v] = d[v, u] = 1.0
    np.fill_diagonal(d, 0.0)
    metric = SpreadingMetric(d, metric_cost(inst, d))
    return GapCertificate(inst, metric, metric.objective, math.sqrt(2.0) * (r - 1))


def gen_unbounded_gap(n: int, t: int, alpha: float) -> GapCertificate:
    """Hole lattice B = tZ^2 inside the middle third of a 3s x 3s pinned grid, s = sqrt(n).

    The fractional metric is the shortest-path metric of: the terminal clique
    with Euclidean lengths, length-t edges from each free vertex to its
    anchor pin (one cell above its hole), length-1 edges between matched
    free vertices.
    """
    s = math.isqrt(n)
    if s * s != n or t < 1 or s % (2 * t) != 0:
        raise ValueError(f"sqrt(n) must be an integer multiple of 2t (n={n}, t={t})")
    side = 3 * s
    holes = [(x, y) for x in range(s, 2 * s) for y in range(s, 2 * s) if x % t == 0 and y % t == 0]
    hole_set = set(holes)
    cells = [c for c in itertools.product(range(side), repeat=2) if c not in hole_set]
    k = len(cells)
    total = 9 * n
    pins = {i: c for i, c in enumerate(cells)}
    at = {c: i for i, c in enumerate(cells)}
    free_at = {c: k + i for i, c in enumerate(holes)}

    mate, anchor = {}, {}
    for (x, y), v in free_at.items():
        mate[v] = free_at[(x, y + t)] if (y // t) % 2 == 0 else free_at[(x, y - t)]
        anchor[v] = at[(x, y + 1)]
    edges = []
    for (x, y), v in free_at.items():
        if (y // t) % 2 == 0:
            edges.append((v, mate[v], 1.0))
    for v in free_at.values():
        edges.append((v, anchor[v], float(alpha)))
    inst = validate_instance(
        Instance(2, total, tuple(edges), tuple(range(k)), pins, GridSpec("unbounded"))
    )

    graph = np.full((total, total), np.inf)
    xy = np.array(cells, dtype=float)
    graph[:k, :k] = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2))
    for v in free_at.values():
        graph[v, anchor[v]] = graph[anchor[v], v] = float(t)
        graph[v, mate[v]] = graph[mate[v], v] = 1.0
    np.fill_diagonal(graph, 0.0)
    d = floyd_warshall(graph, directed=False)
    metric = SpreadingMetric(d, metric_cost(inst, d))
    pairs = len(holes) // 2
    c_lp = pairs * 1.0 + len(holes) * t * alpha
    return GapCertificate(
        inst, metric, c_lp, None,
        {"t": t, "alpha": alpha, "pairs": pairs, "anchors": len(holes), "mate": mate, "anchor": anchor},
    )


# ---------------------------------------------------------------- 3-partition


@dataclass
class HardnessParams:
    a: tuple[int, ...]
    B: int
    N: int
    spacing: int
    net: list[Point]
    frame_side: int | None = None
    offset: int = 0
    w: float | None = None

    @property
    def groups(self) -> int:
        return len(self.a) // 3


@dataclass
class ThreePartition:
    instance: Instance
    params: HardnessParams
    stars: list[list[int]]  # centre first
    holes: list[list[Point]]  # nearest-first around each net point
    centre: int | None = None


def check_params(a: Sequence[int], B: int) -> int:
    if len(a) % 3 != 0 or not a:
        raise ValueError("need 3n integers")
    groups = len(a) // 3
    if sum(a) != groups * B:
        raise ValueError(f"sum(a) = {sum(a)} != nB = {groups * B}")
    for x in a:
        if not B / 4 < x < B / 2:
            raise ValueError(f"a_i = {x} outside (B/4, B/2)")
    return groups


def place_net(groups: int, N: int, spacing: int) -> list[Point]:
    per_row = math.ceil(math.sqrt(groups))
    rows = math.ceil(groups / per_row)
    if spacing * max(per_row, rows) > N - 1 - spacing:
        raise ValueError(f"cannot fit {groups} net points {spacing} apart in a {N} x {N} grid")
    return [(spacing * (1 + i % per_row), spacing * (1 + i // per_row)) for i in range(groups)]


def carve_holes(net: Sequence[Point], B: int, N: int) -> list[list[Point]]:
    holes = []
    used: set[Point] = set()
    for p in net:
        cells = sorted(
            itertools.product(range(N), repeat=2),
            key=lambda c: (_euclid(c, p), c[1], c[0]),
        )
        hole = cells[:B]
        if used.intersection(hole):
            raise ValueError("holes overlap; increase the spacing")
        used.update(hole)
        holes.append(hole)
    return holes


def gen_3partition_bounded(a: Sequence[int], B: int, N: int, spacing: int) -> ThreePartition:
    groups = check_params(a, B)
    net = place_net(groups, N, spacing)
    holes = carve_holes(net, B, N)
    hole_cells = {c for h in holes for c in h}
    cells = [c for c in itertools.product(range(N), repeat=2) if c not in hole_cells]
    pins = {i: c for i, c in enumerate(cells)}
    stars, edges = _stars(a, len(cells))
    inst = validate_instance(
        Instance(2, N * N, tuple(edges), tuple(range(len(cells))), pins, GridSpec("bounded", N))
    )
    return ThreePartition(inst, HardnessParams(tuple(a), B, N, spacing, net), stars, holes)


def _stars(a: Sequence[int], first: int) -> tuple[list[list[int]], list[tuple[int, int, float]]]:
    stars, edges = [], []
    nxt = first
    for size in a:
        star = list(range(nxt, nxt + size))
        nxt += size
        stars.append(star)
        edges += [(star[0], leaf, 1.0) for leaf in star[1:]]
    return stars, edges


def gen_3partition_unbounded(
    a: Sequence[int],
    B: int,
    N: int,
    spacing: int | None = None,
    frame_side: int | None = None,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> ThreePartition:
    """The bounded construction centred in an all-pinned frame of side N^2 B^2.

    Every star vertex also gets an edge of weight sqrt(B)/N to the frame's
    centre pin. ``frame_side`` overrides the frame side for desk-scale runs.
    """
    if spacing is None:
        spacing = max(1, N // 4)
    inner = gen_3partition_bounded(a, B, N, spacing)
    side = N * N * B * B if frame_side is None else frame_side
    if side < N:
        raise ValueError("frame smaller than the inner grid")
    if side * side > max_cells:
        raise ValueError(f"frame of {side * side} cells exceeds max_cells={max_cells}; pass frame_side")
    off = (side - N) // 2
    holes = [[(x + off, y + off) for x, y in h] for h in inner.holes]
    hole_cells = {c for h in holes for c in h}
    centre_pt = (side // 2, side // 2)
    if centre_pt in hole_cells:
        raise ValueError("frame centre falls inside a hole")
    cells = [c for c in itertools.product(range(side), repeat=2) if c not in hole_cells]
    pins = {i: c for i, c in enumerate(cells)}
    centre = cells.index(centre_pt)
    stars, edges = _stars(a, len(cells))
    w = math.sqrt(B) / N
    edges += [(v, centre, w) for star in stars for v in star]
    inst = validate_instance(
        Instance(2, side * side, tuple(edges), tuple(range(len(cells))), pins, GridSpec("unbounded"))
    )
    params = HardnessParams(
        tuple(a), B, N, spacing, [(x + off, y + off) for x, y in inner.params.net], side, off, w
    )
    return ThreePartition(inst, params, stars, holes, centre)


def find_three_partition(a: Sequence[int], B: int) -> list[tuple[int, int, int]] | None:
    """Triples of indices each summing to B, by exhaustive search (tiny inputs)."""
    left = list(range(len(a)))

    def search(rest: list[int]) -> list[tuple[int, int, int]] | None:
        if not rest:
            return []
        i = rest[0]
        for j, k in itertools.combinations(rest[1:], 2):
            if a[i] + a[j] + a[k] == B:
                sub = search([x for x in rest if x not in (i, j, k)])
                if sub is not None:
                    return [(i, j, k)] + sub
        return None

    return search(left)


def witness_placement(tp: ThreePartition, triples: Sequence[tuple[int, int, int]]) -> Placement:
    """Pins in place; the stars of triple g fill hole g nearest-first, centre first."""
    inst = tp.instance
    assignment = {t: tuple(inst.pins[t]) for t in inst.terminals}
    for hole, triple in zip(tp.holes, triples):
        cells = iter(hole)
        for s in triple:
            for v in tp.stars[s]:
                assignment[v] = next(cells)
    return Placement.build(inst, assignment)


def min_interhole_distance(tp: ThreePartition) -> float:
    best = math.inf
    for h1, h2 in itertools.combinations(tp.holes, 2):
        a = np.array(h1, dtype=float)
        b = np.array(h2, dtype=float)
        best = min(best, float(np.sqrt(((a[:, None] - b[None]) ** 2).sum(axis=2)).min()))
    return best
