"""Instances, placements and the weighted-stretch objective."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

Point = tuple[int, ...]
Edge = tuple[int, int, float]

MODES = ("unbounded", "bounded", "eps_violation")


class InstanceError(ValueError):
    """An instance or placement breaks one of its structural invariants."""


@dataclass(frozen=True)
class GridSpec:
    mode: str = "unbounded"
    side: int = 0
    eps: float = 0.0

    def region_side(self, n: int, dim: int) -> int | None:
        """Side length of the admissible box, or None for the open lattice.

        The relaxed mode uses the smallest ``R`` with ``R**dim >= (1 + 4 eps) n``.
        """
        if self.mode == "bounded":
            return self.side
        if self.mode == "eps_violation":
            target = (1.0 + 4.0 * self.eps) * n
            r = max(1, math.ceil(target ** (1.0 / dim)))
            while r**dim < target:
                r += 1
            while r > 1 and (r - 1) ** dim >= target:
                r -= 1
            return r
        return None


@dataclass(frozen=True)
class Instance:
    dim: int
    n: int
    edges: tuple[Edge, ...]
    terminals: tuple[int, ...]
    pins: Mapping[int, Point]
    grid: GridSpec = field(default_factory=GridSpec)

    @property
    def k(self) -> int:
        return len(self.terminals)

    @property
    def free_vertices(self) -> list[int]:
        pinned = set(self.terminals)
        return [v for v in range(self.n) if v not in pinned]

    def region_side(self) -> int | None:
        return self.grid.region_side(self.n, self.dim)

    def in_region(self, p: Point) -> bool:
        side = self.region_side()
        if side is None:
            return True
        return all(0 <= c < side for c in p)

    def with_edges(self, edges: Sequence[Edge]) -> "Instance":
        return Instance(self.dim, self.n, tuple(edges), self.terminals, self.pins, self.grid)

    def with_grid(self, grid: GridSpec) -> "Instance":
        return Instance(self.dim, self.n, self.edges, self.terminals, self.pins, grid)


@dataclass(frozen=True)
class Placement:
    assignment: Mapping[int, Point]
    mode: str
    cost: float

    @classmethod
    def build(cls, inst: Instance, assignment: Mapping[int, Point]) -> "Placement":
        assignment = {v: tuple(int(c) for c in assignment[v]) for v in sorted(assignment)}
        return cls(assignment, inst.grid.mode, evaluate_cost(inst, assignment))


def validate_instance(raw: Instance) -> Instance:
    if raw.dim < 1:
        raise InstanceError(f"dimension must be positive, got {raw.dim}")
    if raw.n < 1:
        raise InstanceError("instance has no vertices")
    if raw.grid.mode not in MODES:
        raise InstanceError(f"unknown grid mode {raw.grid.mode!r}")
    for u, v, w in raw.edges:
        if not (0 <= u < raw.n and 0 <= v < raw.n):
            raise InstanceError(f"bad vertex-id in edge ({u}, {v})")
        if u == v:
            raise InstanceError(f"self-loop at vertex {u}")
        if not w >= 0 or not math.isfinite(w):
            raise InstanceError(f"negative weight {w} on edge ({u}, {v})")
    if not 1 <= raw.k <= raw.n:
        raise InstanceError(f"need 1 <= k <= n terminals, got k={raw.k}")
    if len(set(raw.terminals)) != raw.k:
        raise InstanceError("terminal listed twice")
    for t in raw.terminals:
        if not 0 <= t < raw.n:
            raise InstanceError(f"bad vertex-id for terminal {t}")
        if t not in raw.pins:
            raise InstanceError(f"terminal {t} has no pin")
    if set(raw.pins) != set(raw.terminals):
        raise InstanceError("pins given for non-terminal vertices")
    seen: dict[Point, int] = {}
    for t in raw.terminals:
        p = tuple(raw.pins[t])
        if len(p) != raw.dim:
            raise InstanceError(f"pin of {t} has {len(p)} coordinates, expected {raw.dim}")
        if p in seen:
            raise InstanceError(f"duplicate pin {p} for terminals {seen[p]} and {t}")
        seen[p] = t
    if raw.grid.mode == "bounded":
        if raw.grid.side < 1 or raw.grid.side**raw.dim != raw.n:
            raise InstanceError(
                f"grid size mismatch: side {raw.grid.side}^{raw.dim} != n={raw.n}"
            )
    if raw.grid.mode == "eps_violation" and not raw.grid.eps > 0:
        raise InstanceError("eps_violation mode needs eps > 0")
    for t in raw.terminals:
        if not raw.in_region(tuple(raw.pins[t])):
            raise InstanceError(f"pin {tuple(raw.pins[t])} of terminal {t} outside grid")
    return raw


def coordinate_array(inst: Instance, assignment: Mapping[int, Point]) -> np.ndarray:
    missing = [v for v in range(inst.n) if v not in assignment]
    if missing:
        raise InstanceError(f"assignment misses vertices {missing[:5]}")
    return np.array([assignment[v] for v in range(inst.n)], dtype=float).reshape(inst.n, inst.dim)


def edge_lengths(inst: Instance, assignment: Mapping[int, Point]) -> np.ndarray:
    if not inst.edges:
        return np.zeros(0)
    xy = coordinate_array(inst, assignment)
    e = np.array([(u, v) for u, v, _ in inst.edges], dtype=int)
    return np.sqrt(np.sum((xy[e[:, 0]] - xy[e[:, 1]]) ** 2, axis=1))


def evaluate_cost(inst: Instance, assignment: Mapping[int, Point]) -> float:
    """Total weighted Euclidean stretch of the edges under ``assignment``."""
    lengths = edge_lengths(inst, assignment)
    if lengths.size == 0:
        coordinate_array(inst, assignment)
        return 0.0
    weights = np.array([w for _, _, w in inst.edges], dtype=float)
    return math.fsum(weights * lengths)


def check_placement(inst: Instance, placement: Placement, tol: float = 1e-9) -> None:
    """Raise InstanceError unless ``placement`` is a legal extension of the pins."""
    a = placement.assignment
    if set(a) != set(range(inst.n)):
        raise InstanceError("placement does not cover exactly the vertex set")
    images = [tuple(a[v]) for v in range(inst.n)]
    if len(set(images)) != inst.n:
        raise InstanceError("placement is not injective")
    for t in inst.terminals:
        if tuple(a[t]) != tuple(inst.pins[t]):
            raise InstanceError(f"terminal {t} not on its pin")
    for v, p in enumerate(images):
        if len(p) != inst.dim:
            raise InstanceError(f"vertex {v} has wrong arity")
        if not inst.in_region(p):
            raise InstanceError(f"vertex {v} at {p} outside the admissible region")
    cost = evaluate_cost(inst, a)
    if abs(cost - placement.cost) > tol * max(1.0, cost):
        raise InstanceError(f"stored cost {placement.cost} != evaluated {cost}")


def pin_distance(inst: Instance, s: int, t: int) -> float:
    ps, pt = inst.pins[s], inst.pins[t]
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(ps, pt)))


def derive_seed(seed: int, *tags: int) -> int:
    """Independent 64-bit child seed for a (seed, tags...) path."""
    state = np.random.SeedSequence([seed % 2**64, *tags]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])
