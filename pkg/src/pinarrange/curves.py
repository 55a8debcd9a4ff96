"""Space-filling curves on power-of-two squares and quad-tree orders of point subsets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from pinarrange.model import Point


def is_power_of_two(x: int) -> bool:
    return x >= 1 and x & (x - 1) == 0


def next_power_of_two(x: int) -> int:
    return 1 << max(0, math.ceil(math.log2(max(x, 1))))


def hilbert_point(side: int, d: int) -> tuple[int, int]:
    x = y = 0
    s = 1
    t = d
    while s < side:
        rx = 1 & (t // 2)
        ry = 1 & (t ^ rx)
        if ry == 0:
            if rx == 1:
                x, y = s - 1 - x, s - 1 - y
            x, y = y, x
        x += s * rx
        y += s * ry
        t //= 4
        s *= 2
    return x, y


def hilbert_index(side: int, x: int, y: int) -> int:
    d = 0
    s = side // 2
    while s > 0:
        rx = 1 if x & s else 0
        ry = 1 if y & s else 0
        d += s * s * ((3 * rx) ^ ry)
        if ry == 0:
            if rx == 1:
                x, y = s - 1 - x, s - 1 - y
            x, y = y, x
        s //= 2
    return d


def morton_index(x: int, y: int) -> int:
    """Z-order key; y supplies the high bit of each pair."""
    key = 0
    bit = 0
    while x or y:
        key |= (x & 1) << (2 * bit) | (y & 1) << (2 * bit + 1)
        x >>= 1
        y >>= 1
        bit += 1
    return key


def grid_curve_order(side: int, dim: int = 2) -> list[Point]:
    """All cells of the ``side``^dim box along a Hilbert curve starting at the origin."""
    if not is_power_of_two(side):
        raise ValueError(f"side {side} is not a power of two")
    if dim == 1:
        return [(i,) for i in range(side)]
    if dim != 2:
        raise NotImplementedError("curves are implemented for dim 1 and 2")
    return [hilbert_point(side, d) for d in range(side * side)]


@dataclass
class SubsetOrder:
    order: list[Point]
    origin: Point
    side: int

    @property
    def b(self) -> dict[Point, int]:
        return {p: i for i, p in enumerate(self.order)}

    @property
    def density(self) -> float:
        return len(self.order) / self.side ** len(self.origin)


def enclosing_square(points: Iterable[Point]) -> tuple[Point, int]:
    pts = np.array(list(points), dtype=int)
    lo = pts.min(axis=0)
    extent = int((pts.max(axis=0) - lo).max()) + 1
    return tuple(int(c) for c in lo), next_power_of_two(extent)


def subset_order(
    points: Sequence[Point],
    anchor_square: tuple[Point, int] | None = None,
    curve: str = "z",
) -> SubsetOrder:
    """Order ``points`` by an in-order walk of the quad-tree on a power-of-two square.

    The square is ``anchor_square`` = (origin, side) when given, otherwise the
    smallest one whose lower corner is the bounding box corner.
    """
    points = [tuple(p) for p in points]
    if not points:
        raise ValueError("empty point set")
    if anchor_square is None:
        origin, side = enclosing_square(points)
    else:
        origin, side = tuple(anchor_square[0]), int(anchor_square[1])
        if not is_power_of_two(side):
            raise ValueError(f"anchor square side {side} is not a power of two")
        for p in points:
            if any(not 0 <= c - o < side for c, o in zip(p, origin)):
                raise ValueError(f"point {p} outside anchor square")
    dim = len(origin)
    if dim == 1:
        key = lambda p: p[0]
    elif curve == "hilbert":
        key = lambda p: hilbert_index(side, p[0] - origin[0], p[1] - origin[1])
    else:
        key = lambda p: morton_index(p[0] - origin[0], p[1] - origin[1])
    return SubsetOrder(sorted(points, key=key), origin, side)


def distance_sum(order: Sequence[Point], delta: int) -> float:
    """Sum over l of |order[l] - order[l + delta]|_2."""
    pts = np.asarray(order, dtype=float)
    if delta >= len(pts):
        return 0.0
    diff = pts[delta:] - pts[:-delta]
    return float(np.sqrt((diff**2).sum(axis=1)).sum())
