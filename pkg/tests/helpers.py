"""Instance factories and invariant checks shared by the test modules."""

import itertools
import math

from pinarrange.model import GridSpec, Instance, check_placement, validate_instance


def random_instance(rng, n, k, mode="unbounded", dim=2, density=0.4, span=None, eps=0.0):
    """Random connected-ish weighted graph with k pins.

    bounded: n must be side**dim and pins are drawn from the grid.
    unbounded / eps: pins drawn from a box of side ``span``.
    """
    if mode == "bounded":
        side = round(n ** (1.0 / dim))
        assert side**dim == n
        cells = list(itertools.product(range(side), repeat=dim))
        grid = GridSpec("bounded", side)
    else:
        if mode == "eps_violation":
            grid = GridSpec("eps_violation", 0, eps)
            side = grid.region_side(n, dim)
        else:
            grid = GridSpec("unbounded")
            side = span or max(2, math.ceil(2 * n ** (1.0 / dim)))
        cells = list(itertools.product(range(side), repeat=dim))
    pick = rng.choice(len(cells), size=k, replace=False)
    terminals = tuple(int(t) for t in sorted(rng.choice(n, size=k, replace=False)))
    pins = {t: cells[int(c)] for t, c in zip(terminals, pick)}
    edges = []
    order = rng.permutation(n)
    for a, b in zip(order, order[1:]):
        edges.append((int(a), int(b), float(rng.integers(1, 4))))
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < density / 2:
            edges.append((u, v, float(rng.integers(0, 4))))
    return validate_instance(Instance(dim, n, tuple(edges), terminals, pins, grid))


def all_placement_invariants(inst, placement):
    """Raise AssertionError on any broken placement invariant."""
    check_placement(inst, placement)
    if inst.grid.mode == "bounded":
        cells = set(itertools.product(range(inst.grid.side), repeat=inst.dim))
        assert set(placement.assignment.values()) == cells
