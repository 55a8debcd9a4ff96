import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import all_placement_invariants, random_instance
from oracles import brute_force_optimum
from pinarrange.generators import gen_bounded_gap
from pinarrange.model import GridSpec, Instance, validate_instance
from pinarrange.oracle_exact import BudgetExceeded, candidate_cells, solve_exact
from pinarrange.spreading_lp import solve_lp


def test_all_pinned():
    pins = {0: (0, 0), 1: (1, 0), 2: (0, 1), 3: (1, 1)}
    inst = validate_instance(Instance(2, 4, ((0, 3, 2.0), (1, 2, 1.0)), (0, 1, 2, 3), pins, GridSpec("bounded", 2)))
    res = solve_exact(inst)
    assert res.enumerated == 1
    assert res.argmin.assignment == pins
    assert res.optimum == pytest.approx(3 * math.sqrt(2))


def test_bounded_gap_sixteen():
    res = solve_exact(gen_bounded_gap(16).instance)
    assert res.optimum == pytest.approx(3 * math.sqrt(2), abs=1e-12)
    assert res.enumerated == 2


def test_two_by_two_path_by_hand():
    # pin at the origin; the three completions of the path 0-1-2-3 cost
    # 3 (snake), 1 + sqrt2 + 1 and sqrt2 + 1 + 1 for the other orders
    inst = validate_instance(
        Instance(2, 4, ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)), (0,), {0: (0, 0)}, GridSpec("bounded", 2))
    )
    res = solve_exact(inst)
    assert res.enumerated == 6
    assert res.optimum == pytest.approx(3.0)
    a = res.argmin.assignment
    assert [math.dist(a[u], a[v]) for u, v, _ in inst.edges] == [1.0, 1.0, 1.0]


def test_candidate_cells_unbounded_box():
    inst = validate_instance(Instance(2, 3, ((0, 2, 1.0),), (0, 1), {0: (0, 0), 1: (2, 1)}))
    cells = candidate_cells(inst, margin=1)
    assert len(cells) == 5 * 4 - 2
    assert min(cells) == (-1, -1) and max(cells) == (3, 2)
    assert (0, 0) not in cells and (2, 1) not in cells


def test_budget_limits():
    inst = random_instance(np.random.default_rng(1), 16, 2, "bounded")
    with pytest.raises(BudgetExceeded):
        solve_exact(inst)
    wide = validate_instance(Instance(2, 3, ((0, 2, 1.0),), (0, 1), {0: (0, 0), 1: (9, 9)}))
    with pytest.raises(BudgetExceeded):
        solve_exact(wide, cell_budget=64)


@settings(max_examples=30)
@given(st.sampled_from([4, 9]), st.integers(1, 8), st.integers(0, 10**6))
def test_matches_enumeration_oracle_and_bounds_lp(n, k, seed):
    k = min(k, n)
    inst = random_instance(np.random.default_rng(seed), n, k, "bounded")
    if n - k > 5:
        k = n - 5
        inst = random_instance(np.random.default_rng(seed), n, k, "bounded")
    res = solve_exact(inst)
    all_placement_invariants(inst, res.argmin)
    taken = set(inst.pins.values())
    cells = [c for c in itertools.product(range(inst.grid.side), repeat=2) if c not in taken]
    assert res.optimum == pytest.approx(brute_force_optimum(inst, cells), rel=1e-12, abs=1e-12)
    assert solve_lp(inst)[0].objective <= res.optimum + 1e-6


def test_unbounded_small_margin():
    inst = validate_instance(
        Instance(2, 3, ((0, 2, 1.0), (1, 2, 1.0)), (0, 1), {0: (0, 0), 1: (2, 0)})
    )
    res = solve_exact(inst, margin=1)
    # the free vertex sits midway between the pins
    assert res.argmin.assignment[2] == (1, 0)
    assert res.optimum == pytest.approx(2.0)
