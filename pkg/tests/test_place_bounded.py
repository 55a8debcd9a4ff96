import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import all_placement_invariants, random_instance
from oracles import brute_force_optimum
from pinarrange.generators import gen_bounded_gap
from pinarrange.model import GridSpec, Instance, InstanceError, validate_instance
from pinarrange.ordering import Ordering
from pinarrange.place_bounded import (
    SubClusterPlan,
    apply_shift,
    bounded_trial,
    build_subclusters,
    carve_regions,
    dyadic_depth,
    linf,
    place_bounded,
    subcluster_ranges,
)
from pinarrange.spreading_lp import solve_lp

# the audit asserts the 1/(4k) floor on the free share of each carving ball;
# over this sample the smallest share times k is exactly 0.25
DENSITY_FLOOR = 0.25


def _ordering(seq):
    return Ordering({v: r for r, v in enumerate(seq)}, seq[0], 0.0)


def test_all_pinned_is_identity():
    pins = {i: c for i, c in enumerate(itertools.product(range(3), repeat=2))}
    inst = validate_instance(Instance(2, 9, ((0, 4, 1.0), (4, 8, 2.0)), tuple(range(9)), pins, GridSpec("bounded", 3)))
    p = place_bounded(inst)
    assert p.assignment == pins


def test_path_on_two_by_two_matches_enumeration():
    inst = validate_instance(
        Instance(2, 4, ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)), (0,), {0: (0, 0)}, GridSpec("bounded", 2))
    )
    p = place_bounded(inst, seed=0, trials=4)
    all_placement_invariants(inst, p)
    assert p.assignment[0] == (0, 0)
    cells = [c for c in itertools.product(range(2), repeat=2) if c != (0, 0)]
    best = brute_force_optimum(inst, cells)
    assert best == pytest.approx(3.0)
    lp = solve_lp(inst)[0].objective
    assert lp <= best + 1e-9
    assert p.cost >= best - 1e-9


def test_bounded_gap_forced_cost():
    inst = gen_bounded_gap(16).instance
    p = place_bounded(inst, seed=1, trials=4)
    assert p.cost == pytest.approx(3 * math.sqrt(2), abs=1e-9)
    assert {p.assignment[14], p.assignment[15]} == {(0, 0), (3, 3)}


def test_unbounded_instance_rejected():
    inst = random_instance(np.random.default_rng(0), 9, 2)
    with pytest.raises(InstanceError):
        place_bounded(inst)


# ---------------------------------------------------------------- sub-clusters


def test_small_clusters_have_two_pieces_at_most():
    for size in range(1, 5):
        assert dyadic_depth(size) == 0
        plan = build_subclusters(_ordering(list(range(size))), seed=size)
        assert len(plan.pieces) <= 2
        assert plan.pieces[0] == [0]


def test_sixteen_with_unit_gamma():
    assert subcluster_ranges(16, 1.0) == [(0, 1), (1, 2), (2, 4), (4, 16)]


def test_hundred_over_thousand_seeds():
    seq = list(range(100, 200))
    delta = dyadic_depth(100)
    assert delta == 4
    for seed in range(1000):
        plan = build_subclusters(_ordering(seq), seed=seed)
        assert 1.0 <= plan.gamma < 2.0
        flat = [v for piece in plan.pieces for v in piece]
        assert flat == seq
        assert plan.pieces[0] == [100]
        ranks = [(seq.index(piece[0]), seq.index(piece[-1]) + 1) for piece in plan.pieces]
        for j in range(1, delta + 1):
            lo, hi = ranks[j]
            assert lo == max(1, math.floor(plan.gamma * 2 ** (j - 1)))
            assert hi == math.floor(plan.gamma * 2**j)
        assert ranks[-1][1] == 100


def test_anchor_must_rank_first():
    bad = Ordering({0: 1, 1: 0}, 0, 0.0)
    with pytest.raises(ValueError):
        build_subclusters(bad, seed=0)


# ---------------------------------------------------------------- shifts


def test_shift_zero_is_identity():
    assert apply_shift([7, 8, 9], 0) == {7: 0, 8: 1, 9: 2}


def test_shift_three_by_one():
    assert apply_shift([7, 8, 9], 1) == {7: 1, 8: 2, 9: 0}


def test_shift_bijective_for_all_tau():
    for m in range(1, 12):
        for tau in range(m):
            ranks = apply_shift(list(range(m)), tau)
            assert sorted(ranks.values()) == list(range(m))


def test_shift_out_of_range():
    with pytest.raises(ValueError):
        apply_shift([1, 2, 3], 3)


# ---------------------------------------------------------------- carving


def _plan(terminal, sizes, first_vertex):
    pieces, v = [], first_vertex
    for s in sizes:
        pieces.append(list(range(v, v + s)))
        v += s
    return SubClusterPlan(terminal, 1.0, 0, pieces)


def test_single_pin_gives_concentric_shells():
    plan = _plan(0, [1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25], 0)
    regions = carve_regions([plan], {0: (6, 6)}, 13, 2)
    prev = -1
    for j in range(len(plan.pieces)):
        cells = regions.regions[(0, j)]
        radii = {linf(c, (6, 6)) for c in cells}
        assert min(radii) >= prev
        prev = max(radii)
    assert regions.regions[(0, 0)] == [(6, 6)]


def test_first_region_is_the_pin():
    rng = np.random.default_rng(3)
    for _ in range(20):
        inst = random_instance(rng, 25, 3, "bounded")
        metric, _ = solve_lp(inst)
        trial = bounded_trial(inst, metric, int(rng.integers(1 << 30)))
        for i, t in enumerate(inst.terminals):
            assert trial.regions.regions[(i, 0)] == [inst.pins[t]]


def _replay_free(plans, regions, side, upto):
    free = set(itertools.product(range(side), repeat=2))
    depth = max(len(p.pieces) for p in plans)
    for j in range(depth):
        for i in range(len(plans)):
            if (i, j) == upto:
                return free
            if (i, j) in regions.regions:
                free -= set(regions.regions[(i, j)])
    raise AssertionError("key not found")


def test_opposite_corner_regions_are_radius_minimal():
    plans = [_plan(0, [1, 2, 5], 2), _plan(1, [1, 2, 5], 10)]
    pins = {0: (0, 0), 1: (3, 3)}
    regions = carve_regions(plans, pins, 4, 2)
    all_cells = [c for key in regions.regions for c in regions.regions[key]]
    assert len(all_cells) == len(set(all_cells)) == 16
    for (i, j), cells in regions.regions.items():
        centre = pins[plans[i].terminal]
        free = sorted(_replay_free(plans, regions, 4, (i, j)))
        best = min(
            max(linf(c, centre) for c in choice) for choice in itertools.combinations(free, len(cells))
        )
        assert regions.radius[(i, j)] == best
        assert max(linf(c, centre) for c in cells) == best


def test_carving_radius_witness_and_density():
    rng = np.random.default_rng(11)
    ratios = []
    for _ in range(15):
        n = int(rng.choice([16, 25, 36, 49]))
        k = int(rng.integers(1, 5))
        inst = random_instance(rng, n, k, "bounded", density=0.05)
        metric, _ = solve_lp(inst)
        trial = bounded_trial(inst, metric, int(rng.integers(1 << 30)))
        reg = trial.regions
        for key, cells in reg.regions.items():
            # fewer free cells strictly inside the radius than needed, enough within it
            assert reg.inner_free[key] < len(cells) <= reg.outer_free[key]
            ratios.append(reg.free_ratio[key])
            assert reg.free_ratio[key] * k >= DENSITY_FLOOR - 1e-12
    assert min(ratios) > 0


# ---------------------------------------------------------------- full pipeline


def _check_trial(inst, trial):
    p = trial.placement
    all_placement_invariants(inst, p)
    cluster_of = trial.clustering.g
    for i, plan in enumerate(trial.plans):
        members = sorted(v for v, t in cluster_of.items() if t == plan.terminal)
        assert sorted(v for piece in plan.pieces for v in piece) == members
        for j, piece in enumerate(plan.pieces):
            assert sorted(p.assignment[v] for v in piece) == sorted(trial.regions.regions[(i, j)])
    cells = [c for cells in trial.regions.regions.values() for c in cells]
    assert sorted(cells) == sorted(itertools.product(range(inst.grid.side), repeat=inst.dim))


@settings(max_examples=25)
@given(st.sampled_from([4, 9, 16, 25, 36]), st.integers(1, 5), st.sampled_from(["ckr", "hst"]), st.integers(0, 10**6))
def test_trial_invariants(n, k, pipeline, seed):
    k = min(k, n)
    inst = random_instance(np.random.default_rng(seed), n, k, "bounded")
    metric, _ = solve_lp(inst)
    trial = bounded_trial(inst, metric, seed, pipeline)
    _check_trial(inst, trial)
    assert trial.placement.cost >= metric.objective - 1e-6 * max(1.0, metric.objective)


def test_one_dimensional_grid():
    inst = random_instance(np.random.default_rng(5), 8, 2, "bounded", dim=1)
    metric, _ = solve_lp(inst)
    trial = bounded_trial(inst, metric, 5)
    _check_trial(inst, trial)


def test_best_of_trials_never_worse_than_fewer():
    inst = random_instance(np.random.default_rng(8), 25, 3, "bounded")
    metric, _ = solve_lp(inst)
    costs = [place_bounded(inst, seed=4, trials=t, metric=metric).cost for t in (1, 2, 4, 8)]
    assert all(b <= a + 1e-12 for a, b in zip(costs, costs[1:]))
