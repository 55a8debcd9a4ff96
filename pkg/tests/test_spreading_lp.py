import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_instance
from oracles import enumerated_lp, violated_size_classes, violated_triangles
from pinarrange.generators import gen_bounded_gap
from pinarrange.model import Instance, validate_instance
from pinarrange.spreading_lp import (
    LPError,
    SpreadingMetric,
    metric_cost,
    restrict_metric,
    separate_spreading,
    separate_triangle,
    solve_lp,
    spreading_rhs,
)


def euclid_table(points):
    p = np.asarray(points, dtype=float)
    return np.sqrt(((p[:, None] - p[None]) ** 2).sum(axis=2))


def test_rhs_values():
    assert spreading_rhs(2, 2) == 0.25
    assert spreading_rhs(5, 2) == pytest.approx(4**1.5 / 4)
    assert spreading_rhs(3, 1) == pytest.approx(1.0)


def test_unit_square_has_no_cuts():
    d = euclid_table([(0, 0), (0, 1), (1, 0), (1, 1)])
    assert separate_spreading(d, 2) == []


def test_zero_metric_violates_everything():
    cuts = separate_spreading(np.zeros((3, 3)), 2)
    assert {(c.u, len(c.members) + 1) for c in cuts} == {(u, s) for u in range(3) for s in (2, 3)}


@pytest.mark.parametrize("n", [4, 6, 8, 10])
def test_spreading_oracle_matches_subset_enumeration(n):
    rng = np.random.default_rng(n)
    for _ in range(3):
        pts = rng.uniform(0, 2.0, size=(n, 2))
        d = euclid_table(pts) * rng.uniform(0.2, 1.0)
        cuts = separate_spreading(d, 2, 1e-9)
        assert {(c.u, len(c.members) + 1) for c in cuts} == violated_size_classes(d, 2, 1e-9)
        for c in cuts:
            assert c.lhs == pytest.approx(sum(d[c.u, v] for v in c.members))


@given(st.integers(3, 8), st.integers(0, 10**6), st.sampled_from([1, 2]))
def test_spreading_oracle_property(n, seed, dim):
    rng = np.random.default_rng(seed)
    d = rng.uniform(0, 1.5, size=(n, n))
    d = np.triu(d, 1)
    d = d + d.T
    cuts = separate_spreading(d, dim, 1e-9)
    assert {(c.u, len(c.members) + 1) for c in cuts} == violated_size_classes(d, dim, 1e-9)


@given(
    st.lists(st.tuples(st.integers(-6, 6), st.integers(-6, 6)), min_size=2, max_size=12, unique=True)
)
def test_integral_placements_satisfy_spreading(points):
    # the relaxation is valid: every injective lattice placement is LP-feasible
    d = euclid_table(points)
    assert separate_spreading(d, 2, 1e-12) == []
    assert separate_triangle(d, 1e-9) == []


@given(st.lists(st.integers(-30, 30), min_size=2, max_size=12, unique=True))
def test_integral_line_placements_satisfy_spreading(xs):
    d = euclid_table([(x,) for x in xs])
    assert separate_spreading(d, 1, 1e-12) == []


def test_triangle_examples():
    d = euclid_table([(0, 0), (3, 1), (2, 2)])
    assert separate_triangle(d) == []
    bad = np.array([[0, 10, 1], [10, 0, 1], [1, 1, 0]], dtype=float)
    assert separate_triangle(bad) == [(0, 1, 2)]


@pytest.mark.parametrize("seed", range(5))
def test_triangle_oracle_matches_scan(seed):
    rng = np.random.default_rng(seed)
    d = rng.uniform(0, 3, size=(6, 6))
    d = np.triu(d, 1)
    d = d + d.T
    assert set(separate_triangle(d, 1e-9)) == violated_triangles(d, 1e-9)


def test_restrict_metric():
    d = euclid_table([(0, 0), (1, 0), (0, 1), (3, 3), (2, 5), (4, 1), (6, 0), (5, 5)])
    m = SpreadingMetric(d, 0.0)
    one = restrict_metric(m, [3])
    assert one.dist.shape == (1, 1) and one.dist[0, 0] == 0
    assert np.array_equal(restrict_metric(m, list(range(8))).dist, d)
    sub = restrict_metric(m, [1, 4, 6, 7])
    assert sub.vertices == (1, 4, 6, 7)
    assert separate_spreading(sub.dist, 2) == []
    with pytest.raises(ValueError):
        restrict_metric(m, [])


def test_all_pinned_short_circuit():
    pins = {0: (0, 0), 1: (3, 4), 2: (1, 1)}
    inst = validate_instance(Instance(2, 3, ((0, 1, 2.0), (1, 2, 1.0)), (0, 1, 2), pins))
    metric, report = solve_lp(inst)
    assert report.rounds == 0
    assert metric.objective == pytest.approx(10 + math.sqrt(13))
    assert metric.dist[0, 1] == 5.0


def test_three_vertex_path_matches_enumerated_lp():
    inst = validate_instance(Instance(2, 3, ((0, 1, 1.0), (1, 2, 1.0)), (0,), {0: (0, 0)}))
    metric, _ = solve_lp(inst)
    assert metric.objective == pytest.approx(enumerated_lp(inst), abs=1e-7)


@pytest.mark.parametrize("seed", range(8))
def test_random_instances_match_enumerated_lp(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(3, 8))
    k = int(rng.integers(1, n))
    dim = int(rng.choice([1, 2]))
    inst = random_instance(rng, n, k, "unbounded", dim=dim, span=4 if dim == 2 else n + 1)
    metric, report = solve_lp(inst)
    ref = enumerated_lp(inst)
    assert metric.objective == pytest.approx(ref, rel=1e-6, abs=1e-6)
    # returned table is feasible for the full constraint set
    assert violated_size_classes(metric.dist, dim, 1e-6) == set()
    assert violated_triangles(metric.dist, 1e-6) == set()
    assert report.final_violation <= 1e-7
    hist = report.objective_history
    assert all(b >= a - 1e-9 for a, b in zip(hist, hist[1:]))
    for s, t in itertools.combinations(inst.terminals, 2):
        true = math.dist(inst.pins[s], inst.pins[t])
        assert abs(metric.dist[s, t] - true) <= 1e-9 * max(1.0, true)
    assert metric.objective == pytest.approx(metric_cost(inst, metric.dist))


def test_bounded_gap_lp_at_most_one():
    metric, _ = solve_lp(gen_bounded_gap(16).instance)
    assert metric.objective <= 1 + 1e-7


def test_round_budget_reports_violation():
    rng = np.random.default_rng(3)
    inst = random_instance(rng, 12, 2, "unbounded")
    with pytest.raises(LPError) as err:
        solve_lp(inst, max_rounds=1)
    assert err.value.worst_violation > 0


def test_size_cap():
    inst = Instance(1, 300, (), (0,), {0: (0,)})
    with pytest.raises(LPError):
        solve_lp(inst)
