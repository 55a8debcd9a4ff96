"""Spreading-metric relaxation solved by a cutting-plane loop.

The LP columns are the distances that carry cost (positive-weight edges),
the fixed pin-pair distances, and one shortest-path potential per ordered
vertex pair.  Bellman rows tie the potentials to the edge lengths, so
spreading cuts written on potentials are valid for the path metric.  Cuts are
found by exact separation on the path metric of each round's solution.  Each
round is solved with the HiGHS interior-point method.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.sparse.csgraph import csgraph_from_dense, shortest_path

from pinarrange.model import Instance, pin_distance

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ROUNDS = 200
LP_METHOD = "highs-ipm"
LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}
EPS_NUM = 1e-9
MAX_VERTICES = 256


class LPError(RuntimeError):
    def __init__(self, message: str, worst_violation: float = math.nan):
        super().__init__(message)
        self.worst_violation = worst_violation


@dataclass
class SpreadingMetric:
    dist: np.ndarray
    objective: float
    feasibility_tol: float = DEFAULT_TOL
    vertices: tuple[int, ...] = ()

    def __post_init__(self):
        self.dist = np.asarray(self.dist, dtype=float)
        if not self.vertices:
            self.vertices = tuple(range(self.dist.shape[0]))

    @property
    def n(self) -> int:
        return self.dist.shape[0]


@dataclass
class CutReport:
    rounds: int = 0
    cuts_added: dict[str, int] = field(default_factory=lambda: {"triangle": 0, "spreading": 0})
    final_violation: float = 0.0
    objective_history: list[float] = field(default_factory=list)


class SpreadingCut(NamedTuple):
    u: int
    members: tuple[int, ...]  # S without u
    rhs: float
    lhs: float

    @property
    def violation(self) -> float:
        return self.rhs - self.lhs


def spreading_rhs(size: int, dim: int) -> float:
    """Right-hand side for a set of ``size`` vertices: (|S| - 1)^(1 + 1/dim) / 4."""
    return (size - 1) ** (1.0 + 1.0 / dim) / 4.0


def separate_spreading(dist: np.ndarray, dim: int, tol: float = DEFAULT_TOL) -> list[SpreadingCut]:
    """All (u, S) spreading constraints violated by more than ``tol``.

    For fixed u and |S| = s, the left side is minimised by taking the s - 1
    nearest other vertices, so scanning sorted prefixes is exact.
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if n < 2:
        return []
    sizes = np.arange(2, n + 1)
    rhs = (sizes - 1) ** (1.0 + 1.0 / dim) / 4.0
    cuts = []
    for u in range(n):
        others = np.delete(np.arange(n), u)
        row = dist[u, others]
        order = np.argsort(row, kind="stable")
        prefix = np.cumsum(row[order])
        bad = np.nonzero(rhs - prefix > tol)[0]
        for i in bad:
            members = tuple(int(x) for x in others[order[: i + 1]])
            cuts.append(SpreadingCut(u, members, float(rhs[i]), float(prefix[i])))
    return cuts


def separate_triangle(dist: np.ndarray, tol: float = DEFAULT_TOL) -> list[tuple[int, int, int]]:
    """Triples (u, v, w), u < v, with dist(u, v) > dist(u, w) + dist(w, v) + tol."""
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    out = []
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    for w in range(n):
        detour = dist[:, w][:, None] + dist[w, :][None, :]
        bad = (dist > detour + tol) & upper
        bad[w, :] = False
        bad[:, w] = False
        for u, v in zip(*np.nonzero(bad)):
            out.append((int(u), int(v), w))
    return out


def _triangle_excess(dist: np.ndarray) -> float:
    """Largest dist(u, v) - dist(u, w) - dist(w, v) over distinct triples (0 if none)."""
    n = dist.shape[0]
    worst = 0.0
    for w in range(n):
        excess = dist - (dist[:, w][:, None] + dist[w, :][None, :])
        excess[w, :] = -np.inf
        excess[:, w] = -np.inf
        np.fill_diagonal(excess, -np.inf)
        worst = max(worst, float(excess.max()))
    return worst


def restrict_metric(metric: SpreadingMetric, subset: Sequence[int]) -> SpreadingMetric:
    """Principal submatrix on ``subset`` (positions in ``metric``).

    Spreading right-hand sides depend only on |S|, so feasibility carries over.
    The restricted objective is not defined without the edge set; it is 0.
    """
    if len(subset) == 0:
        raise ValueError("subset must be nonempty")
    idx = np.asarray(subset, dtype=int)
    sub = metric.dist[np.ix_(idx, idx)].copy()
    verts = tuple(metric.vertices[i] for i in idx)
    return SpreadingMetric(sub, 0.0, metric.feasibility_tol, verts)


def metric_cost(inst: Instance, dist: np.ndarray) -> float:
    return math.fsum(w * dist[u, v] for u, v, w in inst.edges)


def pin_metric(inst: Instance) -> np.ndarray:
    n = inst.n
    d = np.zeros((n, n))
    for i, s in enumerate(inst.terminals):
        for t in inst.terminals[i + 1 :]:
            d[s, t] = d[t, s] = pin_distance(inst, s, t)
    return d


def _rounded_pin_distance(inst: Instance, s: int, t: int, eps_num: float) -> float:
    # nearest rational with denominator 1/eps_num
    scale = round(1.0 / eps_num)
    return round(pin_distance(inst, s, t) * scale) / scale


def pin_targets(inst: Instance, eps_num: float = EPS_NUM) -> dict[tuple[int, int], float]:
    """Fixed LP distance for every pin pair (s < t).

    Pin distances are rounded to multiples of ``eps_num``; rounding can break
    the triangle inequality among collinear pins by a few ``eps_num``, so the
    rounded table is replaced by its shortest-path closure.  Each hop is at
    least 1, so the closure moves a distance by at most eps_num / 2 times its
    length.
    """
    terms = list(inst.terminals)
    k = len(terms)
    table = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            table[i, j] = table[j, i] = _rounded_pin_distance(inst, terms[i], terms[j], eps_num)
    closed = shortest_path(table, method="FW", directed=False) if k > 2 else table
    return {
        (min(terms[i], terms[j]), max(terms[i], terms[j])): float(closed[i, j])
        for i in range(k)
        for j in range(i + 1, k)
    }


class _Rows:
    """Sparse ``A x <= b`` rows, deduplicated."""

    def __init__(self, nvar: int):
        self.nvar = nvar
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []
        self.rhs: list[float] = []
        self.keys: set = set()

    def add(self, cols: Sequence[int], vals: Sequence[float], rhs: float, key=None) -> bool:
        if key is not None:
            if key in self.keys:
                return False
            self.keys.add(key)
        r = len(self.rhs)
        self.rows += [r] * len(cols)
        self.cols += list(cols)
        self.vals += list(vals)
        self.rhs.append(rhs)
        return True

    def matrix(self):
        return sparse.csr_matrix((self.vals, (self.rows, self.cols)), shape=(len(self.rhs), self.nvar))


def path_metric(n: int, pairs: Sequence[tuple[int, int]], lengths: np.ndarray, dim: int) -> np.ndarray:
    """Shortest-path metric of the graph on ``pairs`` with the given lengths.

    Vertices in different components are put at distance
    max(largest finite distance, spreading_rhs(n)), which keeps the triangle
    inequality and satisfies every spreading constraint involving such a pair.
    """
    w = np.full((n, n), np.inf)
    for (u, v), x in zip(pairs, lengths):
        w[u, v] = w[v, u] = min(w[u, v], x)
    np.fill_diagonal(w, 0.0)
    dist = shortest_path(csgraph_from_dense(w, null_value=np.inf), method="FW", directed=False)
    finite = np.isfinite(dist)
    far = max(float(dist[finite].max()), spreading_rhs(n, dim))
    dist[~finite] = far
    return dist


def _select_spreading(cuts: list[SpreadingCut], per_vertex: int) -> list[SpreadingCut]:
    by_u: dict[int, list[SpreadingCut]] = {}
    for c in cuts:
        by_u.setdefault(c.u, []).append(c)
    chosen = []
    for group in by_u.values():
        if len(group) <= per_vertex:
            chosen += group
            continue
        # most violated plus an even spread over the violated sizes
        picks = {max(range(len(group)), key=lambda i: group[i].violation)}
        picks.update(np.linspace(0, len(group) - 1, per_vertex - 1).round().astype(int).tolist())
        chosen += [group[i] for i in sorted(picks)]
    return chosen


def seed_sets(n: int, edges: Sequence[tuple[int, int]], enabled: bool = True) -> list[tuple[int, list[int]]]:
    """Starting spreading sets: for each u, its 2^i nearest vertices by hop count.

    Any set gives a valid cut; these only save rounds.
    """
    if not enabled or n < 2:
        return []
    adj = np.zeros((n, n))
    for a, b in edges:
        adj[a, b] = adj[b, a] = 1.0
    hops = shortest_path(csgraph_from_dense(adj, null_value=0.0), method="D", unweighted=True)
    out = []
    for u in range(n):
        order = [int(v) for v in np.lexsort((np.arange(n), hops[u])) if v != u]
        size = 1
        while size < n - 1:
            out.append((u, order[:size]))
            size *= 2
        out.append((u, order))
    return out


def _solve(c: np.ndarray, rows: _Rows, bounds: np.ndarray, rnd: int) -> np.ndarray:
    if not rows.rhs:
        # nothing but bounds: every length at its lower bound
        return bounds[:, 0].copy()
    res = linprog(
        c, A_ub=rows.matrix(), b_ub=np.array(rows.rhs), bounds=bounds, method=LP_METHOD, options=LP_OPTIONS
    )
    if res.status != 0:
        raise LPError(f"LP round {rnd} failed: {res.message}")
    return res.x


def solve_lp(
    inst: Instance,
    tol: float = DEFAULT_TOL,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    eps_num: float = EPS_NUM,
    per_vertex_cuts: int = 8,
    seed_cuts: bool = True,
) -> tuple[SpreadingMetric, CutReport]:
    """Optimal spreading metric for ``inst``.

    Columns: a length x_e for every positive-weight edge and fixed pin pair,
    and a potential y_u(v) for every ordered pair.  Bellman rows
    y_u(b) <= y_u(a) + x_ab keep each y_u below the shortest-path distances
    from u under x, so spreading cuts on y_u are valid for that path metric.
    Pin-pin potentials are fixed to the pin distances and gate rows route
    them through pins, so the triangle family stays empty; spreading cuts
    are added lazily.  Each round the shortest-path metric of
    x is checked exactly and returned once feasible: it costs no more than
    the LP value, so it is optimal.
    """
    n = inst.n
    if n > MAX_VERTICES:
        raise LPError(f"n={n} exceeds the supported size {MAX_VERTICES}")
    report = CutReport()

    if inst.k == n:
        d = pin_metric(inst)
        obj = metric_cost(inst, d)
        report.objective_history.append(obj)
        return SpreadingMetric(d, obj, tol), report

    fixed = pin_targets(inst, eps_num)
    support = sorted({(min(u, v), max(u, v)) for u, v, w in inst.edges if w > 0} - set(fixed))
    pairs = support + sorted(fixed)
    col = {p: j for j, p in enumerate(pairs)}
    m = len(pairs)
    c_x = np.zeros(m)
    for u, v, w in inst.edges:
        if w > 0:
            c_x[col[(min(u, v), max(u, v))]] += w
    lo_x = np.zeros(m)
    hi_x = np.full(m, np.inf)
    for p, x in fixed.items():
        lo_x[col[p]] = hi_x[col[p]] = x

    def y(u, v):
        return m + u * n + v

    nvar = m + n * n
    c = np.concatenate([c_x, np.zeros(n * n)])
    lo = np.concatenate([lo_x, np.zeros(n * n)])
    hi = np.concatenate([hi_x, np.full(n * n, np.inf)])
    for (s, t), x in fixed.items():
        lo[y(s, t)] = lo[y(t, s)] = hi[y(s, t)] = hi[y(t, s)] = x
    for u in range(n):
        hi[y(u, u)] = 0.0
    bounds = np.column_stack([lo, hi])

    rows = _Rows(nvar)
    for a, b in support:
        j = col[(a, b)]
        for u in range(n):
            rows.add((y(u, b), y(u, a), j), (1.0, -1.0, -1.0), 0.0)
            rows.add((y(u, a), y(u, b), j), (1.0, -1.0, -1.0), 0.0)

    # Pin pairs as path steps.  Pin distances form a metric, so a shortest
    # path uses at most one pin-pin step, entering the pins at a pin with a
    # weighted edge to a free vertex.  Pin sources need nothing: their
    # pin-to-pin potentials are fixed by the bounds above.
    terms = list(inst.terminals)
    pinned = set(terms)
    free = inst.free_vertices
    gates = sorted({v for e in support for v in e if v in pinned})
    for u in free:
        for a in gates:
            for t in terms:
                if t != a:
                    j = col[(min(a, t), max(a, t))]
                    rows.add((y(u, t), y(u, a), j), (1.0, -1.0, -1.0), 0.0)

    def spread_row(u: int, members: Sequence[int]) -> bool:
        members = tuple(sorted(members))
        rhs = spreading_rhs(len(members) + 1, inst.dim)
        return rows.add([y(u, v) for v in members], [-1.0] * len(members), -rhs, (u, members))

    for u, members in seed_sets(n, support, seed_cuts):
        report.cuts_added["spreading"] += spread_row(u, members)
    worst = math.inf
    for rnd in range(1, max_rounds + 1):
        sol = _solve(c, rows, bounds, rnd)
        x = np.maximum(sol[:m], 0.0)
        obj = float(c_x @ x)
        report.objective_history.append(obj)
        report.rounds = rnd

        d = path_metric(n, pairs, x, inst.dim)
        short = [target - d[p] for p, target in fixed.items() if target - d[p] > tol]
        spread_d = separate_spreading(d, inst.dim, tol)
        worst = max([cut.violation for cut in spread_d] + short, default=0.0)
        log.debug("round %d objective %.9g violation %.3g", rnd, obj, worst)
        if worst <= tol:
            report.final_violation = max(worst, _triangle_excess(d))
            return SpreadingMetric(d, metric_cost(inst, d), tol), report

        # y <= d, so a set violated by d is violated by y and cannot be a repeat
        added_s = 0
        for cut in _select_spreading(spread_d, per_vertex_cuts):
            added_s += spread_row(cut.u, cut.members)
        report.cuts_added["spreading"] += added_s
        if added_s == 0:
            raise LPError(f"round {rnd}: violated cuts already present (violation {worst:.3g})", worst)

    report.final_violation = worst
    raise LPError(f"no feasible metric after {max_rounds} rounds", worst)
