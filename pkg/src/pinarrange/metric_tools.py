"""Random metric decompositions: FRT trees, CKR 0-extension, tree 0-extension.

Also holds the instance alteration that reroutes every cut edge through the
two cluster terminals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from pinarrange.model import Edge, Instance
from pinarrange.spreading_lp import SpreadingMetric

ZERO_TOL = 1e-12


@dataclass
class HstNode:
    level: int
    diameter: float
    members: tuple[int, ...]
    parent: int = -1
    children: list[int] = field(default_factory=list)
    vertex: int | None = None


@dataclass
class Hst:
    nodes: list[HstNode]
    unit: float
    root: int = 0
    leaf_of: dict[int, int] = field(default_factory=dict)
    leaf_order: list[int] = field(default_factory=list)
    _dist: np.ndarray | None = None
    _index: dict[int, int] | None = None

    @property
    def vertices(self) -> list[int]:
        return self.leaf_order

    def ancestors(self, v: int) -> list[int]:
        """Node ids from the leaf of ``v`` up to the root."""
        out = [self.leaf_of[v]]
        while self.nodes[out[-1]].parent >= 0:
            out.append(self.nodes[out[-1]].parent)
        return out

    def edge_length(self, node: int) -> float:
        """Length of the edge from ``node`` to its parent."""
        return self.nodes[self.nodes[node].parent].diameter / 2.0

    def tree_distances(self) -> tuple[np.ndarray, dict[int, int]]:
        """Tree metric on the leaves, indexed by position in ``leaf_order``."""
        if self._dist is not None:
            return self._dist, self._index
        verts = self.leaf_order
        index = {v: i for i, v in enumerate(verts)}
        paths = [self.ancestors(v)[::-1] for v in verts]
        depth = len(paths[0])
        anc = np.array(paths, dtype=int)  # root first
        up = np.zeros_like(anc, dtype=float)
        for i, path in enumerate(paths):
            acc = 0.0
            for j in range(depth - 1, 0, -1):
                up[i, j] = acc
                acc += self.edge_length(path[j])
            up[i, 0] = acc
        same = anc[:, None, :] == anc[None, :, :]
        lca = same.sum(axis=2) - 1
        rows = np.arange(len(verts))
        d = up[rows[:, None], lca] + up[rows[None, :], lca]
        np.fill_diagonal(d, 0.0)
        self._dist, self._index = d, index
        return d, index

    def tree_dist(self, u: int, v: int) -> float:
        d, index = self.tree_distances()
        return float(d[index[u], index[v]])

    def subtree_leaves(self, node: int) -> tuple[int, ...]:
        return self.nodes[node].members


def hst_build(metric: SpreadingMetric, seed: int) -> Hst:
    """FRT random hierarchical decomposition of ``metric``.

    Level-l clusters are cut with radius beta * 2^(l-2) * unit around centres
    taken in a random permutation order, so each has diameter below 2^l * unit.
    A node's stored diameter is the larger of that bound and its true
    diameter; edge lengths are half the parent's diameter, which makes the
    tree metric dominate the input pairwise.
    """
    rng = np.random.default_rng(seed)
    D = metric.dist
    m = D.shape[0]
    verts = metric.vertices
    if m == 1:
        node = HstNode(0, 0.0, (verts[0],), vertex=verts[0])
        return Hst([node], 1.0, 0, {verts[0]: 0}, [verts[0]])

    positive = D[D > ZERO_TOL]
    unit = float(positive.min()) if positive.size else 1.0
    diam = float(D.max())
    top = 0
    while 2.0**top * unit <= diam:
        top += 1
    top = max(top, 1)

    perm = rng.permutation(m)
    beta = rng.uniform(1.0, 2.0)

    def actual_diameter(pos: np.ndarray) -> float:
        return float(D[np.ix_(pos, pos)].max()) if pos.size > 1 else 0.0

    all_pos = np.arange(m)
    nodes = [HstNode(top, max(2.0**top * unit, actual_diameter(all_pos)), tuple(verts))]
    frontier = [(0, all_pos)]
    for level in range(top - 1, -1, -1):
        radius = beta * 2.0 ** (level - 2) * unit
        within = D[:, perm] <= radius
        centre_rank = np.argmax(within, axis=1)  # every vertex covers itself
        nxt = []
        for parent, pos in frontier:
            groups: dict[int, list[int]] = {}
            for p in pos:
                groups.setdefault(int(centre_rank[p]), []).append(int(p))
            parts = [np.array(groups[r]) for r in sorted(groups)]
            if level == 0:
                parts = [np.array([p]) for part in parts for p in part]
            for part in parts:
                bound = max(2.0**level * unit, actual_diameter(part))
                child = HstNode(level, bound, tuple(verts[p] for p in part), parent=parent)
                nodes.append(child)
                nodes[parent].children.append(len(nodes) - 1)
                nxt.append((len(nodes) - 1, part))
        frontier = nxt

    hst = Hst(nodes, unit)
    stack = [0]
    while stack:
        x = stack.pop()
        node = nodes[x]
        if not node.children:
            node.vertex = node.members[0]
            hst.leaf_of[node.vertex] = x
            hst.leaf_order.append(node.vertex)
        stack.extend(reversed(node.children))
    return hst


@dataclass
class Clustering:
    g: dict[int, int]
    terminals: tuple[int, ...]
    a_star: dict[int, float] = field(default_factory=dict)

    @property
    def clusters(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {t: [] for t in self.terminals}
        for v in sorted(self.g):
            out[self.g[v]].append(v)
        return out


def ckr_partition(metric: SpreadingMetric, terminals: Sequence[int], seed: int) -> Clustering:
    """CKR rounding: one radius multiplier r in [1, 2), one terminal permutation.

    Each vertex goes to the first terminal in permutation order within
    r * (distance to its nearest terminal).
    """
    rng = np.random.default_rng(seed)
    terminals = tuple(terminals)
    pos = {v: i for i, v in enumerate(metric.vertices)}
    D = metric.dist
    tcols = np.array([pos[t] for t in terminals])
    r = rng.uniform(1.0, 2.0)
    order = rng.permutation(len(terminals))
    g, a_star = {}, {}
    for v in metric.vertices:
        row = D[pos[v], tcols]
        a = float(row.min())
        a_star[v] = a
        ok = row[order] <= r * a
        g[v] = terminals[order[int(np.argmax(ok))]]
    return Clustering(g, terminals, a_star)


def tree_zero_extension(hst: Hst, terminals: Sequence[int], seed: int) -> Clustering:
    """Retraction onto ``terminals`` whose clusters are connected in ``hst``.

    Initial assignment: with one random multiplier r in [1, 2), each leaf takes
    the lowest-index terminal whose tree distance is within r times its
    nearest. A pass over leaves in order of that distance then walks the tree
    path to the chosen terminal and joins whichever cluster first owns a node
    on it, so every cluster spans a connected subtree.
    """
    rng = np.random.default_rng(seed)
    terminals = tuple(terminals)
    d, index = hst.tree_distances()
    tcols = np.array([index[t] for t in terminals])
    r = rng.uniform(1.0, 2.0)
    g0, a_star = {}, {}
    for v in hst.leaf_order:
        row = d[index[v], tcols]
        a = float(row.min())
        a_star[v] = a
        g0[v] = terminals[int(np.argmax(row <= r * a))]

    owner: dict[int, int] = {}
    for t in terminals:
        owner[hst.leaf_of[t]] = t
    g = {t: t for t in terminals}
    rest = [v for v in hst.leaf_order if v not in g]
    rest.sort(key=lambda v: (d[index[v], index[g0[v]]], v))
    for v in rest:
        walked = []
        label = None
        for node in _tree_path(hst, v, g0[v]):
            if node in owner:
                label = owner[node]
                break
            walked.append(node)
        for node in walked:
            owner[node] = label
        g[v] = label
    return Clustering(g, terminals, a_star)


def _tree_path(hst: Hst, u: int, v: int) -> list[int]:
    up_u = hst.ancestors(u)
    up_v = hst.ancestors(v)
    on_v = set(up_v)
    i = next(i for i, x in enumerate(up_u) if x in on_v)
    lca = up_u[i]
    down = up_v[: up_v.index(lca)]
    return up_u[: i + 1] + down[::-1]


def steiner_nodes(hst: Hst, members: Sequence[int]) -> set[int]:
    """Tree nodes on paths between the leaves of ``members``."""
    members = list(members)
    out = {hst.leaf_of[members[0]]}
    for v in members[1:]:
        out.update(_tree_path(hst, members[0], v))
    return out


def clusters_connected(hst: Hst, clustering: Clustering) -> bool:
    """True iff the clusters' Steiner subtrees are pairwise node-disjoint."""
    used: set[int] = set()
    for members in clustering.clusters.values():
        nodes = steiner_nodes(hst, members)
        if nodes & used:
            return False
        used |= nodes
    return True


def alter_instance(inst: Instance, clustering: Clustering) -> Instance:
    """Reroute each inter-cluster edge (u, v) as (u, g(u)), (g(u), g(v)), (v, g(v)).

    All three copies keep the original weight. A copy whose endpoints
    coincide (u is itself its terminal) has zero length and is dropped.
    """
    g = clustering.g
    edges: list[Edge] = []
    for u, v, w in inst.edges:
        a, b = g[u], g[v]
        if a == b:
            edges.append((u, v, w))
            continue
        for x, y in ((u, a), (a, b), (v, b)):
            if x != y:
                edges.append((x, y, w))
    return inst.with_edges(edges)


def mean_stretch(hst: Hst, metric: SpreadingMetric) -> float:
    d, index = hst.tree_distances()
    pos = [index[v] for v in metric.vertices]
    tree = d[np.ix_(pos, pos)]
    iu, iv = np.triu_indices(metric.n, 1)
    base = metric.dist[iu, iv]
    keep = base > ZERO_TOL
    if not keep.any():
        return 1.0
    return float(np.mean(tree[iu, iv][keep] / base[keep]))
