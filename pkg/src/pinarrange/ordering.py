"""Anchored in-order traversal of an HST: the Rotter-Vygen style vertex ordering."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from pinarrange.metric_tools import Hst, hst_build
from pinarrange.model import Edge
from pinarrange.spreading_lp import SpreadingMetric


@dataclass
class Ordering:
    q: dict[int, int]
    anchor: int
    dcost: float

    @property
    def sequence(self) -> list[int]:
        seq = [0] * len(self.q)
        for v, r in self.q.items():
            seq[r] = v
        return seq


def dimensional_cost(q: dict[int, int], edges: Iterable[Edge], dim: int) -> float:
    """Sum of w * |q(u) - q(v)|^(1/dim) over edges with both ends ranked by q."""
    return float(sum(w * abs(q[u] - q[v]) ** (1.0 / dim) for u, v, w in edges if u in q and v in q))


def anchored_inorder(hst: Hst, members: Sequence[int], anchor: int, rng: np.random.Generator) -> list[int]:
    """Leaves of ``members`` in DFS order, the anchor's branch always first.

    The remaining children of a node are visited in a random order.
    """
    wanted = set(members)
    on_anchor_path = set(hst.ancestors(anchor))
    out: list[int] = []

    def visit(x: int) -> None:
        node = hst.nodes[x]
        if not node.children:
            if node.vertex in wanted:
                out.append(node.vertex)
            return
        kids = [c for c in node.children if wanted.intersection(hst.nodes[c].members)]
        first = [c for c in kids if c in on_anchor_path]
        rest = [c for c in kids if c not in on_anchor_path]
        rng.shuffle(rest)
        for c in first + rest:
            visit(c)

    visit(hst.root)
    return out


def rv_order(
    metric: SpreadingMetric,
    edges: Iterable[Edge],
    anchor: int,
    dim: int,
    seed: int,
    hst: Hst | None = None,
) -> Ordering:
    """Ordering of ``metric.vertices`` with the anchor at rank 0.

    Without ``hst`` a fresh FRT tree of the cluster metric is built; with one
    (for instance a connected subtree from tree 0-extension) it is reused.
    """
    members = list(metric.vertices)
    if anchor not in members:
        raise ValueError(f"anchor {anchor} not in cluster")
    if hst is None:
        hst = hst_build(metric, seed)
    rng = np.random.default_rng([seed, 1])
    seq = anchored_inorder(hst, members, anchor, rng)
    q = {v: i for i, v in enumerate(seq)}
    return Ordering(q, anchor, dimensional_cost(q, edges, dim))
