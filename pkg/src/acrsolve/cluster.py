"""Cluster trees: recursive bisection of an index range.

The tree fixes the block partition used by the hierarchical matrix
format. Every off-diagonal block of the partition is admitted as a
single low-rank factor (weak admissibility), so the tree is just a
balanced bisection of [0, n) down to a leaf size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple


@dataclass(frozen=True)
class ClusterTree:
    """A node of the bisection tree over the index interval [lo, hi)."""

    lo: int
    hi: int
    leaf_size: int
    children: Optional[Tuple["ClusterTree", "ClusterTree"]] = None

    @property
    def size(self) -> int:
        return self.hi - self.lo

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    @property
    def mid(self) -> int:
        return (self.lo + self.hi) // 2

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(c.depth() for c in self.children)

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            for c in self.children:
                yield from c.leaves()

    def __repr__(self):
        kind = "leaf" if self.is_leaf else "branch"
        return f"ClusterTree([{self.lo},{self.hi}), {kind})"


def build_cluster_tree(n: int, leaf_size: int = 32) -> ClusterTree:
    """Build a balanced bisection tree over [0, n).

    A node is split at the midpoint floor((lo+hi)/2) until its range
    fits within ``leaf_size``.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if leaf_size < 1:
        raise ValueError(f"leaf_size must be >= 1, got {leaf_size}")

    def build(lo, hi):
        if hi - lo <= leaf_size:
            return ClusterTree(lo, hi, leaf_size)
        mid = (lo + hi) // 2
        return ClusterTree(lo, hi, leaf_size, (build(lo, mid), build(mid, hi)))

    return build(0, n)


def tree_depth_bound(n: int, leaf_size: int) -> int:
    """Depth of the balanced tree: ceil(log2(n / leaf_size)) for n > leaf_size."""
    if n <= leaf_size:
        return 0
    return math.ceil(math.log2(n / leaf_size))
