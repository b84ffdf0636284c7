"""HODLR storage: dense diagonal leaves, low-rank off-diagonal factors.

A matrix is partitioned by a :class:`~acrsolve.cluster.ClusterTree`.
Diagonal blocks recurse; every off-diagonal block at every level is held
as a single factor pair U V^T. Construction is either exact (tridiagonal
and diagonal matrices) or by truncated SVD of the dense blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cluster import ClusterTree, build_cluster_tree

__all__ = [
    "Tolerance",
    "LowRankFactor",
    "HodlrMatrix",
    "compress_dense",
    "from_tridiagonal",
    "from_diagonal",
    "truncate_factor",
]


@dataclass(frozen=True)
class Tolerance:
    """Relative truncation threshold for low-rank compression.

    Singular values below ``eps`` times the largest are discarded.
    ``max_rank_cap``, when set, additionally caps every produced rank.
    """

    eps: float
    max_rank_cap: Optional[int] = None

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.max_rank_cap is not None and self.max_rank_cap < 1:
            raise ValueError("max_rank_cap must be positive")


class LowRankFactor:
    """An m x k block stored as U V^T with U (m, r) and V (k, r)."""

    __slots__ = ("U", "V")

    def __init__(self, U: np.ndarray, V: np.ndarray):
        U = np.ascontiguousarray(U, dtype=np.float64)
        V = np.ascontiguousarray(V, dtype=np.float64)
        if U.ndim != 2 or V.ndim != 2 or U.shape[1] != V.shape[1]:
            raise ValueError(f"inconsistent factor shapes {U.shape}, {V.shape}")
        self.U = U
        self.V = V

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    @property
    def shape(self):
        return (self.U.shape[0], self.V.shape[0])

    @classmethod
    def zero(cls, m: int, k: int) -> "LowRankFactor":
        return cls(np.zeros((m, 0)), np.zeros((k, 0)))

    def to_dense(self) -> np.ndarray:
        if self.rank == 0:
            return np.zeros(self.shape)
        return self.U @ self.V.T

    def transpose(self) -> "LowRankFactor":
        return LowRankFactor(self.V, self.U)

    def concat(self, other: "LowRankFactor") -> "LowRankFactor":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return LowRankFactor(np.hstack([self.U, other.U]),
                             np.hstack([self.V, other.V]))

    def scaled(self, s: float) -> "LowRankFactor":
        return LowRankFactor(s * self.U, self.V)

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.rank == 0:
            shape = (self.U.shape[0],) + x.shape[1:]
            return np.zeros(shape)
        return self.U @ (self.V.T @ x)

    def apply_t(self, x: np.ndarray) -> np.ndarray:
        if self.rank == 0:
            shape = (self.V.shape[0],) + x.shape[1:]
            return np.zeros(shape)
        return self.V @ (self.U.T @ x)


class HodlrMatrix:
    """Square matrix in HODLR form, mirroring a cluster tree.

    Leaf nodes hold a dense block; branch nodes hold two recursive
    diagonal children and two low-rank off-diagonal factors. Instances
    are treated as immutable after construction.
    """

    __slots__ = ("tree", "dense", "a11", "a22", "off12", "off21")

    def __init__(self, tree: ClusterTree, *, dense=None,
                 a11=None, a22=None, off12=None, off21=None):
        self.tree = tree
        if dense is not None:
            dense = np.ascontiguousarray(dense, dtype=np.float64)
            if dense.shape != (tree.size, tree.size):
                raise ValueError(
                    f"leaf block shape {dense.shape} does not match "
                    f"tree range [{tree.lo},{tree.hi})")
            self.dense = dense
            self.a11 = self.a22 = self.off12 = self.off21 = None
        else:
            n1 = tree.children[0].size
            n2 = tree.children[1].size
            if off12.shape != (n1, n2) or off21.shape != (n2, n1):
                raise ValueError("off-diagonal factor shape mismatch")
            self.dense = None
            self.a11 = a11
            self.a22 = a22
            self.off12 = off12
            self.off21 = off21

    @property
    def n(self) -> int:
        return self.tree.size

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def is_leaf(self) -> bool:
        return self.dense is not None

    def to_dense(self) -> np.ndarray:
        if self.is_leaf:
            return self.dense.copy()
        n1 = self.a11.n
        out = np.empty((self.n, self.n))
        out[:n1, :n1] = self.a11.to_dense()
        out[n1:, n1:] = self.a22.to_dense()
        out[:n1, n1:] = self.off12.to_dense()
        out[n1:, :n1] = self.off21.to_dense()
        return out

    def storage_bytes(self) -> int:
        """Bytes of stored scalars over dense leaves and factor pairs."""
        if self.is_leaf:
            return self.dense.size * self.dense.itemsize
        own = (self.off12.U.size + self.off12.V.size
               + self.off21.U.size + self.off21.V.size) * 8
        return own + self.a11.storage_bytes() + self.a22.storage_bytes()

    def max_rank(self) -> int:
        """Maximum rank over all off-diagonal factors."""
        if self.is_leaf:
            return 0
        return max(self.off12.rank, self.off21.rank,
                   self.a11.max_rank(), self.a22.max_rank())

    def __repr__(self):
        return f"HodlrMatrix(n={self.n}, max_rank={self.max_rank()})"


def truncate_factor(F: LowRankFactor, tol: Tolerance) -> LowRankFactor:
    """Recompress a factor: thin QR of both sides, SVD of the small core,
    drop singular values below ``tol.eps`` relative to the largest."""
    if F.rank == 0:
        return F
    if F.rank == 1:
        # a single nonzero singular value always survives a relative cut
        if np.any(F.U) and np.any(F.V):
            return F
        return LowRankFactor.zero(*F.shape)
    Qu, Ru = np.linalg.qr(F.U)
    Qv, Rv = np.linalg.qr(F.V)
    Uc, s, Vct = np.linalg.svd(Ru @ Rv.T)
    # cancellation guard: sigma_1 at roundoff level of the factor scale
    # means the product is numerically zero
    noise = F.rank * np.finfo(np.float64).eps \
        * np.linalg.norm(Ru) * np.linalg.norm(Rv)
    if s.size == 0 or s[0] <= noise:
        return LowRankFactor.zero(*F.shape)
    r = int(np.count_nonzero(s >= tol.eps * s[0]))
    if tol.max_rank_cap is not None:
        r = min(r, tol.max_rank_cap)
    if r == 0:
        return LowRankFactor.zero(*F.shape)
    return LowRankFactor(Qu @ (Uc[:, :r] * s[:r]), Qv @ Vct[:r].T)


def _compress_block(B: np.ndarray, tol: Tolerance) -> LowRankFactor:
    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return LowRankFactor.zero(*B.shape)
    r = int(np.count_nonzero(s >= tol.eps * s[0]))
    if tol.max_rank_cap is not None:
        r = min(r, tol.max_rank_cap)
    if r == 0:
        return LowRankFactor.zero(*B.shape)
    return LowRankFactor(U[:, :r] * s[:r], Vt[:r].T)


def compress_dense(M: np.ndarray, tree: ClusterTree, tol: Tolerance) -> HodlrMatrix:
    """Compress a dense square matrix into HODLR form by truncated SVD
    of every off-diagonal block of the tree partition."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got shape {M.shape}")
    if M.shape[0] != tree.size:
        raise ValueError(
            f"matrix dimension {M.shape[0]} does not match tree size {tree.size}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")

    def build(node, block):
        if node.is_leaf:
            return HodlrMatrix(node, dense=block)
        m = node.mid - node.lo
        return HodlrMatrix(
            node,
            a11=build(node.children[0], block[:m, :m]),
            a22=build(node.children[1], block[m:, m:]),
            off12=_compress_block(block[:m, m:], tol),
            off21=_compress_block(block[m:, :m], tol),
        )

    return build(tree, M)


def from_tridiagonal(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray,
                     tree: ClusterTree) -> HodlrMatrix:
    """Exact HODLR form of a tridiagonal matrix.

    Each off-diagonal block of the partition touches only the single
    corner coupling entry, so every factor has rank at most 1 and no
    truncation is needed.
    """
    sub = np.asarray(sub, dtype=np.float64)
    diag = np.asarray(diag, dtype=np.float64)
    sup = np.asarray(sup, dtype=np.float64)
    n = tree.size
    if diag.shape != (n,) or sub.shape != (n - 1,) or sup.shape != (n - 1,):
        raise ValueError(
            f"band lengths ({sub.shape[0]}, {diag.shape[0]}, {sup.shape[0]}) "
            f"inconsistent with dimension {n}")

    def corner(coef, m, k, upper):
        # upper: entry at (m-1, 0); lower: entry at (0, k-1)
        if coef == 0.0:
            return LowRankFactor.zero(m, k)
        u = np.zeros((m, 1))
        v = np.zeros((k, 1))
        if upper:
            u[m - 1, 0] = coef
            v[0, 0] = 1.0
        else:
            u[0, 0] = coef
            v[k - 1, 0] = 1.0
        return LowRankFactor(u, v)

    def build(node):
        lo, hi = node.lo, node.hi
        if node.is_leaf:
            block = np.diag(diag[lo:hi])
            idx = np.arange(hi - lo - 1)
            block[idx, idx + 1] = sup[lo:hi - 1]
            block[idx + 1, idx] = sub[lo:hi - 1]
            return HodlrMatrix(node, dense=block)
        mid = node.mid
        m, k = mid - lo, hi - mid
        return HodlrMatrix(
            node,
            a11=build(node.children[0]),
            a22=build(node.children[1]),
            off12=corner(sup[mid - 1], m, k, upper=True),
            off21=corner(sub[mid - 1], k, m, upper=False),
        )

    return build(tree)


def from_diagonal(d: np.ndarray, tree: ClusterTree) -> HodlrMatrix:
    """Exact HODLR form of a diagonal matrix: all off-diagonal ranks 0."""
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (tree.size,):
        raise ValueError(
            f"diagonal length {d.shape[0]} does not match tree size {tree.size}")

    def build(node):
        if node.is_leaf:
            return HodlrMatrix(node, dense=np.diag(d[node.lo:node.hi]))
        m = node.mid - node.lo
        k = node.hi - node.mid
        return HodlrMatrix(
            node,
            a11=build(node.children[0]),
            a22=build(node.children[1]),
            off12=LowRankFactor.zero(m, k),
            off21=LowRankFactor.zero(k, m),
        )

    return build(tree)


def identity(tree: ClusterTree) -> HodlrMatrix:
    return from_diagonal(np.ones(tree.size), tree)
