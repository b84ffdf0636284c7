"""Arithmetic on HODLR matrices: matvec, add, multiply, invert.

All operations are pure: inputs are never modified. Every low-rank
accumulation is recompressed immediately (eager truncation), which keeps
intermediate ranks bounded as cyclic reduction stacks Schur updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .hodlr import HodlrMatrix, LowRankFactor, Tolerance, truncate_factor

__all__ = [
    "SingularBlockError",
    "RankProfile",
    "matvec",
    "matmat",
    "rmatmat",
    "add",
    "scale",
    "multiply",
    "invert",
    "add_triple_product",
    "rank_profile",
]


class SingularBlockError(np.linalg.LinAlgError):
    """A dense leaf pivot could not be factorized."""

    def __init__(self, node, detail=""):
        self.node = node
        msg = f"singular dense leaf on index range [{node.lo},{node.hi})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


def _check_same_tree(A: HodlrMatrix, B: HodlrMatrix):
    if A.tree != B.tree:
        raise ValueError("operands must share one cluster tree")


# ---------------------------------------------------------------------------
# products with vectors / tall matrices
# ---------------------------------------------------------------------------

def matmat(H: HodlrMatrix, X: np.ndarray) -> np.ndarray:
    """H @ X for a dense vector or tall matrix X."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != H.n:
        raise ValueError(f"dimension mismatch: H is {H.n}, x has {X.shape[0]} rows")
    if H.is_leaf:
        return H.dense @ X
    n1 = H.a11.n
    top = matmat(H.a11, X[:n1]) + H.off12.apply(X[n1:])
    bot = matmat(H.a22, X[n1:]) + H.off21.apply(X[:n1])
    return np.concatenate([top, bot])


def rmatmat(H: HodlrMatrix, X: np.ndarray) -> np.ndarray:
    """H.T @ X for a dense vector or tall matrix X."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != H.n:
        raise ValueError(f"dimension mismatch: H is {H.n}, x has {X.shape[0]} rows")
    if H.is_leaf:
        return H.dense.T @ X
    n1 = H.a11.n
    top = rmatmat(H.a11, X[:n1]) + H.off21.apply_t(X[n1:])
    bot = rmatmat(H.a22, X[n1:]) + H.off12.apply_t(X[:n1])
    return np.concatenate([top, bot])


def matvec(H: HodlrMatrix, x: np.ndarray) -> np.ndarray:
    """H @ x."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be one-dimensional")
    return matmat(H, x)


# ---------------------------------------------------------------------------
# add / scale
# ---------------------------------------------------------------------------

def _combine(F: LowRankFactor, G: LowRankFactor, tol: Tolerance) -> LowRankFactor:
    """Truncated sum of two factors; zero operands pass through untouched
    (both inputs are already individually compressed)."""
    if F.rank == 0:
        return G
    if G.rank == 0:
        return F
    return truncate_factor(F.concat(G), tol)


def add(A: HodlrMatrix, B: HodlrMatrix, tol: Tolerance) -> HodlrMatrix:
    """A + B. Dense leaves add exactly; off-diagonal factors concatenate
    and are recompressed."""
    _check_same_tree(A, B)
    if A.is_leaf:
        return HodlrMatrix(A.tree, dense=A.dense + B.dense)
    return HodlrMatrix(
        A.tree,
        a11=add(A.a11, B.a11, tol),
        a22=add(A.a22, B.a22, tol),
        off12=_combine(A.off12, B.off12, tol),
        off21=_combine(A.off21, B.off21, tol),
    )


def scale(H: HodlrMatrix, s: float) -> HodlrMatrix:
    """s * H, exact."""
    if H.is_leaf:
        return HodlrMatrix(H.tree, dense=s * H.dense)
    return HodlrMatrix(
        H.tree,
        a11=scale(H.a11, s),
        a22=scale(H.a22, s),
        off12=H.off12.scaled(s),
        off21=H.off21.scaled(s),
    )


def add_lowrank(H: HodlrMatrix, F: LowRankFactor, tol: Tolerance) -> HodlrMatrix:
    """H + U V^T, splitting the factor rows along the tree."""
    if F.shape != H.shape:
        raise ValueError(f"factor shape {F.shape} does not match matrix {H.shape}")
    if F.rank == 0:
        return H
    if H.is_leaf:
        return HodlrMatrix(H.tree, dense=H.dense + F.to_dense())
    n1 = H.a11.n
    Ut, Ub = F.U[:n1], F.U[n1:]
    Vt, Vb = F.V[:n1], F.V[n1:]
    return HodlrMatrix(
        H.tree,
        a11=add_lowrank(H.a11, LowRankFactor(Ut, Vt), tol),
        a22=add_lowrank(H.a22, LowRankFactor(Ub, Vb), tol),
        off12=_combine(H.off12, LowRankFactor(Ut, Vb), tol),
        off21=_combine(H.off21, LowRankFactor(Ub, Vt), tol),
    )


# ---------------------------------------------------------------------------
# multiply
# ---------------------------------------------------------------------------

def _lr_times_lr(F: LowRankFactor, G: LowRankFactor) -> LowRankFactor:
    # (Uf Vf^T)(Ug Vg^T) = (Uf (Vf^T Ug)) Vg^T
    if F.rank == 0 or G.rank == 0:
        return LowRankFactor.zero(F.shape[0], G.shape[1])
    return LowRankFactor(F.U @ (F.V.T @ G.U), G.V)


def multiply(A: HodlrMatrix, B: HodlrMatrix, tol: Tolerance) -> HodlrMatrix:
    """A @ B by recursive 2x2 block multiplication with truncation."""
    _check_same_tree(A, B)
    if A.is_leaf:
        return HodlrMatrix(A.tree, dense=A.dense @ B.dense)
    # diagonal blocks: recursive product plus a low-rank cross term
    c11 = add_lowrank(multiply(A.a11, B.a11, tol),
                      _lr_times_lr(A.off12, B.off21), tol)
    c22 = add_lowrank(multiply(A.a22, B.a22, tol),
                      _lr_times_lr(A.off21, B.off12), tol)
    # off-diagonal blocks: H-times-factor on each side
    n1, n2 = A.a11.n, A.a22.n
    f1 = LowRankFactor(matmat(A.a11, B.off12.U), B.off12.V) \
        if B.off12.rank else LowRankFactor.zero(n1, n2)
    f2 = LowRankFactor(A.off12.U, rmatmat(B.a22, A.off12.V)) \
        if A.off12.rank else LowRankFactor.zero(n1, n2)
    g1 = LowRankFactor(A.off21.U, rmatmat(B.a11, A.off21.V)) \
        if A.off21.rank else LowRankFactor.zero(n2, n1)
    g2 = LowRankFactor(matmat(A.a22, B.off21.U), B.off21.V) \
        if B.off21.rank else LowRankFactor.zero(n2, n1)
    return HodlrMatrix(
        A.tree,
        a11=c11,
        a22=c22,
        off12=_combine(f1, f2, tol),
        off21=_combine(g1, g2, tol),
    )


# ---------------------------------------------------------------------------
# inversion
# ---------------------------------------------------------------------------

def invert(H: HodlrMatrix, tol: Tolerance) -> HodlrMatrix:
    """H^{-1} by recursive 2x2 block inversion.

    The leading diagonal block is inverted, the Schur complement of the
    trailing block is formed with truncation and inverted in turn, and
    the four blocks of the standard block-inverse formula are assembled.
    """
    if H.is_leaf:
        n = H.tree.size
        try:
            inv = np.linalg.solve(H.dense, np.eye(n))
        except np.linalg.LinAlgError as e:
            raise SingularBlockError(H.tree, str(e)) from e
        if not np.all(np.isfinite(inv)):
            raise SingularBlockError(H.tree, "non-finite inverse")
        return HodlrMatrix(H.tree, dense=inv)

    x11 = invert(H.a11, tol)
    u12, v12 = H.off12.U, H.off12.V
    u21, v21 = H.off21.U, H.off21.V

    # S = A22 - U21 (V21^T X11 U12) V12^T
    if H.off21.rank and H.off12.rank:
        core = v21.T @ matmat(x11, u12)
        s_block = add_lowrank(H.a22, LowRankFactor(-u21 @ core, v12), tol)
    else:
        s_block = H.a22
    sinv = invert(s_block, tol)

    # B11 = X11 + (X11 U12 c)(X11^T V21)^T with c = V12^T Sinv U21
    if H.off12.rank and H.off21.rank:
        c = v12.T @ matmat(sinv, u21)
        b11 = add_lowrank(x11, LowRankFactor(matmat(x11, u12) @ c,
                                             rmatmat(x11, v21)), tol)
    else:
        b11 = x11
    # B12 = -X11 U12 (Sinv^T V12)^T, B21 = -Sinv U21 (X11^T V21)^T
    if H.off12.rank:
        b12 = truncate_factor(
            LowRankFactor(-matmat(x11, u12), rmatmat(sinv, v12)), tol)
    else:
        b12 = LowRankFactor.zero(H.a11.n, H.a22.n)
    if H.off21.rank:
        b21 = truncate_factor(
            LowRankFactor(-matmat(sinv, u21), rmatmat(x11, v21)), tol)
    else:
        b21 = LowRankFactor.zero(H.a22.n, H.a11.n)

    return HodlrMatrix(H.tree, a11=b11, a22=sinv, off12=b12, off21=b21)


def add_triple_product(S: HodlrMatrix, A: HodlrMatrix, Binv: HodlrMatrix,
                       C: HodlrMatrix, sign: int, tol: Tolerance) -> HodlrMatrix:
    """S + sign * A @ Binv @ C, the Schur-update kernel."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    prod = multiply(multiply(A, Binv, tol), C, tol)
    return add(S, scale(prod, float(sign)), tol)


# ---------------------------------------------------------------------------
# rank instrumentation
# ---------------------------------------------------------------------------

@dataclass
class RankProfile:
    """Per-depth maximum and mean off-diagonal rank."""

    max_by_depth: List[int] = field(default_factory=list)
    mean_by_depth: List[float] = field(default_factory=list)

    @property
    def max_rank(self) -> int:
        return max(self.max_by_depth, default=0)

    def to_dict(self):
        return {"max_by_depth": list(self.max_by_depth),
                "mean_by_depth": [round(m, 3) for m in self.mean_by_depth]}


def _collect_ranks(H: HodlrMatrix, depth: int, buckets: dict):
    if H.is_leaf:
        return
    buckets.setdefault(depth, []).extend([H.off12.rank, H.off21.rank])
    _collect_ranks(H.a11, depth + 1, buckets)
    _collect_ranks(H.a22, depth + 1, buckets)


def rank_profile(*matrices: HodlrMatrix) -> RankProfile:
    """Observed off-diagonal ranks, per tree depth, over one or more
    HODLR matrices sharing comparable trees."""
    buckets: dict = {}
    for H in matrices:
        _collect_ranks(H, 0, buckets)
    prof = RankProfile()
    for d in sorted(buckets):
        ranks = buckets[d]
        prof.max_by_depth.append(max(ranks))
        prof.mean_by_depth.append(float(np.mean(ranks)))
    return prof
