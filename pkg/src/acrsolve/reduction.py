"""Accelerated cyclic reduction: even/odd elimination in HODLR arithmetic.

The reduction phase eliminates the even-indexed blocks of a block
tridiagonal system level by level; each level is the Schur complement of
the even partition and is block tridiagonal again. Blocks are held as
HODLR matrices and all updates run through the truncated hierarchical
arithmetic. Once the block count reaches the cutoff the remaining system
is assembled densely and solved by LU; back-substitution then recovers
the eliminated unknowns level by level in reverse.

``dense_bcr_solve`` mirrors the same control flow with dense blocks and
exact arithmetic, as a structural reference.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .algebra import (RankProfile, SingularBlockError, add_triple_product,
                      invert, matvec, multiply, rank_profile, scale)
from .cluster import build_cluster_tree
from .hodlr import HodlrMatrix, Tolerance, from_diagonal, from_tridiagonal
from .oracles import dense_lu_solve, relative_residual
from .problems import BlockTridiagSystem

__all__ = [
    "HBlockTridiag",
    "EliminationRecord",
    "SolveReport",
    "lift_system",
    "reduce_level",
    "backsubstitute",
    "acr_solve",
    "dense_bcr_solve",
]


@dataclass
class HBlockTridiag:
    """One level of the reduction: block tridiagonal system in HODLR form.

    ``E[i]`` couples block i to block i-1 (``E[0]`` is None); ``F[i]``
    couples block i to block i+1 (``F[-1]`` is None). All blocks share
    one cluster tree.
    """

    tree: object
    level: int
    D: List[HodlrMatrix]
    E: List[Optional[HodlrMatrix]]
    F: List[Optional[HodlrMatrix]]
    f: List[np.ndarray]

    @property
    def n_blocks(self) -> int:
        return len(self.D)

    @property
    def block_dim(self) -> int:
        return self.tree.size

    def to_dense(self) -> np.ndarray:
        m, n = self.n_blocks, self.block_dim
        A = np.zeros((m * n, m * n))
        for i in range(m):
            A[i * n:(i + 1) * n, i * n:(i + 1) * n] = self.D[i].to_dense()
            if self.E[i] is not None:
                A[i * n:(i + 1) * n, (i - 1) * n:i * n] = self.E[i].to_dense()
            if self.F[i] is not None:
                A[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = self.F[i].to_dense()
        return A

    def rhs_vector(self) -> np.ndarray:
        return np.concatenate(self.f)

    def storage_bytes(self) -> int:
        total = 0
        for blocks in (self.D, self.E, self.F):
            total += sum(b.storage_bytes() for b in blocks if b is not None)
        total += sum(seg.nbytes for seg in self.f)
        return total

    def rank_profile(self) -> RankProfile:
        blocks = [b for seq in (self.D, self.E, self.F) for b in seq
                  if b is not None]
        return rank_profile(*blocks)


@dataclass
class LevelRecord:
    """What one reduction level must remember for back-substitution."""

    m: int
    even: List[int]
    odd: List[int]
    Dinv: List[HodlrMatrix]
    E: List[Optional[HodlrMatrix]]
    F: List[Optional[HodlrMatrix]]
    f: List[np.ndarray]

    def storage_bytes(self) -> int:
        total = sum(b.storage_bytes() for b in self.Dinv)
        total += sum(b.storage_bytes() for b in self.E if b is not None)
        total += sum(b.storage_bytes() for b in self.F if b is not None)
        total += sum(seg.nbytes for seg in self.f)
        return total


@dataclass
class EliminationRecord:
    """Ordered stack of per-level elimination data."""

    entries: List[LevelRecord] = field(default_factory=list)

    @property
    def levels(self) -> int:
        return len(self.entries)


@dataclass
class SolveReport:
    """Diagnostics for one solve: accuracy, ranks, memory, timings."""

    residual: float
    levels: int
    cutoff_blocks: int
    cutoff_dim: int
    per_level_ranks: List[RankProfile]
    max_rank: int
    storage_bytes: int
    reduce_ms: float
    backsub_ms: float
    total_ms: float
    threads: int = 1

    def to_dict(self):
        return {
            "residual": self.residual,
            "levels": self.levels,
            "cutoff_blocks": self.cutoff_blocks,
            "cutoff_dim": self.cutoff_dim,
            "per_level_ranks": [p.to_dict() for p in self.per_level_ranks],
            "max_rank": self.max_rank,
            "storage_bytes": self.storage_bytes,
            "reduce_ms": round(self.reduce_ms, 3),
            "backsub_ms": round(self.backsub_ms, 3),
            "total_ms": round(self.total_ms, 3),
            "threads": self.threads,
        }


def lift_system(sys: BlockTridiagSystem, leaf_size: int = 32) -> HBlockTridiag:
    """Lift a block tridiagonal system into exact HODLR blocks:
    tridiagonal D_i become rank-1 HODLR, diagonal E_i/F_i rank 0."""
    tree = build_cluster_tree(sys.block_dim, leaf_size)
    m = sys.n_blocks
    D = [from_tridiagonal(sys.D_sub[i], sys.D_diag[i], sys.D_sup[i], tree)
         for i in range(m)]
    E = [None] + [from_diagonal(sys.E[i], tree) for i in range(m - 1)]
    F = [from_diagonal(sys.F[i], tree) for i in range(m - 1)] + [None]
    f = [sys.rhs_segment(i).copy() for i in range(m)]
    return HBlockTridiag(tree, 0, D, E, F, f)


def _neg_triple(A, Binv, C, tol):
    return scale(multiply(multiply(A, Binv, tol), C, tol), -1.0)


def reduce_level(level: HBlockTridiag, tol: Tolerance,
                 inversion_order: Optional[Sequence[int]] = None):
    """One reduction step: eliminate even-indexed blocks.

    Returns the Schur-complement system over the odd-indexed blocks
    (block tridiagonal again) and the record entry needed to recover the
    eliminated unknowns. ``inversion_order`` permutes only the order in
    which the independent even-pivot inversions run.
    """
    m = level.n_blocks
    if m < 2:
        raise ValueError(f"need at least 2 blocks to reduce, got {m}")
    even = list(range(0, m, 2))
    odd = list(range(1, m, 2))

    order = list(inversion_order) if inversion_order is not None \
        else list(range(len(even)))
    if sorted(order) != list(range(len(even))):
        raise ValueError("inversion_order must permute the even-block indices")
    Dinv = {}
    for pos in order:
        i = even[pos]
        try:
            Dinv[i] = invert(level.D[i], tol)
        except SingularBlockError as e:
            raise SingularBlockError(
                e.node, f"level {level.level}, pivot block {i}") from e

    newD, newE, newF, newf = [], [], [], []
    for j in odd:
        Dp = level.D[j]
        fp = level.f[j].copy()
        # left eliminated neighbor j-1 always exists for odd j
        Dp = add_triple_product(Dp, level.E[j], Dinv[j - 1], level.F[j - 1],
                                -1, tol)
        fp -= matvec(level.E[j], matvec(Dinv[j - 1], level.f[j - 1]))
        Ep = None
        if j - 2 >= 0:
            Ep = _neg_triple(level.E[j], Dinv[j - 1], level.E[j - 1], tol)
        Fp = None
        if j + 1 <= m - 1:
            Dp = add_triple_product(Dp, level.F[j], Dinv[j + 1],
                                    level.E[j + 1], -1, tol)
            fp -= matvec(level.F[j], matvec(Dinv[j + 1], level.f[j + 1]))
            if j + 2 <= m - 1:
                Fp = _neg_triple(level.F[j], Dinv[j + 1], level.F[j + 1], tol)
        newD.append(Dp)
        newE.append(Ep)
        newF.append(Fp)
        newf.append(fp)

    entry = LevelRecord(
        m=m, even=even, odd=odd,
        Dinv=[Dinv[i] for i in even],
        E=[level.E[i] for i in even],
        F=[level.F[i] for i in even],
        f=[level.f[i] for i in even],
    )
    reduced = HBlockTridiag(level.tree, level.level + 1, newD, newE, newF, newf)
    return reduced, entry


def backsubstitute(record: EliminationRecord,
                   u_final: Sequence[np.ndarray]) -> np.ndarray:
    """Recover the full solution from the deepest-level solve, walking
    the elimination record in reverse."""
    u = list(u_final)
    for entry in reversed(record.entries):
        if len(u) != len(entry.odd):
            raise ValueError(
                f"solution has {len(u)} segments, record level expects "
                f"{len(entry.odd)}")
        full: List[Optional[np.ndarray]] = [None] * entry.m
        for k, j in enumerate(entry.odd):
            full[j] = u[k]
        for idx, i in enumerate(entry.even):
            rhs = entry.f[idx].copy()
            if entry.E[idx] is not None:
                rhs -= matvec(entry.E[idx], full[i - 1])
            if entry.F[idx] is not None:
                rhs -= matvec(entry.F[idx], full[i + 1])
            full[i] = matvec(entry.Dinv[idx], rhs)
        u = full
    return np.concatenate(u)


def expected_levels(n_blocks: int, cutoff_blocks: int) -> int:
    """Reduction levels until at most ``cutoff_blocks`` blocks remain.

    Eliminating the even-indexed blocks keeps floor(m/2), so this is the
    number of floor-halvings; it equals ceil(log2(m/c)) whenever m/c is a
    power of two.
    """
    m, levels = n_blocks, 0
    while m > cutoff_blocks:
        m //= 2
        levels += 1
    return levels


def acr_solve(sys: BlockTridiagSystem, tol: Tolerance,
              cutoff_blocks: int = 1, leaf_size: int = 32,
              inversion_order: str = "forward"):
    """Solve a block tridiagonal system by accelerated cyclic reduction.

    Reduces until at most ``cutoff_blocks`` blocks remain, solves that
    system densely, and back-substitutes. Returns ``(u, SolveReport)``.
    ``inversion_order`` ("forward" or "reversed") permutes the order of
    the independent pivot inversions within each level; the result must
    not depend on it.
    """
    if cutoff_blocks < 1:
        raise ValueError(f"cutoff_blocks must be >= 1, got {cutoff_blocks}")
    if inversion_order not in ("forward", "reversed"):
        raise ValueError(f"unknown inversion_order {inversion_order!r}")

    t0 = time.perf_counter()
    level = lift_system(sys, leaf_size)
    record = EliminationRecord()
    profiles = [level.rank_profile()]
    record_bytes = 0
    while level.n_blocks > cutoff_blocks:
        n_even = len(range(0, level.n_blocks, 2))
        order = list(range(n_even))
        if inversion_order == "reversed":
            order = order[::-1]
        level, entry = reduce_level(level, tol, inversion_order=order)
        record.entries.append(entry)
        profiles.append(level.rank_profile())
        record_bytes += entry.storage_bytes()
    t_reduce = time.perf_counter()

    # direct solve of the remaining small system
    A_small = level.to_dense()
    f_small = level.rhs_vector()
    u_small = dense_lu_solve(A_small, f_small)
    n = level.block_dim
    segments = [u_small[i * n:(i + 1) * n] for i in range(level.n_blocks)]
    u = backsubstitute(record, segments)
    t_end = time.perf_counter()

    report = SolveReport(
        residual=relative_residual(sys, u),
        levels=record.levels,
        cutoff_blocks=level.n_blocks,
        cutoff_dim=A_small.shape[0],
        per_level_ranks=profiles,
        max_rank=max(p.max_rank for p in profiles),
        storage_bytes=record_bytes + level.storage_bytes(),
        reduce_ms=(t_reduce - t0) * 1e3,
        backsub_ms=(t_end - t_reduce) * 1e3,
        total_ms=(t_end - t0) * 1e3,
    )
    return u, report


# ---------------------------------------------------------------------------
# dense reference with identical control flow
# ---------------------------------------------------------------------------

def dense_bcr_solve(sys: BlockTridiagSystem, cutoff_blocks: int = 1) -> np.ndarray:
    """Block cyclic reduction with dense blocks and exact arithmetic."""
    m, n = sys.n_blocks, sys.block_dim
    D = [sys.dense_block_d(i) for i in range(m)]
    E = [None] + [np.diag(sys.E[i]) for i in range(m - 1)]
    F = [np.diag(sys.F[i]) for i in range(m - 1)] + [None]
    f = [sys.rhs_segment(i).copy() for i in range(m)]
    stack = []

    while len(D) > cutoff_blocks:
        m = len(D)
        even = list(range(0, m, 2))
        odd = list(range(1, m, 2))
        try:
            Dinv = {i: np.linalg.inv(D[i]) for i in even}
        except np.linalg.LinAlgError as e:
            raise np.linalg.LinAlgError(f"singular pivot block: {e}") from e
        newD, newE, newF, newf = [], [], [], []
        for j in odd:
            Dp = D[j] - E[j] @ Dinv[j - 1] @ F[j - 1]
            fp = f[j] - E[j] @ (Dinv[j - 1] @ f[j - 1])
            Ep = -E[j] @ Dinv[j - 1] @ E[j - 1] if j - 2 >= 0 else None
            Fp = None
            if j + 1 <= m - 1:
                Dp = Dp - F[j] @ Dinv[j + 1] @ E[j + 1]
                fp = fp - F[j] @ (Dinv[j + 1] @ f[j + 1])
                if j + 2 <= m - 1:
                    Fp = -F[j] @ Dinv[j + 1] @ F[j + 1]
            newD.append(Dp)
            newE.append(Ep)
            newF.append(Fp)
            newf.append(fp)
        stack.append((m, even, odd, [Dinv[i] for i in even],
                      [E[i] for i in even], [F[i] for i in even],
                      [f[i] for i in even]))
        D, E, F, f = newD, newE, newF, newf

    m = len(D)
    A_small = np.zeros((m * n, m * n))
    for i in range(m):
        A_small[i * n:(i + 1) * n, i * n:(i + 1) * n] = D[i]
        if E[i] is not None:
            A_small[i * n:(i + 1) * n, (i - 1) * n:i * n] = E[i]
        if F[i] is not None:
            A_small[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = F[i]
    u_small = dense_lu_solve(A_small, np.concatenate(f))
    u = [u_small[i * n:(i + 1) * n] for i in range(m)]

    for m_lvl, even, odd, Dinv, Ee, Fe, fe in reversed(stack):
        full = [None] * m_lvl
        for k, j in enumerate(odd):
            full[j] = u[k]
        for idx, i in enumerate(even):
            rhs = fe[idx].copy()
            if Ee[idx] is not None:
                rhs -= Ee[idx] @ full[i - 1]
            if Fe[idx] is not None:
                rhs -= Fe[idx] @ full[i + 1]
            full[i] = Dinv[idx] @ rhs
        u = full
    return np.concatenate(u)
