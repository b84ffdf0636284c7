"""Model problems: 2D finite-difference operators on the unit square.

Second-order 5-point discretizations of variable-coefficient Poisson,
Helmholtz, and convection-diffusion with homogeneous Dirichlet boundary
conditions. Unknowns are ordered lexicographically, x fastest, one block
per horizontal grid line, producing a block tridiagonal system with
tridiagonal diagonal blocks and diagonal couplings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Grid2D",
    "CoefficientField",
    "constant_kappa",
    "checkerboard_kappa",
    "BlockTridiagSystem",
    "poisson2d",
    "helmholtz2d",
    "convdiff2d",
    "gaussian_rhs",
    "assemble_full",
]


@dataclass(frozen=True)
class Grid2D:
    """Uniform interior grid on (0,1)^2: n points per dimension,
    spacing h = 1/(n+1). Node (i, j) sits at ((i+1)h, (j+1)h)."""

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"grid needs n >= 2 interior points, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def n_unknowns(self) -> int:
        return self.n * self.n

    def interior_coords(self) -> np.ndarray:
        return (np.arange(self.n) + 1) * self.h


class CoefficientField:
    """A positive diffusion coefficient kappa(x, y), sampled at cell-edge
    midpoints during assembly."""

    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 name: str = "kappa"):
        self.fn = fn
        self.name = name

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return np.broadcast_to(np.asarray(self.fn(x, y), dtype=np.float64),
                               np.broadcast_shapes(x.shape, y.shape)).copy()


def constant_kappa(value: float = 1.0) -> CoefficientField:
    return CoefficientField(lambda x, y: np.full_like(x, float(value)),
                            name=f"const:{value}")


def checkerboard_kappa(contrast: float = 1e3, cells: int = 4) -> CoefficientField:
    """High-contrast checkerboard: kappa alternates between 1 and
    ``contrast`` over a cells x cells tiling of the unit square."""

    def fn(x, y):
        ix = np.floor(x * cells).astype(int)
        iy = np.floor(y * cells).astype(int)
        return np.where((ix + iy) % 2 == 0, float(contrast), 1.0)

    return CoefficientField(fn, name=f"checkerboard:{contrast}:{cells}")


@dataclass
class BlockTridiagSystem:
    """Block tridiagonal system tridiag(E_i, D_i, F_i) u = f.

    Each diagonal block D_i is tridiagonal (stored as three bands per
    block); each sub/super coupling E_i, F_i is diagonal. E[i] couples
    block i+1 back to block i; F[i] couples block i to block i+1.
    """

    n_blocks: int
    block_dim: int
    D_sub: np.ndarray    # (n_blocks, block_dim - 1)
    D_diag: np.ndarray   # (n_blocks, block_dim)
    D_sup: np.ndarray    # (n_blocks, block_dim - 1)
    E: np.ndarray        # (n_blocks - 1, block_dim)
    F: np.ndarray        # (n_blocks - 1, block_dim)
    rhs: np.ndarray      # (n_blocks * block_dim,)
    name: str = "custom"

    def __post_init__(self):
        m, n = self.n_blocks, self.block_dim
        expect = {
            "D_sub": (m, n - 1), "D_diag": (m, n), "D_sup": (m, n - 1),
            "E": (m - 1, n), "F": (m - 1, n), "rhs": (m * n,),
        }
        for attr, shape in expect.items():
            a = np.asarray(getattr(self, attr), dtype=np.float64)
            if a.shape != shape:
                raise ValueError(f"{attr} has shape {a.shape}, expected {shape}")
            setattr(self, attr, a)

    @property
    def n_unknowns(self) -> int:
        return self.n_blocks * self.block_dim

    def dense_block_d(self, i: int) -> np.ndarray:
        n = self.block_dim
        block = np.diag(self.D_diag[i])
        idx = np.arange(n - 1)
        block[idx, idx + 1] = self.D_sup[i]
        block[idx + 1, idx] = self.D_sub[i]
        return block

    def rhs_segment(self, i: int) -> np.ndarray:
        n = self.block_dim
        return self.rhs[i * n:(i + 1) * n]


def gaussian_rhs(grid: Grid2D) -> np.ndarray:
    """Gaussian source 100*exp(-100*((x-1/2)^2 + (y-1/2)^2)) sampled at
    interior nodes in block-row-major order (y-line blocks, x fastest)."""
    c = grid.interior_coords()
    X, Y = np.meshgrid(c, c, indexing="xy")  # row index = y-line
    f = 100.0 * np.exp(-100.0 * ((X - 0.5) ** 2 + (Y - 0.5) ** 2))
    return f.ravel()


def poisson2d(grid: Grid2D, kappa: Optional[CoefficientField] = None,
              rhs: Optional[np.ndarray] = None) -> BlockTridiagSystem:
    """Conservative 5-point discretization of -div(kappa grad u) = f.

    Edge coefficients take kappa at the edge midpoint; each midpoint is
    evaluated once and shared by both adjacent nodes, so the assembled
    matrix is symmetric to the last bit.
    """
    n, h = grid.n, grid.h
    xs = grid.interior_coords()
    ys = xs
    xe = (np.arange(n + 1) + 0.5) * h   # vertical edge midpoints (x positions)
    ye = (np.arange(n + 1) + 0.5) * h   # horizontal edge midpoints (y positions)
    kappa = kappa or constant_kappa(1.0)

    # KV[j, i]: vertical edge i within line j; KH[k, i]: horizontal edge
    # between lines k-1 and k at x = xs[i]
    KV = kappa(xe[None, :], ys[:, None])
    KH = kappa(xs[None, :], ye[:, None])
    if np.any(KV <= 0) or np.any(KH <= 0):
        raise ValueError("kappa must be positive at every sampled midpoint")

    h2 = h * h
    D_diag = (KV[:, :-1] + KV[:, 1:] + KH[:-1, :] + KH[1:, :]) / h2
    D_sup = -KV[:, 1:-1] / h2
    D_sub = D_sup.copy()
    F = -KH[1:-1, :] / h2
    E = F.copy()

    if rhs is None:
        rhs = gaussian_rhs(grid)
    return BlockTridiagSystem(n, n, D_sub, D_diag, D_sup, E, F, rhs,
                              name=f"poisson[{kappa.name}]")


def helmholtz2d(grid: Grid2D, k: float,
                rhs: Optional[np.ndarray] = None) -> BlockTridiagSystem:
    """5-point discretization of the wave Helmholtz operator
    laplacian(u) + k^2 u, indefinite once k^2 passes the smallest
    Dirichlet Laplacian eigenvalue."""
    if k < 0:
        raise ValueError(f"wavenumber must be >= 0, got {k}")
    n, h = grid.n, grid.h
    h2 = h * h
    D_diag = np.full((n, n), -4.0 / h2 + k * k)
    D_sup = np.full((n, n - 1), 1.0 / h2)
    D_sub = D_sup.copy()
    E = np.full((n - 1, n), 1.0 / h2)
    F = E.copy()
    if rhs is None:
        rhs = gaussian_rhs(grid)
    return BlockTridiagSystem(n, n, D_sub, D_diag, D_sup, E, F, rhs,
                              name=f"helmholtz[k={k}]")


def convdiff2d(grid: Grid2D, alpha: float,
               rhs: Optional[np.ndarray] = None) -> BlockTridiagSystem:
    """-laplacian(u) + alpha * b . grad(u) with the recirculating field
    b = (cos(8 pi x), sin(8 pi y)), convection by centered differences."""
    if alpha < 0:
        raise ValueError(f"convection strength must be >= 0, got {alpha}")
    n, h = grid.n, grid.h
    xs = grid.interior_coords()
    ys = xs
    h2 = h * h
    b1 = np.cos(8.0 * np.pi * xs)          # depends on x only
    b2 = np.sin(8.0 * np.pi * ys)          # depends on y only

    D_diag = np.full((n, n), 4.0 / h2)
    # row i, column i+1 gets +alpha*b1(x_i)/(2h); row i+1, column i the negative
    D_sup = np.tile(-1.0 / h2 + alpha * b1[:-1] / (2.0 * h), (n, 1))
    D_sub = np.tile(-1.0 / h2 - alpha * b1[1:] / (2.0 * h), (n, 1))
    # line j to line j+1: +alpha*b2(y_j)/(2h); line j+1 back: -alpha*b2(y_{j+1})/(2h)
    F = np.tile(-1.0 / h2, (n - 1, n)) + alpha * b2[:-1, None] / (2.0 * h)
    E = np.tile(-1.0 / h2, (n - 1, n)) - alpha * b2[1:, None] / (2.0 * h)

    if rhs is None:
        rhs = gaussian_rhs(grid)
    return BlockTridiagSystem(n, n, D_sub, D_diag, D_sup, E, F, rhs,
                              name=f"convdiff[alpha={alpha}]")


def assemble_full(sys: BlockTridiagSystem) -> sp.coo_matrix:
    """Assemble the full sparse matrix (triplet form) from the blocks."""
    m, n = sys.n_blocks, sys.block_dim
    rows, cols, vals = [], [], []
    idx = np.arange(n)
    for i in range(m):
        base = i * n
        rows.append(base + idx)
        cols.append(base + idx)
        vals.append(sys.D_diag[i])
        rows.append(base + idx[:-1])
        cols.append(base + idx[1:])
        vals.append(sys.D_sup[i])
        rows.append(base + idx[1:])
        cols.append(base + idx[:-1])
        vals.append(sys.D_sub[i])
        if i < m - 1:
            rows.append(base + n + idx)
            cols.append(base + idx)
            vals.append(sys.E[i])
            rows.append(base + idx)
            cols.append(base + n + idx)
            vals.append(sys.F[i])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    keep = vals != 0.0
    N = sys.n_unknowns
    return sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(N, N))
