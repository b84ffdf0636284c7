"""Matrix Market and right-hand-side file I/O.

Coordinate real general format, 1-based indices, entries printed with
17 significant digits so that export/import round-trips doubles exactly.
Triplets are written in row-major order for bit-stable output.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = ["write_matrix_market", "read_matrix_market",
           "write_vector", "read_vector"]

_HEADER = "%%MatrixMarket matrix coordinate real general"


def write_matrix_market(path, A: sp.spmatrix, comment: str = ""):
    A = sp.coo_matrix(A)
    order = np.lexsort((A.col, A.row))
    rows, cols, vals = A.row[order], A.col[order], A.data[order]
    with open(path, "w") as fh:
        fh.write(_HEADER + "\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.shape[0]} {A.shape[1]} {len(vals)}\n")
        for r, c, v in zip(rows, cols, vals):
            fh.write(f"{r + 1} {c + 1} {v:.17g}\n")


def read_matrix_market(path) -> sp.coo_matrix:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != _HEADER:
            raise ValueError(f"unsupported Matrix Market header: {header!r}")
        line = fh.readline()
        while line.startswith("%"):
            line = fh.readline()
        m, n, nnz = (int(t) for t in line.split())
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        for i in range(nnz):
            r, c, v = fh.readline().split()
            rows[i] = int(r) - 1
            cols[i] = int(c) - 1
            vals[i] = float(v)
    return sp.coo_matrix((vals, (rows, cols)), shape=(m, n))


def write_vector(path, v: np.ndarray):
    v = np.asarray(v, dtype=np.float64)
    with open(path, "w") as fh:
        for x in v:
            fh.write(f"{x:.17g}\n")


def read_vector(path) -> np.ndarray:
    with open(path) as fh:
        return np.array([float(line) for line in fh if line.strip()])
