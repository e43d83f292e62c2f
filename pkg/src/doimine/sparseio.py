"""Sparse-triplet text format shared by the matrix-producing stages.

Layout: a header line "m n nnz" followed by one "row col value" line per
stored entry, rows/cols 0-based.  Dense matrices are exported by writing
the entries above a magnitude floor.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from doimine.errors import DataError


def write_triplets(path: str | Path, matrix, value_floor: float = 0.0) -> None:
    """Write a scipy sparse or dense numpy matrix as triplet text.

    Entries with absolute value <= value_floor are dropped.  Entries are
    emitted in row-major order so the output is canonical for a given
    matrix.
    """
    if sp.issparse(matrix):
        coo = matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        rows, cols, vals = coo.row[order], coo.col[order], coo.data[order]
    else:
        arr = np.asarray(matrix)
        rows, cols = np.nonzero(arr)
        vals = arr[rows, cols]
    if value_floor > 0.0:
        keep = np.abs(vals) > value_floor
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    m, n = matrix.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{m} {n} {len(vals)}\n")
        for r, c, v in zip(rows, cols, vals):
            fh.write(f"{int(r)} {int(c)} {float(v)!r}\n")


def read_triplets(path: str | Path) -> sp.csr_matrix:
    """Read a triplet text file back into a CSR matrix."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise DataError(f"{path}: malformed triplet header {header!r}")
        m, n, nnz = (int(x) for x in header)
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        for i in range(nnz):
            parts = fh.readline().split()
            if len(parts) != 3:
                raise DataError(f"{path}: truncated at entry {i} of {nnz}")
            rows[i], cols[i], vals[i] = int(parts[0]), int(parts[1]), float(parts[2])
    if nnz and (rows.max() >= m or cols.max() >= n):
        raise DataError(f"{path}: entry index outside declared {m}x{n} shape")
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
