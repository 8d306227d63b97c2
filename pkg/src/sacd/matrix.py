"""Sparse matrix type and the small dense kernels the solvers need.

All dot products go through :mod:`sacd.kernels` and are correctly rounded,
so every product in this module has a fixed, order-independent result.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DimensionError, NumericalError, SelectionError

EIG_TOL = 1e-12
EIG_MAX_ITER = 10_000


@dataclass(frozen=True, eq=False)
class SparseMatrixCSR:
    """Compressed sparse row matrix (3-array variant)."""

    num_rows: int
    num_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        ro = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        ci = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        va = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "row_offsets", ro)
        object.__setattr__(self, "col_indices", ci)
        object.__setattr__(self, "values", va)
        if self.validate:
            self._check()

    def _check(self):
        m, n = self.num_rows, self.num_cols
        ro, ci, va = self.row_offsets, self.col_indices, self.values
        if m < 0 or n < 0:
            raise DimensionError("negative dimensions")
        if len(ro) != m + 1 or ro[0] != 0:
            raise DimensionError("row_offsets must have length m+1 and start at 0")
        if np.any(np.diff(ro) < 0):
            raise DimensionError("row_offsets must be non-decreasing")
        nnz = int(ro[-1])
        if len(ci) != nnz or len(va) != nnz:
            raise DimensionError("col_indices/values length must equal nnz")
        if nnz:
            if ci.min() < 0 or ci.max() >= n:
                raise DimensionError("column index out of range")
            # strictly increasing inside each row: a step may only fail at row starts
            bad = np.flatnonzero(np.diff(ci) <= 0) + 1
            if np.any(~np.isin(bad, ro)):
                raise DimensionError("column indices must increase within a row")

    @property
    def shape(self):
        return (self.num_rows, self.num_cols)

    @property
    def nnz(self):
        return int(self.row_offsets[-1])

    @property
    def density(self):
        cells = self.num_rows * self.num_cols
        return self.nnz / cells if cells else 0.0

    @classmethod
    def from_dense(cls, dense):
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2:
            raise DimensionError("expected a 2-D array")
        rows, cols = np.nonzero(dense)
        offsets = np.zeros(dense.shape[0] + 1, dtype=np.int64)
        np.add.at(offsets, rows + 1, 1)
        return cls(dense.shape[0], dense.shape[1], np.cumsum(offsets),
                   cols, dense[rows, cols])

    @classmethod
    def identity(cls, n):
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    def to_dense(self):
        out = np.zeros(self.shape)
        rows = np.repeat(np.arange(self.num_rows), np.diff(self.row_offsets))
        out[rows, self.col_indices] = self.values
        return out

    def row(self, i):
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def transpose(self):
        """CSR of the transpose; a stable counting sort keeps rows ordered."""
        rows = np.repeat(np.arange(self.num_rows, dtype=np.int64),
                         np.diff(self.row_offsets))
        order = np.argsort(self.col_indices, kind="stable")
        counts = np.bincount(self.col_indices, minlength=self.num_cols)
        offsets = np.zeros(self.num_cols + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        return SparseMatrixCSR(self.num_cols, self.num_rows, offsets,
                               rows[order], self.values[order], validate=False)

    def take_rows(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        lens = np.diff(self.row_offsets)[rows]
        offsets = np.zeros(len(rows) + 1, dtype=np.int64)
        np.cumsum(lens, out=offsets[1:])
        if len(rows):
            pos = np.concatenate([np.arange(self.row_offsets[r], self.row_offsets[r + 1])
                                  for r in rows])
        else:
            pos = np.zeros(0, dtype=np.int64)
        return SparseMatrixCSR(len(rows), self.num_cols, offsets,
                               self.col_indices[pos], self.values[pos], validate=False)

    def row_block(self, lo, hi):
        start, stop = self.row_offsets[lo], self.row_offsets[hi]
        return SparseMatrixCSR(hi - lo, self.num_cols,
                               self.row_offsets[lo:hi + 1] - start,
                               self.col_indices[start:stop],
                               self.values[start:stop], validate=False)

    def col_block(self, lo, hi):
        keep = (self.col_indices >= lo) & (self.col_indices < hi)
        rows = np.repeat(np.arange(self.num_rows), np.diff(self.row_offsets))
        offsets = np.zeros(self.num_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows[keep], minlength=self.num_rows), out=offsets[1:])
        return SparseMatrixCSR(self.num_rows, hi - lo, offsets,
                               self.col_indices[keep] - lo, self.values[keep],
                               validate=False)


@dataclass(frozen=True)
class IndexSelection:
    """Distinct coordinate indices drawn at one iteration."""

    indices: tuple
    iteration: int = 0

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise SelectionError(f"indices must be distinct: {idx}")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)


def _as_indices(sel, bound, what):
    idx = np.asarray(sel.indices if isinstance(sel, IndexSelection) else sel,
                     dtype=np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= bound):
        raise SelectionError(f"{what} index out of range [0, {bound})")
    return idx


def extract_rows(A: SparseMatrixCSR, sel) -> SparseMatrixCSR:
    return A.take_rows(_as_indices(sel, A.num_rows, "row"))


def extract_columns(A: SparseMatrixCSR, sel) -> SparseMatrixCSR:
    idx = _as_indices(sel, A.num_cols, "column")
    return A.transpose().take_rows(idx).transpose()


def unpack_triangle(vals, k):
    """Dense symmetric matrix from its row-major upper triangle."""
    G = np.empty((k, k))
    iu = np.triu_indices(k)
    G[iu] = vals
    G[iu[1], iu[0]] = vals
    return G


def gram(Y) -> np.ndarray:
    """``Y^T Y`` as a dense symmetric matrix (upper triangle computed, mirrored).

    ``Y`` is a CSR matrix or a sequence of CSR column blocks sharing the row
    count, which are concatenated left to right.
    """
    if not isinstance(Y, SparseMatrixCSR):
        Y = hstack(Y)
    k = Y.num_cols
    if k == 0 or Y.num_rows == 0:
        raise DimensionError("gram of an empty matrix")
    Yt = Y.transpose()
    vals = kernels.reduce_partials(
        [kernels.sel_partials(Yt, np.arange(k), gram=True)])
    return unpack_triangle(vals, k)


def hstack(blocks: Sequence[SparseMatrixCSR]) -> SparseMatrixCSR:
    blocks = list(blocks)
    if not blocks:
        raise DimensionError("no blocks to assemble")
    m = blocks[0].num_rows
    if any(b.num_rows != m for b in blocks):
        raise DimensionError("blocks have different row counts")
    ts = [b.transpose() for b in blocks]
    offsets = np.concatenate([[0], np.cumsum(np.concatenate(
        [np.diff(t.row_offsets) for t in ts]))])
    stacked_t = SparseMatrixCSR(
        sum(b.num_cols for b in blocks), m, offsets,
        np.concatenate([t.col_indices for t in ts]),
        np.concatenate([t.values for t in ts]), validate=False)
    return stacked_t.transpose()


def largest_eigenvalue(G, method="lapack") -> float:
    """Largest eigenvalue of a small symmetric PSD matrix.

    Closed form for order <= 2.  Larger orders use the symmetric LAPACK
    eigensolver by default; ``method="power"`` selects shifted power
    iteration, which can stall when the top two eigenvalues nearly coincide.
    """
    G = np.array(G, dtype=np.float64)  # contiguous copy: fixed kernel path
    if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] == 0:
        raise DimensionError(f"expected a non-empty square matrix, got {G.shape}")
    if not np.all(np.isfinite(G)):
        raise NumericalError("matrix has non-finite entries")
    k = G.shape[0]
    if k == 1:
        return float(G[0, 0])
    if k == 2:
        a, b, c = G[0, 0], G[0, 1], G[1, 1]
        return float(0.5 * (a + c) + np.hypot(0.5 * (a - c), b))
    if method == "power":
        return _power_iteration(G)
    if method != "lapack":
        raise ValueError(f"unknown eigenvalue method {method!r}")
    try:
        return float(np.linalg.eigvalsh(G)[-1])
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed on order {k}: {exc}") from exc


def _power_iteration(G):
    k = G.shape[0]
    scale = np.abs(G).sum(axis=1).max()
    if scale == 0.0:
        return 0.0
    # Gershgorin lower bound; shifting by it is only safe when positive
    radius = np.abs(G).sum(axis=1) - np.abs(np.diag(G))
    shift = max(0.0, float(np.min(np.diag(G) - radius)))
    B = G - shift * np.eye(k)
    v = np.sqrt(np.abs(np.diag(G))) + 1.0 / np.arange(2, k + 2)
    v /= np.linalg.norm(v)
    rho = 0.0
    resid = np.inf
    for it in range(EIG_MAX_ITER):
        w = B @ v
        rho = float(v @ w)
        resid = float(np.linalg.norm(w - rho * v))
        if resid <= EIG_TOL * max(abs(rho) + shift, scale * np.finfo(float).eps):
            return rho + shift
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return shift
        v = w / nw
    raise NumericalError(
        f"power iteration did not converge in {EIG_MAX_ITER} iterations "
        f"(rayleigh={rho + shift!r}, residual={resid!r}, order={k})")


def spmv(A: SparseMatrixCSR, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.num_cols,):
        raise DimensionError(f"vector length {x.shape} != {A.num_cols}")
    return kernels.row_dots(A, x)


def spmv_transpose(A: SparseMatrixCSR, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (A.num_rows,):
        raise DimensionError(f"vector length {v.shape} != {A.num_rows}")
    return kernels.row_dots(A.transpose(), v)
