"""Pure-Python/numpy implementation of the numerical kernels.

Every dot product is delivered as an *expansion*: a short list of
non-overlapping doubles whose exact (unrounded) sum equals the exact sum of
the rounded elementwise products.  Expansions from any number of workers can
be merged and rounded once, so the final value does not depend on how the
data was split.  Expansions are stored ragged as ``(offsets, comps)``.

The compiled module ``_ckernels`` implements the same functions and must
return bitwise-identical rounded results.
"""

import math

import numpy as np

from .errors import NumericalError

BACKEND = "python"


def _fsum(terms):
    try:
        total = math.fsum(terms)
    except (OverflowError, ValueError):
        total = math.inf
    if not math.isfinite(total):
        raise NumericalError("non-finite value in exact summation")
    return total


def _expansion(terms):
    """Exact expansion of ``sum(terms)`` via repeated correctly rounded sums."""
    comps = []
    total = _fsum(terms)
    while total != 0.0:
        comps.append(total)
        total = _fsum(np.concatenate((terms, -np.asarray(comps))))
    return comps


def _pack(expansions):
    offsets = np.zeros(len(expansions) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(e) for e in expansions])
    comps = np.fromiter((c for e in expansions for c in e), dtype=np.float64,
                        count=int(offsets[-1]))
    return offsets, comps


def sel_partials(indptr, indices, data, ncols, sel, vecs, gram):
    """Exact partial dot products among selected rows of a CSR matrix.

    Entry order: if ``gram``, the upper triangle ``<row sel[a], row sel[b]>``
    for ``a <= b`` in row-major order; then ``<row sel[a], vecs[v]>`` for
    each ``v`` and ``a``.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _sel_partials(indptr, indices, data, ncols, sel, vecs, gram)


def _sel_partials(indptr, indices, data, ncols, sel, vecs, gram):
    sel = np.asarray(sel, dtype=np.int64)
    vecs = np.asarray(vecs, dtype=np.float64)
    vecs = vecs.reshape(vecs.shape[0] if vecs.ndim == 2 else -1, ncols)
    rows = [(indices[indptr[r]:indptr[r + 1]], data[indptr[r]:indptr[r + 1]])
            for r in sel]
    out = []
    if gram:
        k = len(rows)
        for a in range(k):
            ia, va = rows[a]
            for b in range(a, k):
                ib, vb = rows[b]
                _, pa, pb = np.intersect1d(ia, ib, assume_unique=True,
                                           return_indices=True)
                out.append(_expansion(va[pa] * vb[pb]))
    for v in vecs:
        for ia, va in rows:
            out.append(_expansion(va * v[ia]))
    return _pack(out)


def sum_partials(values):
    """Exact expansion of each row sum of a 2-D array."""
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    return _pack([_expansion(row) for row in values])


def value_partials(values):
    """Each value becomes its own one-term expansion (zeros are dropped)."""
    values = np.ascontiguousarray(values, dtype=np.float64).ravel()
    return _pack([[v] if v != 0.0 else [] for v in values.tolist()])


def reduce_partials(parts):
    """Merge expansions entry-wise across contributions and round once."""
    k = len(parts[0][0]) - 1
    out = np.empty(k, dtype=np.float64)
    for e in range(k):
        terms = [c for offsets, comps in parts
                 for c in comps[offsets[e]:offsets[e + 1]].tolist()]
        out[e] = _fsum(terms)
    return out


def row_dots(indptr, indices, data, vec):
    """Correctly rounded ``A @ vec`` for a CSR matrix."""
    m = len(indptr) - 1
    out = np.empty(m, dtype=np.float64)
    for r in range(m):
        lo, hi = indptr[r], indptr[r + 1]
        with np.errstate(over="ignore", invalid="ignore"):
            out[r] = _fsum(data[lo:hi] * vec[indices[lo:hi]])
    return out


def scatter_axpy(indptr, indices, data, sel, coeffs, out):
    """``out[j] += coeffs[a] * A[sel[a], j]`` for each ``a`` in order."""
    for a, r in enumerate(np.asarray(sel, dtype=np.int64)):
        lo, hi = indptr[r], indptr[r + 1]
        idx = indices[lo:hi]
        out[idx] = out[idx] + coeffs[a] * data[lo:hi]
