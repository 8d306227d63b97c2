"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded.  Set ``SACD_PURE_PYTHON=1`` to force the fallback.
Both backends round every dot product exactly once, so they agree bitwise.
"""

import os
from typing import NamedTuple

import numpy as np

if os.environ.get("SACD_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        from . import _pykernels as _impl

BACKEND = _impl.BACKEND


class Partials(NamedTuple):
    """Ragged exact expansions, one per logical entry."""

    offsets: np.ndarray
    comps: np.ndarray

    @property
    def size(self):
        return len(self.offsets) - 1


def sel_partials(mat, sel, vecs=(), gram=True, impl=None):
    """Expansions of ``<row a, row b>`` for ``a <= b`` in ``sel``, then ``<row a, v>``.

    Entries are laid out as the row-major upper triangle followed by one
    block of ``len(sel)`` projections per vector.  When ``sel`` repeats many
    rows, each distinct pair is computed once and copied.
    """
    impl = impl or _impl
    ncols = mat.num_cols
    vecs = np.asarray(vecs, dtype=np.float64)
    if vecs.ndim == 1:
        vecs = vecs[None, :] if vecs.size or ncols == 0 else vecs.reshape(0, ncols)
    sel = np.asarray(sel, dtype=np.int64)
    if gram and len(sel) > 8:
        uniq, inv = np.unique(sel, return_inverse=True)
        if 4 * len(uniq) < 3 * len(sel):
            sub = Partials(*impl.sel_partials(mat.row_offsets, mat.col_indices,
                                              mat.values, ncols, uniq, vecs, gram))
            return take_partials(sub, _expand_index(inv.ravel(), len(uniq), len(vecs)))
    return Partials(*impl.sel_partials(mat.row_offsets, mat.col_indices,
                                       mat.values, ncols, sel, vecs, gram))


def _expand_index(inv, ku, nvec):
    """Entry positions in the distinct-row layout for every entry of the full one."""
    ia, ib = np.triu_indices(len(inv))
    u, v = inv[ia], inv[ib]
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    tri = lo * ku - lo * (lo - 1) // 2 + (hi - lo)
    proj = ku * (ku + 1) // 2 + (np.arange(nvec)[:, None] * ku + inv[None, :]).ravel()
    return np.concatenate([tri, proj])


def take_partials(parts, idx):
    """Entries ``idx`` of ``parts`` (repeats allowed) as a new ragged set."""
    idx = np.asarray(idx, dtype=np.int64)
    lens = np.diff(parts.offsets)[idx]
    offsets = np.zeros(len(idx) + 1, dtype=np.int64)
    np.cumsum(lens, out=offsets[1:])
    pos = np.repeat(parts.offsets[idx] - offsets[:-1], lens) + np.arange(offsets[-1])
    return Partials(offsets, parts.comps[pos])


def sum_partials(values, impl=None):
    return Partials(*(impl or _impl).sum_partials(values))


def value_partials(values, impl=None):
    return Partials(*(impl or _impl).value_partials(values))


def reduce_partials(parts, impl=None):
    return (impl or _impl).reduce_partials(list(parts))


def row_dots(mat, vec, impl=None):
    vec = np.ascontiguousarray(vec, dtype=np.float64)
    return (impl or _impl).row_dots(mat.row_offsets, mat.col_indices,
                                    mat.values, vec)


def scatter_axpy(mat, sel, coeffs, out, impl=None):
    (impl or _impl).scatter_axpy(mat.row_offsets, mat.col_indices, mat.values,
                                 np.asarray(sel, dtype=np.int64),
                                 np.asarray(coeffs, dtype=np.float64), out)


def concat_partials(parts):
    """Join expansions of several vectors into one message, in order."""
    parts = list(parts)
    shifts = np.cumsum([0] + [len(p.comps) for p in parts[:-1]])
    offsets = np.concatenate([parts[0].offsets[:1]] +
                             [p.offsets[1:] + sh for p, sh in zip(parts, shifts)])
    return Partials(offsets, np.concatenate([p.comps for p in parts]))
