# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: exact sparse dot products, reductions and scatter updates.

Same contract as ``sacd._pykernels``.  Exact accumulation uses the
non-overlapping partials algorithm (Shewchuk) and the final rounding step of
CPython's ``math.fsum``, so rounded results agree bitwise with the fallback.
Build with ``-ffp-contract=off``: a fused multiply-add would change the
rounding of the products.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isfinite
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memcpy

from .errors import NumericalError

cnp.import_array()

BACKEND = "compiled"

ctypedef cnp.int64_t i64

cdef enum:
    MAX_PARTIALS = 96


cdef inline int grow(double* p, int n, double x) noexcept nogil:
    """Add ``x`` to the expansion ``p[:n]``; returns the new length or -1."""
    cdef int i = 0
    cdef int j
    cdef double y, hi, lo, bv
    if not isfinite(x):
        return -1
    for j in range(n):
        # branch-free TwoSum: same (hi, lo) as the ordered fast variant
        y = p[j]
        hi = x + y
        bv = hi - x
        lo = (x - (hi - bv)) + (y - bv)
        if lo != 0.0:
            p[i] = lo
            i += 1
        x = hi
    if x != 0.0:
        if not isfinite(x) or i >= MAX_PARTIALS - 1:
            return -1
        p[i] = x
        i += 1
    return i


cdef inline double round_partials(double* p, int n) noexcept nogil:
    cdef double hi = 0.0
    cdef double lo = 0.0
    cdef double x, y, yr
    if n > 0:
        n -= 1
        hi = p[n]
        while n > 0:
            x = hi
            n -= 1
            y = p[n]
            hi = x + y
            yr = hi - x
            lo = y - yr
            if lo != 0.0:
                break
        if n > 0 and ((lo < 0.0 and p[n - 1] < 0.0) or
                      (lo > 0.0 and p[n - 1] > 0.0)):
            y = lo * 2.0
            x = hi + y
            yr = x - hi
            if y == yr:
                hi = x
    return hi


cdef struct Buf:
    double* data
    Py_ssize_t size
    Py_ssize_t cap


cdef inline int buf_push(Buf* b, double* p, int n) noexcept nogil:
    cdef Py_ssize_t cap
    cdef double* grown
    if b.size + n > b.cap:
        cap = 2 * b.cap + n + 16
        grown = <double*>realloc(b.data, cap * sizeof(double))
        if grown == NULL:
            return -1
        b.data = grown
        b.cap = cap
    memcpy(b.data + b.size, p, n * sizeof(double))
    b.size += n
    return 0


cdef object finish(Buf* b, object offsets):
    comps = np.empty(b.size, dtype=np.float64)
    cdef double[::1] cv = comps
    if b.size:
        memcpy(&cv[0], b.data, b.size * sizeof(double))
    free(b.data)
    b.data = NULL
    return offsets, comps


def sel_partials(const i64[::1] indptr, const i64[::1] indices,
                 const double[::1] data, Py_ssize_t ncols, sel, vecs,
                 bint gram):
    cdef const i64[::1] s = np.ascontiguousarray(sel, dtype=np.int64)
    varr = np.asarray(vecs, dtype=np.float64)
    varr = varr.reshape(varr.shape[0] if varr.ndim == 2 else -1, ncols)
    cdef const double[:, ::1] v = np.ascontiguousarray(varr)
    cdef Py_ssize_t k = s.shape[0]
    cdef Py_ssize_t nv = v.shape[0]
    cdef Py_ssize_t nent = (k * (k + 1) // 2 if gram else 0) + nv * k
    offsets = np.empty(nent + 1, dtype=np.int64)
    cdef i64[::1] off = offsets
    work_arr = np.zeros(max(ncols, 1), dtype=np.float64)
    stamp_arr = np.full(max(ncols, 1), -1, dtype=np.int64)
    cdef double[::1] work = work_arr
    cdef i64[::1] stamp = stamp_arr
    cdef double partials[MAX_PARTIALS]
    cdef Buf buf
    cdef Py_ssize_t a, b, p, e = 0, c, ra, rb, w
    cdef int n = 0
    cdef int failed = 0
    buf.data = NULL
    buf.size = 0
    buf.cap = 0
    off[0] = 0
    with nogil:
        if gram:
            for a in range(k):
                if failed:
                    break
                ra = s[a]
                for p in range(indptr[ra], indptr[ra + 1]):
                    work[indices[p]] = data[p]
                    stamp[indices[p]] = a
                for b in range(a, k):
                    rb = s[b]
                    n = 0
                    for p in range(indptr[rb], indptr[rb + 1]):
                        c = indices[p]
                        if stamp[c] == a:
                            n = grow(partials, n, work[c] * data[p])
                            if n < 0:
                                break
                    if n < 0 or buf_push(&buf, partials, n) < 0:
                        failed = 1
                        break
                    e += 1
                    off[e] = buf.size
        for w in range(nv):
            if failed:
                break
            for a in range(k):
                ra = s[a]
                n = 0
                for p in range(indptr[ra], indptr[ra + 1]):
                    n = grow(partials, n, data[p] * v[w, indices[p]])
                    if n < 0:
                        break
                if n < 0 or buf_push(&buf, partials, n) < 0:
                    failed = 1
                    break
                e += 1
                off[e] = buf.size
    if failed:
        free(buf.data)
        raise NumericalError("non-finite value in exact summation")
    return finish(&buf, offsets)


def sum_partials(values):
    cdef const double[:, ::1] x = np.atleast_2d(
        np.ascontiguousarray(values, dtype=np.float64))
    cdef Py_ssize_t k = x.shape[0]
    cdef Py_ssize_t L = x.shape[1]
    offsets = np.empty(k + 1, dtype=np.int64)
    cdef i64[::1] off = offsets
    cdef double partials[MAX_PARTIALS]
    cdef Buf buf
    cdef Py_ssize_t e, j
    cdef int n
    cdef int failed = 0
    buf.data = NULL
    buf.size = 0
    buf.cap = 0
    off[0] = 0
    with nogil:
        for e in range(k):
            n = 0
            for j in range(L):
                n = grow(partials, n, x[e, j])
                if n < 0:
                    break
            if n < 0 or buf_push(&buf, partials, n) < 0:
                failed = 1
                break
            off[e + 1] = buf.size
    if failed:
        free(buf.data)
        raise NumericalError("non-finite value in exact summation")
    return finish(&buf, offsets)


def value_partials(values):
    x = np.ascontiguousarray(values, dtype=np.float64).ravel()
    return sum_partials(x.reshape(-1, 1))


def reduce_partials(parts):
    cdef Py_ssize_t P = len(parts)
    cdef Py_ssize_t k = len(parts[0][0]) - 1
    keep = []
    cdef i64** offp = <i64**>malloc(P * sizeof(i64*))
    cdef double** compp = <double**>malloc(P * sizeof(double*))
    cdef Py_ssize_t w, e, p
    cdef cnp.ndarray oarr, carr
    for w in range(P):
        oarr = np.ascontiguousarray(parts[w][0], dtype=np.int64)
        carr = np.ascontiguousarray(parts[w][1], dtype=np.float64)
        keep.append((oarr, carr))
        offp[w] = <i64*>cnp.PyArray_DATA(oarr)
        compp[w] = <double*>cnp.PyArray_DATA(carr)
    out = np.empty(k, dtype=np.float64)
    cdef double[::1] res = out
    cdef double partials[MAX_PARTIALS]
    cdef int n
    cdef int failed = 0
    with nogil:
        for e in range(k):
            n = 0
            for w in range(P):
                for p in range(offp[w][e], offp[w][e + 1]):
                    n = grow(partials, n, compp[w][p])
                    if n < 0:
                        break
                if n < 0:
                    break
            if n < 0:
                failed = 1
                break
            res[e] = round_partials(partials, n)
            if not isfinite(res[e]):
                failed = 1
                break
    free(offp)
    free(compp)
    if failed:
        raise NumericalError("non-finite value in exact summation")
    return out


def row_dots(const i64[::1] indptr, const i64[::1] indices,
             const double[::1] data, const double[::1] vec):
    cdef Py_ssize_t m = indptr.shape[0] - 1
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] res = out
    cdef double partials[MAX_PARTIALS]
    cdef Py_ssize_t r, p
    cdef int n
    cdef int failed = 0
    with nogil:
        for r in range(m):
            n = 0
            for p in range(indptr[r], indptr[r + 1]):
                n = grow(partials, n, data[p] * vec[indices[p]])
                if n < 0:
                    break
            if n < 0:
                failed = 1
                break
            res[r] = round_partials(partials, n)
            if not isfinite(res[r]):
                failed = 1
                break
    if failed:
        raise NumericalError("non-finite value in exact summation")
    return out


def scatter_axpy(const i64[::1] indptr, const i64[::1] indices,
                 const double[::1] data, sel, coeffs, double[::1] out):
    cdef const i64[::1] s = np.ascontiguousarray(sel, dtype=np.int64)
    cdef const double[::1] cf = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t a, p, r
    cdef double c
    with nogil:
        for a in range(s.shape[0]):
            r = s[a]
            c = cf[a]
            for p in range(indptr[r], indptr[r + 1]):
                out[indices[p]] = out[indices[p]] + c * data[p]
