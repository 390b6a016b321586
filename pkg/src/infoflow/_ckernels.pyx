# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: coarse graining, transition counting, entropy sums.

Mirrors ``infoflow._pykernels`` exactly; loops release the GIL so
thread pools over stocks scale.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log2

cnp.import_array()


def discretize(x, double d):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t n = xv.shape[0], t
    out = np.empty(n, dtype=np.int8)
    cdef signed char[::1] ov = out
    cdef double half = 0.5 * d
    cdef double v
    with nogil:
        for t in range(n):
            v = xv[t]
            if v <= -half:
                ov[t] = 0
            elif v < half:
                ov[t] = 1
            else:
                ov[t] = 2
    return out.reshape(np.shape(x))


ctypedef fused state_t:
    signed char
    cnp.int64_t


def _as_states(x):
    arr = np.asarray(x)
    if arr.dtype == np.int8 or arr.dtype == np.int64:
        return np.ascontiguousarray(arr)
    return np.ascontiguousarray(arr, dtype=np.int64)


cdef void _count(const state_t[::1] iv, const state_t[::1] jv, int k, int l, long a_target, long a_source,
                 const long[::1] drop_i, const long[::1] drop_j, cnp.int64_t[::1] cv) noexcept nogil:
    # drop_*[h] == h // a: shifting out the oldest symbol by table lookup beats an integer divide
    cdef Py_ssize_t n = iv.shape[0]
    cdef Py_ssize_t m = k if k > l else l
    cdef long n_ih = a_target ** k
    cdef long n_jh = a_source ** l
    cdef long top_i = a_target ** (k - 1)
    cdef long top_j = a_source ** (l - 1)
    cdef Py_ssize_t t, q
    cdef long ih = 0, jh = 0
    # prime the rolling codes with the histories ending at m - 2
    for q in range(m - k, m - 1):
        ih = drop_i[ih] + iv[q] * top_i
    for q in range(m - l, m - 1):
        jh = drop_j[jh] + jv[q] * top_j
    for t in range(m - 1, n - 1):
        ih = drop_i[ih] + iv[t] * top_i
        jh = drop_j[jh] + jv[t] * top_j
        cv[(iv[t + 1] * n_ih + ih) * n_jh + jh] += 1


def count_transitions(target, source, int k, int l, long a_target, long a_source):
    target, source = _as_states(target), _as_states(source)
    if target.dtype != source.dtype:
        target, source = target.astype(np.int64), source.astype(np.int64)
    cdef long n_ih = a_target ** k
    cdef long n_jh = a_source ** l
    counts = np.zeros(a_target * n_ih * n_jh, dtype=np.int64)
    cdef cnp.int64_t[::1] cv = counts
    cdef const long[::1] drop_i = np.arange(n_ih, dtype=np.int_) // a_target
    cdef const long[::1] drop_j = np.arange(n_jh, dtype=np.int_) // a_source
    cdef const signed char[::1] i8, j8
    cdef const cnp.int64_t[::1] i64, j64
    if target.dtype == np.int8:
        i8, j8 = target, source
        with nogil:
            _count(i8, j8, k, l, a_target, a_source, drop_i, drop_j, cv)
    else:
        i64, j64 = target, source
        with nogil:
            _count(i64, j64, k, l, a_target, a_source, drop_i, drop_j, cv)
    return counts.reshape(a_target, n_ih, n_jh)


def entropies(counts):
    cdef const cnp.int64_t[:, :, ::1] c3 = np.ascontiguousarray(counts, dtype=np.int64)
    cdef Py_ssize_t a = c3.shape[0], ni = c3.shape[1], nj = c3.shape[2]
    c_ij_arr = np.zeros((ni, nj), dtype=np.float64)
    c_ni_arr = np.zeros((a, ni), dtype=np.float64)
    c_i_arr = np.zeros(ni, dtype=np.float64)
    cdef double[:, ::1] c_ij = c_ij_arr
    cdef double[:, ::1] c_ni = c_ni_arr
    cdef double[::1] c_i = c_i_arr
    cdef Py_ssize_t x, y, z
    cdef double c, total = 0.0, te = 0.0, hj = 0.0, ht = 0.0

    with nogil:
        for x in range(a):
            for y in range(ni):
                for z in range(nj):
                    c = <double>c3[x, y, z]
                    c_ij[y, z] += c
                    c_ni[x, y] += c
                    c_i[y] += c
                    total += c
        for x in range(a):
            for y in range(ni):
                for z in range(nj):
                    c = <double>c3[x, y, z]
                    if c > 0:
                        te += c * log2((c * c_i[y]) / (c_ij[y, z] * c_ni[x, y]))
                        hj -= c * log2(c / c_ij[y, z])
                c = c_ni[x, y]
                if c > 0:
                    ht -= c * log2(c / c_i[y])
    return te / total, ht / total, hj / total
