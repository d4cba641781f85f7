# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scan loops. Mirrors _kernels_np exactly; see there for docs."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt

cnp.import_array()


def scan_distances(const double[:, ::1] table,
                   const cnp.int64_t[::1] cols,
                   const double[::1] query,
                   double exponent):
    cdef Py_ssize_t n_rows = table.shape[0]
    cdef Py_ssize_t n_cols = cols.shape[0]
    out_arr = np.empty(n_rows, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t r, k
    cdef double acc, d
    cdef double inv = 1.0 / n_cols
    with nogil:
        if exponent == 1.0:
            for r in range(n_rows):
                acc = 0.0
                for k in range(n_cols):
                    acc += fabs(table[r, cols[k]] - query[k])
                out[r] = acc * inv
        elif exponent == 0.5:
            for r in range(n_rows):
                acc = 0.0
                for k in range(n_cols):
                    acc += sqrt(fabs(table[r, cols[k]] - query[k]))
                out[r] = acc * inv
        elif exponent == 2.0:
            for r in range(n_rows):
                acc = 0.0
                for k in range(n_cols):
                    d = table[r, cols[k]] - query[k]
                    acc += d * d
                out[r] = acc * inv
        else:
            for r in range(n_rows):
                acc = 0.0
                for k in range(n_cols):
                    acc += pow(fabs(table[r, cols[k]] - query[k]), exponent)
                out[r] = acc * inv
    return out_arr


def scan_distances_rows(const double[:, ::1] table,
                        const cnp.int64_t[::1] rows,
                        const cnp.int64_t[::1] cols,
                        const double[::1] query,
                        double exponent):
    cdef Py_ssize_t n_rows = rows.shape[0]
    cdef Py_ssize_t n_cols = cols.shape[0]
    out_arr = np.empty(n_rows, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k, r
    cdef double acc
    cdef double inv = 1.0 / n_cols
    with nogil:
        for i in range(n_rows):
            r = rows[i]
            acc = 0.0
            if exponent == 0.5:
                for k in range(n_cols):
                    acc += sqrt(fabs(table[r, cols[k]] - query[k]))
            elif exponent == 1.0:
                for k in range(n_cols):
                    acc += fabs(table[r, cols[k]] - query[k])
            else:
                for k in range(n_cols):
                    acc += pow(fabs(table[r, cols[k]] - query[k]), exponent)
            out[i] = acc * inv
    return out_arr


cdef inline Py_ssize_t _lower_bound(const double[:] vals, Py_ssize_t n, double x) nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if vals[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _upper_bound(const double[:] vals, Py_ssize_t n, double x) nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if vals[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def range_hit_counts(const double[:, ::1] sorted_vals,
                     const cnp.int64_t[:, ::1] sorted_rows,
                     const cnp.int64_t[::1] cols,
                     const double[::1] lows,
                     const double[::1] highs,
                     Py_ssize_t n_rows):
    cdef Py_ssize_t n_sub = cols.shape[0]
    cdef Py_ssize_t n_vals = sorted_vals.shape[1]
    counts_arr = np.zeros(n_rows, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef Py_ssize_t k, i, lo, hi, c
    with nogil:
        for k in range(n_sub):
            c = cols[k]
            lo = _lower_bound(sorted_vals[c], n_vals, lows[k])
            hi = _upper_bound(sorted_vals[c], n_vals, highs[k])
            for i in range(lo, hi):
                counts[sorted_rows[c, i]] += 1
    return counts_arr
