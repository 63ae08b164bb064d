# cython: language_level=3
"""Compiled twins of the kernels in ``_pykernels``."""
import numpy as np

from libc.math cimport INFINITY


def filter_leq(const double[::1] base, const double[::1] col,
               const long long[::1] active, double weight, double threshold,
               double[::1] out):
    cdef Py_ssize_t k, a, m = active.shape[0], kept = 0
    cdef double v
    result = np.empty(m, dtype=np.int64)
    cdef long long[::1] res = result
    for k in range(m):
        a = active[k]
        v = base[a] + weight * col[a]
        out[a] = v
        if v <= threshold:
            res[kept] = a
            kept += 1
    return result[:kept]


def argmin_active(const double[::1] values, const long long[::1] active):
    cdef Py_ssize_t k, m = active.shape[0]
    cdef long long best = active[0]
    cdef double bv = values[best], v
    for k in range(1, m):
        v = values[active[k]]
        if v < bv:
            bv = v
            best = active[k]
    return int(best)


def within_slack(const double[::1] values, const long long[::1] active, double slack):
    cdef Py_ssize_t k, m = active.shape[0], kept = 0
    cdef double lo = INFINITY, cut
    for k in range(m):
        if values[active[k]] < lo:
            lo = values[active[k]]
    cut = lo + slack
    result = np.empty(m, dtype=np.int64)
    cdef long long[::1] res = result
    for k in range(m):
        if values[active[k]] <= cut:
            res[kept] = active[k]
            kept += 1
    return result[:kept]


def symmetry_scan(const double[:, ::1] D, double tol):
    cdef Py_ssize_t n = D.shape[0], i, j, kept = 0
    cdef double diff
    result = np.empty((n * (n - 1) // 2 if n > 1 else 0, 2), dtype=np.int64)
    cdef long long[:, ::1] res = result
    for i in range(n):
        for j in range(i + 1, n):
            diff = D[i, j] - D[j, i]
            if diff > tol or -diff > tol:
                res[kept, 0] = i
                res[kept, 1] = j
                kept += 1
    return result[:kept]


def triangle_scan(const double[:, ::1] D, double tol, Py_ssize_t limit):
    cdef Py_ssize_t n = D.shape[0], x, y, z, stored = 0, cap
    cdef long long count = 0
    cdef double dxz
    cap = 1024 if limit < 0 else min(limit, 1024)
    buf = np.empty((cap, 3), dtype=np.int64)
    cdef long long[:, ::1] w = buf
    for x in range(n):
        for y in range(n):
            for z in range(n):
                if D[x, z] > D[x, y] + D[y, z] + tol:
                    count += 1
                    if limit < 0 or stored < limit:
                        if stored == cap:
                            cap *= 2
                            if limit >= 0 and cap > limit:
                                cap = limit
                            grown = np.empty((cap, 3), dtype=np.int64)
                            grown[:stored] = buf[:stored]
                            buf = grown
                            w = buf
                        w[stored, 0] = x
                        w[stored, 1] = y
                        w[stored, 2] = z
                        stored += 1
    return int(count), buf[:stored]


def triangle_sample(const double[:, ::1] D, const long long[:, ::1] triples, double tol):
    cdef Py_ssize_t m = triples.shape[0], k, kept = 0
    cdef long long x, y, z
    result = np.empty(m, dtype=np.int64)
    cdef long long[::1] res = result
    for k in range(m):
        x = triples[k, 0]
        y = triples[k, 1]
        z = triples[k, 2]
        if D[x, z] > D[x, y] + D[y, z] + tol:
            res[kept] = k
            kept += 1
    return result[:kept]
