# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops; must agree with ``_kernels_py`` (bitwise for assembly)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, M_PI

cnp.import_array()


def p1_triplets(const double[:, ::1] nodes, const cnp.int64_t[:, ::1] tris):
    cdef Py_ssize_t nt = tris.shape[0]
    cdef Py_ssize_t t, i, j, pos
    cdef cnp.int64_t v[3]
    cdef double b[3]
    cdef double c[3]
    cdef double det, kden, mdiag, moff
    rows_a = np.empty(9 * nt, dtype=np.int64)
    cols_a = np.empty(9 * nt, dtype=np.int64)
    k_a = np.empty(9 * nt, dtype=np.float64)
    m_a = np.empty(9 * nt, dtype=np.float64)
    cdef cnp.int64_t[::1] rows = rows_a
    cdef cnp.int64_t[::1] cols = cols_a
    cdef double[::1] kv = k_a
    cdef double[::1] mv = m_a
    for t in range(nt):
        v[0] = tris[t, 0]
        v[1] = tris[t, 1]
        v[2] = tris[t, 2]
        b[0] = nodes[v[1], 1] - nodes[v[2], 1]
        b[1] = nodes[v[2], 1] - nodes[v[0], 1]
        b[2] = nodes[v[0], 1] - nodes[v[1], 1]
        c[0] = nodes[v[2], 0] - nodes[v[1], 0]
        c[1] = nodes[v[0], 0] - nodes[v[2], 0]
        c[2] = nodes[v[1], 0] - nodes[v[0], 0]
        det = c[2] * b[1] - c[1] * b[2]
        kden = 2.0 * det
        mdiag = det / 12.0
        moff = det / 24.0
        pos = 9 * t
        for i in range(3):
            for j in range(3):
                rows[pos] = v[i]
                cols[pos] = v[j]
                kv[pos] = (b[i] * b[j] + c[i] * c[j]) / kden
                mv[pos] = mdiag if i == j else moff
                pos += 1
    return rows_a, cols_a, k_a, m_a


def green_p_sum(const double[:, ::1] x, const double[:, ::1] y, const double[::1] w):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t nq = y.shape[0]
    cdef Py_ssize_t i, q
    cdef double x1, x2, xx, d1, d2, dot, yy, acc
    cdef double scale = -1.0 / (4.0 * M_PI)
    out_a = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_a
    for i in range(n):
        x1 = x[i, 0]
        x2 = x[i, 1]
        xx = x1 * x1 + x2 * x2
        acc = 0.0
        for q in range(nq):
            d1 = x1 - y[q, 0]
            d2 = x2 - y[q, 1]
            dot = x1 * y[q, 0] + x2 * y[q, 1]
            yy = y[q, 0] * y[q, 0] + y[q, 1] * y[q, 1]
            acc += w[q] * log((d1 * d1 + d2 * d2) / (1.0 + 2.0 * dot + xx * yy))
        out[i] = scale * acc
    return out_a
