# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Same signatures and semantics as ``_core_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, INFINITY

cnp.import_array()


def assign_labels(X, C):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], k = c.shape[0], dim = x.shape[1]
    labels_arr = np.empty(n, dtype=np.int64)
    d2_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef double[::1] d2 = d2_arr
    cdef Py_ssize_t i, j, m, best_j
    cdef double s, diff, best
    for i in range(n):
        best = INFINITY
        best_j = 0
        for j in range(k):
            s = 0.0
            for m in range(dim):
                diff = x[i, m] - c[j, m]
                s += diff * diff
            if s < best:
                best = s
                best_j = j
        labels[i] = best_j
        d2[i] = best
    return labels_arr, d2_arr


def silhouette_samples(X, labels, Py_ssize_t k):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const cnp.int64_t[::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0], dim = x.shape[1]
    cdef double[::1] sums = np.zeros(k, dtype=np.float64)
    cdef double[::1] sizes = np.zeros(k, dtype=np.float64)
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, m, c, li
    cdef double s, diff, a, b, v, mx
    for i in range(n):
        sizes[lab[i]] += 1.0
    for i in range(n):
        li = lab[i]
        if sizes[li] <= 1.0:
            continue
        for c in range(k):
            sums[c] = 0.0
        for j in range(n):
            s = 0.0
            for m in range(dim):
                diff = x[i, m] - x[j, m]
                s += diff * diff
            sums[lab[j]] += sqrt(s)
        a = sums[li] / (sizes[li] - 1.0)
        b = INFINITY
        for c in range(k):
            if c != li and sizes[c] > 0.0:
                v = sums[c] / sizes[c]
                if v < b:
                    b = v
        mx = a if a > b else b
        out[i] = 0.0 if mx == 0.0 else (b - a) / mx
    return out_arr


cdef void _mul_dh(double[:, ::1] prev, double[:, ::1] out, double a, double alpha,
                  double d, double theta) noexcept nogil:
    cdef double ct = cos(theta), st = sin(theta), ca = cos(alpha), sa = sin(alpha)
    cdef double A[3][4]
    cdef Py_ssize_t r, col
    A[0][0] = ct; A[0][1] = -st * ca; A[0][2] = st * sa; A[0][3] = a * ct
    A[1][0] = st; A[1][1] = ct * ca;  A[1][2] = -ct * sa; A[1][3] = a * st
    A[2][0] = 0.0; A[2][1] = sa;      A[2][2] = ca;       A[2][3] = d
    for r in range(4):
        for col in range(4):
            out[r, col] = prev[r, 0] * A[0][col] + prev[r, 1] * A[1][col] + prev[r, 2] * A[2][col]
        out[r, 3] += prev[r, 3]


def dh_frames(dh, q, base):
    cdef const double[:, ::1] p = np.ascontiguousarray(dh, dtype=np.float64)
    cdef const double[::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], i
    frames_arr = np.empty((n + 1, 4, 4), dtype=np.float64)
    cdef double[:, :, ::1] frames = frames_arr
    frames_arr[0] = base
    for i in range(n):
        _mul_dh(frames[i], frames[i + 1], p[i, 0], p[i, 1], p[i, 2], qq[i] + p[i, 3])
    return frames_arr


def dh_jacobian(dh, q, base):
    frames_arr = dh_frames(dh, q, base)
    cdef double[:, :, ::1] f = frames_arr
    cdef Py_ssize_t n = f.shape[0] - 1, i
    J_arr = np.empty((6, n), dtype=np.float64)
    cdef double[:, ::1] J = J_arr
    cdef double zx, zy, zz, rx, ry, rz
    for i in range(n):
        zx = f[i, 0, 2]; zy = f[i, 1, 2]; zz = f[i, 2, 2]
        rx = f[n, 0, 3] - f[i, 0, 3]
        ry = f[n, 1, 3] - f[i, 1, 3]
        rz = f[n, 2, 3] - f[i, 2, 3]
        J[0, i] = zy * rz - zz * ry
        J[1, i] = zz * rx - zx * rz
        J[2, i] = zx * ry - zy * rx
        J[3, i] = zx
        J[4, i] = zy
        J[5, i] = zz
    return frames_arr[n].copy(), J_arr
