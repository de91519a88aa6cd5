# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the numerical kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

cdef double SQRT5 = 2.23606797749979


def matern52(x1, x2, theta):
    cdef const double[:, ::1] a = np.ascontiguousarray(x1, dtype=np.float64)
    cdef const double[:, ::1] b = np.ascontiguousarray(x2, dtype=np.float64)
    cdef const double[::1] inv = 1.0 / np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t n1 = a.shape[0], n2 = b.shape[0], d = a.shape[1]
    if b.shape[1] != d or inv.shape[0] != d:
        raise ValueError("dimension mismatch")
    out_arr = np.empty((n1, n2))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, t, s
    for i in range(n1):
        for j in range(n2):
            acc = 0.0
            for k in range(d):
                t = (a[i, k] - b[j, k]) * inv[k]
                acc += t * t
            s = SQRT5 * sqrt(acc)
            out[i, j] = (1.0 + s + s * s / 3.0) * exp(-s)
    return out_arr


def hermite_table(z, int maxdeg):
    cdef const double[:, ::1] zz = np.ascontiguousarray(np.atleast_2d(z), dtype=np.float64)
    cdef Py_ssize_t n = zz.shape[0], d = zz.shape[1]
    out_arr = np.empty((n, d, maxdeg + 1))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef int k
    cdef double zv
    cdef double[::1] sq = np.sqrt(np.arange(maxdeg + 2, dtype=np.float64))
    for i in range(n):
        for j in range(d):
            zv = zz[i, j]
            out[i, j, 0] = 1.0
            if maxdeg >= 1:
                out[i, j, 1] = zv
            for k in range(1, maxdeg):
                out[i, j, k + 1] = (zv * out[i, j, k] - sq[k] * out[i, j, k - 1]) / sq[k + 1]
    return out_arr


def psi_matrix(z, indices):
    cdef const cnp.intp_t[:, ::1] idx = np.ascontiguousarray(indices, dtype=np.intp)
    zarr = np.ascontiguousarray(np.atleast_2d(z), dtype=np.float64)
    cdef int maxdeg = int(np.max(indices)) if idx.shape[0] else 0
    cdef double[:, :, ::1] table = hermite_table(zarr, maxdeg)
    cdef Py_ssize_t n = zarr.shape[0], d = zarr.shape[1], p = idx.shape[0]
    if p and idx.shape[1] != d:
        raise ValueError("dimension mismatch")
    out_arr = np.empty((n, p))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, c, j
    cdef double acc
    for i in range(n):
        for c in range(p):
            acc = 1.0
            for j in range(d):
                if idx[c, j]:
                    acc *= table[i, j, idx[c, j]]
            out[i, c] = acc
    return out_arr


def matern52_sym(x, theta):
    cdef const double[:, ::1] a = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] inv = 1.0 / np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], d = a.shape[1]
    if inv.shape[0] != d:
        raise ValueError("dimension mismatch")
    out_arr = np.empty((n, n))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, t, s
    for i in range(n):
        out[i, i] = 1.0
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                t = (a[i, k] - a[j, k]) * inv[k]
                acc += t * t
            s = SQRT5 * sqrt(acc)
            s = (1.0 + s + s * s / 3.0) * exp(-s)
            out[i, j] = s
            out[j, i] = s
    return out_arr
