# cython: language_level=3
"""Hot loops: periodic stencil application.

Offsets are pre-normalized to [0, N) per axis, so wrapping needs a single
conditional subtraction. Accumulation order per cell is fixed (diagonal term
first, then weights in ascending j) and must match _kernels_np exactly.
"""

import numpy as np

cimport numpy as cnp


def stencil_apply_1d(double[::1] v, long[::1] offs, double[::1] w,
                     double diag, double[::1] out, Py_ssize_t i0, Py_ssize_t i1):
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t m = offs.shape[0]
    cdef Py_ssize_t i, j, idx
    cdef double acc
    with nogil:
        for i in range(i0, i1):
            acc = diag * v[i]
            for j in range(m):
                idx = i + offs[j]
                if idx >= n:
                    idx -= n
                acc += w[j] * v[idx]
            out[i] = acc
    return None


def stencil_apply_2d(double[:, ::1] v, long[::1] offs0, long[::1] offs1,
                     double[::1] w, double diag, double[:, ::1] out,
                     Py_ssize_t r0, Py_ssize_t r1):
    cdef Py_ssize_t n0 = v.shape[0]
    cdef Py_ssize_t n1 = v.shape[1]
    cdef Py_ssize_t m = offs0.shape[0]
    cdef Py_ssize_t i, k, j, ii, kk
    cdef double acc
    with nogil:
        for i in range(r0, r1):
            for k in range(n1):
                acc = diag * v[i, k]
                for j in range(m):
                    ii = i + offs0[j]
                    if ii >= n0:
                        ii -= n0
                    kk = k + offs1[j]
                    if kk >= n1:
                        kk -= n1
                    acc += w[j] * v[ii, kk]
                out[i, k] = acc
    return None
