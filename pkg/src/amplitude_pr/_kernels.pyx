# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner-loop kernels. Semantics match ``_kernels_py``."""
import numpy as np
from libc.math cimport sqrt


def amplitude_loss(const double complex[:, ::1] B, const double[::1] b,
                   const double complex[::1] x):
    cdef Py_ssize_t m = B.shape[0], d = B.shape[1], j, i
    cdef double zr, zi, br, bi, r, loss = 0.0
    with nogil:
        for j in range(m):
            zr = 0.0
            zi = 0.0
            for i in range(d):
                br = B[j, i].real
                bi = B[j, i].imag
                zr = zr + br * x[i].real - bi * x[i].imag
                zi = zi + br * x[i].imag + bi * x[i].real
            r = sqrt(zr * zr + zi * zi) - b[j]
            loss = loss + r * r
    return loss


def amplitude_gradient(const double complex[:, ::1] B, const double[::1] b,
                       const double complex[::1] x, double threshold=0.0):
    cdef Py_ssize_t m = B.shape[0], d = B.shape[1], j, i
    cdef double zr, zi, br, bi, a, r, s, wr, wi, loss = 0.0
    gr_arr = np.zeros(d, dtype=np.float64)
    gi_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] gr = gr_arr
    cdef double[::1] gi = gi_arr
    with nogil:
        for j in range(m):
            zr = 0.0
            zi = 0.0
            for i in range(d):
                br = B[j, i].real
                bi = B[j, i].imag
                zr = zr + br * x[i].real - bi * x[i].imag
                zi = zi + br * x[i].imag + bi * x[i].real
            a = sqrt(zr * zr + zi * zi)
            r = a - b[j]
            loss = loss + r * r
            if a > 0.0 and a >= threshold:
                s = r / a
                wr = s * zr
                wi = s * zi
                for i in range(d):
                    br = B[j, i].real
                    bi = B[j, i].imag
                    gr[i] = gr[i] + br * wr + bi * wi
                    gi[i] = gi[i] + br * wi - bi * wr
    return loss, gr_arr + 1j * gi_arr


def lifted_forward(const double complex[:, ::1] BS, const double complex[::1] u1,
                   const double complex[::1] u2, double lam1, double lam2):
    cdef Py_ssize_t m = BS.shape[0], k = BS.shape[1], j, i
    cdef double r1, i1, r2, i2, br, bi
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for j in range(m):
            r1 = 0.0
            i1 = 0.0
            r2 = 0.0
            i2 = 0.0
            for i in range(k):
                br = BS[j, i].real
                bi = BS[j, i].imag
                r1 = r1 + br * u1[i].real - bi * u1[i].imag
                i1 = i1 + br * u1[i].imag + bi * u1[i].real
                r2 = r2 + br * u2[i].real - bi * u2[i].imag
                i2 = i2 + br * u2[i].imag + bi * u2[i].real
            out[j] = lam1 * (r1 * r1 + i1 * i1) + lam2 * (r2 * r2 + i2 * i2)
    return out_arr
