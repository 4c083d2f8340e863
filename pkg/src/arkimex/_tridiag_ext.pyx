# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled tridiagonal LU with partial pivoting; see _tridiag_py for the contract."""

from libc.math cimport fabs


def gttrf(double[::1] dl, double[::1] d, double[::1] du, double[::1] du2, long[::1] ipiv):
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i
    cdef double fact, temp
    with nogil:
        for i in range(n - 2):
            du2[i] = 0.0
        for i in range(n):
            ipiv[i] = i
        for i in range(n - 1):
            if fabs(d[i]) >= fabs(dl[i]):
                if d[i] != 0.0:
                    fact = dl[i] / d[i]
                    dl[i] = fact
                    d[i + 1] -= fact * du[i]
            else:
                fact = d[i] / dl[i]
                d[i] = dl[i]
                dl[i] = fact
                temp = du[i]
                du[i] = d[i + 1]
                d[i + 1] = temp - fact * d[i + 1]
                if i < n - 2:
                    du2[i] = du[i + 1]
                    du[i + 1] = -fact * du[i + 1]
                ipiv[i] = i + 1
    for i in range(n):
        if d[i] == 0.0:
            return i + 1
    return 0


def gttrs(double[::1] dl, double[::1] d, double[::1] du, double[::1] du2, long[::1] ipiv,
          double[::1] b):
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i
    cdef double temp
    with nogil:
        for i in range(n - 1):
            if ipiv[i] == i:
                b[i + 1] -= dl[i] * b[i]
            else:
                temp = b[i]
                b[i] = b[i + 1]
                b[i + 1] = temp - dl[i] * b[i]
        b[n - 1] /= d[n - 1]
        if n > 1:
            b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2]
        i = n - 3
        while i >= 0:
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i]
            i -= 1
