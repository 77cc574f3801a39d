# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled all-pairs shortest path kernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def floyd_warshall_inplace(double[:, ::1] d):
    """Classic triple-loop relaxation over every intermediate vertex, in place."""
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double dik, via
    cdef double[::1] rowk
    for k in range(n):
        rowk = d[k]
        for i in range(n):
            dik = d[i, k]
            if dik == INFINITY:
                continue
            for j in range(n):
                via = dik + rowk[j]
                if via < d[i, j]:
                    d[i, j] = via


def relax_through_inplace(double[:, ::1] d, cnp.intp_t[::1] intermediates):
    """Whole-matrix relaxation ``d = min(d, d[:, v] + d[v, :])`` for each ``v`` in turn."""
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t m = intermediates.shape[0]
    cdef Py_ssize_t i, j, t, v
    cdef double div, via
    cdef double[::1] col = np.empty(n)
    cdef double[::1] row = np.empty(n)
    for t in range(m):
        v = intermediates[t]
        for i in range(n):
            col[i] = d[i, v]
            row[i] = d[v, i]
        for i in range(n):
            div = col[i]
            if div == INFINITY:
                continue
            for j in range(n):
                via = div + row[j]
                if via < d[i, j]:
                    d[i, j] = via
