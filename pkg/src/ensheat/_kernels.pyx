# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scatter kernels for the per-step assembly hot loop."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def scatter_add(double[::1] data, const long long[::1] pos, const double[::1] vals):
    """data[pos[k]] += vals[k] over flat index/value arrays."""
    cdef Py_ssize_t k, n = pos.shape[0]
    for k in range(n):
        data[pos[k]] += vals[k]


def scatter_add_rows(double[::1] out, const int[:, ::1] idx, const double[:, ::1] vals):
    """out[idx[e, i]] += vals[e, i] for all elements e and local slots i."""
    cdef Py_ssize_t e, i
    cdef Py_ssize_t ne = idx.shape[0], k = idx.shape[1]
    for e in range(ne):
        for i in range(k):
            out[idx[e, i]] += vals[e, i]
