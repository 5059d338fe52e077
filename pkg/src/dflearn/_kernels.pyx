"""Compiled hot kernels; see ``_kernels_py`` for the contracts."""

import numpy as np

NAME = "cython"

FNV_OFFSET_BASIS = 0xCBF29CE484222325


def row_scores(const long long[::1] indices, const long long[::1] indptr,
               const double[::1] theta, out=None):
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    if out is None:
        out = np.empty(n_rows, dtype=np.float64)
    cdef double[::1] result = out
    cdef Py_ssize_t i, j
    cdef double acc
    with nogil:
        for i in range(n_rows):
            acc = 0.0
            for j in range(indptr[i], indptr[i + 1]):
                acc += theta[indices[j]]
            result[i] = acc
    return out


def scatter_rows(const long long[::1] indices, const long long[::1] indptr,
                 const double[::1] coefficients, Py_ssize_t dimension, out=None):
    if out is None:
        out = np.zeros(dimension, dtype=np.float64)
    cdef double[::1] result = out
    cdef Py_ssize_t i, j
    cdef double c
    with nogil:
        for i in range(indptr.shape[0] - 1):
            c = coefficients[i]
            for j in range(indptr[i], indptr[i + 1]):
                result[indices[j]] += c
    return out


def fnv1a64(const unsigned char[::1] data, seed=None):
    cdef unsigned long long value
    if seed is None:
        value = <unsigned long long>0xCBF29CE484222325
    else:
        value = <unsigned long long>seed
    cdef Py_ssize_t i
    for i in range(data.shape[0]):
        value ^= data[i]
        value = value * <unsigned long long>0x100000001B3
    return value
