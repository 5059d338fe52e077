"""Pure-numpy implementations of the hot kernels.

The compiled extension module ``dflearn._kernels`` provides the same three
functions; :mod:`dflearn.backend` picks whichever is available. Keep the two
implementations in behavioural lockstep, the test suite cross-checks them.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

FNV_OFFSET_BASIS = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_UINT64_MASK = 0xFFFFFFFFFFFFFFFF


def row_scores(indices, indptr, theta, out=None):
    """Sum ``theta`` over each row's active columns (CSR layout, values 1).

    Returns a float64 vector of length ``len(indptr) - 1``.
    """
    n_rows = indptr.shape[0] - 1
    if out is None:
        out = np.empty(n_rows, dtype=np.float64)
    if n_rows == 0:
        return out
    gathered = theta[indices]
    if indices.shape[0] and np.diff(indptr).min() > 0:
        # reduceat sums each segment sequentially, like the compiled loop
        out[:] = np.add.reduceat(gathered, indptr[:-1])
    else:
        # empty rows confuse reduceat; difference a prefix-sum instead
        sums = np.concatenate(([0.0], np.cumsum(gathered)))
        out[:] = sums[indptr[1:]] - sums[indptr[:-1]]
    return out


def scatter_rows(indices, indptr, coefficients, dimension, out=None):
    """Accumulate each row's coefficient into its active columns.

    The transpose of :func:`row_scores`: returns a dense ``dimension``-long
    vector holding ``coefficients[i]`` summed into every column active in
    row ``i``. With ``out`` given, the result is added into it in place.
    """
    per_entry = np.repeat(coefficients, np.diff(indptr))
    contribution = np.bincount(indices, weights=per_entry, minlength=dimension)
    if out is None:
        return contribution
    out += contribution
    return out


def fnv1a64(data, seed=None):
    """64-bit FNV-1a hash of ``data`` (bytes), starting from state ``seed``."""
    value = FNV_OFFSET_BASIS if seed is None else seed
    for byte in data:
        value ^= byte
        value = (value * _FNV_PRIME) & _UINT64_MASK
    return value
