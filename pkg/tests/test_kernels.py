"""Backend parity and correctness of the sparse kernels."""

import numpy as np
import pytest

from dflearn import _kernels_py
from dflearn import backend

try:
    from dflearn import _kernels
except ImportError:
    _kernels = None

IMPLEMENTATIONS = [_kernels_py] if _kernels is None else [_kernels_py, _kernels]


def random_csr(rng, n_rows, dimension, max_row=6):
    rows = []
    for _ in range(n_rows):
        k = int(rng.integers(0, min(max_row, dimension)))
        rows.append(np.sort(rng.choice(dimension, size=k, replace=False)))
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([r.size for r in rows])
    indices = (
        np.concatenate(rows).astype(np.int64) if rows else np.empty(0, dtype=np.int64)
    )
    return indices, indptr


@pytest.mark.parametrize("impl", IMPLEMENTATIONS, ids=lambda m: m.NAME)
def test_row_scores_matches_dense(impl):
    rng = np.random.default_rng(0)
    for _ in range(20):
        n, dim = int(rng.integers(0, 30)), int(rng.integers(2, 15))
        indices, indptr = random_csr(rng, n, dim)
        theta = rng.normal(size=dim)
        dense = np.zeros((n, dim))
        for i in range(n):
            dense[i, indices[indptr[i]:indptr[i + 1]]] = 1.0
        got = impl.row_scores(indices, indptr, theta)
        np.testing.assert_allclose(got, dense @ theta, atol=1e-12)


@pytest.mark.parametrize("impl", IMPLEMENTATIONS, ids=lambda m: m.NAME)
def test_scatter_matches_dense_transpose(impl):
    rng = np.random.default_rng(1)
    for _ in range(20):
        n, dim = int(rng.integers(1, 30)), int(rng.integers(2, 15))
        indices, indptr = random_csr(rng, n, dim)
        coef = rng.normal(size=n)
        dense = np.zeros((n, dim))
        for i in range(n):
            dense[i, indices[indptr[i]:indptr[i + 1]]] = 1.0
        got = impl.scatter_rows(indices, indptr, coef, dim)
        np.testing.assert_allclose(got, dense.T @ coef, atol=1e-12)
        # accumulating form adds into the output
        out = np.ones(dim)
        impl.scatter_rows(indices, indptr, coef, dim, out)
        np.testing.assert_allclose(out, 1.0 + dense.T @ coef, atol=1e-12)


@pytest.mark.skipif(_kernels is None, reason="compiled extension unavailable")
def test_backends_agree():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n, dim = 200, 40
        indices, indptr = random_csr(rng, n, dim, max_row=12)
        theta = rng.normal(size=dim)
        coef = rng.normal(size=n)
        # identical values, possibly different summation order
        np.testing.assert_allclose(
            _kernels.row_scores(indices, indptr, theta),
            _kernels_py.row_scores(indices, indptr, theta),
            rtol=1e-9, atol=1e-12,
        )
        np.testing.assert_allclose(
            _kernels.scatter_rows(indices, indptr, coef, dim),
            _kernels_py.scatter_rows(indices, indptr, coef, dim),
            rtol=1e-9, atol=1e-12,
        )


@pytest.mark.parametrize("impl", IMPLEMENTATIONS, ids=lambda m: m.NAME)
def test_fnv1a64_known_vectors(impl):
    # reference values of 64-bit FNV-1a
    assert impl.fnv1a64(b"") == 0xCBF29CE484222325
    assert impl.fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert impl.fnv1a64(b"foobar") == 0x85944171F73967E8


def test_fnv_parity_with_seed():
    if _kernels is None:
        pytest.skip("compiled extension unavailable")
    seed = _kernels_py.fnv1a64(b"prefix")
    for token in (b"", b"x", b"hello world", bytes(range(256))):
        assert _kernels.fnv1a64(token, seed) == _kernels_py.fnv1a64(token, seed)


def test_backend_exports_one_implementation():
    assert backend.BACKEND in ("cython", "python")
    assert backend.row_scores is not None
