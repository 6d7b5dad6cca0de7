import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from lbmexpand.linalg import eigvals, expm, hessenberg


def _random(n, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


@given(st.integers(1, 9), st.integers(0, 10_000), st.sampled_from([0.1, 1.0, 8.0]))
def test_expm_against_scipy(n, seed, scale):
    A = _random(n, seed, scale)
    ref = scipy.linalg.expm(A)
    assert np.allclose(expm(A), ref, rtol=1e-11, atol=1e-11 * np.abs(ref).max())


def test_expm_extended_precision():
    A = _random(5, 1)
    lo = expm(A)
    hi = expm(A, dtype=np.clongdouble)
    assert hi.dtype == np.clongdouble
    assert np.allclose(lo, hi.astype(complex), rtol=1e-12)


def test_expm_zero_and_nilpotent():
    assert np.array_equal(expm(np.zeros((3, 3))), np.eye(3))
    N = np.array([[0, 1.0], [0, 0]])
    assert np.allclose(expm(N), [[1, 1], [0, 1]])


def test_expm_rejects_nonsquare():
    with pytest.raises(ValueError):
        expm(np.zeros((2, 3)))


@given(st.integers(1, 9), st.integers(0, 10_000))
def test_eigvals_against_numpy(n, seed):
    A = _random(n, seed)
    ours = np.sort_complex(eigvals(A))
    ref = np.sort_complex(np.linalg.eigvals(A))
    assert np.allclose(ours, ref, atol=1e-9)


def test_eigvals_real_and_defective():
    A = np.array([[2.0, 1.0], [0.0, 2.0]])
    assert np.allclose(eigvals(A), [2, 2], atol=1e-7)
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.allclose(np.sort_complex(eigvals(R)), [-1j, 1j])


def test_hessenberg_similarity():
    A = _random(6, 3)
    H = hessenberg(A)
    assert np.allclose(np.tril(H, -2), 0)
    assert np.allclose(np.sort_complex(np.linalg.eigvals(H)), np.sort_complex(np.linalg.eigvals(A)))
