import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kdpp_al.linalg import (
    LazySymmetricEig,
    clamp_psd_spectrum,
    det_psd,
    gram_schmidt,
    sym_eig,
)

from conftest import random_psd


def test_identity_spectrum():
    r = sym_eig(np.eye(4))
    np.testing.assert_allclose(r.eigenvalues, np.ones(4), atol=1e-15)


def test_diagonal_sorted():
    r = sym_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(r.eigenvalues, [1.0, 2.0, 3.0], atol=1e-15)
    # eigenvectors of a diagonal matrix are coordinate axes
    np.testing.assert_allclose(np.abs(r.eigenvectors), np.eye(3)[:, [1, 2, 0]], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 50, 200])
def test_reconstruction_and_orthonormality(n):
    rng = np.random.default_rng(n)
    a = rng.standard_normal((n, n))
    a = a + a.T
    r = sym_eig(a)
    q, lam = r.eigenvectors, r.eigenvalues
    assert np.max(np.abs(q @ np.diag(lam) @ q.T - a)) <= 1e-8 * np.max(np.abs(a))
    assert np.max(np.abs(q.T @ q - np.eye(n))) <= 1e-10
    assert np.all(np.diff(lam) >= 0)
    np.testing.assert_allclose(lam, np.linalg.eigvalsh(a), atol=1e-10 * np.max(np.abs(a)))


def test_eigenvalues_only_match_full():
    rng = np.random.default_rng(7)
    a = random_psd(rng, 30)
    np.testing.assert_array_equal(sym_eig(a, vectors=False).eigenvalues, sym_eig(a).eigenvalues)
    assert sym_eig(a, vectors=False).eigenvectors is None


def test_non_finite_rejected():
    a = np.eye(3)
    a[0, 1] = np.nan
    with pytest.raises(ValueError):
        sym_eig(a)
    with pytest.raises(ValueError):
        det_psd(a)
    with pytest.raises(ValueError):
        sym_eig(np.ones((2, 3)))


def test_deterministic():
    rng = np.random.default_rng(3)
    a = random_psd(rng, 40)
    r1, r2 = sym_eig(a), sym_eig(a)
    np.testing.assert_array_equal(r1.eigenvalues, r2.eigenvalues)
    np.testing.assert_array_equal(r1.eigenvectors, r2.eigenvectors)


def test_lazy_vectors_match_full():
    rng = np.random.default_rng(11)
    a = random_psd(rng, 60, rank=20)
    lazy = LazySymmetricEig(a)
    full = sym_eig(a)
    np.testing.assert_allclose(lazy.eigenvalues, full.eigenvalues, atol=1e-10)
    idx = [59, 58, 45, 40]
    v = lazy.vectors(idx)
    np.testing.assert_allclose(a @ v, v * lazy.eigenvalues[idx], atol=1e-9)
    np.testing.assert_allclose(v.T @ v, np.eye(len(idx)), atol=1e-10)
    assert lazy.vectors([]).shape == (60, 0)


def test_near_zero_cluster_converges():
    # many tiny eigenvalues next to a few large ones used to stall deflation
    rng = np.random.default_rng(0)
    b = rng.standard_normal((300, 5)) * np.array([60.0, 20.0, 5.0, 1.0, 0.1])
    a = b @ b.T
    lazy = LazySymmetricEig(a)
    w = np.linalg.eigvalsh(a)
    assert np.max(np.abs(lazy.eigenvalues - w)) <= 1e-12 * np.max(np.abs(w))


def test_psd_eigenvalues_not_too_negative():
    rng = np.random.default_rng(5)
    for n in (5, 20, 80):
        a = random_psd(rng, n, rank=max(1, n // 3))
        lam = sym_eig(a, vectors=False).eigenvalues
        assert lam.min() >= -1e-8 * max(1.0, lam.max())
        assert clamp_psd_spectrum(lam).min() >= 0.0


def test_clamp_rejects_indefinite():
    with pytest.raises(ValueError):
        clamp_psd_spectrum(np.array([-1.0, 2.0]))


def test_det_closed_forms():
    a, b, c = 2.0, 0.7, 3.0
    assert det_psd(np.array([[a, b], [b, c]])) == pytest.approx(a * c - b * b, rel=1e-14)
    assert det_psd(np.eye(5)) == 1.0
    v = np.arange(1.0, 5.0)
    assert abs(det_psd(np.outer(v, v))) <= 1e-10
    assert det_psd(np.zeros((0, 0))) == 1.0


@pytest.mark.parametrize("seed", range(10))
def test_det_matches_eigen_product(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 51))
    a = random_psd(rng, n) + 0.1 * np.eye(n)
    lam = sym_eig(a, vectors=False).eigenvalues
    assert det_psd(a) == pytest.approx(float(np.prod(lam)), rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (6, 3), elements=st.floats(-10, 10)))
def test_gram_schmidt_orthonormal(v):
    q = gram_schmidt(v)
    assert q.shape[0] == 6 and q.shape[1] <= 3
    if q.shape[1]:
        np.testing.assert_allclose(q.T @ q, np.eye(q.shape[1]), atol=1e-10)


def test_gram_schmidt_drops_dependent_columns():
    v = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    q = gram_schmidt(v)
    assert q.shape == (3, 2)
