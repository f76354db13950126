import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memlab import linalg


def _rand(shape, seed=0):
    return np.random.default_rng(seed).normal(size=shape)


@pytest.mark.parametrize("shape", [(1, 1), (3, 3), (5, 2), (2, 7), (40, 40), (33, 17)])
@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_svd_reconstructs_and_is_orthonormal(shape, method):
    a = _rand(shape, seed=sum(shape))
    f = linalg.svd(a, method=method)
    assert np.allclose(f.reconstruct(), a, atol=1e-12)
    r = f.rank
    assert np.allclose(f.u.T @ f.u, np.eye(r), atol=1e-12)
    assert np.allclose(f.v.T @ f.v, np.eye(r), atol=1e-12)
    assert np.all(np.diff(f.s) <= 0)


def test_jacobi_and_lapack_agree_on_values():
    a = _rand((25, 30), 4)
    s1 = linalg.singular_spectrum(a, method="jacobi")
    s2 = linalg.singular_spectrum(a, method="lapack")
    assert np.allclose(s1, s2, atol=1e-12)


def test_auto_switches_to_lapack_above_limit():
    a = _rand((linalg.JACOBI_MAX_DIM + 2, linalg.JACOBI_MAX_DIM + 2), 1)
    f = linalg.svd(a)
    assert np.allclose(f.reconstruct(), a, atol=1e-10)


def test_svd_signs_are_canonical():
    a = _rand((6, 6), 2)
    f = linalg.svd(a)
    g = linalg.svd(-a)
    idx = np.argmax(np.abs(f.u), axis=0)
    assert np.all(f.u[idx, np.arange(f.rank)] >= 0)
    # negating the input flips v, not u
    assert np.allclose(f.u, g.u, atol=1e-10)
    assert np.allclose(f.v, -g.v, atol=1e-10)


def test_rank_deficient_drops_small_values():
    a = np.outer(np.arange(1.0, 6.0), np.ones(4))
    f = linalg.svd(a)
    assert f.rank == 1
    assert np.isclose(f.s[0], np.linalg.norm(a))


def test_zero_matrix_has_rank_zero():
    f = linalg.svd(np.zeros((3, 4)))
    assert f.rank == 0
    assert f.reconstruct().shape == (3, 4)
    assert not linalg.orthogonal_factor_exact(np.zeros((3, 3))).any()


def test_non_finite_input_rejected_with_location():
    a = np.eye(3)
    a[1, 2] = np.nan
    with pytest.raises(ValueError, match=r"\(1, 2\)"):
        linalg.svd(a)


@pytest.mark.parametrize("tol", [0.0, 1e-2, -1.0])
def test_bad_rank_tolerance(tol):
    with pytest.raises(ValueError):
        linalg.svd(np.eye(2), rank_tolerance=tol)


def test_orthogonal_factor_of_orthogonal_is_itself():
    q, _ = np.linalg.qr(_rand((8, 8), 3))
    assert np.allclose(linalg.orthogonal_factor_exact(q), q, atol=1e-12)


def test_orthogonal_factor_rectangular():
    a = _rand((5, 9), 5)
    o = linalg.orthogonal_factor_exact(a)
    assert np.allclose(o @ o.T, np.eye(5), atol=1e-12)


def test_newton_schulz_matches_exact():
    rng = np.random.default_rng(9)
    q1, _ = np.linalg.qr(rng.normal(size=(64, 64)))
    q2, _ = np.linalg.qr(rng.normal(size=(64, 64)))
    a = q1 @ np.diag(np.linspace(0.1, 1.0, 64)) @ q2.T
    assert np.linalg.norm(linalg.newton_schulz(a) - linalg.orthogonal_factor_exact(a)) < 1e-2


def test_newton_schulz_rejects_zero():
    with pytest.raises(ValueError, match="degenerate"):
        linalg.newton_schulz(np.zeros((3, 3)))


def test_nuclear_norm_and_inner():
    a = np.diag([3.0, -2.0, 0.5])
    assert np.isclose(linalg.nuclear_norm(a), 5.5)
    assert np.isclose(linalg.frobenius_inner(a, np.eye(3)), 1.5)


@settings(max_examples=30, deadline=None)
@given(
    m=st.integers(1, 12),
    n=st.integers(1, 12),
    seed=st.integers(0, 2**32 - 1),
)
def test_svd_property_reconstruction(m, n, seed):
    a = _rand((m, n), seed)
    f = linalg.svd(a, method="jacobi")
    assert np.allclose(f.reconstruct(), a, atol=1e-11)
    assert np.allclose(f.s, np.linalg.svd(a, compute_uv=False)[: f.rank], atol=1e-11)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.01, 100.0))
def test_orthogonal_factor_scale_invariant(seed, c):
    a = _rand((6, 4), seed)
    assert np.allclose(linalg.orthogonal_factor_exact(c * a), linalg.orthogonal_factor_exact(a), atol=1e-10)


def test_diagonal_svd():
    f = linalg.svd(np.diag([3.0, 2.0]))
    assert np.allclose(f.s, [3.0, 2.0])
    assert np.allclose(np.abs(f.u), np.eye(2)) and np.allclose(np.abs(f.v), np.eye(2))


def test_zero_4x4_empty_factors():
    f = linalg.svd(np.zeros((4, 4)))
    assert f.rank == 0 and f.s.size == 0 and f.u.shape == (4, 0)


def test_two_class_simp_instance():
    # diag(x) - (1/K) 1 x^T with x = (2, 2, 1, 1)
    x = np.array([2.0, 2.0, 1.0, 1.0])
    m = np.diag(x) - np.outer(np.ones(4), x) / 4
    f = linalg.svd(m)
    assert f.rank == 3
    assert np.allclose(f.s, [2.0, math.sqrt(2.5), 1.0], atol=1e-12)
    assert np.allclose(linalg.singular_spectrum(m), [2.0, 1.58113883, 1.0, 0.0], atol=1e-8)


def test_singular_spectrum_examples():
    assert np.allclose(linalg.singular_spectrum(np.eye(3)), [1, 1, 1])
    assert np.allclose(linalg.singular_spectrum(np.diag([2.0, 1.0, 0.0])), [2, 1, 0])


def test_orthogonal_factor_examples():
    assert np.allclose(linalg.orthogonal_factor_exact(np.diag([5.0, 0.1])), np.eye(2))
    assert not linalg.orthogonal_factor_exact(np.zeros((2, 2))).any()
    g = _rand((6, 6), 12)
    f = linalg.orthogonal_factor_exact(g)
    assert abs(linalg.frobenius_inner(g, f) - np.linalg.svd(g, compute_uv=False).sum()) < 1e-8


def test_newton_schulz_examples():
    # Frobenius pre-scaling shrinks an orthogonal input, so it is recovered
    # only once the iteration has converged, not after every step
    for n in (5, 64):
        q, _ = np.linalg.qr(_rand((n, n), 6))
        assert np.abs(linalg.newton_schulz(q) - q).max() <= 1e-10
    assert np.linalg.norm(linalg.newton_schulz(np.diag([1.0, 0.5]), 10) - np.eye(2)) <= 1e-2
    rng = np.random.default_rng(8)
    u, _ = np.linalg.qr(rng.normal(size=(8, 8)))
    v, _ = np.linalg.qr(rng.normal(size=(8, 8)))
    a = u @ np.diag(rng.uniform(0.1, 1.0, 8)) @ v.T
    assert np.linalg.norm(linalg.newton_schulz(a) - linalg.orthogonal_factor_exact(a)) <= 1e-2


def test_lapack_fallback_on_nonconvergence(monkeypatch):
    def fail(*args, **kwargs):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr(np.linalg, "svd", fail)
    a = _rand((5, 5), 2)
    f = linalg.svd(a, method="lapack")
    assert np.allclose(f.reconstruct(), a, atol=1e-12)
