import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bilayer_spectra.core import (SpectralPoint, birman_schwinger_factors, frobenius_norm,
                                  matrix_abs_polar, mat2, mu_branch, on_free_spectrum, trace_abs)
from bilayer_spectra.errors import BranchPointError

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)
matrices = st.lists(complexes, min_size=4, max_size=4).map(lambda e: mat2(*e))


def test_frobenius_examples():
    assert frobenius_norm(mat2(3, 4, 0, 0)) == 5.0
    assert frobenius_norm(np.eye(2)) == pytest.approx(np.sqrt(2), rel=1e-15)
    assert frobenius_norm(mat2(1j, 0, 0, -1j)) == pytest.approx(np.sqrt(2), rel=1e-15)


def test_frobenius_broadcasts():
    field = np.zeros((3, 4, 2, 2), dtype=complex)
    field[..., 0, 0] = 3
    field[..., 1, 0] = 4j
    assert np.all(frobenius_norm(field) == 5.0)


@given(matrices, matrices)
def test_frobenius_submultiplicative(M, N):
    assert frobenius_norm(M @ N) <= frobenius_norm(M) * frobenius_norm(N) * (1 + 1e-12) + 1e-300


@given(matrices)
def test_frobenius_zero_iff_zero(M):
    assert (frobenius_norm(M) == 0) == (not np.any(M))


def test_polar_diagonal():
    W, U = matrix_abs_polar(np.diag([2j, -3]))
    assert np.allclose(W, np.diag([2, 3]), atol=1e-15)
    assert np.allclose(U, np.diag([1j, -1]), atol=1e-15)


def test_polar_zero():
    W, U = matrix_abs_polar(np.zeros((2, 2)))
    assert not np.any(W) and not np.any(U)


def test_polar_random_invertible():
    rng = np.random.default_rng(1)
    for _ in range(50):
        V = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        W, U = matrix_abs_polar(V)
        assert np.allclose(U.conj().T @ U, np.eye(2), atol=1e-12)
        assert np.allclose(U @ W, V, atol=1e-12)
        assert np.allclose(W @ W, V.conj().T @ V, atol=1e-12)


def test_polar_singular_is_partial_isometry():
    V = np.outer([1, 2j], [3, -1])
    W, U = matrix_abs_polar(V)
    assert np.allclose(U @ W, V, atol=1e-12)
    assert np.linalg.norm(U, 2) <= 1 + 1e-12


@given(matrices)
def test_polar_psd(V):
    W, U = matrix_abs_polar(V)
    assert np.allclose(W, W.conj().T)
    assert np.linalg.eigvalsh(W).min() >= -1e-14 * frobenius_norm(V)
    assert np.allclose(U @ W, V, atol=1e-10 * (1 + frobenius_norm(V)))


@given(matrices)
def test_birman_schwinger_product(V):
    W1, W2 = birman_schwinger_factors(V)
    assert np.allclose(W2 @ W1, V, atol=1e-10 * (1 + frobenius_norm(V)))


def test_trace_abs_matches_singular_values():
    rng = np.random.default_rng(2)
    V = rng.normal(size=(20, 2, 2)) + 1j * rng.normal(size=(20, 2, 2))
    s = np.linalg.svd(V, compute_uv=False).sum(axis=-1)
    assert np.allclose(trace_abs(V), s, rtol=1e-12)


def test_mu_examples():
    assert mu_branch(2j, 0) == pytest.approx(2j)
    assert mu_branch(0, 1) == pytest.approx(1j)
    mu = mu_branch(1 + 1j, 1)
    assert abs(mu * mu - (-1 + 2j)) < 1e-14
    assert mu.imag > 0
    assert mu == pytest.approx(cmath.sqrt(-1 + 2j))


def test_mu_real_axis_convention():
    # inside the gap mu is purely imaginary, outside it is real and positive
    assert mu_branch(0.5, 1).imag > 0
    assert mu_branch(2.0, 1).real > 0
    assert mu_branch(-2.0, 1).real > 0


def test_branch_points():
    for k in (1.0, -1.0):
        with pytest.raises(BranchPointError):
            mu_branch(k, 1.0)
    with pytest.raises(BranchPointError):
        SpectralPoint.at(0, 0)


@settings(max_examples=300)
@given(complexes, st.floats(0, 1e3))
def test_mu_squares_back(k, m):
    if abs((k - m) * (k + m)) < 1e-300:
        return
    mu = mu_branch(k, m)
    assert abs(mu * mu - (k * k - m * m)) <= 1e-13 * (abs(k) ** 2 + m * m)
    assert mu.imag >= 0


@given(complexes, st.floats(0, 1e3))
def test_mu_conjugate_modulus(k, m):
    if abs((k - m) * (k + m)) < 1e-300:
        return
    assert abs(mu_branch(k.conjugate(), m)) == abs(mu_branch(k, m))


def test_spectral_point_bracket():
    pt = SpectralPoint.at(2j, 0.0)
    assert pt.bracket == pytest.approx(3.0)
    assert pt.mu == pytest.approx(2j)


def test_on_free_spectrum():
    assert on_free_spectrum(2.0, 1.0)
    assert not on_free_spectrum(0.5, 1.0)
    assert not on_free_spectrum(2 + 1e-3j, 1.0)
