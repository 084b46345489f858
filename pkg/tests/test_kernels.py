import mpmath as mp
import numpy as np
import pytest

from bilayer_spectra.core import frobenius_norm
from bilayer_spectra.errors import DomainError
from bilayer_spectra.kernels import (biharm_kernel, biharm_kernel_macdonald, biharm_kernel_split,
                                     kernel_bound_probe, rho_arrays, rho_kernel, rho_magnitude)
from bilayer_spectra.specfun import g_arrays


def test_split_form_at_i():
    a = biharm_kernel(1j, 1.0)
    assert abs(a - biharm_kernel_split(1j, 1.0)) < 1e-9
    assert abs(a - biharm_kernel_macdonald(1j, 1.0)) < 1e-9


def test_limit_at_diagonal():
    assert abs(biharm_kernel(1j, 1e-6) - 1j / (8 * 1j)) < 1e-4


def test_radial_pde_residual():
    mu = 0.3 + 0.7j
    s = np.sqrt(mu)
    c = 1j / (8 * mu)

    def lap(r):
        # inner Laplacian f'' + f'/r from the analytic derivatives of G
        _, g1, g2 = g_arrays(s * r)
        return c * (s * s * g2 + s * g1 / r)

    r, h = 2.0, 1e-3
    lp, l0, lm = lap(r + h), lap(r), lap(r - h)
    bilap = (lp - 2 * l0 + lm) / h**2 + (lp - lm) / (2 * h * r)
    assert abs(bilap - mu * mu * biharm_kernel(mu, r)) < 1e-5


def test_rotation_covariance():
    mu, w, phi = 1j, 1.0, np.pi / 3
    a = rho_kernel(mu, w)
    b = rho_kernel(mu, np.exp(1j * phi) * w)
    assert abs(b[0, 0] - a[0, 0]) < 1e-12
    assert abs(b[1, 1] - a[1, 1]) < 1e-12
    assert abs(b[0, 1] - a[0, 1] * np.exp(-2j * phi)) < 1e-12
    assert abs(b[1, 0] - a[1, 0] * np.exp(2j * phi)) < 1e-12


def _mp_entries(mu, w):
    # independent re-assembly: differentiate G(sqrt(mu) |x|) in Cartesian coordinates
    mp.mp.dps = 30
    s = mp.sqrt(mp.mpc(mu))

    def G(x1, x2):
        z = s * mp.sqrt(x1 * x1 + x2 * x2)
        return mp.hankel1(0, z) - mp.hankel1(0, 1j * z)

    x = (mp.mpf(w.real), mp.mpf(w.imag))
    g = G(*x)
    g11 = mp.diff(G, x, (2, 0))
    g12 = mp.diff(G, x, (1, 1))
    g22 = mp.diff(G, x, (0, 2))
    # 4 d_zbar^2 = (d1 - i d2)^2 and 4 d_z^2 = (d1 + i d2)^2
    upper = g11 - 2j * g12 - g22
    lower = g11 + 2j * g12 - g22
    pref = 1j / (8 * mp.mpc(mu))
    return complex(pref * mu * g), complex(pref * upper), complex(pref * lower)


def test_frobenius_magnitude_reassembly():
    mu, w = 0.5 + 0.5j, 1.3 + 0.2j
    diag, upper, lower = _mp_entries(mu, w)
    ref = np.sqrt(2 * abs(diag) ** 2 + abs(upper) ** 2 + abs(lower) ** 2)
    assert abs(frobenius_norm(rho_kernel(mu, w)) - ref) < 1e-12
    k = rho_kernel(mu, w)
    assert abs(k[0, 0] - diag) < 1e-12
    assert abs(k[0, 1] - upper) < 1e-12
    assert abs(k[1, 0] - lower) < 1e-12


def test_scaling_identity():
    # rho_mu(w) = rho_theta(sqrt|mu| w) entrywise: no |mu| prefactor survives
    rng = np.random.default_rng(3)
    for _ in range(50):
        theta = rng.uniform(0, np.pi)
        rad = np.exp(rng.uniform(-3, 3))
        w = complex(*rng.normal(size=2))
        a = rho_kernel(rad * np.exp(1j * theta), w)
        b = rho_kernel(np.exp(1j * theta), np.sqrt(rad) * w)
        assert abs(frobenius_norm(a) - frobenius_norm(b)) <= 1e-10 * frobenius_norm(b)
        assert np.allclose(a, b, rtol=1e-10, atol=0)


def test_two_representations_100_points():
    rng = np.random.default_rng(4)
    mu = np.exp(rng.uniform(-2, 2, 100)) * np.exp(1j * rng.uniform(0.01, np.pi, 100))
    r = np.exp(rng.uniform(np.log(0.05), np.log(10), 100))
    a = biharm_kernel(mu, r)
    b = biharm_kernel_split(mu, r)
    assert np.max(np.abs(a - b) / np.abs(a)) < 1e-9


def test_rho_vectorised():
    w = np.array([1 + 1j, -0.5j, 2.0])
    out = rho_arrays(0.2 + 1j, w)
    for i, v in enumerate(w):
        assert np.allclose(out[i], rho_kernel(0.2 + 1j, v), rtol=1e-14, atol=0)


def test_rho_magnitude_is_frobenius():
    r = np.array([0.01, 0.7, 30.0])
    mags = rho_magnitude(1.0, r)
    for ri, m in zip(r, mags):
        assert m == pytest.approx(frobenius_norm(rho_kernel(np.exp(1j), ri)), rel=1e-14)


def test_kernel_domain_errors():
    with pytest.raises(DomainError):
        biharm_kernel(1j, 0.0)
    with pytest.raises(DomainError):
        biharm_kernel(0, 1.0)
    with pytest.raises(DomainError):
        rho_kernel(1j, 0)
    with pytest.raises(DomainError):
        rho_kernel(-1j, 1)


def test_probe_rejects_small_q():
    with pytest.raises(DomainError):
        kernel_bound_probe([0.0], q=3.9)
    with pytest.raises(DomainError):
        kernel_bound_probe([4.0], q=4.5)


def test_probe_small_grid():
    rep = kernel_bound_probe([0.0, np.pi / 2, np.pi], r_grid=np.geomspace(1e-6, 1e3, 120), q=4.5)
    d = rep.to_dict()
    assert set(d) == {"c_log", "c_sqrt", "m_constant", "q", "stable"}
    for key in ("c_log", "c_sqrt", "m_constant"):
        assert np.isfinite(d[key]) and d[key] > 0
    r = np.geomspace(1e-6, 1e3, 120)
    inner = r < 0.5
    assert np.all(rho_magnitude(np.pi / 2, r[inner]) <= rep.c_log * np.log(1 / r[inner]) * (1 + 1e-12))
