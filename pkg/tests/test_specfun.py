import numpy as np
import pytest

import oracles
from bilayer_spectra import specfun
from bilayer_spectra.errors import DomainError
from bilayer_spectra.specfun import (SERIES_RADIUS, bessel_j, bessel_k, bessel_y, g_arrays,
                                     g_bound_constants, g_derivs, g_minus_one, hankel1,
                                     macdonald_k0)


def _rel(a, b):
    return abs(a - b) / abs(b)


def test_hankel_at_one():
    h = hankel1(0, 1.0)
    assert abs(h - (0.7651976866 + 0.0882569642j)) < 1e-10
    assert _rel(h, oracles.hankel0(1.0)) < 1e-13


def test_hankel_log_singularity_bounded():
    vals = [abs(hankel1(0, z) - 2j / np.pi * np.log(z)) for z in (1e-3, 1e-6, 1e-9, 1e-12)]
    # the limit is J0(0) + (2i/pi)(gamma - ln 2)
    limit = abs(1 + 2j / np.pi * (np.euler_gamma - np.log(2)))
    assert abs(vals[-1] - limit) < 1e-12
    assert np.ptp(vals[1:]) < 1e-5


def test_wronskian():
    z = 0.7 + 0.3j
    # J0' = -J1, Y0' = -Y1
    w = -bessel_j(0, z) * bessel_y(1, z) + bessel_j(1, z) * bessel_y(0, z)
    assert abs(w - 2 / (np.pi * z)) < 1e-10


def test_k0_at_one():
    assert abs(macdonald_k0(1.0) - 0.4210244382) < 1e-10
    assert _rel(macdonald_k0(1.0), oracles.k0(1.0)) < 1e-13


def test_k0_connection():
    z = 0.5
    assert abs(macdonald_k0(z) - 1j * np.pi / 2 * hankel1(0, 1j * z)) < 1e-10


def test_k0_quadrature_vs_series():
    z = 2 + 1j
    assert _rel(macdonald_k0(z, method="quadrature"), macdonald_k0(z, method="series")) < 1e-8


@pytest.mark.parametrize("z", [0.3, 1 + 1j, 5j, -3 + 0.5j, -3 - 0.5j, 20 - 20j, 1e-5j])
def test_k0_against_oracle_all_sheets(z):
    assert _rel(macdonald_k0(z), oracles.k0(z)) < 1e-10


def test_k0_vectorised_matches_scalar():
    z = np.array([0.5, 2 + 1j, -4 + 1j, 30j])
    assert np.allclose(macdonald_k0(z), [macdonald_k0(complex(v)) for v in z], rtol=1e-15)


def test_k1_against_mpmath():
    import mpmath as mp
    for z in (0.4 + 0.1j, 3 - 2j, 25j):
        ref = complex(mp.besselk(1, z))
        assert _rel(bessel_k(1, z), ref) < 1e-12


def test_domain_errors():
    with pytest.raises(DomainError):
        macdonald_k0(0)
    with pytest.raises(DomainError):
        macdonald_k0(-1.0)
    with pytest.raises(DomainError):
        hankel1(0, 0)
    with pytest.raises(DomainError):
        g_derivs(0)
    with pytest.raises(DomainError):
        g_derivs(-1 + 1j)
    with pytest.raises(DomainError):
        g_derivs(1 - 0.1j)
    with pytest.raises(ValueError):
        hankel1(2, 1.0)


@pytest.mark.parametrize("r", [SERIES_RADIUS - 0.1, SERIES_RADIUS + 0.1])
@pytest.mark.parametrize("phi", [0.0, 0.4, np.pi / 2])
def test_seam_k(r, phi):
    w = np.array([r * np.exp(1j * phi)])
    for nu in (0, 1):
        a = specfun._k_series(nu, w)
        b = specfun._k_laguerre(nu, w)
        assert _rel(a[0], b[0]) < 1e-9


@pytest.mark.parametrize("r", [SERIES_RADIUS - 0.1, SERIES_RADIUS + 0.1])
@pytest.mark.parametrize("phi", [0.0, 0.7, np.pi / 2])
def test_seam_g(r, phi):
    z = np.array([r * np.exp(1j * phi)])
    for a, b in zip(specfun._g_series(z), specfun._g_far(z)):
        assert _rel(a[0], b[0]) < 1e-9


def test_hankel_lower_half_plane():
    import mpmath as mp
    for z in (1 - 1j, -2 - 0.5j, -3 + 0j):
        assert _rel(hankel1(0, z), complex(mp.hankel1(0, z))) < 1e-10
        assert _rel(hankel1(1, z), complex(mp.hankel1(1, z))) < 1e-10


def test_g_limit_at_zero():
    for phi in (0.0, np.pi / 4, np.pi / 2):
        assert abs(g_derivs(1e-6 * np.exp(1j * phi)).g - 1) < 1e-4


def test_g_minus_one_small():
    z = 1e-4 * np.exp(0.3j)
    lg = np.log(z / 2) + specfun.EULER_GAMMA
    # first series term: -(z/2)^2 + (4i/pi)(z/2)^2 (1 - ln(z/2) - gamma)
    approx = -(z * z / 4) + 4j / np.pi * (z * z / 4) * (1 - lg)
    assert _rel(g_minus_one(z), approx) < 1e-6


def test_bessel_ode_residual():
    z = 1 + 0.5j
    h = 1e-3
    # eighth-order central stencils for the first and second derivatives
    c1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
    c2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
    pts = z + h * np.arange(-4, 5)
    a = hankel1(0, pts)
    d1 = c1 @ a / h
    d2 = c2 @ a / h**2
    assert abs(d2 + d1 / z + hankel1(0, z)) < 1e-8


def test_g_decay_bounded_by_probe():
    c = g_bound_constants(n_radial=100)
    assert abs(g_derivs(10.0).g) * np.sqrt(10) <= c["c_far"]


def test_g_matches_hankel_definition():
    for z in (0.3 + 0.2j, 3.0, 7j, 20 + 5j):
        ref = oracles.hankel0(z) - oracles.hankel0(1j * z)
        assert _rel(g_derivs(z).g, ref) < 1e-9


def test_g_derivatives_against_hankel_recurrences():
    for z in (0.5 + 0.5j, 4 + 1j, 1.5j):
        d = g_derivs(z)
        h0, h1 = hankel1(0, z), hankel1(1, z)
        h0i, h1i = hankel1(0, 1j * z), hankel1(1, 1j * z)
        g1 = -h1 + 1j * h1i
        g2 = -(h0 - h1 / z) - (h0i - h1i / (1j * z))
        assert _rel(d.g1, g1) < 1e-9
        assert _rel(d.g2, g2) < 1e-9


def test_finite_difference_derivatives():
    rng = np.random.default_rng(7)
    r = np.exp(rng.uniform(np.log(1e-6), np.log(50.0), 1000))
    z = r * np.exp(1j * rng.uniform(0, np.pi / 2, 1000))
    e = z / r  # radial direction stays in the quadrant
    h = 1e-5 * r
    _, g1, g2 = g_arrays(z)

    def shifted(zz):
        # G - 1 avoids cancellation near 0; G itself is tiny far out
        return np.where(np.abs(z) <= 1, g_minus_one(zz), g_arrays(zz)[0])

    fd1 = (shifted(z + h * e) - shifted(z - h * e)) / (2 * h * e)
    g1p = g_arrays(z + h * e)[1]
    g1m = g_arrays(z - h * e)[1]
    fd2 = (g1p - g1m) / (2 * h * e)
    assert np.max(np.abs(fd1 - g1) / np.abs(g1)) < 1e-5
    assert np.max(np.abs(fd2 - g2) / np.abs(g2)) < 1e-4


def test_g_bound_constants_stable():
    a = g_bound_constants(n_radial=200)
    b = g_bound_constants(n_radial=400, n_angle=33)
    for key in a:
        assert np.isfinite(a[key]) and a[key] > 0
        assert 0.5 < b[key] / a[key] < 2.0


def test_bessel_real_axis_is_real():
    x = np.linspace(0.1, 40, 50)
    assert np.all(bessel_j(0, x).imag == 0)
    assert np.all(bessel_y(0, x).imag == 0)
    assert np.allclose(bessel_j(0, x).real, [oracles.j0(v).real for v in x], rtol=1e-11, atol=1e-13)
