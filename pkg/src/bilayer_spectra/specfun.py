"""Complex-argument Bessel-type functions of order 0 and 1.

Everything is built on the Macdonald functions ``K_0, K_1`` in the closed
right half-plane:

* ``|w| <= 2``: ascending series;
* ``|w| > 2``: Gauss-Laguerre quadrature of

      K_nu(w) = sqrt(pi / 2w) e^{-w} / Gamma(nu + 1/2)
                * int_0^inf e^{-t} t^{nu - 1/2} (1 + t / 2w)^{nu - 1/2} dt,

  whose integrand is analytic on the positive axis for ``Re w >= 0``, so a
  fixed 64-node rule is accurate to ~1e-15 there.

Hankel functions in the closed upper half-plane come from
``H_nu(z) = (2 / pi) i^{-(nu+1)} K_nu(-iz)``; this keeps full relative
accuracy where ``H`` is exponentially small and ``J, Y`` are large.  ``J_n``
uses the trapezoidal rule on Bessel's integral (spectrally accurate for a
periodic integrand) and ``Y_n = -i (H_n - J_n)``.

``G(z) = H_0(z) - H_0(iz)`` is the radial profile of the biharmonic
resolvent; its logarithmic singularities cancel, and for ``|z| <= 2`` it is
summed from a series with the cancellation carried out analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import roots_genlaguerre

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061
SERIES_RADIUS = 2.0
_LAGUERRE_NODES = 64
_SERIES_TERMS = 40
_CHUNK = 1 << 16


def _as_complex_array(z):
    z = np.asarray(z, dtype=complex)
    return z, z.ndim == 0


def _ret(out, scalar):
    return complex(out) if scalar else out


def _harmonic(n_terms: int) -> np.ndarray:
    h = np.zeros(n_terms)
    h[1:] = np.cumsum(1.0 / np.arange(1, n_terms))
    return h


_H = _harmonic(_SERIES_TERMS + 2)


@lru_cache(maxsize=None)
def _laguerre(alpha: float):
    t, w = roots_genlaguerre(_LAGUERRE_NODES, alpha)
    return t, w


# ---------------------------------------------------------------------------
# Macdonald functions


def _k_series(nu: int, w: np.ndarray) -> np.ndarray:
    """Ascending series for K_0 / K_1; valid for any ``w`` off the cut."""
    q = w * w / 4.0
    lg = np.log(w / 2.0)
    term = np.ones_like(w)
    if nu == 0:
        i0 = np.zeros_like(w)
        tail = np.zeros_like(w)
        for k in range(_SERIES_TERMS):
            if k:
                term = term * q / (k * k)
            i0 += term
            tail += _H[k] * term
        return -(lg + EULER_GAMMA) * i0 + tail
    # K_1(w) = 1/w + ln(w/2) I_1(w) - (w/4) sum (psi(k+1)+psi(k+2)) q^k / (k!(k+1)!)
    i1 = np.zeros_like(w)
    tail = np.zeros_like(w)
    for k in range(_SERIES_TERMS):
        if k:
            term = term * q / (k * (k + 1))
        i1 += term
        tail += (_H[k] + _H[k + 1] - 2.0 * EULER_GAMMA) * term
    i1 = i1 * (w / 2.0)
    return 1.0 / w + lg * i1 - (w / 4.0) * tail


def _k_laguerre(nu: int, w: np.ndarray) -> np.ndarray:
    t, wt = _laguerre(nu - 0.5)
    out = np.empty_like(w)
    flat_w, flat_out = w.reshape(-1), out.reshape(-1)
    pref_gamma = math.sqrt(math.pi) if nu == 0 else 0.5 * math.sqrt(math.pi)
    for s in range(0, flat_w.size, _CHUNK):
        ww = flat_w[s:s + _CHUNK]
        f = (1.0 + t[:, None] / (2.0 * ww[None, :])) ** (nu - 0.5)
        integral = wt @ f
        with np.errstate(under="ignore"):
            flat_out[s:s + _CHUNK] = (
                np.sqrt(np.pi / (2.0 * ww)) * np.exp(-ww) / pref_gamma * integral
            )
    return out


def _k_right(nu: int, w: np.ndarray) -> np.ndarray:
    """K_nu on the closed right half-plane, no argument checks."""
    out = np.empty_like(w)
    small = np.abs(w) <= SERIES_RADIUS
    if small.any():
        out[small] = _k_series(nu, w[small])
    if (~small).any():
        out[~small] = _k_laguerre(nu, w[~small])
    return out


def bessel_k(n: int, z):
    """Macdonald function ``K_n(z)``, ``n in {0, 1}``, for ``Re z >= 0``, ``z != 0``."""
    if n not in (0, 1):
        raise ValueError("only orders 0 and 1 are implemented")
    z, scalar = _as_complex_array(z)
    if np.any(z == 0):
        raise DomainError("K_n is singular at z = 0")
    if np.any(z.real < -1e-14 * np.abs(z)):
        raise DomainError("bessel_k needs Re z >= 0; use macdonald_k0 for K_0 elsewhere")
    return _ret(_k_right(n, z), scalar)


def macdonald_k0_quadrature(z: complex) -> complex:
    """K_0 by adaptive quadrature of its Laguerre-type integral representation.

    The substitution ``t = s^2`` removes the ``t^{-1/2}`` endpoint singularity.
    Slow; used as an independent cross-check.
    """
    z = complex(z)
    if z == 0 or (z.imag == 0 and z.real < 0):
        raise DomainError("K_0 needs z != 0 and |arg z| < pi")

    def f(s):
        return 2.0 * np.exp(-s * s) * (1.0 + s * s / (2.0 * z)) ** -0.5

    opts = dict(limit=400, epsabs=1e-15, epsrel=1e-13)
    re = integrate.quad(lambda s: f(s).real, 0.0, np.inf, **opts)[0]
    im = integrate.quad(lambda s: f(s).imag, 0.0, np.inf, **opts)[0]
    return complex(np.exp(-z) * np.sqrt(np.pi / (2.0 * z)) / math.sqrt(math.pi) * (re + 1j * im))


def macdonald_k0(z, method: str = "auto"):
    """Macdonald function ``K_0(z)`` for ``z != 0``, ``|arg z| < pi``.

    ``method``:
      * ``"auto"`` - series / Gauss-Laguerre on ``Re z >= 0``; the left
        half-plane is reached by ``K_0(w) = K_0(-w) -+ i pi I_0(w)``;
      * ``"series"`` - ascending series only (loses digits for large ``Re z``);
      * ``"quadrature"`` - adaptive quadrature of the integral representation
        (scalar input only).
    """
    z, scalar = _as_complex_array(z)
    if np.any(z == 0):
        raise DomainError("K_0 is singular at z = 0")
    if np.any((z.imag == 0) & (z.real < 0)):
        raise DomainError("K_0 needs |arg z| < pi")
    if method == "series":
        return _ret(_k_series(0, z), scalar)
    if method == "quadrature":
        if scalar:
            return macdonald_k0_quadrature(complex(z))
        return np.vectorize(macdonald_k0_quadrature, otypes=[complex])(z)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    out = np.empty_like(z)
    right = z.real >= 0
    out[right] = _k_right(0, z[right])
    left = ~right
    if left.any():
        w = z[left]
        i0 = bessel_j(0, 1j * w)
        sign = np.where(w.imag > 0, -1.0, 1.0)
        out[left] = _k_right(0, -w) + sign * 1j * np.pi * i0
    return _ret(out, scalar)


# ---------------------------------------------------------------------------
# Bessel and Hankel functions


def bessel_j(n: int, z):
    """``J_n(z)`` for ``n in {0, 1}`` by trapezoidal Bessel integral."""
    if n not in (0, 1):
        raise ValueError("only orders 0 and 1 are implemented")
    z, scalar = _as_complex_array(z)
    out = np.empty_like(z)
    flat_z, flat_out = z.reshape(-1), out.reshape(-1)
    for s in range(0, flat_z.size, _CHUNK // 4):
        zz = flat_z[s:s + _CHUNK // 4]
        if zz.size == 0:
            continue
        nodes = int(1.3 * np.max(np.abs(zz))) + 40
        theta = 2.0 * np.pi * np.arange(nodes) / nodes
        phase = np.exp(1j * (zz[:, None] * np.sin(theta)[None, :] - n * theta[None, :]))
        flat_out[s:s + _CHUNK // 4] = phase.mean(axis=1)
    # J_0, J_1 are real on the real axis
    out = np.where(z.imag == 0, out.real + 0j, out)
    return _ret(out, scalar)


def _hankel_upper(n: int, z: np.ndarray) -> np.ndarray:
    # H_n(z) = (2/pi) i^{-(n+1)} K_n(-iz), Im z >= 0
    factor = (2.0 / np.pi) * (1j) ** (-(n + 1))
    return factor * _k_right(n, -1j * z)


def bessel_y(n: int, z):
    """``Y_n(z)`` for ``n in {0, 1}``, principal branch ``-pi < arg z <= pi``."""
    if n not in (0, 1):
        raise ValueError("only orders 0 and 1 are implemented")
    z, scalar = _as_complex_array(z)
    if np.any(z == 0):
        raise DomainError("Y_n is singular at z = 0")
    upper = z.imag >= 0
    zu = np.where(upper, z, np.conj(z))
    y = -1j * (_hankel_upper(n, zu) - bessel_j(n, zu))
    y = np.where(upper, y, np.conj(y))
    y = np.where(z.imag == 0, np.where(z.real > 0, y.real + 0j, y), y)
    return _ret(y, scalar)


def hankel1(n: int, z):
    """Hankel function of the first kind ``H_n^{(1)}(z)``, ``n in {0, 1}``."""
    if n not in (0, 1):
        raise ValueError("only orders 0 and 1 are implemented")
    z, scalar = _as_complex_array(z)
    if np.any(z == 0):
        raise DomainError("H_n is singular at z = 0")
    out = np.empty_like(z)
    upper = z.imag >= 0
    out[upper] = _hankel_upper(n, z[upper])
    lower = ~upper
    if lower.any():
        zl = z[lower]
        out[lower] = bessel_j(n, zl) + 1j * bessel_y(n, zl)
    return _ret(out, scalar)


# ---------------------------------------------------------------------------
# G(z) = H(z) - H(iz)


@dataclass(frozen=True)
class GDerivs:
    """Values of ``G``, ``G'`` and ``G''`` at one point."""

    g: complex
    g1: complex
    g2: complex


def _check_quadrant(z: np.ndarray) -> None:
    if np.any(z == 0):
        raise DomainError("G is evaluated at z = 0")
    tol = 1e-14 * np.abs(z)
    if np.any((z.real < -tol) | (z.imag < -tol)):
        raise DomainError("G is only needed on the closed first quadrant")


def _g_series(z: np.ndarray, minus_one: bool = False):
    """Series for G, G', G'' with the log terms combined.

    G = sum_k (-1)^k a_k + (4i/pi) sum_{k odd} a_k (H_k - L),
    a_k = (z/2)^{2k} / (k!)^2,  L = ln(z/2) + gamma.
    """
    q = z * z / 4.0
    L = np.log(z / 2.0) + EULER_GAMMA
    c = 4j / np.pi
    a = np.ones_like(z)
    g = np.zeros_like(z) if minus_one else np.ones_like(z)
    d1 = np.zeros_like(z)  # z * G'
    d2 = np.zeros_like(z)  # z^2 * G''
    for k in range(1, _SERIES_TERMS):
        a = a * q / (k * k)
        sgn = -1.0 if k % 2 else 1.0
        g += sgn * a
        d1 += sgn * 2 * k * a
        d2 += sgn * 2 * k * (2 * k - 1) * a
        if k % 2:
            hl = _H[k] - L
            g += c * a * hl
            d1 += c * a * (2 * k * hl - 1.0)
            d2 += c * a * (2 * k * (2 * k - 1) * hl - (4 * k - 1))
    return g, d1 / z, d2 / (z * z)


def _g_far(z: np.ndarray):
    k0m = _k_right(0, -1j * z)
    k1m = _k_right(1, -1j * z)
    k0 = _k_right(0, z)
    k1 = _k_right(1, z)
    c = 2j / np.pi
    g = -c * (k0m - k0)
    g1 = (2.0 / np.pi) * k1m - c * k1
    g2 = c * k0m - (2.0 / np.pi) * k1m / z + c * (k0 + k1 / z)
    return g, g1, g2


def g_arrays(z):
    """Vectorised ``(G, G', G'')`` on the closed first quadrant."""
    z = np.asarray(z, dtype=complex)
    _check_quadrant(z)
    g = np.empty_like(z)
    g1 = np.empty_like(z)
    g2 = np.empty_like(z)
    small = np.abs(z) <= SERIES_RADIUS
    if small.any():
        g[small], g1[small], g2[small] = _g_series(z[small])
    big = ~small
    if big.any():
        g[big], g1[big], g2[big] = _g_far(z[big])
    return g, g1, g2


def g_derivs(z: complex) -> GDerivs:
    """``G(z) = H_0(z) - H_0(iz)`` and its first two derivatives."""
    g, g1, g2 = g_arrays(np.asarray(complex(z)))
    return GDerivs(complex(g), complex(g1), complex(g2))


def g_minus_one(z):
    """``G(z) - 1`` without cancellation for small ``|z|``."""
    z, scalar = _as_complex_array(z)
    _check_quadrant(z)
    out = np.empty_like(z)
    small = np.abs(z) <= SERIES_RADIUS
    if small.any():
        out[small] = _g_series(z[small], minus_one=True)[0]
    if (~small).any():
        out[~small] = _g_far(z[~small])[0] - 1.0
    return _ret(out, scalar)


def g_bound_constants(n_radial: int = 200, n_angle: int = 17,
                      r_min: float = 1e-8, r_max: float = 1e3) -> dict:
    """Empirical constants in the small- and large-argument bounds on G.

    Returns the suprema over the closed first quadrant of

    * ``c_g``: ``|G|`` on ``|z| < 1/2``,
    * ``c1_g1``: ``|G'| / (|z| ln(1/|z|))`` on ``|z| < 1/2``,
    * ``c1_g2``: ``|G''| / ln(1/|z|)`` on ``|z| < 1/2``,
    * ``c_far``: ``sqrt|z| (|G| + |G'| + |G''|)`` on ``1/2 < |z| <= r_max``.
    """
    theta = np.linspace(0.0, np.pi / 2, n_angle)
    r_in = np.geomspace(r_min, 0.5, n_radial, endpoint=False)
    r_out = np.geomspace(0.5, r_max, n_radial + 1)[1:]
    z_in = r_in[:, None] * np.exp(1j * theta)[None, :]
    z_out = r_out[:, None] * np.exp(1j * theta)[None, :]
    g, g1, g2 = g_arrays(z_in)
    lg = np.log(1.0 / r_in)[:, None]
    go, g1o, g2o = g_arrays(z_out)
    far = np.sqrt(r_out)[:, None] * (np.abs(go) + np.abs(g1o) + np.abs(g2o))
    return {
        "c_g": float(np.max(np.abs(g))),
        "c1_g1": float(np.max(np.abs(g1) / (r_in[:, None] * lg))),
        "c1_g2": float(np.max(np.abs(g2) / lg)),
        "c_far": float(np.max(far)),
    }
