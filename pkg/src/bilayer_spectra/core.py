"""2x2 complex matrix helpers and the spectral-parameter branch.

Matrices are plain ``numpy`` arrays whose last two axes have shape
``(2, 2)``; every function here broadcasts over leading axes, so a whole
potential field ``(n, n, 2, 2)`` can be passed where a single matrix is
expected.  Complex scalars are Python/NumPy complex numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchPointError

GAMMA0 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)

_RANK_RTOL = 1e-14


def mat2(a11, a12, a21, a22) -> np.ndarray:
    """Build a single 2x2 complex matrix from its entries."""
    return np.array([[a11, a12], [a21, a22]], dtype=complex)


def frobenius_norm(M) -> np.ndarray | float:
    """Pointwise matrix size ``sqrt(sum |M_ij|^2)`` over the last two axes."""
    M = np.asarray(M)
    # hypot reduction: no underflow or overflow from squaring the entries
    mags = np.abs(M).reshape(M.shape[:-2] + (-1,))
    out = np.hypot.reduce(mags, axis=-1)
    return float(out) if out.ndim == 0 else out


def adjoint(M) -> np.ndarray:
    return np.conj(np.swapaxes(np.asarray(M), -1, -2))


def _svd_parts(V):
    V = np.asarray(V, dtype=complex)
    A, s, Bh = np.linalg.svd(V)
    smax = s[..., :1]
    keep = s > _RANK_RTOL * smax
    return A, s, Bh, keep


def matrix_abs_polar(V) -> tuple[np.ndarray, np.ndarray]:
    """Polar factorisation ``V = U W`` with ``W = sqrt(V* V)``.

    ``W`` is Hermitian positive semidefinite.  ``U`` is unitary for invertible
    ``V`` and otherwise the partial isometry that vanishes on ``ker W``, so
    that ``U @ W == V`` holds in every case.
    """
    A, s, Bh, keep = _svd_parts(V)
    B = adjoint(Bh)
    W = (B * s[..., None, :]) @ Bh
    U = (A * keep[..., None, :]) @ Bh
    # symmetrise against roundoff so downstream eigh/sqrt see exact Hermitian input
    W = 0.5 * (W + adjoint(W))
    return W, U


def birman_schwinger_factors(V) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(W^{1/2}, U W^{1/2})`` whose product (second times first) is ``V``."""
    A, s, Bh, keep = _svd_parts(V)
    B = adjoint(Bh)
    root = (B * np.sqrt(s)[..., None, :]) @ Bh
    root = 0.5 * (root + adjoint(root))
    U = (A * keep[..., None, :]) @ Bh
    return root, U @ root


def trace_abs(V) -> np.ndarray | float:
    """``tr sqrt(V* V)``, i.e. the sum of the two singular values.

    For 2x2 matrices ``(s1 + s2)^2 = |V|_F^2 + 2 |det V|``.
    """
    V = np.asarray(V, dtype=complex)
    det = V[..., 0, 0] * V[..., 1, 1] - V[..., 0, 1] * V[..., 1, 0]
    fro2 = np.sum(np.abs(V) ** 2, axis=(-2, -1))
    out = np.sqrt(fro2 + 2.0 * np.abs(det))
    return float(out) if out.ndim == 0 else out


def mu_upper(k, m):
    """Vectorised upper branch of ``sqrt(k^2 - m^2)`` without branch-point checks.

    ``Im mu >= 0``; on the real axis ``Re mu >= 0``.
    """
    k = np.asarray(k, dtype=complex)
    mu = np.sqrt((k - m) * (k + m))
    flip = (mu.imag < 0) | ((mu.imag == 0) & (mu.real < 0))
    return np.where(flip, -mu, mu)


def mu_branch(k: complex, m: float) -> complex:
    """Upper-half-plane solution ``mu`` of ``mu^2 = k^2 - m^2``.

    Raises :class:`BranchPointError` at ``k = +-m``.
    """
    k = complex(k)
    if abs((k - m) * (k + m)) < 1e-300:
        raise BranchPointError(f"k = {k!r} is a branch point for m = {m!r}")
    return complex(mu_upper(k, m))


def on_free_spectrum(k, m, atol: float = 0.0):
    """True where ``k`` lies on ``(-inf, -m] U [m, inf)``."""
    k = np.asarray(k, dtype=complex)
    return (np.abs(k.imag) <= atol) & (np.abs(k.real) >= m)


@dataclass(frozen=True)
class SpectralPoint:
    """A spectral parameter ``k`` together with mass ``m`` and its branch ``mu``."""

    k: complex
    m: float
    mu: complex

    @classmethod
    def at(cls, k: complex, m: float) -> "SpectralPoint":
        if m < 0:
            raise ValueError("mass must be non-negative")
        return cls(complex(k), float(m), mu_branch(k, m))

    @property
    def bracket(self) -> float:
        """``sqrt|(k-m)/(k+m)| + sqrt|(k+m)/(k-m)| + 1``."""
        ratio = abs((self.k - self.m) / (self.k + self.m))
        return float(np.sqrt(ratio) + 1.0 / np.sqrt(ratio) + 1.0)
