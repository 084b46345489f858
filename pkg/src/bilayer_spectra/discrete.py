"""Fourier-spectral discretisation of ``D_m + V`` on the torus ``[-L, L)^2``.

Fields are ``(n, n, 2)`` complex arrays indexed ``[i2, i1, a]``; the flat
vector used by dense matrices is ``u.reshape(-1)`` (site-major, component
minor).  With ``d_j -> i xi_j`` the operators ``4 d_zbar^2`` and ``4 d_z^2``
become multiplication by ``-(xi1 - i xi2)^2`` and ``-(xi1 + i xi2)^2``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, linalg

from .core import GAMMA0, birman_schwinger_factors, frobenius_norm, matrix_abs_polar, mu_upper
from .errors import ConvergenceError, DomainError, NearSpectrumError, SizeError
from .potentials import GridSpec, PotentialField

DENSE_MAX_N = 48
SPECTRUM_MARGIN = 1e-10
SUPPORT_RTOL = 1e-12
OUTLIER_FACTOR = 10.0


# ---------------------------------------------------------------------------
# symbol


@dataclass(frozen=True)
class SymbolPoint:
    xi1: float
    xi2: float
    d0: np.ndarray
    dm: np.ndarray


def symbol_entries(xi1, xi2):
    """Multipliers of ``4 d_zbar^2`` and ``4 d_z^2``."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    return -(xi1 - 1j * xi2) ** 2, -(xi1 + 1j * xi2) ** 2


def symbol_at(xi1: float, xi2: float, m: float) -> SymbolPoint:
    up, lo = symbol_entries(xi1, xi2)
    d0 = np.array([[0.0, up], [lo, 0.0]], dtype=complex)
    return SymbolPoint(float(xi1), float(xi2), d0, d0 + m * GAMMA0)


def symbol_field(xi1, xi2, m: float) -> np.ndarray:
    """Full symbol ``dm`` broadcast over arrays of frequencies, shape ``(..., 2, 2)``."""
    up, lo = symbol_entries(xi1, xi2)
    out = np.zeros(up.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = m
    out[..., 1, 1] = -m
    out[..., 0, 1] = up
    out[..., 1, 0] = lo
    return out


def split_resolvent_symbol(d0: np.ndarray, xi_abs2, k: complex, m: float) -> np.ndarray:
    """``(m g0 + k - mu)(|xi|^4 - mu^2)^{-1} + (d0 - mu)^{-1}`` (the mass split)."""
    mu = mu_upper(k, m)
    eye = np.eye(2)
    scal = 1.0 / (np.asarray(xi_abs2) ** 2 - mu ** 2)
    first = (m * GAMMA0 + (k - mu) * eye) * scal[..., None, None]
    return first + np.linalg.inv(d0 - mu * eye)


def biharmonic_form_symbol(d0: np.ndarray, xi_abs2, mu: complex) -> np.ndarray:
    """``(d0 + mu)(|xi|^4 - mu^2)^{-1}``, equal to ``(d0 - mu)^{-1}``."""
    scal = 1.0 / (np.asarray(xi_abs2) ** 2 - mu ** 2)
    return (d0 + mu * np.eye(2)) * scal[..., None, None]


def quarter_constant(im_k: float) -> float:
    """``(2 pi)^{-2} (2 pi) (1/2) int_R Im k / (t^2 + Im k^2) dt``, which is 1/4."""
    if not im_k > 0:
        raise DomainError("Im k must be positive")
    f = lambda t: im_k / (t * t + im_k * im_k)
    val, _ = integrate.quad(f, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13)
    return val * 0.5 * 2.0 * np.pi / (2.0 * np.pi) ** 2


# ---------------------------------------------------------------------------
# operator


class DiscreteOperator:
    """``D_m + V`` on the frequency lattice ``(pi / L) {-n/2, ..., n/2 - 1}^2``."""

    def __init__(self, grid: GridSpec, m: float = 0.0, potential: PotentialField | None = None):
        if m < 0:
            raise ValueError("mass must be non-negative")
        if potential is not None and potential.grid != grid:
            raise ValueError("potential grid does not match operator grid")
        self.grid = grid
        self.m = float(m)
        self.potential = potential
        xi = grid.frequencies()
        self.xi1, self.xi2 = np.meshgrid(xi, xi)
        self.up, self.lo = symbol_entries(self.xi1, self.xi2)
        self.xi_abs2 = self.xi1 ** 2 + self.xi2 ** 2
        self.band = np.sqrt(self.xi_abs2 ** 2 + self.m ** 2)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, 2)

    def with_potential(self, potential: PotentialField | None) -> "DiscreteOperator":
        return DiscreteOperator(self.grid, self.m, potential)

    def free_eigenvalues(self) -> np.ndarray:
        return np.concatenate([self.band.ravel(), -self.band.ravel()])

    def spectrum_margin(self, k: complex) -> float:
        k = complex(k)
        return float(min(np.min(np.abs(self.band - k)), np.min(np.abs(-self.band - k))))

    def check_resolvent_point(self, k: complex) -> None:
        margin = self.spectrum_margin(k)
        if margin <= SPECTRUM_MARGIN:
            raise NearSpectrumError(f"k = {k} lies within {margin:.2e} of the discrete free spectrum")

    # -- application ------------------------------------------------------

    def _to_fourier(self, u):
        return np.fft.fft2(u, axes=(-3, -2))

    def _from_fourier(self, uh):
        return np.fft.ifft2(uh, axes=(-3, -2))

    def apply_free(self, u: np.ndarray) -> np.ndarray:
        uh = self._to_fourier(np.asarray(u, dtype=complex))
        out = np.empty_like(uh)
        out[..., 0] = self.m * uh[..., 0] + self.up * uh[..., 1]
        out[..., 1] = self.lo * uh[..., 0] - self.m * uh[..., 1]
        return self._from_fourier(out)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """``(D_m + V) u`` for a field or a stack of fields ``(..., n, n, 2)``."""
        out = self.apply_free(u)
        if self.potential is not None:
            out = out + np.einsum("ijab,...ijb->...ija", self.potential.samples, u)
        return out

    def apply_free_resolvent(self, k: complex, f: np.ndarray) -> np.ndarray:
        """``(D_m - k)^{-1} f`` through the exact per-frequency 2x2 inverse."""
        self.check_resolvent_point(k)
        return self._resolvent(complex(k), f)

    def _resolvent(self, k: complex, f):
        fh = self._to_fourier(np.asarray(f, dtype=complex))
        det = k * k - self.m ** 2 - self.xi_abs2 ** 2
        out = np.empty_like(fh)
        out[..., 0] = ((-self.m - k) * fh[..., 0] - self.up * fh[..., 1]) / det
        out[..., 1] = (-self.lo * fh[..., 0] + (self.m - k) * fh[..., 1]) / det
        return self._from_fourier(out)

    # -- dense ------------------------------------------------------------

    def _dft_matrices(self):
        n = self.n
        j = np.arange(n)
        F1 = np.exp(-2j * np.pi * np.outer(j, j) / n)
        F = np.kron(F1, F1)
        return F, F.conj().T / (n * n)

    def dense_free(self) -> np.ndarray:
        """Matrix of ``D_m`` built by conjugating the symbol with the 2D DFT."""
        n = self.n
        if n > DENSE_MAX_N:
            raise SizeError(f"dense assembly limited to n <= {DENSE_MAX_N}, got {n}")
        F, Finv = self._dft_matrices()
        sym = symbol_field(self.xi1, self.xi2, self.m).reshape(n * n, 2, 2)
        M = np.zeros((n * n, 2, n * n, 2), dtype=complex)
        for a in range(2):
            for b in range(2):
                d = sym[:, a, b]
                if np.any(d):
                    M[:, a, :, b] = (Finv * d[None, :]) @ F
        return M.reshape(2 * n * n, 2 * n * n)

    def assemble_dense(self) -> np.ndarray:
        M = self.dense_free()
        if self.potential is not None:
            n = self.n
            M4 = M.reshape(n * n, 2, n * n, 2)
            sites = np.arange(n * n)
            M4[sites, :, sites, :] += self.potential.samples.reshape(n * n, 2, 2)
        return M


def assemble_dense(op: DiscreteOperator) -> np.ndarray:
    return op.assemble_dense()


def apply_free_resolvent(op: DiscreteOperator, k: complex, f: np.ndarray) -> np.ndarray:
    return op.apply_free_resolvent(k, f)


# ---------------------------------------------------------------------------
# norms by subspace iteration


def _top_eigenvalue_psd(matvec, shape, rng, tol=1e-6, maxiter=500, block=6):
    """Largest eigenvalue of a Hermitian PSD operator by block power iteration.

    Stops when the top Rayleigh-Ritz value changes by less than ``tol``
    (relative) between sweeps.  Returns ``(value, iterations)``.
    """
    size = int(np.prod(shape))
    block = min(block, size)
    Q = rng.normal(size=(block, size)) + 1j * rng.normal(size=(block, size))
    Q = np.linalg.qr(Q.T)[0].T
    prev = None
    history = []
    for it in range(1, maxiter + 1):
        Y = matvec(Q.reshape((block,) + tuple(shape))).reshape(block, size)
        H = Q.conj() @ Y.T
        H = 0.5 * (H + H.conj().T)
        top = float(np.linalg.eigvalsh(H)[-1])
        history.append(top)
        if top <= 0.0 and not np.any(Y):
            return 0.0, it
        if prev is not None and abs(top - prev) <= tol * max(abs(top), 1e-300):
            return max(top, 0.0), it
        prev = top
        Q = np.linalg.qr(Y.T)[0].T
    raise ConvergenceError(
        f"power iteration did not settle in {maxiter} sweeps; last estimates "
        f"[{min(history[-5:]):.8g}, {max(history[-5:]):.8g}]")


def _bs_parts(op: DiscreteOperator):
    if op.potential is None:
        return None
    W1, W2 = birman_schwinger_factors(op.potential.samples)
    return W1, W2


def _pointwise(M, u):
    return np.einsum("ijab,...ijb->...ija", M, u)


def _pointwise_adj(M, u):
    return np.einsum("ijba,...ijb->...ija", M.conj(), u)


def bs_norm(op: DiscreteOperator, k: complex, seed: int = 0, tol: float = 1e-6,
            maxiter: int = 500) -> float:
    """``||W^{1/2} (D_m - k)^{-1} U W^{1/2}||`` by power iteration on ``X* X``."""
    op.check_resolvent_point(k)
    parts = _bs_parts(op)
    if parts is None or op.potential.is_zero():
        return 0.0
    W1, W2 = parts
    k = complex(k)

    def xsx(v):
        x = _pointwise(W1, op._resolvent(k, _pointwise(W2, v)))
        return _pointwise_adj(W2, op._resolvent(np.conj(k), _pointwise_adj(W1, x)))

    val, _ = _top_eigenvalue_psd(xsx, op.shape, np.random.default_rng(seed), tol, maxiter)
    return float(np.sqrt(val))


def proof_norm(op: DiscreteOperator, k: complex, seed: int = 0, tol: float = 1e-6,
               maxiter: int = 500) -> float:
    """Diagnostic ``||W (D_m - k)^{-1} W||`` with ``W = sqrt(V* V)``."""
    op.check_resolvent_point(k)
    if op.potential is None or op.potential.is_zero():
        return 0.0
    W, _ = matrix_abs_polar(op.potential.samples)
    k = complex(k)

    def tst(v):
        x = _pointwise(W, op._resolvent(k, _pointwise(W, v)))
        return _pointwise(W, op._resolvent(np.conj(k), _pointwise(W, x)))

    val, _ = _top_eigenvalue_psd(tst, op.shape, np.random.default_rng(seed), tol, maxiter)
    return float(np.sqrt(val))


def bs_matrix(op: DiscreteOperator, k: complex) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``X(k)`` restricted to the numerical support of ``W``.

    Returns ``(X, support)`` with ``support`` a boolean ``(n, n)`` mask.
    """
    op.check_resolvent_point(k)
    n = op.n
    W1, W2 = birman_schwinger_factors(op.potential.samples)
    size = frobenius_norm(W1)
    support = size > SUPPORT_RTOL * size.max()
    sites = np.flatnonzero(support.ravel())
    dim = 2 * sites.size
    if dim > 2 * DENSE_MAX_N ** 2:
        raise SizeError(f"support of dimension {dim} exceeds the dense guard")
    # the free resolvent is translation invariant: one solve per component
    # gives its full kernel, gathered below by circulant indexing
    delta = np.zeros((2, n, n, 2), dtype=complex)
    delta[0, 0, 0, 0] = delta[1, 0, 0, 1] = 1.0
    ker = op._resolvent(complex(k), delta)            # [b, i2, i1, a]
    ker = np.moveaxis(ker, 0, -1)                     # [i2, i1, a, b]
    i2, i1 = np.divmod(sites, n)
    R = ker[(i2[:, None] - i2[None, :]) % n, (i1[:, None] - i1[None, :]) % n]
    w1 = W1.reshape(n * n, 2, 2)[sites]
    w2 = W2.reshape(n * n, 2, 2)[sites]
    X = w1[:, None] @ R @ w2[None, :]
    return np.ascontiguousarray(X.transpose(0, 2, 1, 3)).reshape(dim, dim), support


def bs_residual(op: DiscreteOperator, k: complex) -> float:
    """Smallest singular value of ``I + X(k)`` on the support of ``W``."""
    op.check_resolvent_point(k)
    if op.potential is None or op.potential.is_zero():
        return 1.0
    X, _ = bs_matrix(op, k)
    A = np.eye(X.shape[0]) + X
    lu = linalg.lu_factor(A, check_finite=False)
    # inverse iteration on (A* A)^{-1}
    rng = np.random.default_rng(0)
    v = rng.normal(size=A.shape[0]) + 1j * rng.normal(size=A.shape[0])
    v /= np.linalg.norm(v)
    est = None
    for _ in range(200):
        y = linalg.lu_solve(lu, v, trans=2, check_finite=False)
        z = linalg.lu_solve(lu, y, check_finite=False)
        nz = np.linalg.norm(z)
        new = 1.0 / np.sqrt(nz)
        v = z / nz
        if est is not None and abs(new - est) <= 1e-10 * max(est, 1e-300):
            est = new
            break
        est = new
    # one direct evaluation sharpens the estimate
    return float(min(est, np.linalg.norm(A @ v)))


def im_resolvent_norm(op: DiscreteOperator, k: complex, weight: PotentialField,
                      seed: int = 0, tol: float = 1e-6, maxiter: int = 500) -> float:
    """``||W Im(D_0 - k)^{-1} W||`` for a Hermitian weight field ``W`` and ``Im k > 0``."""
    k = complex(k)
    if op.m != 0:
        raise DomainError("the Im-resolvent bound is stated for m = 0")
    if not k.imag > 0:
        raise DomainError("Im k must be positive")
    op.check_resolvent_point(k)
    W = weight.samples
    if not np.any(W):
        return 0.0

    def apply(v):
        x = _pointwise(W, v)
        im = (op._resolvent(k, x) - op._resolvent(np.conj(k), x)) / 2j
        return _pointwise(W, im)

    val, _ = _top_eigenvalue_psd(apply, op.shape, np.random.default_rng(seed), tol, maxiter)
    return val


# ---------------------------------------------------------------------------
# spectrum


@lru_cache(maxsize=32)
def _free_noise_floor(n: int, l: float, m: float) -> float:
    op = DiscreteOperator(GridSpec(n, l), m)
    return float(np.max(np.abs(np.linalg.eigvals(op.dense_free()).imag)))


def outlier_threshold(grid: GridSpec, m: float) -> float:
    """``10 * (max |Im| of the V = 0 spectrum + n^-2)``."""
    floor = _free_noise_floor(grid.n, float(grid.l), float(m))
    return OUTLIER_FACTOR * (floor + grid.n ** -2.0)


@dataclass
class EigReport:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    classes: list
    threshold: float
    bs_norm: np.ndarray = field(default=None)
    bs_residual: np.ndarray = field(default=None)

    @property
    def outlier_mask(self) -> np.ndarray:
        return np.array([c == "complex-outlier" for c in self.classes], dtype=bool)

    @property
    def outliers(self) -> np.ndarray:
        return self.eigenvalues[self.outlier_mask]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["re_k", "im_k", "residual", "class", "bs_norm", "bs_residual"])
        for i, k in enumerate(self.eigenvalues):
            row = [repr(float(k.real)), repr(float(k.imag)), repr(float(self.residuals[i])),
                   self.classes[i]]
            if self.classes[i] == "complex-outlier" and self.bs_norm is not None:
                row += [repr(float(self.bs_norm[i])), repr(float(self.bs_residual[i]))]
            else:
                row += ["", ""]
            writer.writerow(row)
        return buf.getvalue()


def complex_spectrum(op: DiscreteOperator, diagnostics: bool = True) -> EigReport:
    """Dense eigen-decomposition with residuals, classification and BS diagnostics."""
    M = op.assemble_dense()
    vals, vecs = np.linalg.eig(M)
    res = np.linalg.norm(M @ vecs - vecs * vals[None, :], axis=0) / np.linalg.norm(vecs, axis=0)
    order = np.lexsort((vals.imag, vals.real))
    vals, res = vals[order], res[order]
    thr = outlier_threshold(op.grid, op.m)
    classes = ["complex-outlier" if abs(v.imag) > thr else "real-band" for v in vals]
    report = EigReport(vals, res, classes, thr)
    if diagnostics:
        bn = np.full(vals.size, np.nan)
        br = np.full(vals.size, np.nan)
        for i in np.flatnonzero(report.outlier_mask):
            bn[i] = bs_norm(op, vals[i])
            br[i] = bs_residual(op, vals[i])
        report.bs_norm, report.bs_residual = bn, br
    return report
