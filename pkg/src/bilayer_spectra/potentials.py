"""Matrix-valued potentials on a square torus and the functionals of ``|V|``.

Samples are stored as an ``(n, n, 2, 2)`` complex array indexed
``[i2, i1, a, b]`` (x2-major), with ``x_j = -L + j h`` and ``h = 2L / n``.

The two convolution-type functionals (disk integral and logarithmic
kernel) are computed by product integration in Fourier space: ``|V|`` is
zero-padded to a torus of side ``6L`` and multiplied by the exact Fourier
transform of the truncated kernel.  For smooth decaying fields this is
spectrally accurate, including the logarithmic self-interaction.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import j0, j1

from .core import adjoint, frobenius_norm, trace_abs
from .errors import TailError

TAIL_RTOL = 1e-10
_PAD = 3


@dataclass(frozen=True)
class GridSpec:
    """``n`` points per side on ``[-L, L)^2``."""

    n: int
    l: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not self.l > 0:
            raise ValueError(f"L must be positive, got {self.l!r}")
        if not self.h < 1:
            raise ValueError(f"grid spacing h = {self.h} must be below 1")

    @property
    def h(self) -> float:
        return 2.0 * self.l / self.n

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def coords(self) -> np.ndarray:
        return -self.l + self.h * np.arange(self.n)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X1, X2)`` arrays indexed ``[i2, i1]``."""
        x = self.coords()
        return np.meshgrid(x, x)

    def frequencies(self) -> np.ndarray:
        """Angular frequencies ``(pi / L) * {-n/2, ..., n/2 - 1}`` in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    def to_dict(self) -> dict:
        return {"n": int(self.n), "l": float(self.l)}


@dataclass(frozen=True)
class PotentialField:
    grid: GridSpec
    samples: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        n = self.grid.n
        if s.shape != (n, n, 2, 2):
            raise ValueError(f"samples must have shape {(n, n, 2, 2)}, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("potential samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def abs(self) -> np.ndarray:
        """Pointwise Frobenius size ``|V(x)|``."""
        return frobenius_norm(self.samples)

    def scaled(self, t: float) -> "PotentialField":
        meta = dict(self.metadata)
        meta["scale"] = meta.get("scale", 1.0) * t
        return PotentialField(self.grid, self.samples * t, meta)

    def is_zero(self) -> bool:
        return not np.any(self.samples)

    def is_i_times_square(self, rtol: float = 1e-12) -> bool:
        """True when ``-iV`` is Hermitian positive semidefinite at every point, i.e.
        ``V = i W^2`` for a Hermitian ``W``."""
        a = -1j * self.samples
        tol = rtol * max(float(np.abs(a).max()), 1e-300)
        if np.abs(a - np.conj(np.swapaxes(a, -1, -2))).max() > tol:
            return False
        herm = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
        return bool(np.linalg.eigvalsh(herm).min() >= -tol)

    def tail_ratio(self) -> float:
        """Edge-ring maximum over global maximum; 0 when the grid has no interior."""
        mag = self.abs()
        top = mag.max()
        if top == 0 or self.grid.n <= 2:
            return 0.0
        ring = np.concatenate([mag[0], mag[-1], mag[:, 0], mag[:, -1]])
        return float(ring.max() / top)


def zero_potential(grid: GridSpec) -> PotentialField:
    return PotentialField(grid, np.zeros((grid.n, grid.n, 2, 2)), {"builder": {"kind": "zero"}})


# ---------------------------------------------------------------------------
# builders


def parse_complex(value) -> complex:
    """Accept a number, a ``[re, im]`` pair or a string such as ``"1-2j"``."""
    if isinstance(value, (list, tuple)):
        re, im = value
        return complex(float(re), float(im))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    return complex(value)


def parse_matrix(value) -> np.ndarray:
    if isinstance(value, (int, float, complex, str)):
        return parse_complex(value) * np.eye(2, dtype=complex)
    rows = [[parse_complex(e) for e in row] for row in value]
    out = np.array(rows, dtype=complex)
    if out.shape != (2, 2):
        raise ValueError("amplitude must be a 2x2 matrix")
    return out


def _gaussian(grid: GridSpec, amplitude, center=(0.0, 0.0), width=1.0) -> np.ndarray:
    X1, X2 = grid.mesh()
    c1, c2 = center
    prof = np.exp(-((X1 - c1) ** 2 + (X2 - c2) ** 2) / width ** 2)
    return prof[..., None, None] * parse_matrix(amplitude)


def _hermitian(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + adjoint(A))


def _random_gaussian(grid: GridSpec, spec: dict) -> np.ndarray:
    rng = np.random.default_rng(spec.get("seed", 0))
    lo, hi = spec.get("width_range", [0.5, 1.2])
    width = rng.uniform(lo, hi)
    rad = spec.get("center_radius", 0.5)
    ang = rng.uniform(0, 2 * np.pi)
    rr = rad * np.sqrt(rng.uniform())
    center = (rr * np.cos(ang), rr * np.sin(ang))
    amp = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    if spec.get("hermitian") or spec.get("i_times_square"):
        amp = _hermitian(amp)
    samples = _gaussian(grid, amp, center, width)
    if spec.get("i_times_square"):
        samples = 1j * samples @ samples
    return samples


def _band_limited(grid: GridSpec, spec: dict) -> np.ndarray:
    rng = np.random.default_rng(spec.get("seed", 0))
    n = grid.n
    xi = grid.frequencies()
    K1, K2 = np.meshgrid(xi, xi)
    band = np.hypot(K1, K2) <= spec.get("cutoff", 1.0)
    coeff = rng.normal(size=(n, n, 2, 2)) + 1j * rng.normal(size=(n, n, 2, 2))
    coeff *= band[..., None, None]
    smooth = np.fft.ifft2(coeff, axes=(0, 1))
    X1, X2 = grid.mesh()
    env = np.exp(-(X1 ** 2 + X2 ** 2) / spec.get("envelope_width", 1.0) ** 2)
    samples = smooth * env[..., None, None]
    if spec.get("hermitian") or spec.get("i_times_square"):
        samples = _hermitian(samples)
    if spec.get("i_times_square"):
        samples = 1j * samples @ samples
    top = frobenius_norm(samples).max()
    if top > 0:
        samples = samples * (spec.get("amplitude", 1.0) / top)
    return samples


def _normalise(field_: PotentialField, spec: dict | None) -> PotentialField:
    if not spec:
        return field_
    kind = spec.get("functional", "l1")
    target = float(spec["value"])
    if kind == "l1":
        current = lp_integral(field_, 1.0)
    elif kind == "trace":
        current = trace_abs_integral(field_)
    elif kind == "lp":
        current = lp_integral(field_, float(spec["p"])) ** (1.0 / float(spec["p"]))
    elif kind == "max":
        current = float(field_.abs().max())
    else:
        raise ValueError(f"unknown normalisation functional {kind!r}")
    if current == 0:
        return field_
    return PotentialField(field_.grid, field_.samples * (target / current), field_.metadata)


def build_potential(spec: dict, grid: GridSpec) -> PotentialField:
    """Sample a potential described by a builder dictionary.

    Builder kinds: ``zero``, ``gaussian`` (amplitude, center, width),
    ``multi_gaussian`` (components), ``random_gaussian`` (seed, width_range,
    center_radius, hermitian, i_times_square), ``band_limited`` (seed, cutoff,
    amplitude, envelope_width, hermitian, i_times_square) and ``file`` (path).
    Any builder accepts ``normalize = {"functional": "l1" | "trace" | "lp" |
    "max", "value": ..., "p": ...}`` and an overall complex ``scale``.

    Raises :class:`TailError` when the field does not decay to ``1e-10`` of
    its maximum on the outermost ring of the grid.  Grids with ``n <= 2`` have
    no interior and are exempt.
    """
    kind = spec.get("kind")
    if kind == "file":
        loaded = read_potential(spec["path"])
        if loaded.grid != grid:
            raise ValueError(f"file grid {loaded.grid} does not match requested {grid}")
        samples = np.array(loaded.samples)
    elif kind == "zero":
        samples = np.zeros((grid.n, grid.n, 2, 2), dtype=complex)
    elif kind == "gaussian":
        samples = _gaussian(grid, spec.get("amplitude", 1.0), spec.get("center", (0.0, 0.0)),
                            spec.get("width", 1.0))
    elif kind == "multi_gaussian":
        samples = np.zeros((grid.n, grid.n, 2, 2), dtype=complex)
        for comp in spec["components"]:
            samples = samples + _gaussian(grid, comp.get("amplitude", 1.0),
                                          comp.get("center", (0.0, 0.0)), comp.get("width", 1.0))
    elif kind == "random_gaussian":
        samples = _random_gaussian(grid, spec)
    elif kind == "band_limited":
        samples = _band_limited(grid, spec)
    else:
        raise ValueError(f"unknown potential builder {kind!r}")
    if "scale" in spec:
        samples = samples * parse_complex(spec["scale"])
    out = PotentialField(grid, samples, {"builder": dict(spec)})
    out = _normalise(out, spec.get("normalize"))
    ratio = out.tail_ratio()
    if ratio > TAIL_RTOL:
        raise TailError(f"potential does not decay on the grid edge (edge/max = {ratio:.3e})")
    return out


# ---------------------------------------------------------------------------
# file formats


def write_potential(path, field_: PotentialField) -> None:
    """One JSON header line, then little-endian complex128 samples (x2-major)."""
    header = {"n": field_.grid.n, "l": field_.grid.l,
              "builder": field_.metadata.get("builder", {})}
    payload = np.ascontiguousarray(field_.samples, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(payload)


def read_potential(path) -> PotentialField:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        payload = fh.read()
    grid = GridSpec(int(header["n"]), float(header["l"]))
    expected = grid.n * grid.n * 4 * 16
    if len(payload) != expected:
        raise ValueError(f"expected {expected} bytes of samples, found {len(payload)}")
    samples = np.frombuffer(payload, dtype="<c16").reshape(grid.n, grid.n, 2, 2)
    return PotentialField(grid, samples.astype(complex), {"builder": header.get("builder", {}),
                                                          "source": str(path)})


def abs_csv(field_: PotentialField) -> str:
    """CSV of ``|V|`` with columns ``x1, x2, abs_v``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x1", "x2", "abs_v"])
    X1, X2 = field_.grid.mesh()
    for a, b, v in zip(X1.ravel(), X2.ravel(), field_.abs().ravel()):
        writer.writerow([repr(float(a)), repr(float(b)), repr(float(v))])
    return buf.getvalue()


def write_abs_csv(path, field_: PotentialField) -> None:
    Path(path).write_text(abs_csv(field_))


# ---------------------------------------------------------------------------
# functionals


def lp_integral(V: PotentialField, p: float) -> float:
    """``int |V|^p dx`` with equal torus weights."""
    if p < 1:
        raise ValueError("p must be at least 1")
    return float(V.grid.cell_area * np.sum(V.abs() ** p))


def trace_abs_integral(V: PotentialField) -> float:
    """``int tr sqrt(V* V) dx``."""
    return float(V.grid.cell_area * np.sum(trace_abs(V.samples)))


class _PaddedConvolver:
    """Convolves ``|V|`` with radial kernels given by their Fourier transforms."""

    def __init__(self, V: PotentialField):
        g = V.grid
        self.grid = g
        n = g.n
        self.big = _PAD * n
        f = np.zeros((self.big, self.big))
        self.offset = (self.big - n) // 2
        o = self.offset
        f[o:o + n, o:o + n] = V.abs()
        self.spectrum = np.fft.fft2(f)
        xi = 2.0 * np.pi * np.fft.fftfreq(self.big, d=g.h)
        K1, K2 = np.meshgrid(xi, xi)
        self.rho = np.hypot(K1, K2)
        self.total = float(g.cell_area * f.sum())

    def sup(self, kernel_hat: np.ndarray) -> tuple[float, tuple[int, int]]:
        conv = np.fft.ifft2(self.spectrum * kernel_hat).real
        o, n = self.offset, self.grid.n
        inner = conv[o:o + n, o:o + n]
        idx = np.unravel_index(np.argmax(inner), inner.shape)
        return float(inner[idx]), (int(idx[0]), int(idx[1]))

    @property
    def diameter(self) -> float:
        return 2.0 * np.sqrt(2.0) * self.grid.l


def _disk_hat(rho: np.ndarray, s: float) -> np.ndarray:
    out = np.empty_like(rho)
    zero = rho == 0
    out[zero] = np.pi * s * s
    r = rho[~zero]
    out[~zero] = 2.0 * np.pi * s * j1(r * s) / r
    return out


def _log_kernel_hat(rho: np.ndarray, R: float) -> np.ndarray:
    """Fourier transform of ``(1 + |ln r|) 1_{r < R}``."""
    out = np.empty_like(rho)
    zero = rho == 0

    def F0(a):
        return a * a * np.log(a) / 2.0 - a * a / 4.0

    def F(a, r):
        return a * np.log(a) * j1(r * a) / r - (1.0 - j0(r * a)) / (r * r)

    if R > 1.0:
        out[zero] = 2.0 * np.pi * (R * R / 2.0 + F0(R) - 2.0 * F0(1.0))
        r = rho[~zero]
        out[~zero] = 2.0 * np.pi * (R * j1(r * R) / r + F(R, r) - 2.0 * F(1.0, r))
    else:
        out[zero] = 2.0 * np.pi * (R * R / 2.0 - F0(R))
        r = rho[~zero]
        out[~zero] = 2.0 * np.pi * (R * j1(r * R) / r - F(R, r))
    return out


class LocalIntegrator:
    """``s -> sup_x int_{|x-y|<s} |V(y)| dy`` with a reusable FFT of ``|V|``."""

    def __init__(self, V: PotentialField):
        self._conv = _PaddedConvolver(V)

    def __call__(self, s: float) -> float:
        if not s > 0:
            raise ValueError("disk radius must be positive")
        c = self._conv
        if c.total == 0:
            return 0.0
        if s >= c.diameter:
            return c.total
        return c.sup(_disk_hat(c.rho, s))[0]


def local_sup_integral(V: PotentialField, s: float) -> float:
    """``sup_x int_{|x-y| < s} |V(y)| dy`` over grid points ``x``."""
    return LocalIntegrator(V)(s)


def log_conv_sup(V: PotentialField, return_argmax: bool = False):
    """``sup_x int (1 + ln+(1/|x-y|)) |V(y)| dy`` over grid points ``x``.

    The logarithm is kept only where it is singular, ``|x - y| < 1``; the
    untruncated weight ``1 + |ln|x-y||`` grows at infinity, so its supremum
    over the plane is infinite for every nonzero ``V``.
    """
    c = _PaddedConvolver(V)
    if c.total == 0:
        return (0.0, (0, 0)) if return_argmax else 0.0
    # (1 - ln r) 1_{r<1} minus 1_{r<1} leaves -ln r on the unit disk
    hat = _log_kernel_hat(c.rho, 1.0) - _disk_hat(c.rho, 1.0)
    val, idx = c.sup(hat)
    val += c.total
    return (val, idx) if return_argmax else val
