"""Left-hand sides of the enclosure inequalities and complex-plane region scans.

A spectral point ``k`` off ``sigma(D_m)`` can be an eigenvalue only where the
relevant left-hand side is at least 1; everywhere else it is excluded.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import SpectralPoint, mu_upper
from .errors import BranchPointError, DomainError
from .potentials import LocalIntegrator, PotentialField, log_conv_sup, lp_integral, trace_abs_integral

THEOREMS = ("thm11", "thm12", "thm31")
LHS_CLIP = 1e300
_MU_QUANT = 1e-3  # log-step used to share disk integrals between nearby |mu|


@dataclass(frozen=True)
class TheoremConstants:
    c_p: float = 1.0
    c_12: float = 1.0
    c_31: float = 1.0
    provenance: str = "user"

    def __post_init__(self):
        for name in ("c_p", "c_12", "c_31"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if self.provenance not in ("user", "calibrated"):
            raise ValueError("provenance must be 'user' or 'calibrated'")

    def to_dict(self) -> dict:
        return {"c_p": self.c_p, "c_12": self.c_12, "c_31": self.c_31, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d: dict) -> "TheoremConstants":
        return cls(float(d.get("c_p", 1.0)), float(d.get("c_12", 1.0)), float(d.get("c_31", 1.0)),
                   d.get("provenance", "user"))


# ---------------------------------------------------------------------------
# pointwise left-hand sides (vectorised helpers first)


def _bracket(k, m):
    """``sqrt|(k-m)/(k+m)| + sqrt|(k+m)/(k-m)| + 1`` written symmetrically in the two moduli."""
    a = np.abs(k - m)
    b = np.abs(k + m)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (a + b) / np.sqrt(a * b) + 1.0


def _check_p(p):
    if not 1.0 < p < 4.0 / 3.0:
        raise DomainError(f"p must lie in (1, 4/3), got {p}")


def thm11_lhs(k, m, p, c_p, vp_integral):
    """Vectorised ``C_p I / |mu|^{p-1} * bracket^p`` (``inf`` at branch points)."""
    k = np.asarray(k, dtype=complex)
    if vp_integral == 0:
        return np.zeros(k.shape)
    mu = np.abs(mu_upper(k, m))
    with np.errstate(divide="ignore", invalid="ignore"):
        return c_p * vp_integral * _bracket(k, m) ** p / mu ** (p - 1.0)


def thm12_lhs(k, m, c, f_local, f_log, f_l1):
    """Vectorised ``C(|ln|mu|| F_loc + F_log) + C F_1 bracket``; zero functionals give 0."""
    k = np.asarray(k, dtype=complex)
    mu = np.abs(mu_upper(k, m))
    f_local = np.broadcast_to(np.asarray(f_local, dtype=float), k.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_term = np.where(f_local == 0, 0.0, np.abs(np.log(mu)) * f_local)
        l1_term = 0.0 if f_l1 == 0 else f_l1 * _bracket(k, m)
    return c * (log_term + f_log) + c * l1_term


def _upper(k):
    k = np.asarray(k, dtype=complex)
    return np.where(k.imag < 0, np.conj(k), k)


def thm31_lhs(k, m, c, tr_integral):
    """``(C(|(k+m)/mu - 1| + |(k-m)/mu - 1|) + 1) tr / 4``.

    ``k`` in the lower half-plane is evaluated at ``conj(k)``; the value is
    conjugation invariant and for ``m = 0`` both moduli vanish identically.
    """
    k = _upper(k)
    mu = mu_upper(k, m)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.abs((k + m) / mu - 1.0) + np.abs((k - m) / mu - 1.0)
    return (c * s + 1.0) * 0.25 * tr_integral


def _point(pt: SpectralPoint):
    if abs((pt.k - pt.m) * (pt.k + pt.m)) < 1e-300:
        raise BranchPointError(f"k = {pt.k} is a branch point for m = {pt.m}")
    return pt


def thm11_value(pt: SpectralPoint, p: float, consts: TheoremConstants, vp_integral: float) -> float:
    _check_p(p)
    _point(pt)
    return float(thm11_lhs(pt.k, pt.m, p, consts.c_p, vp_integral))


def thm12_value(pt: SpectralPoint, consts: TheoremConstants, f_local: float, f_log: float,
                f_l1: float) -> float:
    _point(pt)
    return float(thm12_lhs(pt.k, pt.m, consts.c_12, f_local, f_log, f_l1))


def thm31_value(pt: SpectralPoint, consts: TheoremConstants, tr_integral: float) -> float:
    _point(pt)
    return float(thm31_lhs(pt.k, pt.m, consts.c_31, tr_integral))


def m0_radius_bound(p: float, consts: TheoremConstants, vp_integral: float) -> float:
    """Radius ``(3^p C_p I)^{1/(p-1)}`` of the disk holding every eigenvalue when ``m = 0``."""
    _check_p(p)
    return float((3.0 ** p * consts.c_p * vp_integral) ** (1.0 / (p - 1.0)))


def thm12_disk_radius(mu_abs) -> np.ndarray:
    return 0.5 / np.asarray(mu_abs, dtype=float)


# ---------------------------------------------------------------------------
# predicates


class Predicate:
    """Maps an array of spectral points to the theorem left-hand side."""

    theorem_id = "custom"

    def lhs(self, k: np.ndarray, m: float) -> np.ndarray:
        raise NotImplementedError

    def prepare(self, k: np.ndarray, m: float) -> None:
        """Populate any shared caches before a parallel scan."""

    def inputs(self) -> dict:
        return {}


@dataclass
class ConstantPredicate(Predicate):
    value: float
    theorem_id: str = "constant"

    def lhs(self, k, m):
        return np.full(np.shape(k), float(self.value))

    def inputs(self):
        return {"value": self.value}


@dataclass
class Thm11Predicate(Predicate):
    p: float
    consts: TheoremConstants
    vp_integral: float
    theorem_id: str = "thm11"

    def __post_init__(self):
        _check_p(self.p)

    @classmethod
    def from_potential(cls, V: PotentialField, p: float, consts: TheoremConstants):
        return cls(p, consts, lp_integral(V, p))

    def lhs(self, k, m):
        return thm11_lhs(k, m, self.p, self.consts.c_p, self.vp_integral)

    def inputs(self):
        return {"p": self.p, "constants": self.consts.to_dict(), "vp_integral": self.vp_integral}


class Thm12Predicate(Predicate):
    """Needs the disk integral at radius ``1 / (2 |mu|)`` for every point.

    Radii are shared on a logarithmic lattice of step ``1e-3`` in ``|mu|``;
    the cache is filled by :meth:`prepare` before rows are scanned in parallel.
    """

    theorem_id = "thm12"

    def __init__(self, consts: TheoremConstants, f_log: float, f_l1: float,
                 local=None, potential: PotentialField | None = None):
        self.consts = consts
        self.f_log = float(f_log)
        self.f_l1 = float(f_l1)
        self._local = local if local is not None else LocalIntegrator(potential)
        self._cache: dict[int, float] = {}

    @classmethod
    def from_potential(cls, V: PotentialField, consts: TheoremConstants):
        return cls(consts, log_conv_sup(V), lp_integral(V, 1.0), potential=V)

    def _keys(self, k, m):
        mu = np.abs(mu_upper(k, m))
        with np.errstate(divide="ignore"):
            q = np.round(np.log(mu) / _MU_QUANT)
        return mu, np.where(np.isfinite(q), q, 0).astype(np.int64)

    def prepare(self, k, m):
        _, keys = self._keys(np.asarray(k, dtype=complex), m)
        for key in np.unique(keys):
            self._local_for_key(int(key))

    def _local_for_key(self, key: int) -> float:
        if key not in self._cache:
            self._cache[key] = self._local(0.5 * math.exp(-key * _MU_QUANT))
        return self._cache[key]

    def local_at(self, mu_abs: float) -> float:
        return self._local_for_key(int(round(math.log(mu_abs) / _MU_QUANT)))

    def lhs(self, k, m):
        k = np.asarray(k, dtype=complex)
        _, keys = self._keys(k, m)
        local = np.array([self._local_for_key(int(q)) for q in keys.ravel()],
                         dtype=float).reshape(keys.shape)
        return thm12_lhs(k, m, self.consts.c_12, local, self.f_log, self.f_l1)

    def inputs(self):
        return {"constants": self.consts.to_dict(), "f_log": self.f_log, "f_l1": self.f_l1}


@dataclass
class Thm31Predicate(Predicate):
    consts: TheoremConstants
    tr_integral: float
    theorem_id: str = "thm31"

    @classmethod
    def from_potential(cls, V: PotentialField, consts: TheoremConstants):
        return cls(consts, trace_abs_integral(V))

    def lhs(self, k, m):
        return thm31_lhs(k, m, self.consts.c_31, self.tr_integral)

    def inputs(self):
        return {"constants": self.consts.to_dict(), "tr_integral": self.tr_integral}


# ---------------------------------------------------------------------------
# region scan


@dataclass(frozen=True)
class Window:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("window needs nx, ny >= 2")
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise ValueError("window bounds are degenerate")

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell centres, built around the window midpoint so symmetric windows give
        exactly symmetric samples."""
        dx = (self.re_max - self.re_min) / self.nx
        dy = (self.im_max - self.im_min) / self.ny
        cx = 0.5 * (self.re_min + self.re_max)
        cy = 0.5 * (self.im_min + self.im_max)
        re = cx + (np.arange(self.nx) - (self.nx - 1) / 2.0) * dx
        im = cy + (np.arange(self.ny) - (self.ny - 1) / 2.0) * dy
        return re, im

    def to_dict(self) -> dict:
        return {"re_min": self.re_min, "re_max": self.re_max, "im_min": self.im_min,
                "im_max": self.im_max, "nx": self.nx, "ny": self.ny}


@dataclass
class EnclosureRegion:
    """``mask[iy, ix]`` is true where the point is admissible; ``iy`` runs upward in Im k."""

    window: Window
    m: float
    mask: np.ndarray
    field: np.ndarray
    boundary: list
    theorem_id: str
    inputs: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        payload = json.dumps({"window": self.window.to_dict(), "m": self.m,
                              "theorem": self.theorem_id, "inputs": self.inputs},
                             sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()

    def to_pgm(self) -> str:
        rows = self.mask[::-1].astype(int) * 255
        lines = ["P2", f"{self.window.nx} {self.window.ny}", "255"]
        lines += [" ".join(str(v) for v in row) for row in rows]
        return "\n".join(lines) + "\n"

    def boundary_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["polyline_id", "re_k", "im_k"])
        for pid, line in enumerate(self.boundary):
            for x, y in line:
                writer.writerow([pid, repr(float(x)), repr(float(y))])
        return buf.getvalue()

    def metadata(self) -> dict:
        return {"window": self.window.to_dict(), "m": self.m, "theorem_id": self.theorem_id,
                "inputs": self.inputs, "inputs_digest": self.digest,
                "admissible_cells": int(self.mask.sum()), "polylines": len(self.boundary)}

    def to_json(self) -> str:
        return json.dumps(self.metadata(), indent=2, sort_keys=True)

    def write(self, directory) -> dict:
        from pathlib import Path

        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {"pgm": d / "region.pgm", "csv": d / "boundary.csv", "json": d / "region.json"}
        paths["pgm"].write_text(self.to_pgm())
        paths["csv"].write_text(self.boundary_csv())
        paths["json"].write_text(self.to_json() + "\n")
        return {k: str(v) for k, v in paths.items()}


def _forced(k, m):
    on_axis = (k.imag == 0) & (np.abs(k.real) >= m)
    branch = np.abs((k - m) * (k + m)) < 1e-300
    return on_axis | branch


def region_scan(window: Window, m: float, predicate: Predicate, workers: int | None = None
                ) -> EnclosureRegion:
    """Evaluate ``predicate`` at cell centres and extract the ``LHS = 1`` boundary."""
    re, im = window.centers()
    K = re[None, :] + 1j * im[:, None]
    predicate.prepare(K, m)

    def row(iy):
        with np.errstate(all="ignore"):
            vals = np.asarray(predicate.lhs(K[iy], m), dtype=float)
        return np.nan_to_num(vals, nan=LHS_CLIP, posinf=LHS_CLIP)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        lhs = np.array(list(pool.map(row, range(window.ny))))
    F = np.clip(lhs - 1.0, -LHS_CLIP, LHS_CLIP)
    forced = _forced(K, m)
    F = np.where(forced, np.maximum(F, 0.0), F)
    mask = F >= 0
    boundary = marching_squares(F, re, im)
    return EnclosureRegion(window, float(m), mask, F, boundary, predicate.theorem_id,
                           predicate.inputs())


# ---------------------------------------------------------------------------
# marching squares

# corner order: 0 = (iy, ix), 1 = (iy, ix+1), 2 = (iy+1, ix+1), 3 = (iy+1, ix)
# edges: 0 bottom (c0-c1), 1 right (c1-c2), 2 top (c3-c2), 3 left (c0-c3)
_CASES = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)], 6: [(0, 2)], 7: [(3, 2)],
    8: [(2, 3)], 9: [(2, 0)], 11: [(2, 1)], 12: [(1, 3)], 13: [(1, 0)], 14: [(0, 3)],
}


def _edge_key(iy, ix, e):
    # canonical id shared by the two squares touching an edge
    if e == 0:
        return ("h", iy, ix)
    if e == 2:
        return ("h", iy + 1, ix)
    if e == 3:
        return ("v", iy, ix)
    return ("v", iy, ix + 1)


def marching_squares(F: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> list:
    """Polylines of the ``F = 0`` level set; ``F[iy, ix]`` sampled at ``(xs[ix], ys[iy])``.

    Nodes with ``F >= 0`` count as inside.  Points are placed by linear
    interpolation along cell edges; ambiguous saddles use the centre average.
    """
    ny, nx = F.shape
    inside = F >= 0
    points: dict = {}

    def point(key):
        if key not in points:
            kind, iy, ix = key
            if kind == "h":
                a, b = F[iy, ix], F[iy, ix + 1]
                t = a / (a - b)
                points[key] = (xs[ix] + t * (xs[ix + 1] - xs[ix]), ys[iy])
            else:
                a, b = F[iy, ix], F[iy + 1, ix]
                t = a / (a - b)
                points[key] = (xs[ix], ys[iy] + t * (ys[iy + 1] - ys[iy]))
        return key

    segments = []
    for iy in range(ny - 1):
        for ix in range(nx - 1):
            c = (inside[iy, ix] << 0) | (inside[iy, ix + 1] << 1) | \
                (inside[iy + 1, ix + 1] << 2) | (inside[iy + 1, ix] << 3)
            if c in (0, 15):
                continue
            if c in (5, 10):
                centre = 0.25 * (F[iy, ix] + F[iy, ix + 1] + F[iy + 1, ix + 1] + F[iy + 1, ix])
                # a joined diagonal pair keeps the other two corners cut off
                if (centre >= 0) == (c == 5):
                    pairs = [(0, 1), (2, 3)]
                else:
                    pairs = [(3, 0), (1, 2)]
            else:
                pairs = _CASES[int(c)]
            for e1, e2 in pairs:
                segments.append((point(_edge_key(iy, ix, e1)), point(_edge_key(iy, ix, e2))))
    return _join(segments, points)


def _join(segments, points) -> list:
    adj: dict = {}
    for i, (a, b) in enumerate(segments):
        adj.setdefault(a, []).append(i)
        adj.setdefault(b, []).append(i)
    used = [False] * len(segments)
    lines = []
    # open chains start at an endpoint with a single segment
    starts = [key for key, segs in adj.items() if len(segs) == 1]
    order = starts + [a for a, _ in segments]
    for start in order:
        free = [i for i in adj[start] if not used[i]]
        if not free:
            continue
        chain = [start]
        cur = start
        while True:
            nxt = [i for i in adj[cur] if not used[i]]
            if not nxt:
                break
            i = nxt[0]
            used[i] = True
            a, b = segments[i]
            cur = b if a == cur else a
            chain.append(cur)
        lines.append([points[key] for key in chain])
    return lines


def region_components(region: EnclosureRegion) -> int:
    """Number of connected admissible components (4-connectivity)."""
    from scipy import ndimage

    _, count = ndimage.label(region.mask)
    return int(count)
