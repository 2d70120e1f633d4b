"""Nodal curves z = f(r) and Fermi (tubular) charts around them.

A chart maps ``(r1, z1)`` -- foot point abscissa and signed normal distance --
to the meridian half plane:

    r = r1 - z1 f'/sqrt(1 + f'^2),    z = f(r1) + z1/sqrt(1 + f'^2).

Positive ``z1`` points "up", away from the symmetry plane z = 0 for curves
with f' > 0, and towards the axis at a vertical tangent.
"""
from dataclasses import dataclass, field
import math
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import maximum_filter1d
from scipy.spatial import cKDTree

from . import _kernels
from .errors import ChartDomainError, DomainError, ExtractionError

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------

class NodalCurve:
    """Graph z = f(r) on ``[r_min, r_max]`` with derivatives up to third order.

    Subclasses supply ``f``, ``df``, ``d2f``, ``d3f``. The unit normal and
    the curvature term are derived here but can be overridden where a closed
    form stays finite at a vertical tangent.
    """

    kind = "abstract"
    r_min = 0.0
    r_max = math.inf

    def f(self, r):
        raise NotImplementedError

    def df(self, r):
        raise NotImplementedError

    def d2f(self, r):
        raise NotImplementedError

    def d3f(self, r):
        raise NotImplementedError

    def derivative(self, r, order):
        return (self.f, self.df, self.d2f, self.d3f)[order](r)

    def __call__(self, r):
        return self.f(r)

    def check_domain(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r_min) or np.any(r > self.r_max) or not np.all(np.isfinite(r)):
            raise DomainError(f"{self.kind} curve evaluated outside [{self.r_min}, {self.r_max}]")
        return r

    def tangent(self, r):
        """Unit tangent ``(cos t, sin t)`` of the graph at ``r``."""
        fp = self.df(r)
        s = np.sqrt(1.0 + fp * fp)
        return 1.0 / s, fp / s

    def normal(self, r):
        c, s = self.tangent(r)
        return -s, c

    def curvature(self, r):
        """Signed curvature f''/(1 + f'^2)^(3/2)."""
        fp = self.df(r)
        return self.d2f(r) / (1.0 + fp * fp) ** 1.5

    def is_above(self, r, z):
        """Side test: True on the side the normal points to."""
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        inside = r < self.r_min
        rc = np.clip(r, self.r_min, self.r_max if np.isfinite(self.r_max) else None)
        fz = self.f(rc)
        if np.isfinite(self.r_max):
            fz = fz + np.where(r > self.r_max, (r - self.r_max) * self.df(self.r_max), 0.0)
        return inside | (z > fz)

    def polyline(self, r_hi, spacing=0.05):
        """Points along the curve for ``r`` in ``[r_min, r_hi]``, roughly ``spacing`` apart."""
        r_hi = min(r_hi, self.r_max)
        # quadratic clustering toward r_min resolves a vertical tangent there
        coarse = self.r_min + (r_hi - self.r_min) * np.linspace(0.0, 1.0, 20001) ** 2
        fc = self.f(coarse)
        arc = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(coarse), np.diff(fc)))])
        n = max(int(arc[-1] / spacing), 10)
        rs = np.interp(np.linspace(0.0, arc[-1], n), arc, coarse)
        return rs, self.f(rs)


@dataclass(frozen=True)
class CatenoidCurve(NodalCurve):
    """Catenoid meridian f(r) = k arccosh(r/k) + b on ``r >= k``."""

    k: float
    b: float = 0.0

    kind = "catenoid"

    def __post_init__(self):
        if not self.k > 0:
            raise DomainError("catenoid requires k > 0")

    @property
    def r_min(self):
        return self.k

    def f(self, r):
        r = self.check_domain(r)
        return self.k * np.arccosh(r / self.k) + self.b

    def df(self, r):
        r = self.check_domain(r)
        with np.errstate(divide="ignore"):
            return self.k / np.sqrt(r * r - self.k * self.k)

    def d2f(self, r):
        r = self.check_domain(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            return -self.k * r / (r * r - self.k * self.k) ** 1.5

    def d3f(self, r):
        r = self.check_domain(r)
        k = self.k
        with np.errstate(divide="ignore", invalid="ignore"):
            return k * (2.0 * r * r + k * k) / (r * r - k * k) ** 2.5

    def tangent(self, r):
        r = self.check_domain(r)
        return np.sqrt(r * r - self.k * self.k) / r, self.k / r

    def curvature(self, r):
        r = self.check_domain(r)
        return -self.k / (r * r)


@dataclass(frozen=True)
class TodaCurve(NodalCurve):
    """Explicit Toda profile q_eps(r) = q(eps r) - (sqrt2/2) ln eps.

    q(x) = ln((1 + a x^2)^2 / 8) / (2 sqrt2), with a = 2 sqrt2 c1/c0.
    """

    eps: float
    a: float = None

    kind = "toda"

    def __post_init__(self):
        if not self.eps > 0:
            raise DomainError("Toda scaling requires eps > 0")
        if self.a is None:
            from .profile import constants
            c0, c1 = constants()
            object.__setattr__(self, "a", 2.0 * SQRT2 * c1 / c0)

    def _x(self, r):
        r = self.check_domain(r)
        return self.eps * r

    def f(self, r):
        x = self._x(r)
        return (np.log((1.0 + self.a * x * x) ** 2 / 8.0) / (2.0 * SQRT2)
                - 0.5 * SQRT2 * math.log(self.eps))

    def df(self, r):
        x, a = self._x(r), self.a
        return self.eps * SQRT2 * a * x / (1.0 + a * x * x)

    def d2f(self, r):
        x, a = self._x(r), self.a
        return self.eps**2 * SQRT2 * a * (1.0 - a * x * x) / (1.0 + a * x * x) ** 2

    def d3f(self, r):
        x, a = self._x(r), self.a
        return -self.eps**3 * 2.0 * SQRT2 * a * a * x * (3.0 - a * x * x) / (1.0 + a * x * x) ** 3


class SampledCurve(NodalCurve):
    """C^2 cubic spline through samples ``(r[i], f[i])``.

    f''' is the spline's piecewise-constant third derivative smoothed by a
    five-point moving average; it is noisy and only meant for small terms.
    """

    kind = "sampled"

    def __init__(self, r, f):
        r = np.asarray(r, dtype=float)
        f = np.asarray(f, dtype=float)
        if r.ndim != 1 or r.shape != f.shape or r.size < 4:
            raise DomainError("sampled curve needs matching 1-D arrays with at least 4 points")
        if np.any(np.diff(r) <= 0):
            raise DomainError("sampled curve abscissae must be strictly increasing")
        if not np.all(np.isfinite(f)):
            raise DomainError("sampled curve values must be finite")
        self.r = r
        self.values = f
        self.r_min = float(r[0])
        self.r_max = float(r[-1])
        self._spline = CubicSpline(r, f)
        jumps = self._spline.c[0] * 6.0
        mids = 0.5 * (r[1:] + r[:-1])
        kernel = np.ones(5) / 5.0
        padded = np.pad(jumps, 2, mode="edge")
        self._d3_mid = mids
        self._d3_val = np.convolve(padded, kernel, mode="valid")

    def f(self, r):
        return self._spline(self.check_domain(r))

    def df(self, r):
        return self._spline(self.check_domain(r), 1)

    def d2f(self, r):
        return self._spline(self.check_domain(r), 2)

    def d3f(self, r):
        r = self.check_domain(r)
        return np.interp(r, self._d3_mid, self._d3_val)

    def to_rows(self):
        """Rows ``(r, f, f', f'')`` at the sample abscissae."""
        r = self.r
        return np.column_stack([r, self.values, self.df(r), self.d2f(r)])


# ---------------------------------------------------------------------------
# Fermi chart
# ---------------------------------------------------------------------------

def smoothstep(x):
    """Quintic C^2 step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)


def lipschitz_envelope(x, y, slope):
    """Largest function below ``y`` on the samples with Lipschitz constant ``slope``."""
    out = np.array(y, dtype=float)
    dx = np.diff(x) * slope
    for i in range(1, out.size):
        out[i] = min(out[i], out[i - 1] + dx[i - 1])
    for i in range(out.size - 2, -1, -1):
        out[i] = min(out[i], out[i + 1] + dx[i])
    return out


class PullbackCoeffs(NamedTuple):
    a_rr: np.ndarray
    a_zz: np.ndarray
    a_r: np.ndarray
    a_z: np.ndarray


@dataclass
class FermiChart:
    """Tubular chart around ``curve`` with validity half-width d(r1).

    d(r1) = min(focal distance over a sliding window, r1, 3 f(r1)/cos t, cap),
    regularised to Lipschitz constant 1/2. ``transition_width`` is the width
    of the quintic ramp of the cutoff at the tube edge.
    """

    curve: NodalCurve
    transition_width: float = 2.0
    max_half_width: float = 10.0
    r_max: float = None
    focal_window: float = 2.0
    samples: int = 4001
    _r_s: np.ndarray = field(init=False, repr=False)
    _d_s: np.ndarray = field(init=False, repr=False)
    _tree: object = field(init=False, repr=False, default=None)

    def __post_init__(self):
        c = self.curve
        if self.r_max is None:
            self.r_max = c.r_max if np.isfinite(c.r_max) else c.r_min + 1e4
        self.r_max = min(self.r_max, c.r_max)
        rs = np.linspace(c.r_min, self.r_max, self.samples)
        kappa = np.abs(c.curvature(rs))
        win = max(1, int(self.focal_window / max(rs[1] - rs[0], 1e-12)))
        kmax = maximum_filter1d(kappa, size=2 * win + 1, mode="nearest")
        with np.errstate(divide="ignore", invalid="ignore"):
            focal = np.where(kmax > 0, 1.0 / kmax, np.inf)
            # the tube's lowest point is f - d cos(t); keep it clear of the
            # symmetry plane, which puts no limit where the tangent is vertical
            ct = c.tangent(rs)[0]
            plane = np.where(ct > 0, 3.0 * np.abs(c.f(rs)) / ct, np.inf)
        raw = np.minimum.reduce([focal, rs, plane, np.full(rs.size, self.max_half_width)])
        self._r_s = rs
        self._d_s = lipschitz_envelope(rs, raw, 0.5)

    # -- validity ---------------------------------------------------------
    def half_width(self, r1):
        return np.interp(r1, self._r_s, self._d_s)

    def in_domain(self, r1, z1):
        r1 = np.asarray(r1, dtype=float)
        z1 = np.asarray(z1, dtype=float)
        ok = (r1 >= self.curve.r_min) & (r1 <= self.r_max)
        return ok & (np.abs(z1) < self.half_width(np.clip(r1, self.curve.r_min, self.r_max)))

    def _require(self, r1, z1):
        if not np.all(self.in_domain(r1, z1)):
            raise ChartDomainError("point outside the Fermi chart validity region")

    def cutoff(self, r1, z1):
        """eta: 1 deep inside the tube, ramping to 0 at |z1| = d(r1)."""
        d = self.half_width(r1)
        return smoothstep((d - np.abs(z1)) / self.transition_width)

    # -- maps ---------------------------------------------------------------
    def to_cartesian(self, r1, z1):
        nr, nz = self.curve.normal(r1)
        return r1 + z1 * nr, self.curve.f(r1) + z1 * nz

    def _newton_project(self, r, z, r1, iters=60):
        c = self.curve
        lo, hi = c.r_min, self.r_max
        for _ in range(iters):
            ct, st = c.tangent(r1)
            fr = c.f(r1)
            g = (r1 - r) * ct + (fr - z) * st
            z1 = -(r - r1) * st + (z - fr) * ct
            # g' = (1 - z1 kappa)/cos t; written as a product so a vertical
            # tangent (cos t = 0) gives a zero step instead of NaN
            denom = 1.0 - z1 * c.curvature(r1)
            safe = denom > 1e-12
            step = np.where(safe, -g * ct / np.where(safe, denom, 1.0), 0.0)
            new = np.clip(r1 + step, lo, hi)
            done = np.abs(new - r1) <= 1e-13 * np.maximum(1.0, np.abs(r1))
            r1 = new
            if np.all(done):
                break
        ct, st = c.tangent(r1)
        fr = c.f(r1)
        z1 = -(r - r1) * st + (z - fr) * ct
        resid = np.abs((r1 - r) * ct + (fr - z) * st)
        return r1, z1, resid

    def project(self, r, z):
        """Vectorised inverse map for many points.

        Returns ``(r1, z1, valid)``; seeds come from the nearest vertex of a
        dense polyline, refined by Newton on the normal-projection equation.
        """
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        if self._tree is None:
            pr, pz = self.curve.polyline(self.r_max)
            self._tree = (cKDTree(np.column_stack([pr, pz])), pr)
        tree, pr = self._tree
        _, idx = tree.query(np.column_stack([r.ravel(), z.ravel()]))
        r1 = pr[idx].reshape(r.shape)
        r1, z1, resid = self._newton_project(r, z, r1)
        interior = (r1 > self.curve.r_min) & (r1 < self.r_max)
        valid = interior & (resid < 1e-8) & self.in_domain(r1, z1)
        return r1, z1, valid


def fermi_forward(chart, r1, z1):
    chart._require(r1, z1)
    r, z = chart.to_cartesian(np.asarray(r1, dtype=float), np.asarray(z1, dtype=float))
    return (float(r), float(z)) if np.ndim(r) == 0 else (r, z)


def fermi_inverse(chart, r, z):
    """Foot point and signed distance of ``(r, z)``.

    Seeded from the nearest vertex of a dense polyline, so points near a
    vertical tangent (the catenoid neck) project correctly.
    """
    r1, z1, valid = chart.project(np.array([float(r)]), np.array([float(z)]))
    if not valid[0]:
        raise ChartDomainError(f"({r}, {z}) has no normal projection inside the chart")
    return float(r1[0]), float(z1[0])


def metric_factors(chart, r1, z1):
    """(A, B) with A = |dX/dr1|^2 = (1 + f'^2) B^2 and B = 1 - z1 kappa."""
    chart._require(r1, z1)
    c = chart.curve
    fp = c.df(r1)
    fpp = c.d2f(r1)
    s = 1.0 + fp * fp
    A = s - 2.0 * z1 * fpp / np.sqrt(s) + z1 * z1 * fpp * fpp / (s * s)
    B = 1.0 - z1 * fpp / s**1.5
    if np.any(B <= 0):
        raise ChartDomainError("focal point reached (B <= 0)")
    return A, B


def laplacian_pullback_coeffs(chart, r1, z1):
    """Coefficients of d2/dr1^2, d2/dz1^2, d/dr1, d/dz1 in the flat (r, z) Laplacian."""
    A, _ = metric_factors(chart, r1, z1)
    c = chart.curve
    fp, fpp, f3 = c.df(r1), c.d2f(r1), c.d3f(r1)
    s = 1.0 + fp * fp
    dA_dz1 = -2.0 * fpp / np.sqrt(s) + 2.0 * z1 * fpp * fpp / (s * s)
    dA_dr1 = (2.0 * fp * fpp
              - 2.0 * z1 * (f3 / np.sqrt(s) - fp * fpp * fpp / s**1.5)
              + z1 * z1 * (2.0 * fpp * f3 / (s * s) - 4.0 * fp * fpp**3 / s**3))
    one = np.ones_like(np.asarray(A, dtype=float))
    return PullbackCoeffs(1.0 / A, one, -0.5 * dA_dr1 / A**2, 0.5 * dA_dz1 / A)


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def nodal_curve_from_field(field, window=None):
    """Sampled nodal curve: lowest sign change of every grid column.

    ``window = (r_lo, r_hi)`` restricts the columns; by default it runs
    from the first column with a sign change to the outer edge. Each column
    inside the window must change sign.
    """
    grid = field.grid
    zc = _kernels.column_crossings(field.values, grid.h_z) + grid.z0
    r = grid.r
    hit = np.isfinite(zc)
    if not hit.any():
        raise ExtractionError("field has no sign change in any column", columns=range(r.size))
    if window is None:
        lo = r[np.argmax(hit)]
        hi = r[-1]
    else:
        lo, hi = window
    sel = (r >= lo - 1e-12) & (r <= hi + 1e-12)
    missing = np.flatnonzero(sel & ~hit)
    if missing.size:
        raise ExtractionError(f"{missing.size} columns in the window have no sign change",
                              columns=missing.tolist())
    return SampledCurve(r[sel], zc[sel])
