"""Checks on solved fields: balancing flux, monotonicity, growth rate, apex."""
from dataclasses import dataclass, asdict
import math
import warnings

import numpy as np

from ..errors import DomainError
from ..geometry import SampledCurve
from ..profile import double_well
from .solver import residual_values


class ConditioningWarning(UserWarning):
    """A least-squares window is too short to separate slope from offset."""


class BoundaryContaminationWarning(UserWarning):
    """A flux rectangle touches a Dirichlet edge."""


# ---------------------------------------------------------------------------
# Balancing flux
# ---------------------------------------------------------------------------

@dataclass
class FluxResult:
    value: float
    scale: float
    h: float
    touches_boundary: bool
    rect: tuple

    @property
    def tolerance(self):
        return 10.0 * self.h**2 * self.scale

    @property
    def passed(self):
        return abs(self.value) < self.tolerance

    def to_dict(self):
        d = asdict(self)
        d.update(tolerance=self.tolerance, passed=self.passed)
        return d


def _node(coord, origin, h, n, what):
    i = (coord - origin) / h
    j = int(round(i))
    if abs(i - j) > 1e-6 or not 0 <= j < n:
        raise DomainError(f"{what} = {coord} is not a grid line")
    return j


def balancing_flux(field, r_a, r_b, z_top, z_a=None):
    """Flux of the translation-energy field through a revolved rectangle.

    With X = e_z the field is P = (|grad u|^2/2 + F(u)) X - (grad u . X) grad u,
    i.e. P_z = u_r^2/2 - u_z^2/2 + F(u) and P_r = -u_z u_r. It is divergence
    free for solutions, so its outward flux through the surface of revolution
    of [r_a, r_b] x [z_a, z_top], with area element 2 pi r ds, vanishes.
    ``z_a`` defaults to the bottom edge of the grid; on the half strip that
    face is the symmetry plane, where u_z = 0. The rectangle reflected
    across z = 0 would carry zero flux by symmetry alone, so the upper half
    is used. Central differences and the trapezoid rule make the result
    O(h^2).
    """
    g = field.grid
    u = field.values
    z_a = g.z0 if z_a is None else z_a
    if not (0.0 <= r_a < r_b and z_a < z_top):
        raise DomainError("rectangle must satisfy 0 <= r_a < r_b and z_a < z_top")
    ia = _node(r_a, 0.0, g.h_r, g.n_r, "r_a")
    ib = _node(r_b, 0.0, g.h_r, g.n_r, "r_b")
    ja = _node(z_a, g.z0, g.h_z, g.n_z, "z_a")
    jb = _node(z_top, g.z0, g.h_z, g.n_z, "z_top")
    mirrored_bottom = g.z0 == 0.0 and field.bc.bottom == "neumann"
    if ib >= g.n_r - 1 or jb >= g.n_z - 1 or (ja == 0 and not mirrored_bottom):
        raise DomainError("rectangle must stay strictly inside the grid")
    touches = ib >= g.n_r - 2 or jb >= g.n_z - 2 or (ja <= 1 and not mirrored_bottom)
    if touches:
        warnings.warn("flux rectangle touches a Dirichlet edge", BoundaryContaminationWarning)

    # gradients by central differences; the bottom row mirrors across z = 0
    ur = np.zeros_like(u)
    ur[:, 1:-1] = (u[:, 2:] - u[:, :-2]) / (2.0 * g.h_r)
    uz = np.zeros_like(u)
    uz[1:-1, :] = (u[2:, :] - u[:-2, :]) / (2.0 * g.h_z)
    if mirrored_bottom:
        uz[0, :] = 0.0
    Pz = 0.5 * ur**2 - 0.5 * uz**2 + double_well(u)
    Pr = -uz * ur
    r = g.r
    rs = r[ia:ib + 1]
    zs = g.z[ja:jb + 1]
    two_pi = 2.0 * math.pi
    top = np.trapezoid(Pz[jb, ia:ib + 1] * rs, rs)
    bottom = np.trapezoid(Pz[ja, ia:ib + 1] * rs, rs)
    outer = r[ib] * np.trapezoid(Pr[ja:jb + 1, ib], zs)
    inner = r[ia] * np.trapezoid(Pr[ja:jb + 1, ia], zs)
    value = two_pi * (top - bottom + outer - inner)
    scale = two_pi * ((r[ib] ** 2 - r[ia] ** 2) + (r[ia] + r[ib]) * (g.z[jb] - g.z[ja]))
    return FluxResult(float(value), float(scale), max(g.h_r, g.h_z), bool(touches),
                      (float(r[ia]), float(r[ib]), float(g.z[ja]), float(g.z[jb])))


# ---------------------------------------------------------------------------
# Monotonicity
# ---------------------------------------------------------------------------

@dataclass
class MonotonicityReport:
    passed: bool
    tolerance: float
    max_ur: float
    min_uz: float
    violations: list

    def to_dict(self):
        return asdict(self)


def monotonicity_check(field, tolerance=None, max_listed=20):
    """u_r <= tol for r > 0 and u_z >= -tol for z > 0, on interior nodes.

    The default tolerance is 10 |E(u)|_inf + 1e-8.
    """
    g = field.grid
    u = field.values
    if tolerance is None:
        res = residual_values(u, g, field.bc)
        tolerance = 10.0 * float(np.max(np.abs(res))) + 1e-8
    ur = (u[1:-1, 2:] - u[1:-1, :-2]) / (2.0 * g.h_r)
    uz = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2.0 * g.h_z)
    zpos = (g.z[1:-1] > 0)[:, None]
    bad_r = ur > tolerance
    bad_z = (uz < -tolerance) & zpos
    viol = []
    for kind, mask, d in (("u_r", bad_r, ur), ("u_z", bad_z, uz)):
        for j, i in zip(*np.nonzero(mask)):
            if len(viol) >= max_listed:
                break
            viol.append(dict(kind=kind, r=float(g.r[i + 1]), z=float(g.z[j + 1]),
                             value=float(d[j, i])))
    min_uz = float(np.min(np.where(zpos, uz, np.inf))) if zpos.any() else math.inf
    return MonotonicityReport(not (bad_r.any() or bad_z.any()), float(tolerance),
                              float(ur.max()), min_uz, viol)


def bump(field, r, z, amplitude=0.5, width=1.0):
    """Copy of ``field`` with a Gaussian bump added at ``(r, z)`` (planted defect)."""
    RR, ZZ = field.grid.mesh()
    g = amplitude * np.exp(-((RR - r) ** 2 + (ZZ - z) ** 2) / (2.0 * width**2))
    return field.with_values(field.values + g)


# ---------------------------------------------------------------------------
# Growth rate and apex
# ---------------------------------------------------------------------------

def growth_rate_fit(curve, window, samples=400):
    """Least squares of f against k ln r + c on ``window``; returns (k, c, rms).

    Sampled curves use their own nodes inside the window; analytic curves
    are sampled log-uniformly.
    """
    r_a, r_b = window
    if not r_a < r_b:
        raise DomainError("window must satisfy r_a < r_b")
    if r_a < 10.0:
        raise DomainError("growth-rate windows must start at r >= 10, away from the core")
    if r_a < curve.r_min or r_b > curve.r_max + 1e-9:
        raise DomainError("window leaves the curve's domain")
    if r_b / r_a < 10.0:
        warnings.warn(f"fit window [{r_a:g}, {r_b:g}] spans less than a decade",
                      ConditioningWarning, stacklevel=2)
    if isinstance(curve, SampledCurve):
        r = curve.r[(curve.r >= r_a - 1e-12) & (curve.r <= r_b + 1e-12)]
        f = curve.f(r)
    else:
        r = np.exp(np.linspace(math.log(r_a), math.log(r_b), samples))
        f = curve.f(r)
    if r.size < 2:
        raise DomainError("window holds fewer than two samples")
    A = np.column_stack([np.log(r), np.ones_like(r)])
    (k, c), *_ = np.linalg.lstsq(A, f, rcond=None)
    rms = float(np.sqrt(np.mean((A @ np.array([k, c]) - f) ** 2)))
    return float(k), float(c), rms


@dataclass(frozen=True)
class Apex:
    """Where the upper nodal curve meets a coordinate axis."""

    axis: str  # "r" or "z"
    dist: float


def _first_crossing(values, h):
    s = np.sign(values)
    idx = np.flatnonzero(s[:-1] != s[1:])
    if idx.size == 0:
        return math.nan
    j = idx[0]
    a, b = values[j], values[j + 1]
    return (j - a / (b - a)) * h


def find_apex(field):
    """Intersection of the nodal set with the axes.

    u(0, 0) > 0 means the nodal surface has a neck and crosses the r-axis;
    u(0, 0) < 0 means two sheets crossing the z-axis.
    """
    g = field.grid
    u = field.values
    if g.z0 != 0.0:
        raise DomainError("apex detection needs the half strip z >= 0")
    if u[0, 0] > 0:
        return Apex("r", float(_first_crossing(u[0, :], g.h_r)))
    return Apex("z", float(_first_crossing(u[:, 0], g.h_z)))


def interface_residual_profile(field, bands):
    """Max |E| over nodes with |u| < 0.9 in each band ``(r_lo, r_hi)``."""
    g = field.grid
    res = np.abs(residual_values(field.values, g, field.bc))
    res[field.bc.dirichlet_mask(g)] = 0.0
    RR, _ = g.mesh()
    near = np.abs(field.values) < 0.9
    out = []
    for lo, hi in bands:
        m = near & (RR >= lo) & (RR <= hi)
        out.append(float(res[m].max()) if m.any() else math.nan)
    return out
