"""Effective one-dimensional models for the nodal line.

* the Toda equation  c0 q'' + c0 q'/r - c1 exp(-2 sqrt2 q) = 0  and its
  explicit solution;
* the flux form of the nodal-line equation,
  (r p'/sqrt(1 + p'^2))' = (c1/c0) r exp(-2 sqrt2 p),
  obtained by identifying the interface separation with 2p;
* the shooting probe showing that the terminal flux always ends above
  sqrt2/2, which rules out growth rates k <= sqrt2/2;
* the Jacobi fields of the catenoid linearisation.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
import math
import os

import mpmath
import numpy as np

from . import _kernels
from .errors import BlowUpError, DomainError, StiffnessError
from .geometry import CatenoidCurve, TodaCurve
from .profile import constants

SQRT2 = math.sqrt(2.0)
HALF_SQRT2 = SQRT2 / 2.0


def toda_coefficient():
    """a = 2 sqrt2 c1/c0 in the explicit Toda solution (24 for the exact constants)."""
    c0, c1 = constants()
    return 2.0 * SQRT2 * c1 / c0


@dataclass(frozen=True)
class TodaSolution:
    eps: float
    a: float = field(default_factory=toda_coefficient)

    def __post_init__(self):
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise DomainError("Toda scaling eps must be positive and finite")

    def __call__(self, r, order=0):
        return toda_explicit(self.eps, r, order, a=self.a)

    def curve(self):
        return TodaCurve(self.eps, self.a)


def toda_explicit(eps, r, order=0, a=None):
    """q_eps(r) = q(eps r) - (sqrt2/2) ln eps, or its first/second derivative."""
    if order not in (0, 1, 2):
        raise DomainError("toda_explicit supports orders 0, 1, 2")
    r = np.asarray(r, dtype=float)
    if not (np.all(np.isfinite(r)) and math.isfinite(eps)) or eps <= 0 or np.any(r < 0):
        raise DomainError("toda_explicit needs eps > 0 and finite r >= 0")
    a = toda_coefficient() if a is None else a
    x = eps * r
    ax2 = a * x * x
    if order == 0:
        out = np.log((1.0 + ax2) ** 2 / 8.0) / (2.0 * SQRT2) - HALF_SQRT2 * math.log(eps)
    elif order == 1:
        out = eps * SQRT2 * a * x / (1.0 + ax2)
    else:
        out = eps * eps * SQRT2 * a * (1.0 - ax2) / (1.0 + ax2) ** 2
    return out if out.ndim else float(out)


def toda_residual(q, r):
    """c0 q'' + c0 q'/r - c1 exp(-2 sqrt2 q) for a callable ``q(r, order)``.

    At r = 0 the regular limit 2 c0 q''(0) - c1 exp(-2 sqrt2 q(0)) is used
    (q'(r)/r -> q''(0) when q'(0) = 0).
    """
    c0, c1 = constants()
    if r < 0:
        raise DomainError("toda_residual needs r >= 0")
    if r == 0:
        return 2.0 * c0 * q(0.0, 2) - c1 * math.exp(-2.0 * SQRT2 * q(0.0, 0))
    return c0 * q(r, 2) + c0 * q(r, 1) / r - c1 * math.exp(-2.0 * SQRT2 * q(r, 0))


def catenoid_curve(k, b=0.0):
    return CatenoidCurve(k, b)


def reduced_flux_rhs(p, dp, r, interaction_mode="D_equals_2p"):
    """Right side (c1/c0) r exp(-2 sqrt2 p) of the flux equation.

    The O(r^-2) remainder of the full nodal-line equation is dropped; ``dp``
    is accepted for signature symmetry and unused in this mode.
    """
    if interaction_mode != "D_equals_2p":
        raise DomainError(f"unknown interaction mode {interaction_mode!r}")
    c0, c1 = constants()
    return c1 / c0 * r * np.exp(-2.0 * SQRT2 * np.asarray(p, dtype=float))


@dataclass
class ReducedTrajectory:
    r: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    mu: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_rows(self):
        return np.column_stack([self.r, self.p, self.dp, self.mu])


def flux(r, dp):
    return r * dp / np.sqrt(1.0 + dp * dp)


def slope_from_flux(r, mu):
    return (mu / r) / np.sqrt(1.0 - (mu / r) ** 2)


def integrate_reduced(p0, slope0, r0, r_end, rtol=1e-10, atol=1e-12, max_step=0.5,
                      forcing=0.0, max_points=2_000_000, jit=None):
    """Integrate the flux equation from ``r0`` to ``r_end``.

    The state is (p, mu) with mu = r p'/sqrt(1 + p'^2), advanced in s = ln r
    by Dormand-Prince 5(4). ``max_step`` bounds the step in s. ``forcing`` is
    an optional amplitude C of a worst-case remainder -C/r^2 added to the
    flux derivative.
    """
    if not (r0 > 0 and r_end > r0):
        raise DomainError("integrate_reduced needs 0 < r0 < r_end")
    if not p0 > 0:
        raise DomainError("integrate_reduced needs p0 > 0")
    c0, c1 = constants()
    mu0 = r0 * slope0 / math.sqrt(1.0 + slope0 * slope0)
    s, p, mu, status, s_stop = _kernels.dopri_flux(
        math.log(r0), math.log(r_end), p0, mu0, c1 / c0, forcing, rtol, atol, max_step,
        max_points, jit=jit)
    if status == _kernels.BLOWUP:
        raise BlowUpError(f"vertical tangent (mu >= r) near r = {math.exp(s_stop):.6g}",
                          r=math.exp(s_stop))
    if status in (_kernels.UNDERFLOW, _kernels.MAX_STEPS):
        raise StiffnessError(f"step size collapsed near r = {math.exp(s_stop):.6g}",
                             r=math.exp(s_stop))
    r = np.exp(s)
    r[0] = r0
    meta = dict(rtol=rtol, atol=atol, max_step=max_step, steps=len(s) - 1, forcing=forcing,
                variable="ln r", method="dopri5")
    return ReducedTrajectory(r, p, slope_from_flux(r, mu), mu, meta)


def trajectory_from_curve(curve, r):
    """Sample an analytic or sampled nodal curve as a trajectory."""
    r = np.asarray(r, dtype=float)
    p = curve.f(r)
    ct, st = curve.tangent(r)
    # r f'/sqrt(1+f'^2) = r sin(t), finite at a vertical tangent
    mu = r * st
    with np.errstate(divide="ignore"):
        dp = np.where(ct > 0, st / np.where(ct > 0, ct, 1.0), np.inf)
    return ReducedTrajectory(r, p, dp, mu, dict(source=curve.kind))


# ---------------------------------------------------------------------------
# Nonexistence probe
# ---------------------------------------------------------------------------

@dataclass
class TrialResult:
    index: int
    p0: float
    slope0: float
    mu0: float
    mu_final: float = math.nan
    r_final: float = math.nan
    status: str = "ok"  # ok | not_reached | failed
    message: str = ""


@dataclass
class ProbeReport:
    k_target: float
    r0: float
    r_end: float
    forcing: float
    trials: list
    delta_obs: float
    verdict: str
    failures: list

    @property
    def passed(self):
        return self.verdict == "no-two-end-regime"

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


def shooting_grid(k_target, trials, r0=1.0, p0_range=(1.0, 20.0)):
    """Deterministic lattice: log-uniform p0, uniform slope0 in [0, k_target/r0]."""
    n_p = max(1, math.ceil(math.sqrt(2.0 * trials)))
    n_s = max(1, math.ceil(trials / n_p))
    p0s = np.exp(np.linspace(math.log(p0_range[0]), math.log(p0_range[1]), n_p))
    slopes = np.linspace(0.0, k_target / r0, n_s)
    pairs = [(float(p), float(s)) for s in slopes for p in p0s]
    return pairs[:trials]


def _interaction_horizon(p0, mu0, r_end, s_cap):
    # while the interaction is negligible p ~ p0 + mu0 s, so r^2 exp(-2 sqrt2 p)
    # becomes O(1) near s = 2 sqrt2 p0 / (2 - 2 sqrt2 mu0); give the trajectory
    # the requested r_end worth of room beyond that point
    rate = 2.0 - 2.0 * SQRT2 * max(mu0, 0.0)
    onset = 2.0 * SQRT2 * p0 / rate if rate > 0 else math.inf
    return min(max(math.log(r_end), onset + math.log(r_end)), s_cap)


def _run_trial(index, p0, slope0, r0, r_end, forcing, rtol, s_cap, jit):
    mu0 = r0 * slope0 / math.sqrt(1.0 + slope0 * slope0)
    res = TrialResult(index, p0, slope0, mu0)
    s_end = _interaction_horizon(p0, mu0, r_end, s_cap)
    try:
        traj = integrate_reduced(p0, slope0, r0, math.exp(s_end), rtol=rtol, atol=1e-12,
                                 max_step=0.5, forcing=forcing, jit=jit)
    except (BlowUpError, StiffnessError) as exc:
        res.status = "failed"
        res.message = str(exc)
        return res
    res.mu_final = float(traj.mu[-1])
    res.r_final = float(traj.r[-1])
    # growth of the flux that came from the interaction term
    gained = res.mu_final - mu0
    if gained < 1e-6 and s_end >= s_cap:
        res.status = "not_reached"
        res.message = "interaction not reached before the integration horizon"
    return res


def _workers():
    try:
        return max(1, int(os.environ.get("TWO_END_LAB_THREADS", "1")))
    except ValueError:
        return 1


def nonexistence_probe(k_target, trials=50, r0=1.0, r_end=1e6, p0_range=(1.0, 20.0),
                       forcing=0.0, rtol=1e-10, s_cap=700.0, pairs=None, jit=None):
    """Shoot trajectories aimed at terminal flux ``k_target`` and record where they end.

    ``pairs`` overrides the shooting lattice with explicit ``(p0, slope0)``.
    The verdict is ``"no-two-end-regime"`` when every completed trial ends
    with flux above sqrt2/2 (``delta_obs`` is the smallest excess).
    """
    if not 0 < k_target <= HALF_SQRT2 + 1e-12:
        raise DomainError("k_target must lie in (0, sqrt2/2]")
    if pairs is None:
        pairs = shooting_grid(k_target, trials, r0, p0_range)
    args = [(i, p, s, r0, r_end, forcing, rtol, s_cap, jit) for i, (p, s) in enumerate(pairs)]
    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda a: _run_trial(*a), args))
    else:
        results = [_run_trial(*a) for a in args]
    results.sort(key=lambda t: t.index)
    done = [t for t in results if t.status == "ok"]
    failures = [t.index for t in results if t.status == "failed"]
    delta = min((t.mu_final for t in done), default=math.nan) - HALF_SQRT2
    ok = bool(done) and delta > 0 and not failures
    verdict = "no-two-end-regime" if ok else ("partial" if failures else "inconclusive")
    return ProbeReport(k_target, r0, r_end, forcing, results, float(delta), verdict, failures)


# ---------------------------------------------------------------------------
# Catenoid linearisation
# ---------------------------------------------------------------------------

_MP_DPS = 40


def jacobi_fields(z):
    """(xi1, xi2, W) with xi1 = sinh z, xi2 = z sinh z - cosh z, W = xi1 xi2' - xi2 xi1'.

    The determinant is formed in 40-digit arithmetic; in double precision
    the cancellation between terms of size z cosh(z)^2 would swamp it.
    """
    with mpmath.workdps(_MP_DPS):
        zm = mpmath.mpf(z)
        sh, ch = mpmath.sinh(zm), mpmath.cosh(zm)
        x1, x1p = sh, ch
        x2, x2p = zm * sh - ch, zm * ch
        w = x1 * x2p - x2 * x1p
        return float(x1), float(x2), float(w)


def wronskian_defect(z):
    """W(z) - cosh(z)^2, both sides formed in 40-digit arithmetic."""
    with mpmath.workdps(_MP_DPS):
        zm = mpmath.mpf(z)
        sh, ch = mpmath.sinh(zm), mpmath.cosh(zm)
        w = sh * (zm * ch) - (zm * sh - ch) * ch
        return float(w - ch * ch)


def jacobi_residuals(z):
    """Residuals of xi'' - 2 tanh(z) xi' + xi for both Jacobi fields."""
    with mpmath.workdps(_MP_DPS):
        zm = mpmath.mpf(z)
        sh, ch, th = mpmath.sinh(zm), mpmath.cosh(zm), mpmath.tanh(zm)
        r1 = sh - 2 * th * ch + sh
        r2 = (ch + zm * sh) - 2 * th * zm * ch + (zm * sh - ch)
        return float(r1), float(r2)


def catenoid_match_error(traj, eps, z_window=None):
    """sup over trajectory nodes of |r - cosh(eps p)/eps| for p in ``z_window``.

    The trajectory is read as r over z = p; by default the window is
    ``[0, 1/eps]``, one waist length.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    lo, hi = (0.0, 1.0 / eps) if z_window is None else z_window
    p = np.asarray(traj.p)
    sel = (p >= lo) & (p <= hi) & np.isfinite(p)
    if not sel.any():
        raise DomainError("matching window contains no trajectory nodes")
    return float(np.max(np.abs(traj.r[sel] - np.cosh(eps * p[sel]) / eps)))
