"""Closed-form oracle checks for the profile, geometry and reduced modules.

Each check compares a computed quantity with an independent closed form and
reports the worst deviation against its threshold. No PDE solve is involved.
"""
from dataclasses import dataclass, asdict
import math

import numpy as np

from . import geometry, profile, reduced

SQRT2 = math.sqrt(2.0)


@dataclass
class Check:
    name: str
    value: float
    threshold: float

    @property
    def passed(self):
        return bool(self.value < self.threshold)

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


def admissible_points(chart, n, rng, r_hi=None):
    """Random ``(r1, z1)`` strictly inside the chart's validity region."""
    c = chart.curve
    hi = chart.r_max if r_hi is None else min(r_hi, chart.r_max)
    r1 = rng.uniform(c.r_min, hi, 4 * n)
    d = chart.half_width(r1)
    keep = d > 1e-3
    r1, d = r1[keep][:n], d[keep][:n]
    z1 = rng.uniform(-0.99, 0.99, r1.size) * d
    return r1, z1


def check_constants():
    c0, c1 = profile.constants()
    return [Check("c0 = 2 sqrt2/3", abs(c0 - profile.C0_EXACT), 1e-10),
            Check("c1 = 8", abs(c1 - profile.C1_EXACT), 1e-8)]


def check_toda():
    worst = 0.0
    for eps in (1.0, 0.1, 0.01):
        q = reduced.TodaSolution(eps)
        for r in (0.1, 1.0, 10.0, 100.0):
            worst = max(worst, abs(reduced.toda_residual(q, r)))
    cov = 0.0
    for eps in (0.5, 0.1, 0.01):
        for r in (0.0, 0.3, 7.0, 250.0):
            lhs = reduced.toda_explicit(eps, r)
            rhs = reduced.toda_explicit(1.0, eps * r) - 0.5 * SQRT2 * math.log(eps)
            cov = max(cov, abs(lhs - rhs))
    slope = abs(1e3 * reduced.toda_explicit(1.0, 1e3, 1) - SQRT2)
    return [Check("Toda residual, 12 (eps, r) pairs", worst, 1e-9),
            Check("Toda scaling covariance", cov, 1e-12),
            Check("r q'(r) -> sqrt2 at r = 1e3", slope, 1e-3)]


def _curves():
    return [("catenoid k=2", geometry.CatenoidCurve(2.0), 200.0),
            ("catenoid k=6", geometry.CatenoidCurve(6.0), 200.0),
            ("Toda eps=0.1", geometry.TodaCurve(0.1), 200.0)]


def check_fermi(rng, n_metric=10_000, n_round=1_000):
    out = []
    for name, curve, r_hi in _curves():
        chart = geometry.FermiChart(curve, r_max=r_hi)
        r1, z1 = admissible_points(chart, n_metric, rng)
        A, B = geometry.metric_factors(chart, r1, z1)
        fp = curve.df(r1)
        ident = np.max(np.abs(A - (1.0 + fp * fp) * B * B) / A)
        out.append(Check(f"A = (1+f'^2)B^2 ({name})", float(ident), 1e-12))
        r1, z1 = admissible_points(chart, n_round, rng)
        worst = 0.0
        for a, b in zip(r1, z1):
            x, y = geometry.fermi_forward(chart, a, b)
            ra, za = geometry.fermi_inverse(chart, x, y)
            worst = max(worst, abs(ra - a), abs(za - b))
        out.append(Check(f"Fermi round trip ({name})", worst, 1e-10))
    return out


def check_catenoid():
    c = geometry.CatenoidCurve(2.0)
    return [Check("catenoid f(4) = 2 arccosh 2", abs(c.f(4.0) - 2.0 * math.acosh(2.0)), 1e-12)]


def check_jacobi(n=201):
    zs = np.linspace(-10.0, 10.0, n)
    ode = 0.0
    wr = 0.0
    for z in zs:
        r1, r2 = reduced.jacobi_residuals(z)
        ode = max(ode, abs(r1), abs(r2))
        wr = max(wr, abs(reduced.wronskian_defect(z)))
    return [Check("Jacobi ODE residuals on [-10, 10]", ode, 1e-10),
            Check("Wronskian - cosh^2 z on [-10, 10]", wr, 1e-10)]


def check_flux_monotone():
    traj = reduced.integrate_reduced(2.0, 0.3, 1.0, 1e4)
    drop = float(max(0.0, -np.min(np.diff(traj.mu))))
    return [Check("flux mu nondecreasing along a trajectory", drop, 1e-12)]


def run_oracles(seed=0):
    rng = np.random.default_rng(seed)
    checks = []
    checks += check_constants()
    checks += check_toda()
    checks += check_catenoid()
    checks += check_fermi(rng)
    checks += check_jacobi()
    checks += check_flux_monotone()
    return checks
