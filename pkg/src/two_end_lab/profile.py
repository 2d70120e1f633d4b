"""Heteroclinic profile H(t) = tanh(t/sqrt2) and its interaction constants.

``c0`` is the squared L2 norm of H' and ``c1 = 3 sqrt2 * int H'(s)^2 exp(sqrt2 s) ds``.
Both are computed by composite Gauss-Legendre quadrature and cached once, so
every model in the package reads identical values.
"""
from dataclasses import dataclass
from functools import cached_property, lru_cache
import math

import numpy as np

from .errors import AccuracyError, DomainError

SQRT2 = math.sqrt(2.0)

C0_EXACT = 2.0 * SQRT2 / 3.0
C1_EXACT = 8.0


def _check_order(order):
    if order not in (0, 1, 2):
        raise DomainError(f"profile derivative order must be 0, 1 or 2, got {order!r}")


def heteroclinic(t, order=0):
    """H, H' or H'' at ``t`` (scalar or array) from the closed form."""
    _check_order(order)
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("heteroclinic profile evaluated at a non-finite point")
    th = np.tanh(t / SQRT2)
    if order == 0:
        out = th
    elif order == 1:
        out = (1.0 - th * th) / SQRT2
    else:
        # H'' = H^3 - H
        out = th * th * th - th
    return out if out.ndim else float(out)


def eval_profile(t, order=0):
    """Scalar evaluation of the profile; see :func:`heteroclinic`."""
    return heteroclinic(t, order)


def double_well(u):
    """F(u) = (u^2 - 1)^2 / 4."""
    u = np.asarray(u, dtype=float)
    return 0.25 * (u * u - 1.0) ** 2


def _sech4_times_exp(x, beta):
    # sech(x)^4 * exp(beta*x) without overflow, for |beta| < 4
    ax = np.abs(x)
    e = np.exp(-2.0 * ax)
    return 16.0 * np.exp(-4.0 * ax + beta * x) / (1.0 + e) ** 4


@dataclass(frozen=True)
class HeteroclinicProfile:
    """Closed-form profile plus quadrature settings for the two constants.

    ``half_width`` is the truncation T of the integration interval [-T, T];
    the interval is split into ``panels`` pieces carrying ``order`` Gauss
    nodes each, so N = panels * order.
    """

    half_width: float = 25.0
    panels: int = 100
    order: int = 20
    tol: float = 1e-10

    def __post_init__(self):
        if self.half_width < 10.0:
            raise DomainError("quadrature half-width below 10 cannot resolve the tails")
        if self.panels * self.order < 1000:
            raise DomainError("quadrature needs at least 1000 nodes")

    def H(self, t, order=0):
        return heteroclinic(t, order)

    def _rule(self, panels):
        x, w = np.polynomial.legendre.leggauss(self.order)
        edges = np.linspace(-self.half_width, self.half_width, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return nodes, weights

    def tail_estimate(self, fn):
        """Mass beyond +-T, assuming locally exponential decay of ``fn``."""
        T = self.half_width
        f = np.abs(fn(np.array([-T, -T + 1.0, T - 1.0, T])))
        tail = 0.0
        for edge, inner in ((f[0], f[1]), (f[3], f[2])):
            if edge == 0.0:
                continue
            rate = np.log(inner / edge)
            if rate <= 0.0:
                return np.inf
            tail += edge / rate
        return float(tail)

    def integrate(self, fn):
        """Integrate ``fn`` over [-T, T].

        The error estimate is the gap between the rule and the same rule on
        half as many panels, plus the exponential-tail mass beyond +-T.
        """
        fine = self._rule(self.panels)
        coarse = self._rule(max(1, self.panels // 2))
        val = float(np.dot(fine[1], fn(fine[0])))
        est = abs(val - float(np.dot(coarse[1], fn(coarse[0])))) + self.tail_estimate(fn)
        if est > self.tol * max(1.0, abs(val)):
            raise AccuracyError(f"quadrature under-resolved: estimated error {est:.3e}")
        return val

    def c0_integrand(self, t):
        # H'(t)^2 = sech^4(t/sqrt2) / 2
        return 0.5 * _sech4_times_exp(np.asarray(t) / SQRT2, 0.0)

    def c1_integrand(self, s):
        # H'(s)^2 exp(sqrt2 s); in x = s/sqrt2 the exponent is 2x
        return 0.5 * _sech4_times_exp(np.asarray(s) / SQRT2, 2.0)

    @cached_property
    def c0(self):
        return self.integrate(self.c0_integrand)

    @cached_property
    def c1(self):
        return 3.0 * SQRT2 * self.integrate(self.c1_integrand)

    def asymmetry_flag(self, s):
        """True when the c1 integrand is even at ``s`` (it should not be)."""
        f = self.c1_integrand(np.array([s, -s]))
        return bool(np.isclose(f[0], f[1], rtol=1e-12, atol=0.0))


@lru_cache(maxsize=None)
def default_profile():
    return HeteroclinicProfile()


def compute_c0(profile=None):
    return (profile or default_profile()).c0


def compute_c1(profile=None):
    return (profile or default_profile()).c1


@lru_cache(maxsize=None)
def constants():
    """The stored ``(c0, c1)`` pair every model uses."""
    p = default_profile()
    return p.c0, p.c1
