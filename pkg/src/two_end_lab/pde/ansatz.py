"""Far-field boundary data and the approximate solution built from a nodal curve."""
import math

import numpy as np

from ..errors import ConstructionError, DomainError
from ..geometry import CatenoidCurve, FermiChart, TodaCurve, smoothstep
from ..profile import heteroclinic
from .grid import AxiGrid, BoundarySpec, ScalarField

SQRT2 = math.sqrt(2.0)

# the top edge meets the axis; the logarithm is evaluated no closer than this
R_BC_MIN = 1.0


def far_field_bc(k, c, r, z):
    """H(z - k ln r - c) + H(-z - k ln r - c) + 1, even in z."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("far-field profile needs r > 0")
    s = k * np.log(r) + c
    return heteroclinic(np.asarray(z) - s) + heteroclinic(-np.asarray(z) - s) + 1.0


def catenoid_offset(k, b=0.0):
    """c in f(r) ~ k ln r + c for the catenoid graph: k arccosh(r/k) ~ k ln(2r/k)."""
    return k * math.log(2.0 / k) + b


def toda_offset(eps, a):
    """c in q_eps(r) ~ sqrt2 ln r + c."""
    return math.log(a * a / 8.0) / (2.0 * SQRT2) + 0.5 * SQRT2 * math.log(eps)


def asymptote(curve):
    """(k, c) of the logarithmic asymptote z = k ln r + c of an analytic curve."""
    if isinstance(curve, CatenoidCurve):
        return curve.k, catenoid_offset(curve.k, curve.b)
    if isinstance(curve, TodaCurve):
        return SQRT2, toda_offset(curve.eps, curve.a)
    raise DomainError(f"no closed-form asymptote for a {curve.kind} curve")


# sheet height above which the mirrored half is added back in
NECK_SPLIT = 3.0


def apply_far_field(values, grid, bc, k, c):
    """Overwrite the Dirichlet edges of ``values`` with the far-field profile."""
    out = np.array(values, dtype=float)
    r = np.maximum(grid.r, R_BC_MIN)
    z = grid.z
    if bc.top == "dirichlet":
        out[-1, :] = far_field_bc(k, c, r, z[-1])
    if bc.bottom == "dirichlet":
        out[0, :] = far_field_bc(k, c, r, z[0])
    if bc.right == "dirichlet":
        out[:, -1] = far_field_bc(k, c, r[-1], z)
    return out


class ApproximateSolution:
    """Closed form u_bar = H1 + H1^s + 1 around ``curve``, modulated by ``h``.

    H1 = eta H(z1 - h(r1)) + (1 - eta) sign, where sign is +1 above the
    curve and -1 below; H1^s(r, z) = H1(r, -z) comes from the mirror curve.
    Overlap of the two "+1" sides is clipped at 1. Around a catenoid neck
    the halves are one surface, so there u_bar is H1(r, |z|) alone.
    """

    def __init__(self, chart, h=None):
        self.chart = chart
        self.h = h
        c = chart.curve
        self.neck = bool(c.tangent(c.r_min)[0] < 1e-12)

    def upper(self, r, z, mirror=False):
        """H1 at (r, z) together with the Fermi coordinates used.

        With ``mirror`` the point stands for the reflected sheet, and the
        region r < r_min under a neck counts as below it.
        """
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        ch = self.chart
        c = ch.curve
        r1, z1, valid = ch.project(r, z)
        eta = np.where(valid, ch.cutoff(r1, z1), 0.0)
        above = c.is_above(r, z)
        if self.neck:
            # points whose foot clips to the apex get z1 along the horizontal
            # apex normal, with eta ramped down by the overshoot along the
            # tangent, so H1 stays continuous across z = 0
            apex = ~valid & (r1 <= c.r_min) & (np.abs(z1) < ch.half_width(c.r_min))
            over = np.abs(z - c.f(c.r_min))
            ramp = smoothstep(1.0 - over / ch.transition_width)
            eta = np.where(apex, ch.cutoff(c.r_min, z1) * ramp, eta)
            valid = valid | apex
            if mirror:
                above = above & (r >= c.r_min)
        side = np.where(above, 1.0, -1.0)
        shift = 0.0 if self.h is None else self.h(r1)
        prof = heteroclinic(np.where(valid, z1 - shift, 0.0))
        return eta * prof + (1.0 - eta) * side, r1, z1, valid

    def blend(self, near, far, r1):
        """u_bar from the near and mirrored halves, and d u_bar / d near.

        ``r1`` is the foot of the near half.
        """
        raw = near + far + 1.0
        both = np.minimum(raw, 1.0)
        slope = (raw < 1.0).astype(float)
        if not self.neck:
            return both, slope
        # use the near half alone until the sheets are well apart
        w = smoothstep((self.chart.curve.f(r1) - NECK_SPLIT) / 2.0)
        return (1.0 - w) * near + w * both, (1.0 - w) + w * slope

    def __call__(self, r, z):
        za = np.abs(np.asarray(z, dtype=float))
        near, r1 = self.upper(r, za)[:2]
        far = self.upper(r, -za, mirror=True)[0]
        return self.blend(near, far, r1)[0]


def build_approximate_solution(curve, chart=None, grid=None, k=None, c=None,
                               bc=BoundarySpec()):
    """Sample the approximate solution on ``grid`` and attach far-field edges.

    ``(k, c)`` default to the curve's closed-form asymptote and are used for
    the Dirichlet edges only; h = 0 in the ansatz.
    """
    if grid is None:
        raise DomainError("a grid is required")
    if chart is None:
        chart = FermiChart(curve, r_max=min(curve.r_max, 4.0 * grid.R))
    if k is None or c is None:
        k, c = asymptote(curve)
    ubar = ApproximateSolution(chart)
    RR, ZZ = grid.mesh()
    vals = ubar(RR, ZZ)
    bad = ~np.isfinite(vals)
    if bad.any():
        nodes = list(zip(*np.nonzero(bad)))
        raise ConstructionError(f"{len(nodes)} nodes have no defined ansatz value", nodes=nodes)
    exits = curve.f(min(grid.R, curve.r_max)) if grid.R >= curve.r_min else math.inf
    if not exits < grid.z[-1]:
        raise ConstructionError("nodal curve leaves through the top edge; enlarge Z or shrink R")
    vals = apply_far_field(vals, grid, bc, k, c)
    return ScalarField(grid, vals, bc, k=k, c=c, evaluator=ubar)


def perturbed_flat_interface(grid, shift, noise=0.0, seed=0):
    """H(z - shift) on a strip with Dirichlet bottom and top, Neumann right.

    Interior nodes get uniform noise of amplitude ``noise``; the field is
    r-independent before the perturbation.
    """
    bc = BoundarySpec(bottom="dirichlet", top="dirichlet", right="neumann")
    vals = np.broadcast_to(heteroclinic(grid.z - shift)[:, None], grid.shape).copy()
    if noise:
        rng = np.random.default_rng(seed)
        inner = np.s_[1:-1, :]
        vals[inner] += noise * rng.uniform(-1.0, 1.0, vals[inner].shape)
    return ScalarField(grid, vals, bc)


__all__ = ["far_field_bc", "catenoid_offset", "toda_offset", "asymptote", "apply_far_field",
           "ApproximateSolution", "build_approximate_solution", "perturbed_flat_interface",
           "AxiGrid", "R_BC_MIN"]
