"""Pseudo-arclength continuation of truncated two-end solutions.

The family is parametrised by the boundary growth rate lambda: the Dirichlet
edges carry the far-field profile with k = lambda and the catenoid offset
c = lambda ln(2/lambda). The unknowns are all nodal values plus lambda; the
bordered system

    [ J        G_lambda ] [du]      [G]
    [ t_u^T W  t_lambda ] [dl]  = - [N]

is solved with one LU factorisation of J and two back substitutions.
"""
import dataclasses
from dataclasses import dataclass
import csv
import io
import math
import warnings

import numpy as np

from .errors import ContinuationError, DomainError, NonConvergenceError
from .geometry import nodal_curve_from_field
from .pde.ansatz import apply_far_field, catenoid_offset, R_BC_MIN
from .pde.diagnostics import (balancing_flux, find_apex, growth_rate_fit, monotonicity_check,
                              ConditioningWarning)
from .pde.solver import LinearSolver, jacobian, laplacian_matrix, residual_values
from .profile import heteroclinic
from .reduced import catenoid_match_error, trajectory_from_curve

SQRT2 = math.sqrt(2.0)
BRANCH_COLUMNS = ("s", "k", "c", "apex_axis", "apex_dist", "newton_iters", "residual_norm")


def boundary_offset(lam):
    return catenoid_offset(lam)


def _boundary_derivative(grid, bc, lam):
    """d/dlambda of the Dirichlet data, zero on free nodes."""
    c = boundary_offset(lam)
    dc = math.log(2.0 / lam) - 1.0
    r = np.maximum(grid.r, R_BC_MIN)
    out = np.zeros(grid.shape)

    def dfar(rr, zz):
        s = lam * np.log(rr) + c
        ds = np.log(rr) + dc
        return -(heteroclinic(zz - s, 1) + heteroclinic(-zz - s, 1)) * ds

    z = grid.z
    if bc.top == "dirichlet":
        out[-1, :] = dfar(r, z[-1])
    if bc.bottom == "dirichlet":
        out[0, :] = dfar(r, z[0])
    if bc.right == "dirichlet":
        out[:, -1] = dfar(r[-1], z)
    return out


@dataclass
class ContinuationControls:
    ds0: float = 0.5
    ds_min: float = 0.05
    ds_max: float = 1.0
    k_floor: float = 1.5
    k_ceiling: float = 10.0
    max_points: int = 12
    newton_tol: float = 1e-9
    branch_tol: float = 1e-8
    max_corrector: int = 10
    max_halvings: int = 4
    fast_iters: int = 3
    slow_iters: int = 6
    cond_limit: float = 1e12
    fit_fraction: float = 0.5

    def __post_init__(self):
        if not (0 < self.ds_min <= self.ds0 <= self.ds_max):
            raise DomainError("need 0 < ds_min <= ds0 <= ds_max")
        if not SQRT2 < self.k_floor < self.k_ceiling:
            raise DomainError("need sqrt2 < k_floor < k_ceiling")
        if self.max_points < 1:
            raise DomainError("max_points must be positive")


@dataclass
class BranchPoint:
    field: object = dataclasses.field(repr=False)
    k: float           # growth rate fitted to the nodal curve
    c: float
    k_bc: float        # continuation parameter (boundary growth rate)
    apex_axis: str
    apex_dist: float
    s: float
    newton_iters: int
    residual_norm: float
    diagnostics: dict = dataclasses.field(default_factory=dict)

    def row(self):
        return (self.s, self.k, self.c, self.apex_axis, self.apex_dist, self.newton_iters,
                self.residual_norm)


@dataclass
class SolutionBranch:
    points: list
    direction: int
    reason: str
    controls: ContinuationControls
    final_ds: float = math.nan
    events: list = dataclasses.field(default_factory=list)

    def table(self):
        return [p.row() for p in self.points]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(BRANCH_COLUMNS)
        for row in self.table():
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
        return buf.getvalue()


def _fit(field, fraction):
    curve = nodal_curve_from_field(field)
    R = field.grid.R
    lo = max(fraction * R, 10.0, curve.r_min)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        k, c, rms = growth_rate_fit(curve, (lo, min(R, curve.r_max)))
    return curve, k, c, rms


def point_diagnostics(field, rects=None):
    """Monotonicity and balancing-flux checks at the field's own tolerance."""
    g = field.grid
    if rects is None:
        R, Z = g.R, g.Z
        hr = g.h_r

        def snap(x):
            return round(x / hr) * hr

        rects = [(snap(R / 6), snap(R / 3), snap(Z / 4)),
                 (snap(R / 7.5), snap(R / 2), snap(5 * Z / 12)),
                 (snap(R / 12), snap(2 * R / 3), snap(7 * Z / 12))]
    mono = monotonicity_check(field)
    fluxes = [balancing_flux(field, *rc) for rc in rects]
    return dict(monotonicity=mono.to_dict(), flux=[f.to_dict() for f in fluxes],
                passed=bool(mono.passed and all(f.passed for f in fluxes)))


def make_point(field, k_bc, s, iters, res_norm, controls, diagnostics=True):
    curve, k, c, rms = _fit(field, controls.fit_fraction)
    apex = find_apex(field)
    diag = point_diagnostics(field) if diagnostics else {}
    diag["fit_rms"] = rms
    return BranchPoint(field, k, c, k_bc, apex.axis, apex.dist, s, iters, res_norm, diag)


class _BorderedSystem:
    def __init__(self, field):
        self.grid = field.grid
        self.bc = field.bc
        self.free = field.free_mask.ravel()
        self.L = laplacian_matrix(self.grid, self.bc)
        self.weights = (self.grid.quadrature_weights() / (self.grid.R * self.grid.Z)).ravel()

    def dirichlet(self, u, lam):
        target = apply_far_field(u.reshape(self.grid.shape), self.grid, self.bc,
                                 lam, boundary_offset(lam)).ravel()
        return np.where(self.free, 0.0, u - target)

    def G(self, u, lam):
        f = residual_values(u.reshape(self.grid.shape), self.grid, self.bc).ravel()
        return f + self.dirichlet(u, lam)

    def G_lam(self, lam):
        return -_boundary_derivative(self.grid, self.bc, lam).ravel()

    def norm2(self, du, dl):
        return float(np.sum(self.weights * du * du) + dl * dl)

    def correct(self, u, lam, tangent, anchor, max_iter, tol, cond_limit):
        """Newton on (G, N) = 0 with N the arclength hyperplane through ``anchor``."""
        tu, tl = tangent
        au, al = anchor
        wt = self.weights * tu
        for it in range(1, max_iter + 1):
            g = self.G(u, lam)
            n = float(np.dot(wt, u - au) + tl * (lam - al))
            solver = LinearSolver(jacobian(self.L, u, self.free))
            diag = np.abs(solver.lu.U.diagonal())
            cond = float(diag.max() / max(diag.min(), 1e-300))
            a = solver.solve(-g)
            b = solver.solve(-self.G_lam(lam))
            denom = float(np.dot(wt, b) + tl)
            if cond > cond_limit or abs(denom) < 1e-12:
                raise NonConvergenceError(f"bordered Jacobian is singular (cond {cond:.2e})")
            dl = (-n - float(np.dot(wt, a))) / denom
            du = a + dl * b
            u = u + du
            lam = lam + dl
            res = float(np.max(np.abs(self.G(u, lam))))
            if res < tol:
                return u, lam, it, res
            if not math.isfinite(res) or res > 1e3:
                break
        raise NonConvergenceError("arclength corrector did not converge")

    def natural(self, u, lam, max_iter, tol, cond_limit):
        """Solve at fixed lambda (tangent along the parameter axis)."""
        return self.correct(u, lam, (np.zeros_like(u), 1.0), (u, lam), max_iter, tol,
                            cond_limit)


def trace_branch(start, direction, controls=None, log=None):
    """Follow the branch from a converged ``start`` field in ``direction`` (+1 or -1).

    ``start`` must carry ``k`` (its boundary growth rate). Returns a
    :class:`SolutionBranch`; the first point is the start itself.
    """
    if direction not in (1, -1):
        raise DomainError("direction must be +1 or -1")
    ctl = controls or ContinuationControls()
    if not math.isfinite(start.k):
        raise DomainError("start field must record its boundary growth rate k")
    sys = _BorderedSystem(start)
    u0 = start.values.ravel().copy()
    lam0 = float(start.k)
    res0 = float(np.max(np.abs(sys.G(u0, lam0))))
    if res0 >= ctl.branch_tol:
        try:
            u0, lam0, _, res0 = sys.natural(u0, lam0, ctl.max_corrector, ctl.newton_tol,
                                            ctl.cond_limit)
        except NonConvergenceError as exc:
            raise ContinuationError(f"start point does not converge: {exc}") from exc
    say = log or (lambda msg: None)
    pts = [make_point(start.with_values(u0.reshape(start.grid.shape), k=lam0,
                                        c=boundary_offset(lam0), history=()),
                      lam0, 0.0, 0, res0, ctl)]
    say(f"point 0: k_bc={lam0:.4f} k={pts[0].k:.4f} apex={pts[0].apex_axis}:{pts[0].apex_dist:.3f}")
    branch = SolutionBranch(pts, direction, "max_points", ctl)
    prev = None  # (u, lam) of the point before the last
    cur = (u0, lam0)
    ds = ctl.ds0
    s = 0.0
    limit = ctl.k_floor if direction < 0 else ctl.k_ceiling
    while len(pts) < ctl.max_points:
        if prev is None:
            tu, tl = np.zeros_like(u0), float(direction)
        else:
            du = cur[0] - prev[0]
            dl = cur[1] - prev[1]
            nrm = math.sqrt(sys.norm2(du, dl))
            tu, tl = du / nrm, dl / nrm
        halvings = 0
        while True:
            lam_pred = cur[1] + ds * tl
            landing = (lam_pred - limit) * direction >= 0
            try:
                if landing:
                    u_new, lam_new, its, res = sys.natural(cur[0], limit, ctl.max_corrector,
                                                           ctl.newton_tol, ctl.cond_limit)
                else:
                    u_pred = cur[0] + ds * tu
                    u_new, lam_new, its, res = sys.correct(u_pred, lam_pred, (tu, tl),
                                                           (u_pred, lam_pred),
                                                           ctl.max_corrector, ctl.newton_tol,
                                                           ctl.cond_limit)
                break
            except NonConvergenceError as exc:
                branch.events.append(f"corrector failed at ds={ds:.4g}: {exc}")
                if len(pts) == 1 and halvings >= ctl.max_halvings:
                    raise ContinuationError(f"cannot start the branch: {exc}") from exc
                halvings += 1
                ds *= 0.5
                if halvings > ctl.max_halvings:
                    branch.reason = "nonconvergence"
                    branch.final_ds = ds
                    return branch
                if ds < ctl.ds_min:
                    branch.reason = "step_underflow"
                    branch.final_ds = ds
                    return branch
        s += math.sqrt(sys.norm2(u_new - cur[0], lam_new - cur[1]))
        fld = start.with_values(u_new.reshape(start.grid.shape), k=lam_new,
                                c=boundary_offset(lam_new), history=())
        pt = make_point(fld, lam_new, s, its, res, ctl)
        pts.append(pt)
        say(f"point {len(pts) - 1}: k_bc={lam_new:.4f} k={pt.k:.4f} "
            f"apex={pt.apex_axis}:{pt.apex_dist:.3f} iters={its} ds={ds:.3g}")
        prev, cur = cur, (u_new, lam_new)
        if landing:
            branch.reason = "k_floor_reached" if direction < 0 else "k_ceiling_reached"
            break
        if its <= ctl.fast_iters:
            ds = min(ctl.ds_max, 1.5 * ds)
        elif its >= ctl.slow_iters:
            ds = max(ctl.ds_min, 0.5 * ds)
    branch.final_ds = ds
    return branch


def classify_endpoint(point, threshold=6.0, match_constant=1.0):
    """``"toda_like"``, ``"catenoid_like"`` or ``"interior"`` with a note.

    Toda-like: apex on the z-axis farther than ``threshold`` and k < sqrt2 + 0.3.
    Catenoid-like: apex on the r-axis farther than ``threshold``, growth rate
    within 20% of the apex distance, and the nodal curve within
    ``match_constant * k / |apex|`` (relative to k) of the catenoid with the
    fitted growth rate on the neck window 0 <= z <= k. Failed consistency
    checks downgrade to interior.
    """
    axis, dist, k = point.apex_axis, point.apex_dist, point.k
    if not (math.isfinite(dist) and dist > threshold):
        return "interior", "apex within threshold"
    if axis == "z":
        if k < SQRT2 + 0.3:
            return "toda_like", ""
        msg = f"z-axis apex but growth rate {k:.3f} is not close to sqrt2"
        warnings.warn(msg)
        return "interior", msg
    if abs(k - dist) / k >= 0.2:
        msg = f"r-axis apex {dist:.3f} and growth rate {k:.3f} disagree"
        warnings.warn(msg)
        return "interior", msg
    if point.field is not None:
        curve = nodal_curve_from_field(point.field)
        traj = trajectory_from_curve(curve, curve.r)
        top = min(k, float(np.max(traj.p)))
        err = catenoid_match_error(traj, 1.0 / k, (0.0, top))
        if err / k > match_constant / dist:
            msg = f"nodal curve is {err:.3f} from the catenoid (allowed {match_constant * k / dist:.3f})"
            warnings.warn(msg)
            return "interior", msg
    return "catenoid_like", ""


def branch_report(branch):
    return dict(direction=branch.direction, reason=branch.reason, final_ds=branch.final_ds,
                events=list(branch.events),
                points=[dict(zip(BRANCH_COLUMNS, p.row()), k_bc=p.k_bc,
                             diagnostics_passed=p.diagnostics.get("passed")) for p in branch.points])


__all__ = ["ContinuationControls", "BranchPoint", "SolutionBranch", "trace_branch",
           "classify_endpoint", "make_point", "point_diagnostics", "branch_report",
           "boundary_offset", "BRANCH_COLUMNS"]
