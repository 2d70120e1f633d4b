"""Split a field as u = u_bar_h + phi with phi orthogonal to the shifted kernel.

On every Fermi slice r1 = const the modulation h(r1) solves

    G(h) = int (u - u_bar_h)(X(r1, z1)) eta+(r1, z1) H'(z1 - h) dz1 = 0,

by scalar Newton, all slices at once. The mirror half of u_bar_h uses h from
the previous sweep; sweeps repeat until h stops changing.
"""
from dataclasses import dataclass, asdict
import math

import numpy as np
from scipy.integrate import simpson

from ..errors import DecompositionError, DomainError
from ..geometry import FermiChart, smoothstep
from ..profile import heteroclinic
from .ansatz import ApproximateSolution


@dataclass
class InterfaceDecomposition:
    r1: np.ndarray          # slice abscissae
    h: np.ndarray           # modulation per slice
    z1: np.ndarray          # (n_slices, n_quad) normal coordinates
    phi: np.ndarray         # (n_slices, n_quad) remainder u - u_bar_h
    slice_norms: np.ndarray  # max |phi| per slice
    orthogonality: np.ndarray  # G(h) per slice at the returned h
    sweeps: int

    def summary(self):
        return dict(slices=int(self.r1.size), max_abs_h=float(np.max(np.abs(self.h))),
                    max_phi=float(np.max(self.slice_norms)),
                    max_orthogonality=float(np.max(np.abs(self.orthogonality))),
                    sweeps=self.sweeps)


def default_slices(field, chart, count=200):
    """Slice abscissae whose whole tube segment lies inside the grid.

    Slices where the tube is narrower than the cutoff ramp, or that dip
    into the ramp of eta+ near the symmetry plane (where the two interfaces
    merge), are skipped.
    """
    g = field.grid
    c = chart.curve
    w = chart.transition_width
    r1 = np.linspace(c.r_min, min(chart.r_max, g.R), count + 2)[1:-1]
    d = chart.half_width(r1)
    lowest = c.f(r1) - d * c.tangent(r1)[0]
    keep = (d > w) & (lowest >= w)
    r1, d = r1[keep], d[keep]
    ok = np.ones(r1.size, dtype=bool)
    for sign in (-1.0, 1.0):
        rr, zz = chart.to_cartesian(r1, sign * d)
        ok &= (rr >= 0) & (rr <= g.R) & (zz <= g.z[-1])
    return r1[ok]


def decompose_interface(field, curve, chart=None, slices=None, n_quad=201, tol=1e-12,
                        max_newton=50, max_sweeps=30):
    """Find h on Fermi slices so that u - u_bar_h is orthogonal to eta+ H'(z1 - h).

    ``n_quad`` (odd) Simpson nodes span |z1| < d(r1) on each slice. The
    field's exact evaluator is used when present, otherwise a bicubic
    interpolant of the grid values.
    """
    if n_quad % 2 == 0:
        raise DomainError("Simpson quadrature needs an odd number of nodes")
    if chart is None:
        chart = FermiChart(curve, r_max=min(curve.r_max, field.grid.R))
    r1 = default_slices(field, chart) if slices is None else np.asarray(slices, dtype=float)
    if r1.size == 0:
        raise DomainError("no Fermi slice fits inside the grid")
    d = chart.half_width(r1)
    t = np.linspace(-1.0, 1.0, n_quad)
    Z1 = d[:, None] * t[None, :]
    R1 = np.broadcast_to(r1[:, None], Z1.shape)
    X, Y = chart.to_cartesian(R1, Z1)
    u = np.asarray(field.interpolator()(X, Y), dtype=float)

    eta = chart.cutoff(R1, Z1)
    eta_plus = eta * smoothstep(Y / chart.transition_width)
    side = np.where(Z1 > 0, 1.0, -1.0)
    ubar_h = ApproximateSolution(chart)

    h = np.zeros(r1.size)
    h_prev = h.copy()
    order = np.argsort(r1)

    def mirror_term(hh):
        ubar_h.h = lambda x: np.interp(x, r1[order], hh[order])
        return ubar_h.upper(X, -Y, mirror=True)[0]

    def pieces(hh, mirror):
        s = Z1 - hh[:, None]
        up = eta * heteroclinic(s) + (1.0 - eta) * side
        ubar, slope = ubar_h.blend(up, mirror, R1)
        return s, ubar, slope

    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        mirror = mirror_term(h_prev)
        for _ in range(max_newton):
            s, ubar, slope = pieces(h, mirror)
            hp = heteroclinic(s, 1)
            diff = u - ubar
            G = simpson(diff * eta_plus * hp, x=Z1, axis=1)
            # d(ubar)/dh = -slope eta H'(z1 - h); dH'/dh = -H''
            dG = simpson((slope * eta * hp * hp
                          - diff * heteroclinic(s, 2)) * eta_plus, x=Z1, axis=1)
            if np.any(np.abs(dG) < 1e-14):
                bad = int(np.argmin(np.abs(dG)))
                raise DecompositionError("orthogonality condition is degenerate on a slice",
                                         r1=float(r1[bad]))
            step = -G / dG
            h = h + step
            if np.max(np.abs(step)) < tol:
                break
        else:
            bad = int(np.argmax(np.abs(step)))
            raise DecompositionError("slice Newton did not converge", r1=float(r1[bad]))
        change = np.max(np.abs(h - h_prev))
        h_prev = h.copy()
        if change < tol:
            break
    s, ubar, _ = pieces(h, mirror_term(h))
    phi = u - ubar
    G = simpson(phi * eta_plus * heteroclinic(s, 1), x=Z1, axis=1)
    norms = np.max(np.abs(phi), axis=1)
    return InterfaceDecomposition(r1, h, Z1, phi, norms, G, sweeps)


def slice_envelope(r1, norms, bins=6, window=None):
    """Per-bin maxima of the slice norms over ``window`` (default: outer half)."""
    r1 = np.asarray(r1)
    lo, hi = (0.5 * (r1.min() + r1.max()), r1.max()) if window is None else window
    edges = np.linspace(lo, hi, bins + 1)
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        m = (r1 >= a) & (r1 <= b)
        out.append(float(np.max(norms[m])) if m.any() else math.nan)
    return edges, np.array(out)
