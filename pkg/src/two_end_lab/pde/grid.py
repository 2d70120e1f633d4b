"""Structured grids on the meridian half plane and fields living on them."""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from ..errors import DomainError

MAX_SPACING = 0.25

NEUMANN = "neumann"
DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class AxiGrid:
    """Nodes ``(i h_r, z0 + j h_z)`` for ``0 <= i < n_r``, ``0 <= j < n_z``.

    Arrays on the grid have shape ``(n_z, n_r)``: rows are heights, columns
    are radii. ``z0`` is 0 for the usual half strip.
    """

    R: float
    Z: float
    n_r: int
    n_z: int
    z0: float = 0.0

    def __post_init__(self):
        if self.n_r < 3 or self.n_z < 3:
            raise DomainError("grid needs at least 3 nodes per direction")
        if not (self.R > 0 and self.Z > 0):
            raise DomainError("grid extents must be positive")
        if self.h_r > MAX_SPACING + 1e-12 or self.h_z > MAX_SPACING + 1e-12:
            raise DomainError(f"grid spacing must not exceed {MAX_SPACING} to resolve the interface")

    @classmethod
    def from_spacing(cls, R, Z, h, z0=0.0):
        n_r = int(round(R / h)) + 1
        n_z = int(round(Z / h)) + 1
        if not (math.isclose((n_r - 1) * h, R) and math.isclose((n_z - 1) * h, Z)):
            raise DomainError(f"extents {R} x {Z} are not multiples of h = {h}")
        return cls(R, Z, n_r, n_z, z0)

    @property
    def h_r(self):
        return self.R / (self.n_r - 1)

    @property
    def h_z(self):
        return self.Z / (self.n_z - 1)

    @property
    def shape(self):
        return (self.n_z, self.n_r)

    @property
    def r(self):
        return np.arange(self.n_r) * self.h_r

    @property
    def z(self):
        return self.z0 + np.arange(self.n_z) * self.h_z

    def mesh(self):
        """``(RR, ZZ)`` arrays of node coordinates, shape ``(n_z, n_r)``."""
        return np.meshgrid(self.r, self.z)

    def quadrature_weights(self):
        """Trapezoid weights of the area measure dr dz."""
        wr = np.full(self.n_r, self.h_r)
        wr[[0, -1]] *= 0.5
        wz = np.full(self.n_z, self.h_z)
        wz[[0, -1]] *= 0.5
        return wz[:, None] * wr[None, :]


@dataclass(frozen=True)
class BoundarySpec:
    """Condition on each edge; the axis r = 0 is always the regular axis."""

    bottom: str = NEUMANN
    top: str = DIRICHLET
    right: str = DIRICHLET

    def __post_init__(self):
        for side in (self.bottom, self.top, self.right):
            if side not in (NEUMANN, DIRICHLET):
                raise DomainError(f"unknown boundary kind {side!r}")

    def dirichlet_mask(self, grid):
        m = np.zeros(grid.shape, dtype=bool)
        if self.bottom == DIRICHLET:
            m[0, :] = True
        if self.top == DIRICHLET:
            m[-1, :] = True
        if self.right == DIRICHLET:
            m[:, -1] = True
        return m


@dataclass(frozen=True)
class ScalarField:
    """Values on a grid plus boundary data.

    Dirichlet edges take their values from ``values`` itself. ``k`` and
    ``c`` record the far-field parameters used to fill them. ``evaluator``,
    when present, is the exact closed form the values were sampled from and
    is used in place of interpolation.
    """

    grid: AxiGrid
    values: np.ndarray
    bc: BoundarySpec = BoundarySpec()
    k: float = math.nan
    c: float = math.nan
    evaluator: object = field(default=None, compare=False, repr=False)
    history: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise DomainError(f"values have shape {v.shape}, grid expects {self.grid.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values, **changes):
        changes.setdefault("evaluator", None)
        return replace(self, values=np.array(values, dtype=float), **changes)

    @property
    def free_mask(self):
        return ~self.bc.dirichlet_mask(self.grid)

    def max_abs(self):
        return float(np.max(np.abs(self.values)))

    def interpolator(self):
        """Callable ``(r, z) -> u`` for points inside the grid.

        Bicubic spline on the grid extended by its even reflections across
        the axis and, for the half strip, across z = 0.
        """
        if self.evaluator is not None:
            return self.evaluator
        from scipy.interpolate import RectBivariateSpline

        g = self.grid
        r, z, v = g.r, g.z, self.values
        # mirror a few columns across the axis so the spline sees evenness
        m = min(4, g.n_r - 1)
        r = np.concatenate([-r[m:0:-1], r])
        v = np.concatenate([v[:, m:0:-1], v], axis=1)
        even_z = g.z0 == 0.0 and self.bc.bottom == "neumann"
        if even_z:
            mz = min(4, g.n_z - 1)
            z = np.concatenate([-z[mz:0:-1], z])
            v = np.concatenate([v[mz:0:-1, :], v], axis=0)
        spline = RectBivariateSpline(z, r, v, kx=3, ky=3)

        def evaluate(rr, zz):
            rr = np.asarray(rr, dtype=float)
            zz = np.asarray(zz, dtype=float)
            return spline.ev(np.abs(zz) if even_z else zz, np.abs(rr))

        return evaluate
