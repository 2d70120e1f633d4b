"""Finite differences and Newton's method for u_zz + u_rr + u_r/r + u - u^3 = 0."""
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .. import _kernels
from ..errors import DivergenceError, DomainError, NonConvergenceError
from .grid import DIRICHLET, NEUMANN


def laplacian_matrix(grid, bc):
    """Sparse second-order axisymmetric Laplacian with reflected ghost nodes.

    Rows of Dirichlet nodes are empty. The axis column uses 2 u_rr with the
    even ghost u(-h_r) = u(h_r).
    """
    n_z, n_r = grid.shape
    h_r, h_z = grid.h_r, grid.h_z
    J, I = np.divmod(np.arange(n_z * n_r), n_r)
    free = ~bc.dirichlet_mask(grid).ravel()
    rows, cols, vals = [], [], []

    def add(mask, col, val):
        rows.append(np.flatnonzero(mask))
        cols.append(col[mask])
        vals.append(np.broadcast_to(val, mask.shape)[mask])

    k = np.arange(n_z * n_r)
    izz, irr = 1.0 / h_z**2, 1.0 / h_r**2
    # z direction: a missing neighbour is mirrored (Neumann) or unused (Dirichlet row)
    up = np.where(J < n_z - 1, J + 1, n_z - 2)
    dn = np.where(J > 0, J - 1, 1)
    add(free, up * n_r + I, izz)
    add(free, dn * n_r + I, izz)
    add(free, k, -2.0 * izz)
    axis = free & (I == 0)
    add(axis, k + 1, 4.0 * irr)
    add(axis, k, -4.0 * irr)
    rest = free & (I > 0)
    r = np.where(I > 0, I * h_r, 1.0)
    right = np.where(I < n_r - 1, I + 1, n_r - 2)
    add(rest, J * n_r + right, irr + 0.5 / (h_r * r))
    add(rest, J * n_r + I - 1, irr - 0.5 / (h_r * r))
    add(rest, k, -2.0 * irr)
    L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n_z * n_r, n_z * n_r))
    L.sum_duplicates()
    return L


def residual_values(values, grid, bc):
    """Discrete Allen-Cahn residual, zero on Dirichlet nodes."""
    out = _kernels.allen_cahn_operator(values, grid.h_r, grid.h_z)
    out[bc.dirichlet_mask(grid)] = 0.0
    return out


def residual(field):
    """E(u) on the grid, returned as a field sharing ``field``'s grid."""
    return field.with_values(residual_values(field.values, field.grid, field.bc))


def jacobian(L, u, free):
    """L + diag(1 - 3u^2) on free rows, identity on Dirichlet rows."""
    d = np.where(free, 1.0 - 3.0 * u * u, 1.0)
    return (L + sp.diags(d)).tocsc()


class LinearSolver:
    """Sparse LU with iterative refinement to a relative residual target."""

    def __init__(self, A, rtol=1e-10, refinements=4):
        self.A = A
        self.rtol = rtol
        self.refinements = refinements
        self.lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A",
                            options=dict(SymmetricMode=True), diag_pivot_thresh=0.0)

    def solve(self, b):
        x = self.lu.solve(b)
        nb = np.linalg.norm(b)
        if nb == 0.0:
            return x
        for _ in range(self.refinements):
            res = b - self.A @ x
            if np.linalg.norm(res) <= self.rtol * nb:
                break
            x += self.lu.solve(res)
        return x


def newton_solve(initial, tol=1e-9, max_iter=30, max_halvings=8, divergence_factor=10.0,
                 linear_rtol=1e-10, log=None):
    """Damped Newton iteration from ``initial``; Dirichlet values stay fixed.

    Steps are halved (at most ``max_halvings`` times) until the residual
    max-norm decreases. Returns a field whose ``history`` holds the residual
    max-norm after every iteration, starting with the initial one.
    """
    if tol < 1e-10:
        raise DomainError("Newton tolerance below 1e-10 is not attainable in double precision")
    grid, bc = initial.grid, initial.bc
    u = initial.values.ravel().copy()
    free = initial.free_mask.ravel()
    L = laplacian_matrix(grid, bc)

    def F(v):
        return residual_values(v.reshape(grid.shape), grid, bc).ravel()

    f = F(u)
    norm = float(np.max(np.abs(f)))
    if not math.isfinite(norm):
        raise DomainError("initial residual is not finite")
    history = [norm]
    first = norm
    for it in range(max_iter):
        if norm < tol:
            break
        du = LinearSolver(jacobian(L, u, free), rtol=linear_rtol).solve(-f)
        lam = 1.0
        for _ in range(max_halvings + 1):
            trial = u + lam * du
            f_trial = F(trial)
            n_trial = float(np.max(np.abs(f_trial)))
            if n_trial < norm:
                break
            lam *= 0.5
        u, f, norm = trial, f_trial, n_trial
        history.append(norm)
        if log is not None:
            log(f"newton {it + 1}: |E|_inf = {norm:.3e} (step {lam:g})")
        if not math.isfinite(norm) or norm > divergence_factor * first:
            raise DivergenceError(f"Newton diverged: residual {norm:.3e} vs initial {first:.3e}",
                                  history)
    else:
        if norm >= tol:
            raise NonConvergenceError(f"Newton did not reach {tol:g} in {max_iter} iterations "
                                      f"(residual {norm:.3e})", history)
    return initial.with_values(u.reshape(grid.shape), history=tuple(history),
                               k=initial.k, c=initial.c)


__all__ = ["laplacian_matrix", "residual", "residual_values", "jacobian", "LinearSolver",
           "newton_solve", "DIRICHLET", "NEUMANN"]
