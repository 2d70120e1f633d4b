"""Axisymmetric Allen-Cahn discretisation, ansatz, diagnostics and decomposition."""
from .grid import AxiGrid, BoundarySpec, ScalarField, DIRICHLET, NEUMANN
from .solver import laplacian_matrix, residual, residual_values, newton_solve
from .ansatz import (far_field_bc, catenoid_offset, toda_offset, asymptote, apply_far_field,
                     ApproximateSolution, build_approximate_solution, perturbed_flat_interface)
from .diagnostics import (balancing_flux, monotonicity_check, growth_rate_fit, find_apex,
                          interface_residual_profile, bump, Apex, FluxResult,
                          MonotonicityReport, ConditioningWarning, BoundaryContaminationWarning)
from .decompose import decompose_interface, InterfaceDecomposition, slice_envelope
