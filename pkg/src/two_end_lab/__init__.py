"""Numerical laboratory for axially symmetric two-end solutions of the Allen-Cahn equation.

Modules: ``profile`` (heteroclinic and constants), ``geometry`` (nodal curves,
Fermi charts), ``reduced`` (Toda and flux models, nonexistence probe),
``pde`` (grid solver, ansatz, diagnostics, decomposition), ``continuation``
(branch tracing), ``config``/``io``/``cli`` (runs and artifacts).
"""
from .profile import constants, heteroclinic

__version__ = "0.1.0"
__all__ = ["constants", "heteroclinic", "__version__"]
