"""Coupled alignment/synchronization model: particle simulation, closure
coefficients, hydrodynamic solver, and pattern diagnostics."""

from .coefficients import (
    ClosureCoefficients,
    EquilibriumPair,
    bessel_i,
    compute_c1,
    compute_K1_K2,
    gci_g,
    sample_equilibrium,
)

__version__ = "0.1.0"

__all__ = [
    "ClosureCoefficients",
    "EquilibriumPair",
    "bessel_i",
    "compute_c1",
    "compute_K1_K2",
    "gci_g",
    "sample_equilibrium",
    "__version__",
]
