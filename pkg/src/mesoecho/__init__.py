"""Polarization echoes and decoherence in a two-leg XY spin ladder."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import (
    ConfigError,
    CriticalRegimeError,
    FitError,
    NumericalError,
    ResourceCapError,
    StepSizeError,
)
from .lattice import (
    Boundary,
    Chain,
    LadderSpec,
    SectorBasis,
    SparseHamiltonian,
    build_chain_hamiltonian,
    build_total_hamiltonian,
    build_transverse_hamiltonian,
    enumerate_sectors,
)


__all__ = [
    "BACKEND",
    "Boundary",
    "Chain",
    "ConfigError",
    "CriticalRegimeError",
    "FitError",
    "LadderSpec",
    "NumericalError",
    "ResourceCapError",
    "SectorBasis",
    "SparseHamiltonian",
    "StepSizeError",
    "build_chain_hamiltonian",
    "build_total_hamiltonian",
    "build_transverse_hamiltonian",
    "enumerate_sectors",
]
