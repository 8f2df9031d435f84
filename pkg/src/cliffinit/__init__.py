"""Clifford-point initialization for multi-angle QAOA."""

from .circuit import MaQaoaAnsatz, angles_of, build_ansatz, normalize_angles
from .hamiltonian import IsingHamiltonian, PauliZTerm
from .search import CandidatePool, GaConfig, ga_search
from .stabilizer import StabilizerTableau, clifford_energy
from .statevector import NoiseModel, StatevectorSimulator, exact_energy

__version__ = "0.1.0"

__all__ = [
    "CandidatePool",
    "GaConfig",
    "IsingHamiltonian",
    "MaQaoaAnsatz",
    "NoiseModel",
    "PauliZTerm",
    "StabilizerTableau",
    "StatevectorSimulator",
    "angles_of",
    "build_ansatz",
    "clifford_energy",
    "exact_energy",
    "ga_search",
    "normalize_angles",
]
