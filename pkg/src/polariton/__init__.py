"""Intersubband cavity polaritons beyond the rotating-wave approximation.

Bogoliubov diagonalization of the resonant + diamagnetic + anti-resonant
light-matter Hamiltonian, fixed-angle dispersion solvers, single-parameter
Rabi-energy fits, and a truncated Fock-space oracle.
"""

from polariton.core import (
    GroundStatePopulations,
    ModeInputs,
    PolaritonModes,
    Variant,
    build_bogoliubov_matrix,
    dia_rwa_eigenvalues,
    diagonalize,
    ground_state_populations,
    rwa_eigenvalues,
)
from polariton.dispersion import (
    Branch,
    CouplingModel,
    DispersionCurve,
    DispersionPoint,
    GeometryParams,
    ParametricCavity,
    SystemParams,
    TabulatedCavity,
    branch_energy_at_angle,
    branch_energy_at_k,
    calibrate_parametric_cavity,
    cavity_energy,
    dispersion_curve,
    k_of_angle_energy,
    resonant_k,
)
from polariton.errors import PolaritonError
from polariton.fitkit import (
    Domain,
    FitConfig,
    FitResult,
    compare_variants,
    deviation_vs_coupling,
    fit_rabi,
    rms_deviation,
)
from polariton.fock import FockConfig, OracleResult, build_fock_hamiltonian, oracle_spectrum

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "CouplingModel",
    "DispersionCurve",
    "DispersionPoint",
    "Domain",
    "FitConfig",
    "FitResult",
    "FockConfig",
    "GeometryParams",
    "GroundStatePopulations",
    "ModeInputs",
    "OracleResult",
    "ParametricCavity",
    "PolaritonError",
    "PolaritonModes",
    "SystemParams",
    "TabulatedCavity",
    "Variant",
    "branch_energy_at_angle",
    "branch_energy_at_k",
    "build_bogoliubov_matrix",
    "build_fock_hamiltonian",
    "calibrate_parametric_cavity",
    "cavity_energy",
    "compare_variants",
    "deviation_vs_coupling",
    "dia_rwa_eigenvalues",
    "diagonalize",
    "dispersion_curve",
    "fit_rabi",
    "ground_state_populations",
    "k_of_angle_energy",
    "oracle_spectrum",
    "resonant_k",
    "rms_deviation",
    "rwa_eigenvalues",
]
