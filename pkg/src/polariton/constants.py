"""Physical constants and numerical tolerances shared across the package."""

from dataclasses import dataclass

#: hbar * c in meV nm (CODATA).
HBAR_C = 197326.98


@dataclass(frozen=True)
class Tolerances:
    pairing: float = 1e-9  # meV, max |E_i + E_j| over +/- eigenvalue pairs
    normalization: float = 1e-9  # symplectic norm residual per branch
    imaginary: float = 1e-9  # relative |Im E| treated as numerical noise


DEFAULT_TOLERANCES = Tolerances()
