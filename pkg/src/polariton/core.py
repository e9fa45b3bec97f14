"""Per-wavevector light-matter Hamiltonian and its Bogoliubov diagonalization.

Energies are in meV throughout, with hbar folded into every frequency. For a
wavevector pair (k, -k) the Heisenberg equations of motion of the operator
vector ``(a_k, b_k, a^dag_{-k}, b^dag_{-k})`` close on a 4x4 dynamical matrix
``M`` with ``i d/dt v = M v``. A polariton operator
``p = w a_k + x b_k + y a^dag_{-k} + z b^dag_{-k}`` obeys ``[p, H] = E p``
exactly when ``M.T @ (w, x, y, z) = E (w, x, y, z)``; the physical branches
are the eigenvectors with positive symplectic norm
``|w|^2 + |x|^2 - |y|^2 - |z|^2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from polariton.constants import DEFAULT_TOLERANCES, Tolerances
from polariton.errors import InstabilityError, NumericalError, ParameterError

# Positions inside a coefficient vector.
PHOTON_NORMAL, MATTER_NORMAL, PHOTON_ANOMALOUS, MATTER_ANOMALOUS = range(4)

_SYMPLECTIC = np.array([1.0, 1.0, -1.0, -1.0])


class Variant(enum.Enum):
    FULL = "FULL"
    NO_ANTIRES = "NO_ANTIRES"
    NO_ANTIRES_NO_DIA = "NO_ANTIRES_NO_DIA"

    @property
    def has_dia(self):
        return self is not Variant.NO_ANTIRES_NO_DIA

    @property
    def has_antires(self):
        return self is Variant.FULL

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper().replace("-", "_"))
        except ValueError:
            names = ", ".join(v.value for v in cls)
            raise ParameterError(f"unknown Hamiltonian variant {value!r} (expected one of {names})") from None


@dataclass(frozen=True)
class ModeInputs:
    """Bare parameters of one (k, -k) mode pair.

    Leaving ``d_dia`` unset applies the default rule ``omega_r**2 / e_12``.
    """

    e_cav: float
    e_12: float
    omega_r: float
    d_dia: float | None = None

    def __post_init__(self):
        for name in ("e_cav", "e_12"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be a positive finite energy, got {value!r}")
        if not (math.isfinite(self.omega_r) and self.omega_r >= 0):
            raise ParameterError(f"omega_r must be >= 0, got {self.omega_r!r}")
        if self.d_dia is None:
            object.__setattr__(self, "d_dia", self.omega_r**2 / self.e_12)
        elif not (math.isfinite(self.d_dia) and self.d_dia >= 0):
            raise ParameterError(f"d_dia must be >= 0, got {self.d_dia!r}")


@dataclass(frozen=True)
class PolaritonModes:
    variant: Variant
    e_lp: float
    e_up: float
    coeff_lp: np.ndarray = field(repr=False)
    coeff_up: np.ndarray = field(repr=False)

    def coefficients(self, branch):
        return self.coeff_lp if str(branch).upper().endswith("LP") else self.coeff_up

    def hopfield_fractions(self):
        """Photon and matter weights |w|^2, |x|^2 of (LP, UP)."""
        return {
            "LP": (abs(self.coeff_lp[PHOTON_NORMAL]) ** 2, abs(self.coeff_lp[MATTER_NORMAL]) ** 2),
            "UP": (abs(self.coeff_up[PHOTON_NORMAL]) ** 2, abs(self.coeff_up[MATTER_NORMAL]) ** 2),
        }


@dataclass(frozen=True)
class GroundStatePopulations:
    n_photon: float
    n_matter: float


def build_bogoliubov_matrix(inputs: ModeInputs, variant: Variant) -> np.ndarray:
    """Dynamical matrix ``M`` of ``(a_k, b_k, a^dag_{-k}, b^dag_{-k})``."""
    variant = Variant.parse(variant)
    wc, w12, g = inputs.e_cav, inputs.e_12, inputs.omega_r
    d = inputs.d_dia if variant.has_dia else 0.0

    normal = np.array([[wc + 2.0 * d, 1j * g], [-1j * g, w12]], dtype=complex)
    if variant.has_antires:
        anomalous = np.array([[2.0 * d, -1j * g], [-1j * g, 0.0]], dtype=complex)
    else:
        anomalous = np.zeros((2, 2), dtype=complex)
    return np.block([[normal, anomalous], [-anomalous.conj(), -normal.conj()]])


def pairing_residual(matrix) -> float:
    """Largest |E_i + E_j| after pairing sorted eigenvalues end to end."""
    ev = np.sort_complex(np.linalg.eigvals(matrix))
    return float(np.max(np.abs(ev + ev[::-1])))


def _symplectic_norm(vec, signature):
    return float(np.sum(signature * np.abs(vec) ** 2))


def _fix_phase(vec):
    # photon-normal real and >= 0; fall back to the first non-negligible entry
    for idx in range(vec.size):
        if abs(vec[idx]) > 1e-14:
            vec = vec * (abs(vec[idx]) / vec[idx])
            vec[idx] = abs(vec[idx])
            return vec
    return vec


def _positive_branches(matrix, signature, tol: Tolerances):
    """Eigenpairs of ``matrix.T`` with positive symplectic norm, ascending."""
    values, vectors = np.linalg.eig(matrix.T)
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.any(np.abs(values.imag) > tol.imaginary * scale):
        squared = np.sort((values**2).real)
        raise InstabilityError("LP", float(squared[0]))

    picked = []
    for j in range(values.size):
        vec = vectors[:, j]
        norm = _symplectic_norm(vec, signature)
        if norm > 0:
            picked.append((values[j].real, vec / math.sqrt(norm)))
    expected = int(np.count_nonzero(signature > 0))
    if len(picked) != expected:
        raise NumericalError(f"expected {expected} positive-norm modes, found {len(picked)}")
    picked.sort(key=lambda item: item[0])
    if picked[0][0] <= 0:
        # positive-norm mode at negative frequency: E^2 of that branch crossed zero
        branch = "LP" if len(picked) > 1 else "mode"
        raise InstabilityError(branch, -picked[0][0] ** 2)
    return picked


def _decoupled(inputs, variant, tol):
    """omega_r == 0: photon and matter diagonalized separately."""
    d = inputs.d_dia if variant.has_dia else 0.0
    anomalous = 2.0 * d if variant.has_antires else 0.0
    a = inputs.e_cav + 2.0 * d
    photon_block = np.array([[a, anomalous], [-anomalous, -a]], dtype=complex)
    ((e_phot, v_phot),) = _positive_branches(photon_block, _SYMPLECTIC[[0, 2]], tol)
    photon = np.zeros(4, dtype=complex)
    photon[[PHOTON_NORMAL, PHOTON_ANOMALOUS]] = v_phot
    matter = np.zeros(4, dtype=complex)
    matter[MATTER_NORMAL] = 1.0
    pairs = [(e_phot, _fix_phase(photon)), (inputs.e_12, matter)]
    # ties go to the photon-like mode as LP
    if pairs[1][0] < pairs[0][0]:
        pairs.reverse()
    return pairs


def diagonalize(inputs: ModeInputs, variant: Variant, tolerances: Tolerances = DEFAULT_TOLERANCES) -> PolaritonModes:
    variant = Variant.parse(variant)
    if inputs.omega_r == 0:
        pairs = _decoupled(inputs, variant, tolerances)
    else:
        matrix = build_bogoliubov_matrix(inputs, variant)
        if variant.has_antires:
            pairs = [(e, _fix_phase(v)) for e, v in _positive_branches(matrix, _SYMPLECTIC, tolerances)]
            residual = pairing_residual(matrix)
            if residual > tolerances.pairing:
                raise NumericalError(f"eigenvalue pairing residual {residual:.3g} meV exceeds {tolerances.pairing:g}")
        else:
            # number-conserving: only the normal block carries the physical modes
            pairs = []
            for e, v in _positive_branches(matrix[:2, :2], _SYMPLECTIC[:2], tolerances):
                vec = np.zeros(4, dtype=complex)
                vec[:2] = v
                pairs.append((e, _fix_phase(vec)))

    for name, (_, vec) in zip(("LP", "UP"), pairs):
        residual = abs(_symplectic_norm(vec, _SYMPLECTIC) - 1.0)
        if residual > tolerances.normalization:
            raise NumericalError(f"{name} symplectic normalization off by {residual:.3g}")

    (e_lp, c_lp), (e_up, c_up) = pairs
    c_lp.setflags(write=False)
    c_up.setflags(write=False)
    return PolaritonModes(variant, float(e_lp), float(e_up), c_lp, c_up)


def rwa_eigenvalues(e_cav: float, e_12: float, omega_r: float) -> tuple[float, float]:
    """Closed-form one-excitation spectrum of the resonant Hamiltonian alone."""
    if e_cav <= 0 or e_12 <= 0 or omega_r < 0:
        raise ParameterError(f"need e_cav, e_12 > 0 and omega_r >= 0, got {(e_cav, e_12, omega_r)}")
    mean = 0.5 * (e_cav + e_12)
    half_split = 0.5 * math.hypot(e_cav - e_12, 2.0 * omega_r)
    return mean - half_split, mean + half_split


def dia_rwa_eigenvalues(e_cav: float, e_12: float, omega_r: float, d_dia: float) -> tuple[float, float]:
    # H_dia only renormalizes the photon energy by 2 d_dia once H_anti-res is dropped
    if d_dia < 0:
        raise ParameterError(f"d_dia must be >= 0, got {d_dia!r}")
    return rwa_eigenvalues(e_cav + 2.0 * d_dia, e_12, omega_r)


def ground_state_populations(modes: PolaritonModes) -> GroundStatePopulations:
    """Virtual photon / intersubband-excitation numbers of the interacting vacuum.

    Inverting the Bogoliubov transformation gives
    ``<G|a^dag a|G> = sum_j |y_j|^2`` over the branches j.
    """
    coeffs = (modes.coeff_lp, modes.coeff_up)
    n_photon = sum(abs(c[PHOTON_ANOMALOUS]) ** 2 for c in coeffs)
    n_matter = sum(abs(c[MATTER_ANOMALOUS]) ** 2 for c in coeffs)
    return GroundStatePopulations(float(n_photon), float(n_matter))
