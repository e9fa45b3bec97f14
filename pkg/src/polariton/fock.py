"""Brute-force check of the Bogoliubov spectrum on a truncated Fock basis.

The (k, -k) pair is folded into a single photon mode ``a`` and a single
matter mode ``b``; for parameter-symmetric pairs this gives the same
dynamical matrix as the four-mode problem. The Hamiltonian only changes the
total boson number by 0 or 2, so the even and odd parity sectors are
diagonalized separately: the ground state lives in the even sector and the
two single-polariton states are the lowest odd-sector levels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from polariton.core import ModeInputs, Variant
from polariton.errors import ConvergenceError, ParameterError

MAX_BASIS = 1_000_000
DENSE_LIMIT = 2000


@dataclass(frozen=True)
class FockConfig:
    n_max_photon: int = 16
    n_max_matter: int = 16
    convergence_tol: float = 1e-9  # meV (and occupancy)
    max_cutoff: int = 60
    step: int = 4

    def __post_init__(self):
        if min(self.n_max_photon, self.n_max_matter) < 4:
            raise ParameterError("Fock cutoffs must be >= 4")
        if not self.convergence_tol > 0:
            raise ParameterError("convergence_tol must be > 0")

    def enlarged(self, extra):
        return FockConfig(self.n_max_photon + extra, self.n_max_matter + extra,
                          self.convergence_tol, self.max_cutoff, self.step)


@dataclass(frozen=True)
class OracleResult:
    e_lp: float
    e_up: float
    n_photon: float
    n_matter: float
    ground_energy: float
    converged: bool
    cutoff: tuple[int, int]
    max_change: float


def _ladder(n_max):
    """Truncated annihilation operator on occupations 0..n_max."""
    return sp.diags(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1, format="csr")


def _operators(config):
    a1 = _ladder(config.n_max_photon)
    b1 = _ladder(config.n_max_matter)
    eye_a = sp.identity(config.n_max_photon + 1, format="csr")
    eye_b = sp.identity(config.n_max_matter + 1, format="csr")
    return sp.kron(a1, eye_b, format="csr"), sp.kron(eye_a, b1, format="csr")


def basis_occupations(config: FockConfig):
    """(n_a, n_b) for every basis index, photon index varying slowest."""
    n_a, n_b = np.meshgrid(np.arange(config.n_max_photon + 1), np.arange(config.n_max_matter + 1), indexing="ij")
    return n_a.ravel(), n_b.ravel()


def build_fock_hamiltonian(inputs: ModeInputs, variant: Variant, config: FockConfig = FockConfig()):
    """Sparse Hermitian Hamiltonian on the product basis ``|n_a, n_b>``.

    The photon zero-point energy ``e_cav / 2`` and the diamagnetic constant
    from ``a^dag a + a a^dag = 2 n_a + 1`` are kept, so the ground energy is
    the absolute one.
    """
    variant = Variant.parse(variant)
    dim = (config.n_max_photon + 1) * (config.n_max_matter + 1)
    if dim > MAX_BASIS:
        raise ParameterError(f"Fock basis of {dim} states exceeds the {MAX_BASIS} guard")

    a, b = _operators(config)
    ad, bd = a.getH(), b.getH()
    n_a_diag = sp.diags(basis_occupations(config)[0].astype(float), format="csr")
    n_b_diag = sp.diags(basis_occupations(config)[1].astype(float), format="csr")
    ident = sp.identity(dim, format="csr")
    wc, w12, g, d = inputs.e_cav, inputs.e_12, inputs.omega_r, inputs.d_dia

    h = wc * (n_a_diag + 0.5 * ident) + w12 * n_b_diag
    h = h + 1j * g * (ad @ b - a @ bd)
    if variant.has_dia:
        # a^dag a + a a^dag on the truncated space, written exactly as 2 n + 1
        h = h + d * (2.0 * n_a_diag + ident)
    if variant.has_antires:
        h = h + 1j * g * (a @ b - ad @ bd) + d * (a @ a + ad @ ad)
    return sp.csr_matrix(h.astype(complex))


def parity_sectors(config: FockConfig):
    n_a, n_b = basis_occupations(config)
    parity = (n_a + n_b) % 2
    return np.flatnonzero(parity == 0), np.flatnonzero(parity == 1)


def _lowest(block, count):
    if block.shape[0] <= DENSE_LIMIT:
        values, vectors = np.linalg.eigh(block.toarray())
        return values[:count], vectors[:, :count]
    values, vectors = eigsh(block, k=count, which="SA")
    order = np.argsort(values)
    return values[order], vectors[:, order]


def truncated_spectrum(inputs, variant, config):
    """Oracle result at one fixed truncation, without the convergence check."""
    h = build_fock_hamiltonian(inputs, variant, config)
    even, odd = parity_sectors(config)
    (e0,), ground = _lowest(h[even][:, even], 1)
    e_odd, _ = _lowest(h[odd][:, odd], 2)
    psi = ground[:, 0]
    n_a, n_b = basis_occupations(config)
    prob = np.abs(psi) ** 2
    return OracleResult(
        e_lp=float(e_odd[0] - e0),
        e_up=float(e_odd[1] - e0),
        n_photon=float(prob @ n_a[even]),
        n_matter=float(prob @ n_b[even]),
        ground_energy=float(e0),
        converged=False,
        cutoff=(config.n_max_photon, config.n_max_matter),
        max_change=float("inf"),
    )


def _change(r1, r2):
    return max(abs(r1.e_lp - r2.e_lp), abs(r1.e_up - r2.e_up),
               abs(r1.n_photon - r2.n_photon), abs(r1.n_matter - r2.n_matter))


def oracle_spectrum(inputs: ModeInputs, variant: Variant, config: FockConfig = FockConfig()) -> OracleResult:
    """Excitation energies and ground-state populations by exact diagonalization.

    Cutoffs grow by ``config.step`` until two successive truncations agree
    within ``convergence_tol``; the larger truncation is returned.
    """
    variant = Variant.parse(variant)
    previous = None
    current = truncated_spectrum(inputs, variant, config)
    cfg = config
    while True:
        bigger = cfg.enlarged(cfg.step)
        if max(bigger.n_max_photon, bigger.n_max_matter) > config.max_cutoff:
            raise ConvergenceError(
                f"Fock oracle not converged to {config.convergence_tol:g} at cutoff {cfg.n_max_photon}",
                estimates=(previous, current),
            )
        refined = truncated_spectrum(inputs, variant, bigger)
        change = _change(current, refined)
        if change < config.convergence_tol:
            return OracleResult(refined.e_lp, refined.e_up, refined.n_photon, refined.n_matter,
                                refined.ground_energy, True, refined.cutoff, change)
        previous, current, cfg = current, refined, bigger
