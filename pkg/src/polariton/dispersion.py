"""Cavity dispersion models and polariton branches at fixed k or fixed angle.

Measured polariton peaks are taken at a fixed internal angle, where the
in-plane wavevector ``k = E n sin(theta) / (hbar c)`` depends on the energy of
the peak itself. The fixed-angle branch energy is therefore the root of
``E - E_branch(k(E))``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from polariton.constants import HBAR_C
from polariton.core import ModeInputs, Variant, diagonalize
from polariton.errors import (
    BracketError,
    ConvergenceError,
    EmptyInputError,
    ParameterError,
    PolaritonError,
    RangeError,
    ResonanceNotFoundError,
)

ANGLE_XTOL = 1e-10  # meV
MAX_ITER = 200
MAX_WIDENINGS = 12


class Branch(str, enum.Enum):
    LP = "LP"
    UP = "UP"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ParameterError(f"branch must be LP or UP, got {value!r}") from None


@dataclass(frozen=True)
class ParametricCavity:
    """``e_cav(k) = sqrt(e_z**2 + (hbar c k / n_cav)**2)``."""

    e_z: float
    n_cav: float = 3.3
    kind = "parametric"

    def __post_init__(self):
        if not self.e_z > 0:
            raise ParameterError(f"cavity e_z must be > 0, got {self.e_z!r}")
        if not self.n_cav > 0:
            raise ParameterError(f"cavity n_cav must be > 0, got {self.n_cav!r}")

    def energy(self, k):
        return np.hypot(self.e_z, HBAR_C * np.asarray(k, dtype=float) / self.n_cav)

    @property
    def k_range(self):
        return 0.0, math.inf


@dataclass(frozen=True)
class TabulatedCavity:
    """Measured cavity dispersion, interpolated with a monotone cubic."""

    k: tuple
    e_cav: tuple
    source: str | None = None
    kind = "tabulated"
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        e = np.asarray(self.e_cav, dtype=float)
        if k.ndim != 1 or k.shape != e.shape:
            raise ParameterError("cavity table needs matching 1-D k and energy columns")
        if k.size < 4:
            raise ParameterError(f"cavity table needs at least 4 points, got {k.size}")
        if np.any(np.diff(k) <= 0):
            raise ParameterError("cavity table k values must be strictly increasing")
        if np.any(e <= 0) or np.any(k < 0):
            raise ParameterError("cavity table needs k >= 0 and positive energies")
        object.__setattr__(self, "k", tuple(float(x) for x in k))
        object.__setattr__(self, "e_cav", tuple(float(x) for x in e))
        object.__setattr__(self, "_interp", PchipInterpolator(k, e, extrapolate=False))

    def energy(self, k):
        k_arr = np.asarray(k, dtype=float)
        lo, hi = self.k_range
        slack = 1e-9 * (hi - lo)  # round-off at the table edges
        if np.any(k_arr < lo - slack) or np.any(k_arr > hi + slack):
            raise RangeError(f"k={k!r} nm^-1 outside the cavity table range [{lo:.6g}, {hi:.6g}]")
        return self._interp(np.clip(k_arr, lo, hi))

    @property
    def k_range(self):
        return self.k[0], self.k[-1]


def cavity_energy(model, k):
    if np.any(np.asarray(k) < 0):
        raise ParameterError(f"k must be >= 0, got {k!r}")
    value = model.energy(k)
    return float(value) if np.ndim(value) == 0 else value


def calibrate_parametric_cavity(e_12, theta_res, n_prop=3.3, n_cav=3.3):
    """Parametric cavity whose bare fixed-angle energy equals ``e_12`` at ``theta_res``.

    At fixed angle the bare mode satisfies
    ``E**2 (1 - (n_prop sin(theta) / n_cav)**2) = e_z**2``.
    """
    ratio = n_prop * math.sin(math.radians(theta_res)) / n_cav
    if ratio >= 1:
        raise ParameterError(f"no guided cavity resonance at {theta_res} deg for n_prop={n_prop}, n_cav={n_cav}")
    return ParametricCavity(e_z=e_12 * math.sqrt(1.0 - ratio**2), n_cav=n_cav)


@dataclass(frozen=True)
class CouplingModel:
    omega_r_res: float
    kind: str = "constant"

    def __post_init__(self):
        if self.kind not in ("constant", "scaled"):
            raise ParameterError(f"coupling kind must be 'constant' or 'scaled', got {self.kind!r}")
        if not (math.isfinite(self.omega_r_res) and self.omega_r_res >= 0):
            raise ParameterError(f"omega_r_res must be >= 0, got {self.omega_r_res!r}")

    def rabi(self, e_12, e_cav):
        if self.kind == "constant":
            return self.omega_r_res
        return self.omega_r_res * math.sqrt(e_12 / e_cav)


@dataclass(frozen=True)
class GeometryParams:
    theta_int: float  # degrees from the cavity normal
    n_prop: float = 3.3

    def __post_init__(self):
        if not 0 < self.theta_int < 90:
            raise ParameterError(f"theta_int must lie in (0, 90) degrees, got {self.theta_int!r}")
        if not self.n_prop > 1:
            raise ParameterError(f"n_prop must be > 1, got {self.n_prop!r}")


@dataclass(frozen=True)
class SystemParams:
    e_12: float
    cavity: ParametricCavity | TabulatedCavity
    coupling: CouplingModel
    n_prop: float = 3.3
    dia_factor: float = 1.0  # d_dia = dia_factor * omega_r**2 / e_12

    def __post_init__(self):
        if not (math.isfinite(self.e_12) and self.e_12 > 0):
            raise ParameterError(f"e_12 must be > 0, got {self.e_12!r}")
        if not self.n_prop > 1:
            raise ParameterError(f"n_prop must be > 1, got {self.n_prop!r}")
        if not self.dia_factor >= 0:
            raise ParameterError(f"dia_factor must be >= 0, got {self.dia_factor!r}")

    def with_rabi(self, omega_r_res):
        return replace(self, coupling=replace(self.coupling, omega_r_res=float(omega_r_res)))

    def geometry(self, theta_int):
        return GeometryParams(theta_int, self.n_prop)

    def mode_inputs(self, k):
        e_cav = cavity_energy(self.cavity, k)
        omega_r = self.coupling.rabi(self.e_12, e_cav)
        return ModeInputs(e_cav, self.e_12, omega_r, self.dia_factor * omega_r**2 / self.e_12)


@dataclass(frozen=True)
class DispersionPoint:
    energy: float
    branch: Branch
    theta_int: float | None = None
    k: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "branch", Branch.parse(self.branch))
        if self.theta_int is None and self.k is None:
            raise ParameterError("a dispersion point needs theta_int or k")
        if not self.energy > 0:
            raise ParameterError(f"dispersion energy must be > 0, got {self.energy!r}")


@dataclass
class DispersionCurve:
    points: list
    variant: Variant | None = None
    domain: str = "angle"
    errors: list = field(default_factory=list)  # (abscissa, branch, message)

    @property
    def partial(self):
        return bool(self.errors)

    def branch(self, branch):
        branch = Branch.parse(branch)
        return [p for p in self.points if p.branch is branch]

    def __len__(self):
        return len(self.points)


def k_of_angle_energy(geom: GeometryParams, energy):
    """In-plane wavevector (nm^-1) of light at ``energy`` meV inside the prism."""
    if np.any(np.asarray(energy) < 0):
        raise ParameterError(f"energy must be >= 0, got {energy!r}")
    return energy * geom.n_prop * math.sin(math.radians(geom.theta_int)) / HBAR_C


def resonant_k(model, e_12):
    """Wavevector where the bare cavity crosses ``e_12``."""
    lo, hi = model.k_range
    if math.isinf(hi):
        # e_cav(k) >= hbar c k / n_cav, so this k is already at or past e_12
        hi = e_12 * model.n_cav / HBAR_C
    f_lo = float(model.energy(lo)) - e_12
    f_hi = float(model.energy(hi)) - e_12
    if f_lo == 0:
        return lo
    if f_lo > 0 or f_hi < 0:
        raise ResonanceNotFoundError(
            f"cavity does not cross e_12={e_12} meV for k in [{lo:.6g}, {hi:.6g}] nm^-1 "
            f"(cavity spans {f_lo + e_12:.6g}..{f_hi + e_12:.6g} meV)"
        )
    return brentq(lambda k: float(model.energy(k)) - e_12, lo, hi, xtol=1e-300, rtol=1e-13, maxiter=MAX_ITER)


def bare_cavity_at_angle(model, geom: GeometryParams):
    """Uncoupled cavity energy observed at a fixed internal angle."""

    def residual(energy):
        return energy - float(model.energy(k_of_angle_energy(geom, energy)))

    lo, hi = 1e-9, float(model.energy(model.k_range[0])) + 1.0
    step = 0
    while residual(hi) < 0:
        step += 1
        if step > 60:
            raise BracketError(f"no bare cavity solution at theta={geom.theta_int} deg", (lo, hi))
        hi *= 2.0
    return brentq(residual, lo, hi, xtol=ANGLE_XTOL, maxiter=MAX_ITER)


def branch_energy_at_k(params: SystemParams, variant, k, branch):
    modes = diagonalize(params.mode_inputs(k), variant)
    return modes.e_lp if Branch.parse(branch) is Branch.LP else modes.e_up


def _energy_window(params, geom):
    """Energies whose fixed-angle wavevector stays inside the cavity model's range."""
    k_lo, k_hi = params.cavity.k_range
    per_mev = k_of_angle_energy(geom, 1.0)
    return k_lo / per_mev, k_hi / per_mev


def _initial_bracket(e_12, branch, guess):
    eps = 1e-9 * e_12
    if guess is not None:
        half = max(1e-3, 1e-3 * abs(guess))
        return guess - half, guess + half
    if branch is Branch.LP:
        return 0.2 * e_12, e_12 - eps
    return e_12 + eps, 3.0 * e_12


def _widen(lo, hi, e_12, branch, step):
    grow = 2.0**step
    if branch is Branch.LP:
        return max(lo / grow, 1e-6 * e_12), max(hi, e_12 + 1e-3 * e_12 * grow)
    return min(lo, e_12 - 1e-3 * e_12 * grow), hi * grow


def branch_energy_at_angle(params: SystemParams, variant, geom: GeometryParams, branch, guess=None):
    """Self-consistent branch energy at fixed internal angle.

    ``guess`` centres a narrow starting bracket on a previous solution; the
    bracket is widened geometrically until ``E - E_branch(k(E))`` changes sign.
    """
    branch = Branch.parse(branch)
    variant = Variant.parse(variant)

    def residual(energy):
        return energy - branch_energy_at_k(params, variant, k_of_angle_energy(geom, energy), branch)

    e_min, e_max = _energy_window(params, geom)

    def clamp(lo, hi):
        return min(max(lo, e_min), e_max), max(min(hi, e_max), e_min)

    lo, hi = clamp(*_initial_bracket(params.e_12, branch, guess))
    f_lo, f_hi = residual(lo), residual(hi)
    step = 0
    while f_lo * f_hi > 0:
        step += 1
        wider = clamp(*_widen(lo, hi, params.e_12, branch, step))
        if step > MAX_WIDENINGS or wider == (lo, hi):
            raise BracketError(f"no sign change for {branch.value} at theta={geom.theta_int} deg", (lo, hi))
        lo, hi = wider
        f_lo, f_hi = residual(lo), residual(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    try:
        root, info = brentq(residual, lo, hi, xtol=ANGLE_XTOL, maxiter=MAX_ITER, full_output=True, disp=False)
    except RuntimeError as exc:
        raise ConvergenceError(f"angle solver did not converge: {exc}") from exc
    if not info.converged:
        raise ConvergenceError(
            f"angle solver did not converge in {MAX_ITER} iterations for {branch.value} at theta={geom.theta_int} deg",
            estimates=(root,),
        )
    return root


def _evaluate(params, variant, domain, abscissa):
    """Both branches at one abscissa; errors are returned, not raised."""
    points, errors = [], []
    for branch in Branch:
        try:
            if domain == "angle":
                geom = params.geometry(abscissa)
                energy = branch_energy_at_angle(params, variant, geom, branch)
                points.append(DispersionPoint(energy, branch, theta_int=abscissa,
                                              k=k_of_angle_energy(geom, energy)))
            else:
                energy = branch_energy_at_k(params, variant, abscissa, branch)
                points.append(DispersionPoint(energy, branch, k=abscissa))
        except PolaritonError as exc:
            errors.append((abscissa, branch.value, str(exc)))
    return points, errors


def parallel_map(func, items, workers=1):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def dispersion_curve(params: SystemParams, variant, angles=None, ks=None, workers=1):
    """LP and UP over an angle grid (degrees) or a wavevector grid (nm^-1)."""
    if (angles is None) == (ks is None):
        raise ParameterError("pass exactly one of angles= or ks=")
    domain = "angle" if angles is not None else "wavevector"
    grid = [float(x) for x in (angles if angles is not None else ks)]
    if not grid:
        raise EmptyInputError("dispersion grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ParameterError("dispersion grid must be sorted ascending")
    variant = Variant.parse(variant)

    results = parallel_map(partial(_evaluate, params, variant, domain), grid, workers)
    curve = DispersionCurve([], variant, domain)
    for points, errors in results:
        curve.points.extend(points)
        curve.errors.extend(errors)
    return curve
