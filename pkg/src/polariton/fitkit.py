"""Single-parameter Rabi-energy fits and the reduced-Hamiltonian deviation map."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from polariton.core import Variant
from polariton.dispersion import (
    Branch,
    DispersionCurve,
    DispersionPoint,
    SystemParams,
    bare_cavity_at_angle,
    branch_energy_at_angle,
    branch_energy_at_k,
    k_of_angle_energy,
    parallel_map,
)
from polariton.errors import EmptyInputError, ParameterError, PolaritonError, UnresolvablePointsError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
AMBIGUITY_FRACTION = 0.05


class Domain(str, enum.Enum):
    ANGLE = "angle"
    WAVEVECTOR = "wavevector"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ParameterError(f"fit domain must be 'angle' or 'wavevector', got {value!r}") from None


@dataclass(frozen=True)
class FitConfig:
    omega_r_bounds: tuple = (0.0, 50.0)
    coarse_grid_points: int = 64
    refine_tolerance: float = 1e-6
    variant: Variant = Variant.FULL
    domain: Domain = Domain.ANGLE
    workers: int = 1

    def __post_init__(self):
        low, high = (float(x) for x in self.omega_r_bounds)
        object.__setattr__(self, "omega_r_bounds", (low, high))
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        object.__setattr__(self, "domain", Domain.parse(self.domain))
        if low < 0 or not high > low:
            raise ParameterError(f"omega_r_bounds must satisfy 0 <= low < high, got {(low, high)}")
        if self.coarse_grid_points < 16:
            raise ParameterError(f"coarse_grid_points must be >= 16, got {self.coarse_grid_points}")
        if not self.refine_tolerance > 0:
            raise ParameterError(f"refine_tolerance must be > 0, got {self.refine_tolerance}")


@dataclass
class FitResult:
    variant: Variant
    omega_r_star: float
    rms_star: float
    rms_curve: list  # (omega_r, rms) sorted by omega_r
    fitted_curve: DispersionCurve
    n_points_used: int
    warnings: list = field(default_factory=list)
    error: str | None = None


def _model_energy(params, variant, point, domain):
    if domain is Domain.ANGLE:
        if point.theta_int is None:
            raise ParameterError("angle-domain fit needs theta_int on every point")
        return branch_energy_at_angle(params, variant, params.geometry(point.theta_int), point.branch)
    if point.k is None:
        raise ParameterError("wavevector-domain fit needs k on every point")
    return branch_energy_at_k(params, variant, point.k, point.branch)


def rms_deviation(data, params: SystemParams, variant, domain=Domain.ANGLE):
    """Root mean square of model minus measured energy, both branches pooled."""
    if not data:
        raise EmptyInputError("no dispersion points to compare against")
    variant, domain = Variant.parse(variant), Domain.parse(domain)
    residuals, failures = [], []
    for i, point in enumerate(data):
        try:
            residuals.append(_model_energy(params, variant, point, domain) - point.energy)
        except PolaritonError as exc:
            failures.append((i, point, str(exc)))
    if failures:
        raise UnresolvablePointsError(failures)
    return math.sqrt(math.fsum(r * r for r in residuals) / len(residuals))


def _rms_at(data, params, variant, domain, omega_r):
    return rms_deviation(data, params.with_rabi(omega_r), variant, domain)


def golden_section(func, lo, hi, tol, cache):
    """Shrink ``[lo, hi]`` around a minimum of a unimodal ``func`` to width < tol.

    Every evaluation is recorded in ``cache`` (abscissa -> value).
    """

    def f(x):
        if x not in cache:
            cache[x] = func(x)
        return cache[x]

    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo >= tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    return lo, hi


def _local_minima(values):
    idx = []
    n = len(values)
    for i, v in enumerate(values):
        left = values[i - 1] if i > 0 else math.inf
        right = values[i + 1] if i < n - 1 else math.inf
        if v <= left and v <= right and not (v == left and i > 0):
            idx.append(i)
    return idx


def fit_rabi(data, params: SystemParams, config: FitConfig = FitConfig()) -> FitResult:
    """Best vacuum Rabi energy for one Hamiltonian variant.

    A coarse scan over ``config.omega_r_bounds`` locates the basin, and a
    golden-section search refines it to ``config.refine_tolerance``.
    """
    if not data:
        raise EmptyInputError("no dispersion points to fit")
    variant, domain = config.variant, config.domain
    objective = partial(_rms_at, data, params, variant, domain)
    low, high = config.omega_r_bounds
    grid = list(np.linspace(low, high, config.coarse_grid_points))
    coarse = parallel_map(objective, grid, config.workers)
    cache = dict(zip(grid, coarse))

    warnings = []
    best = int(np.argmin(coarse))
    minima = _local_minima(coarse)
    close = [i for i in minima if coarse[i] <= coarse[best] * (1 + AMBIGUITY_FRACTION) + 1e-12]
    if len(close) > 1:
        listed = ", ".join(f"{grid[i]:.6g} meV (rms {coarse[i]:.6g})" for i in close)
        warnings.append(f"ambiguous fit: several coarse minima within 5%: {listed}")
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    golden_section(objective, lo, hi, config.refine_tolerance, cache)

    omega_star = min(cache, key=lambda x: (cache[x], x))
    span = grid[1] - grid[0]
    if omega_star - low < span and best == 0 or high - omega_star < span and best == len(grid) - 1:
        warnings.append(f"minimum at the search boundary ({omega_star:.6g} meV); widen omega_r_bounds")

    fitted = _fitted_curve(data, params.with_rabi(omega_star), variant, domain)
    return FitResult(
        variant=variant,
        omega_r_star=float(omega_star),
        rms_star=float(cache[omega_star]),
        rms_curve=sorted((float(x), float(y)) for x, y in cache.items()),
        fitted_curve=fitted,
        n_points_used=len(data),
        warnings=warnings,
    )


def _fitted_curve(data, params, variant, domain):
    curve = DispersionCurve([], variant, domain.value)
    for point in data:
        energy = _model_energy(params, variant, point, domain)
        if domain is Domain.ANGLE:
            k = k_of_angle_energy(params.geometry(point.theta_int), energy)
            curve.points.append(DispersionPoint(energy, point.branch, theta_int=point.theta_int, k=k))
        else:
            curve.points.append(DispersionPoint(energy, point.branch, k=point.k))
    return curve


def compare_variants(data, params: SystemParams, config: FitConfig = FitConfig()):
    """Fit all three Hamiltonian variants with one config, best first."""
    if not data:
        raise EmptyInputError("no dispersion points to fit")
    results = []
    for variant in Variant:
        cfg = FitConfig(config.omega_r_bounds, config.coarse_grid_points, config.refine_tolerance,
                        variant, config.domain, config.workers)
        try:
            results.append(fit_rabi(data, params, cfg))
        except PolaritonError as exc:
            results.append(FitResult(variant, math.nan, math.inf, [], DispersionCurve([], variant),
                                     len(data), error=str(exc)))
    results.sort(key=lambda r: r.rms_star)
    return results


DEVIATION_COLUMNS = ("lp_no_antires", "up_no_antires", "lp_no_antires_no_dia", "up_no_antires_no_dia")


@dataclass
class DeviationRow:
    ratio: float
    omega_r: float
    e_full: tuple  # (LP, UP) meV
    deviations: dict  # column -> percent; empty when errored
    error: str | None = None


def _deviation_row(params, theta_res, ratio):
    omega_r = ratio * params.e_12
    p = params.with_rabi(omega_r)
    geom = p.geometry(theta_res)
    try:
        full = [branch_energy_at_angle(p, Variant.FULL, geom, b) for b in Branch]
        devs = {}
        for variant, suffix in ((Variant.NO_ANTIRES, "no_antires"), (Variant.NO_ANTIRES_NO_DIA, "no_antires_no_dia")):
            for b, e_full in zip(Branch, full):
                reduced = branch_energy_at_angle(p, variant, geom, b)
                devs[f"{b.value.lower()}_{suffix}"] = 100.0 * (reduced - e_full) / e_full
        return DeviationRow(ratio, omega_r, tuple(full), devs)
    except PolaritonError as exc:
        return DeviationRow(ratio, omega_r, (math.nan, math.nan), {}, str(exc))


def deviation_vs_coupling(params: SystemParams, ratio_grid, theta_res=60.0, workers=1):
    """Percent deviation of the reduced Hamiltonians from the full one at fixed angle.

    ``params`` must have its cavity resonant with ``e_12`` at ``theta_res``
    (see :func:`polariton.dispersion.calibrate_parametric_cavity`); its Rabi
    energy is replaced by ``ratio * e_12`` for each ratio.
    """
    ratios = [float(r) for r in ratio_grid]
    if not ratios:
        raise EmptyInputError("ratio grid is empty")
    if any(r < 0 or r > 0.5 for r in ratios):
        raise ParameterError("coupling ratios must lie in [0, 0.5]")
    photon = bare_cavity_at_angle(params.cavity, params.geometry(theta_res))
    if abs(photon - params.e_12) > 1e-6 * params.e_12:
        raise ParameterError(
            f"bare cavity sits at {photon:.6g} meV, not e_12={params.e_12} meV, at {theta_res} deg; calibrate it first")
    return parallel_map(partial(_deviation_row, params, theta_res), ratios, workers)
