"""Run configuration, CSV tables and JSON result documents.

Config files are INI-style (``configparser``) with the sections below. Every
key is optional; unknown sections or keys are rejected.

=========  ==================  =================  ===========================================
section    key                 default            meaning
=========  ==================  =================  ===========================================
system     e_12                152.0              bare intersubband transition, meV
system     n_prop              3.3                index of the propagation medium
system     theta_int           70.0               internal angle for single-angle runs, deg
system     dia_factor          1.0                d_dia = dia_factor * omega_r**2 / e_12
cavity     kind                parametric         ``parametric`` or ``tabulated``
cavity     e_z                 (calibrated)       confinement energy, meV
cavity     n_cav               3.3                effective cavity index
cavity     resonance_angle     60.0               calibrates e_z unless e_z is given, deg
cavity     table               (none)             CSV path for ``tabulated`` cavities
coupling   kind                constant           ``constant`` or ``scaled``
coupling   omega_r_res         16.5               vacuum Rabi energy at resonance, meV
fit        omega_r_bounds      0, 50              scan interval, meV
fit        coarse_grid_points  64                 coarse scan samples (>= 16)
fit        refine_tolerance    1e-6               golden-section bracket width, meV
fit        variant             FULL               FULL, NO_ANTIRES or NO_ANTIRES_NO_DIA
fit        domain              angle              ``angle`` or ``wavevector``
output     directory           $POLARITON_OUTPUT_DIR or ./polariton-out
output     plot_script         false              also write a matplotlib script
output     workers             1                  process pool size for grid evaluations
=========  ==================  =================  ===========================================
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from polariton.constants import HBAR_C
from polariton.core import Variant
from polariton.dispersion import (
    Branch,
    CouplingModel,
    DispersionPoint,
    GeometryParams,
    ParametricCavity,
    SystemParams,
    TabulatedCavity,
    calibrate_parametric_cavity,
    k_of_angle_energy,
)
from polariton.errors import ConfigError, DataFormatError, ParameterError
from polariton.fitkit import Domain, FitConfig

OUTPUT_ENV = "POLARITON_OUTPUT_DIR"
SIG_DIGITS = 12

_DEFAULTS = {
    "system": {"e_12": "152.0", "n_prop": "3.3", "theta_int": "70.0", "dia_factor": "1.0"},
    "cavity": {"kind": "parametric", "e_z": None, "n_cav": "3.3", "resonance_angle": "60.0", "table": None},
    "coupling": {"kind": "constant", "omega_r_res": "16.5"},
    "fit": {"omega_r_bounds": "0, 50", "coarse_grid_points": "64", "refine_tolerance": "1e-6",
            "variant": "FULL", "domain": "angle"},
    "output": {"directory": None, "plot_script": "false", "workers": "1"},
}


@dataclass(frozen=True)
class OutputConfig:
    directory: Path
    plot_script: bool = False
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams
    theta_int: float
    fit: FitConfig
    output: OutputConfig
    resonance_angle: float | None = None
    source: str | None = field(default=None, compare=False)

    def to_dict(self):
        """Complete effective configuration, defaults included, in file layout."""
        cav = self.system.cavity
        if isinstance(cav, ParametricCavity):
            cavity = {"kind": "parametric", "e_z": cav.e_z, "n_cav": cav.n_cav}
            if self.resonance_angle is not None:
                cavity["resonance_angle"] = self.resonance_angle
        else:
            cavity = {"kind": "tabulated", "table": cav.source}
        return {
            "system": {"e_12": self.system.e_12, "n_prop": self.system.n_prop,
                       "theta_int": self.theta_int, "dia_factor": self.system.dia_factor},
            "cavity": cavity,
            "coupling": {"kind": self.system.coupling.kind, "omega_r_res": self.system.coupling.omega_r_res},
            "fit": {"omega_r_bounds": list(self.fit.omega_r_bounds),
                    "coarse_grid_points": self.fit.coarse_grid_points,
                    "refine_tolerance": self.fit.refine_tolerance,
                    "variant": self.fit.variant.value, "domain": self.fit.domain.value},
            "output": {"directory": str(self.output.directory), "plot_script": self.output.plot_script,
                       "workers": self.output.workers},
        }


def _key_line(text, section, key):
    """Line number of ``key`` inside ``[section]`` for diagnostics."""
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"\[([^\]]+)\]", stripped)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", stripped, re.IGNORECASE):
            return lineno
    return None


def _where(path, text, section, key):
    line = _key_line(text, section, key) if text else None
    loc = f"{path}:{line}" if line else str(path)
    return f"{loc}: [{section}] {key}"


def parse_config_text(text, path="<config>", base_dir=None):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    values = {sec: dict(keys) for sec, keys in _DEFAULTS.items()}
    given = {}
    for section in parser.sections():
        if section not in _DEFAULTS:
            raise ConfigError(f"{path}: unknown section [{section}] (known: {', '.join(_DEFAULTS)})")
        for key, raw in parser.items(section):
            if key not in _DEFAULTS[section]:
                raise ConfigError(f"{_where(path, text, section, key)}: unknown key "
                                  f"(known: {', '.join(_DEFAULTS[section])})")
            values[section][key] = raw.strip()
            given[(section, key)] = True

    def number(section, key, kind=float):
        raw = values[section][key]
        try:
            value = kind(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"{_where(path, text, section, key)}: expected a number, got {raw!r}") from None
        if kind is float and not math.isfinite(value):
            raise ConfigError(f"{_where(path, text, section, key)}: must be finite")
        return value

    def boolean(section, key):
        raw = values[section][key].lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{_where(path, text, section, key)}: expected true/false, got {raw!r}")

    def check(section, key, build):
        try:
            return build()
        except ParameterError as exc:
            raise ConfigError(f"{_where(path, text, section, key)}: {exc}") from None

    e_12 = number("system", "e_12")
    if not e_12 > 0:
        raise ConfigError(f"{_where(path, text, 'system', 'e_12')}: e_12 must be > 0, got {e_12}")
    n_prop = number("system", "n_prop")
    theta_int = number("system", "theta_int")
    check("system", "theta_int", lambda: GeometryParams(theta_int, n_prop))
    dia_factor = number("system", "dia_factor")

    kind = values["cavity"]["kind"].lower()
    resonance_angle = None
    if kind == "parametric":
        n_cav = number("cavity", "n_cav")
        if values["cavity"]["e_z"] is not None:
            cavity = check("cavity", "e_z", lambda: ParametricCavity(number("cavity", "e_z"), n_cav))
            if ("cavity", "resonance_angle") in given:
                resonance_angle = number("cavity", "resonance_angle")  # kept for the record only
        else:
            resonance_angle = number("cavity", "resonance_angle")
            cavity = check("cavity", "resonance_angle",
                           lambda: calibrate_parametric_cavity(e_12, resonance_angle, n_prop, n_cav))
    elif kind == "tabulated":
        table = values["cavity"]["table"]
        if not table:
            raise ConfigError(f"{_where(path, text, 'cavity', 'kind')}: tabulated cavity needs a 'table' path")
        table_path = Path(table)
        if not table_path.is_absolute() and base_dir is not None:
            table_path = Path(base_dir) / table_path
        if not table_path.is_file():
            raise ConfigError(f"{_where(path, text, 'cavity', 'table')}: file not found: {table_path}")
        try:
            cavity = load_cavity_csv(table_path, n_prop)
        except (DataFormatError, ParameterError) as exc:
            raise ConfigError(f"{_where(path, text, 'cavity', 'table')}: {exc}") from None
    else:
        raise ConfigError(f"{_where(path, text, 'cavity', 'kind')}: expected parametric or tabulated, got {kind!r}")

    coupling = check("coupling", "omega_r_res", lambda: CouplingModel(
        number("coupling", "omega_r_res"), values["coupling"]["kind"].lower()))
    system = check("system", "e_12", lambda: SystemParams(e_12, cavity, coupling, n_prop, dia_factor))

    raw_bounds = values["fit"]["omega_r_bounds"]
    try:
        bounds = tuple(float(x) for x in re.split(r"[,\s]+", raw_bounds.strip("()[] ")) if x)
    except ValueError:
        bounds = ()
    if len(bounds) != 2:
        raise ConfigError(f"{_where(path, text, 'fit', 'omega_r_bounds')}: expected 'low, high', got {raw_bounds!r}")
    workers = number("output", "workers", int)
    fit = check("fit", "omega_r_bounds", lambda: FitConfig(
        bounds, number("fit", "coarse_grid_points", int), number("fit", "refine_tolerance"),
        values["fit"]["variant"], values["fit"]["domain"], workers))

    directory = values["output"]["directory"] or os.environ.get(OUTPUT_ENV) or "polariton-out"
    output = OutputConfig(Path(directory), boolean("output", "plot_script"), max(1, workers))
    return RunConfig(system, theta_int, fit, output, resonance_angle, source=str(path))


def parse_config(path=None):
    """Strictly parse a config file; ``None`` gives the all-defaults config."""
    if path is None:
        return parse_config_text("", "<defaults>")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, path, base_dir=path.parent)


def write_config(config: RunConfig, path):
    """Write the effective configuration back out as a config file."""
    parser = configparser.ConfigParser(interpolation=None)
    for section, keys in config.to_dict().items():
        parser[section] = {}
        for key, value in keys.items():
            if value is None:
                continue
            if isinstance(value, list):
                value = ", ".join(fmt(v) for v in value)
            elif isinstance(value, bool):
                value = str(value).lower()
            elif isinstance(value, float):
                value = repr(value)
            parser[section][key] = str(value)
    with open(path, "w") as fh:
        parser.write(fh)


# --- CSV ---------------------------------------------------------------------


def fmt(value):
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, f".{SIG_DIGITS}g")
    return str(value)


def _read_rows(path):
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r and any(c.strip() for c in r) and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = [h.strip().lower() for h in rows[0]]
    return path, header, rows[1:]


def _float(path, lineno, column, raw):
    try:
        value = float(raw)
    except ValueError:
        raise DataFormatError(f"{path}: row {lineno}: cannot parse {column}={raw!r}") from None
    if not math.isfinite(value):
        raise DataFormatError(f"{path}: row {lineno}: {column} must be finite")
    return value


def load_dispersion_csv(path):
    """Read ``theta_deg,energy_mev,branch`` (or ``k_per_nm`` in place of / next to theta)."""
    path, header, rows = _read_rows(path)
    missing = [c for c in ("energy_mev", "branch") if c not in header]
    if "theta_deg" not in header and "k_per_nm" not in header:
        missing.append("theta_deg")
    if missing:
        raise DataFormatError(f"{path}: missing column(s) {', '.join(missing)} in header {header}")
    col = {name: header.index(name) for name in header}
    points = []
    for lineno, row in enumerate(rows, 2):
        if len(row) != len(header):
            raise DataFormatError(f"{path}: row {lineno}: expected {len(header)} fields, got {len(row)}")
        branch = row[col["branch"]].strip().upper()
        if branch not in ("LP", "UP"):
            raise DataFormatError(f"{path}: row {lineno}: branch must be LP or UP, got {branch!r}")
        energy = _float(path, lineno, "energy_mev", row[col["energy_mev"]])
        theta = _float(path, lineno, "theta_deg", row[col["theta_deg"]]) if "theta_deg" in col else None
        k = _float(path, lineno, "k_per_nm", row[col["k_per_nm"]]) if "k_per_nm" in col else None
        try:
            points.append(DispersionPoint(energy, Branch(branch), theta_int=theta, k=k))
        except ParameterError as exc:
            raise DataFormatError(f"{path}: row {lineno}: {exc}") from None
    if not points:
        raise DataFormatError(f"{path}: no data rows")
    return points


def require_both_branches(points, path="data"):
    have = {p.branch for p in points}
    if have != {Branch.LP, Branch.UP}:
        missing = ", ".join(b.value for b in Branch if b not in have)
        raise DataFormatError(f"{path}: fitting needs at least one point per branch; missing {missing}")


def write_dispersion_csv(points, path, columns=None):
    """Inverse of :func:`load_dispersion_csv`."""
    if columns is None:
        has_theta = all(p.theta_int is not None for p in points)
        has_k = all(p.k is not None for p in points)
        columns = (["theta_deg"] if has_theta else []) + (["k_per_nm"] if has_k else [])
        columns += ["energy_mev", "branch"]
    getters = {
        "theta_deg": lambda p: fmt(float(p.theta_int)),
        "k_per_nm": lambda p: fmt(float(p.k)),
        "energy_mev": lambda p: fmt(float(p.energy)),
        "branch": lambda p: p.branch.value,
    }
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for p in points:
            writer.writerow([getters[c](p) for c in columns])


def write_table_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def read_table_csv(path):
    path, header, rows = _read_rows(path)
    return header, [[_float(path, i, h, v) if _is_number(v) else v for h, v in zip(header, r)]
                    for i, r in enumerate(rows, 2)]


def _is_number(raw):
    try:
        float(raw)
        return True
    except ValueError:
        return False


def load_cavity_csv(path, n_prop=3.3):
    """Tabulated cavity from ``k_per_nm,energy_mev`` or ``theta_deg,energy_mev``.

    Angle-indexed tables are converted with the wavevector of light at the
    measured bare-cavity energy itself, which is already self-consistent.
    """
    path, header, rows = _read_rows(path)
    if "energy_mev" not in header or not ({"k_per_nm", "theta_deg"} & set(header)):
        raise DataFormatError(f"{path}: cavity table needs k_per_nm,energy_mev or theta_deg,energy_mev; got {header}")
    by_angle = "k_per_nm" not in header
    i_x = header.index("theta_deg" if by_angle else "k_per_nm")
    i_e = header.index("energy_mev")
    pairs = []
    for lineno, row in enumerate(rows, 2):
        x = _float(path, lineno, header[i_x], row[i_x])
        e = _float(path, lineno, "energy_mev", row[i_e])
        if by_angle:
            try:
                x = k_of_angle_energy(GeometryParams(x, n_prop), e)
            except ParameterError as exc:
                raise DataFormatError(f"{path}: row {lineno}: {exc}") from None
        pairs.append((x, e))
    pairs.sort()
    return TabulatedCavity(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), source=str(path))


def write_cavity_csv(model: TabulatedCavity, path):
    write_table_csv(path, ["k_per_nm", "energy_mev"], list(zip(model.k, model.e_cav)))


# --- JSON --------------------------------------------------------------------


def _round(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(format(obj, f".{SIG_DIGITS}g"))
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    if hasattr(obj, "item"):  # numpy scalars
        return _round(obj.item())
    return obj


def result_document(command, config: RunConfig, results, tolerances, version, timestamp=None):
    return {
        "tool": "polariton",
        "version": version,
        "command": command,
        "timestamp": timestamp,
        "constants": {"hbar_c_mev_nm": HBAR_C},
        "config": config.to_dict(),
        "tolerances": tolerances,
        "results": results,
    }


def dumps_document(doc):
    return json.dumps(_round(doc), indent=2, sort_keys=True) + "\n"


def write_document(doc, path):
    Path(path).write_text(dumps_document(doc))


def load_document(path):
    return json.loads(Path(path).read_text())


def variant_slug(variant):
    return Variant.parse(variant).value.lower()


def domain_of(points):
    return Domain.ANGLE if all(p.theta_int is not None for p in points) else Domain.WAVEVECTOR
