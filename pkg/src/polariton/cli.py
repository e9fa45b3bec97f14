"""Command line entry point: ``polariton <command> [options]``.

Each run writes ``<command>.json`` (effective config, tolerances, results),
one CSV per table, and ``effective_config.ini`` into the output directory.
Exit status: 0 success, 1 physics or solver failure, 2 usage or invalid input.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import logging
import sys
from dataclasses import replace
from pathlib import Path

from polariton import __version__
from polariton.constants import DEFAULT_TOLERANCES
from polariton.core import ModeInputs, Variant, diagonalize, ground_state_populations
from polariton.dispersion import ANGLE_XTOL, ParametricCavity, calibrate_parametric_cavity, dispersion_curve
from polariton.errors import ConfigError, DataFormatError, ParameterError, PolaritonError
from polariton.fitkit import DEVIATION_COLUMNS, Domain, compare_variants, deviation_vs_coupling, fit_rabi
from polariton.fock import FockConfig, oracle_spectrum
from polariton.io import (
    domain_of,
    fmt,
    load_dispersion_csv,
    parse_config,
    require_both_branches,
    result_document,
    variant_slug,
    write_config,
    write_dispersion_csv,
    write_document,
    write_table_csv,
)

log = logging.getLogger("polariton")


class UsageError(Exception):
    pass


def parse_grid(text):
    """``start:stop:step`` (stop inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(round((stop - start) / step)) + 1
            return [round(start + i * step, 12) for i in range(count)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}: use start:stop:step or a comma-separated list") from None


def _common(parser):
    parser.add_argument("--config", type=Path, help="INI run configuration")
    parser.add_argument("--output-dir", type=Path, help="overrides [output] directory")
    parser.add_argument("--plot-script", action="store_true", help="also emit a matplotlib script")
    parser.add_argument("--workers", type=int, help="process pool size for grid evaluations")
    parser.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from the JSON document")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    _common(common)
    parser = argparse.ArgumentParser(prog="polariton", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dispersion", parents=[common], help="polariton branches over an angle or k grid")
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--angles", help="internal angles in degrees, start:stop:step (default 50:85:1)")
    grid.add_argument("--ks", help="wavevectors in 1/nm, start:stop:step")
    p.add_argument("--variant", default="all", help="FULL, NO_ANTIRES, NO_ANTIRES_NO_DIA or all")

    p = sub.add_parser("fit", parents=[common], help="single-variant Rabi energy fit")
    p.add_argument("--data", type=Path, required=True, help="CSV theta_deg,energy_mev,branch")
    p.add_argument("--variant", help="overrides [fit] variant")

    p = sub.add_parser("compare", parents=[common], help="fit all three Hamiltonian variants")
    p.add_argument("--data", type=Path, required=True, help="CSV theta_deg,energy_mev,branch")

    p = sub.add_parser("deviation-map", parents=[common], help="reduced-variant deviation vs coupling ratio")
    p.add_argument("--ratios", default="0:0.3:0.01", help="omega_r/e_12 grid")
    p.add_argument("--theta-res", type=float, default=60.0, help="resonance angle in degrees")

    p = sub.add_parser("ground-state", parents=[common], help="virtual populations vs coupling ratio")
    p.add_argument("--ratios", default="0:0.3:0.01", help="omega_r/e_12 grid")
    p.add_argument("--detuning", type=float, default=0.0, help="e_cav - e_12 in meV")

    p = sub.add_parser("oracle-check", parents=[common], help="Fock-space oracle vs Bogoliubov spectrum")
    p.add_argument("--ratios", help="omega_r/e_12 list (default: config omega_r_res / e_12)")
    p.add_argument("--detunings", default="0", help="e_cav - e_12 list in meV")
    p.add_argument("--variant", default="FULL")
    p.add_argument("--tolerance", type=float, default=1e-6, help="max allowed discrepancy (meV, occupancy)")
    p.add_argument("--cutoff", type=int, default=16, help="initial Fock cutoff per mode")
    return parser


def _effective_config(args):
    config = parse_config(args.config)
    output = config.output
    if args.output_dir is not None:
        output = replace(output, directory=args.output_dir)
    if args.plot_script:
        output = replace(output, plot_script=True)
    if args.workers is not None:
        output = replace(output, workers=max(1, args.workers))
        config = replace(config, fit=replace(config.fit, workers=output.workers))
    return replace(config, output=output)


def _tolerances():
    return {
        "pairing_mev": DEFAULT_TOLERANCES.pairing,
        "normalization": DEFAULT_TOLERANCES.normalization,
        "angle_solver_xtol_mev": ANGLE_XTOL,
    }


def _variants(text):
    if text.strip().lower() == "all":
        return list(Variant)
    return [Variant.parse(text)]


def cmd_dispersion(args, config, out):
    variants = _variants(args.variant)
    if args.ks:
        grid, kw, domain = parse_grid(args.ks), "ks", "wavevector"
    else:
        grid, kw, domain = parse_grid(args.angles or "50:85:1"), "angles", "angle"
    results, tables = {}, []
    for variant in variants:
        curve = dispersion_curve(config.system, variant, workers=config.output.workers, **{kw: grid})
        name = f"dispersion_{variant_slug(variant)}.csv"
        write_dispersion_csv(curve.points, out / name)
        tables.append(name)
        results[variant.value] = {
            "csv": name,
            "n_points": len(curve.points),
            "partial": curve.partial,
            "errors": [{"abscissa": a, "branch": b, "message": m} for a, b, m in curve.errors],
        }
    x_col = "theta_deg" if domain == "angle" else "k_per_nm"
    return {"domain": domain, "grid": grid, "curves": results}, tables, x_col, "energy_mev"


def _load_fit_data(path):
    points = load_dispersion_csv(path)
    require_both_branches(points, path)
    return points


def _fit_payload(result, out):
    slug = variant_slug(result.variant)
    rms_name = f"rms_curve_{slug}.csv"
    write_table_csv(out / rms_name, ["omega_r_mev", "rms_mev"], result.rms_curve)
    curve_name = f"fitted_{slug}.csv"
    if result.fitted_curve.points:
        write_dispersion_csv(result.fitted_curve.points, out / curve_name)
    return {
        "variant": result.variant.value,
        "omega_r_star": result.omega_r_star,
        "rms_star": result.rms_star,
        "n_points_used": result.n_points_used,
        "warnings": result.warnings,
        "error": result.error,
        "rms_curve_csv": rms_name,
        "fitted_curve_csv": curve_name if result.fitted_curve.points else None,
    }, rms_name


def cmd_fit(args, config, out):
    data = _load_fit_data(args.data)
    fit_cfg = config.fit
    if domain_of(data) is Domain.WAVEVECTOR:
        fit_cfg = replace(fit_cfg, domain=Domain.WAVEVECTOR)
    if args.variant:
        fit_cfg = replace(fit_cfg, variant=Variant.parse(args.variant))
    result = fit_rabi(data, config.system, fit_cfg)
    payload, rms_name = _fit_payload(result, out)
    for w in result.warnings:
        log.warning(w)
    print(f"{result.variant.value}: omega_r* = {fmt(result.omega_r_star)} meV, rms = {fmt(result.rms_star)} meV")
    return {"data": str(args.data), "fit": payload}, [rms_name], "omega_r_mev", "rms_mev"


def cmd_compare(args, config, out):
    data = _load_fit_data(args.data)
    results = compare_variants(data, config.system, config.fit)
    payloads, tables = [], []
    for r in results:
        payload, rms_name = _fit_payload(r, out)
        payloads.append(payload)
        tables.append(rms_name)
    write_table_csv(out / "compare.csv", ["variant", "omega_r_star_mev", "rms_star_mev"],
                    [[r.variant.value, r.omega_r_star, r.rms_star] for r in results])
    print(f"{'variant':<20} {'omega_r* (meV)':>16} {'rms (meV)':>14}")
    for r in results:
        print(f"{r.variant.value:<20} {fmt(r.omega_r_star):>16} {fmt(r.rms_star):>14}")
    return {"data": str(args.data), "ranking": payloads}, tables, "omega_r_mev", "rms_mev"


def cmd_deviation_map(args, config, out):
    ratios = parse_grid(args.ratios)
    params = config.system
    if isinstance(params.cavity, ParametricCavity):
        cavity = calibrate_parametric_cavity(params.e_12, args.theta_res, params.n_prop, params.cavity.n_cav)
        params = replace(params, cavity=cavity)
    rows = deviation_vs_coupling(params, ratios, args.theta_res, workers=config.output.workers)
    table = []
    for row in rows:
        table.append([row.ratio] + [row.deviations.get(c, float("nan")) for c in DEVIATION_COLUMNS])
    write_table_csv(out / "deviation_map.csv", ["ratio", *DEVIATION_COLUMNS], table)
    results = {
        "theta_res": args.theta_res,
        "cavity_e_z": getattr(params.cavity, "e_z", None),
        "rows": [{"ratio": r.ratio, "omega_r": r.omega_r, "e_full_lp": r.e_full[0], "e_full_up": r.e_full[1],
                  **r.deviations, "error": r.error} for r in rows],
        "csv": "deviation_map.csv",
    }
    return results, ["deviation_map.csv"], "ratio", list(DEVIATION_COLUMNS)


def cmd_ground_state(args, config, out):
    ratios = parse_grid(args.ratios)
    e_12 = config.system.e_12
    rows = []
    for ratio in ratios:
        inputs = ModeInputs(e_12 + args.detuning, e_12, ratio * e_12,
                            config.system.dia_factor * (ratio * e_12) ** 2 / e_12)
        modes = diagonalize(inputs, Variant.FULL)
        pops = ground_state_populations(modes)
        rows.append([ratio, inputs.omega_r, pops.n_photon, pops.n_matter, modes.e_lp, modes.e_up])
    header = ["ratio", "omega_r_mev", "n_photon", "n_matter", "e_lp_mev", "e_up_mev"]
    write_table_csv(out / "ground_state.csv", header, rows)
    return ({"detuning": args.detuning, "rows": [dict(zip(header, r)) for r in rows], "csv": "ground_state.csv"},
            ["ground_state.csv"], "ratio", ["n_photon", "n_matter"])


def cmd_oracle_check(args, config, out):
    e_12 = config.system.e_12
    ratios = parse_grid(args.ratios) if args.ratios else [config.system.coupling.omega_r_res / e_12]
    detunings = parse_grid(args.detunings)
    variant = Variant.parse(args.variant)
    fock_cfg = FockConfig(args.cutoff, args.cutoff, convergence_tol=min(1e-9, args.tolerance / 10))
    rows, worst = [], 0.0
    for ratio in ratios:
        for det in detunings:
            omega_r = ratio * e_12
            inputs = ModeInputs(e_12 + det, e_12, omega_r, config.system.dia_factor * omega_r**2 / e_12)
            modes = diagonalize(inputs, variant)
            pops = ground_state_populations(modes)
            oracle = oracle_spectrum(inputs, variant, fock_cfg)
            diff = max(abs(modes.e_lp - oracle.e_lp), abs(modes.e_up - oracle.e_up),
                       abs(pops.n_photon - oracle.n_photon), abs(pops.n_matter - oracle.n_matter))
            worst = max(worst, diff)
            rows.append([ratio, det, modes.e_lp, oracle.e_lp, modes.e_up, oracle.e_up,
                         pops.n_photon, oracle.n_photon, diff, oracle.cutoff[0]])
    header = ["ratio", "detuning_mev", "e_lp_bogoliubov", "e_lp_oracle", "e_up_bogoliubov", "e_up_oracle",
              "n_photon_bogoliubov", "n_photon_oracle", "max_discrepancy", "cutoff"]
    write_table_csv(out / "oracle_check.csv", header, rows)
    passed = worst < args.tolerance
    print(f"oracle-check {'PASS' if passed else 'FAIL'}: max discrepancy {worst:.3e} (tolerance {args.tolerance:g})")
    results = {"variant": variant.value, "passed": passed, "max_discrepancy": worst, "tolerance": args.tolerance,
               "cases": [dict(zip(header, r)) for r in rows], "csv": "oracle_check.csv"}
    if not passed:
        raise OracleMismatch(results)
    return results, ["oracle_check.csv"], "ratio", "max_discrepancy"


class OracleMismatch(PolaritonError):
    def __init__(self, results):
        self.results = results
        super().__init__(f"oracle discrepancy {results['max_discrepancy']:.3e} exceeds {results['tolerance']:g}")


COMMANDS = {
    "dispersion": cmd_dispersion,
    "fit": cmd_fit,
    "compare": cmd_compare,
    "deviation-map": cmd_deviation_map,
    "ground-state": cmd_ground_state,
    "oracle-check": cmd_oracle_check,
}


PLOT_TEMPLATE = '''"""Plot the tables written by `polariton {command}`."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).parent
TABLES = {tables!r}
X = {x!r}
Y = {y!r}

fig, ax = plt.subplots()
for name in TABLES:
    with open(HERE / name) as fh:
        rows = list(csv.DictReader(fh))
    ys = Y if isinstance(Y, list) else [Y]
    groups = {{}}
    for row in rows:
        key = row.get("branch", "")
        groups.setdefault(key, []).append(row)
    for key, grp in groups.items():
        for y in ys:
            ax.plot([float(r[X]) for r in grp], [float(r[y]) for r in grp], ".-",
                    label=" ".join(s for s in (name, key, y if len(ys) > 1 else "") if s))
ax.set_xlabel(X)
ax.set_ylabel(Y if isinstance(Y, str) else "value")
ax.legend(fontsize="small")
fig.savefig(HERE / "{command}.png", dpi=150)
'''


def write_plot_script(out, command, tables, x, y):
    path = out / f"plot_{command.replace('-', '_')}.py"
    path.write_text(PLOT_TEMPLATE.format(command=command, tables=tables, x=x, y=y))
    return path


def run(args):
    config = _effective_config(args)
    out = config.output.directory
    out.mkdir(parents=True, exist_ok=True)
    handler = COMMANDS[args.command]
    timestamp = None if args.no_timestamp else _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    status = 0
    try:
        results, tables, x, y = handler(args, config, out)
    except OracleMismatch as exc:
        results, tables, x, y, status = exc.results, ["oracle_check.csv"], "ratio", "max_discrepancy", 1
    doc = result_document(args.command, config, results, _tolerances(), __version__, timestamp)
    write_document(doc, out / f"{args.command}.json")
    write_config(config, out / "effective_config.ini")
    if config.output.plot_script:
        write_plot_script(out, args.command, tables, x, y)
    return status


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return run(args)
    except (UsageError, ConfigError, DataFormatError, ParameterError) as exc:
        print(f"polariton: error: {exc}", file=sys.stderr)
        return 2
    except PolaritonError as exc:
        print(f"polariton: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
