"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 model or
physics error.
"""

from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import calibration, fiber_link, mz_detection, phase_matching, sde_oracle
from .cascade_model import ASSUMPTIONS, OUTPUT_IDS, build_cascade_covariance
from .config import ScenarioConfig, load_config, shipped
from .errors import ConfigError, TricolorError
from .gaussian_core import QuadratureCombo, format_covariance, parse_covariance, physicality_check
from .nopo_model import derived_rates, nopo_state_space
from .vlf_criteria import (
    REFERENCE_TABLE,
    evaluate,
    evaluate_optimal,
    criteria_from_measurements,
    format_result_csv,
    format_result_text,
    read_measured_table,
)

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_MODEL = 0, 1, 2, 3

REFERENCE_DELTA23 = 3.68


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _config_path(value: str) -> Path:
    """A path, or the bare name of a shipped config such as ``paper_operating_point``."""
    p = Path(value)
    if p.exists():
        return p
    candidate = shipped(value if value.endswith(".cfg") else value + ".cfg")
    return candidate if candidate.exists() else p


def plot_stub(csv_name: str, x: str, y: str, group: str | None = None) -> str:
    """Gnuplot script plotting ``y`` against ``x`` from a CSV written by this tool."""
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{x}'",
        f"set ylabel '{y}'",
    ]
    if group:
        lines.append(f"# one curve per value of column '{group}'; split with: awk -F, '$1==VALUE' {csv_name}")
    lines.append(f"plot '{csv_name}' using '{x}':'{y}' with linespoints")
    return "\n".join(lines) + "\n"


# simulate ------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = load_config(_config_path(args.config)).cascade()
    cov = build_cascade_covariance(cfg)
    report = physicality_check(cov)
    result = evaluate_optimal(cov, OUTPUT_IDS)
    if args.out:
        Path(args.out).write_text(format_covariance(cov))
    if args.format == "csv":
        text = format_result_csv(result)
        text += f"physical,{int(report.passed)},{report.min_eigenvalue:.6g},,\n"
    else:
        buf = io.StringIO()
        buf.write("covariance (X2 Y2 X3 Y3 X4 Y4):\n")
        for row in cov.entries:
            buf.write("  " + " ".join(f"{x:+10.5f}" for x in row) + "\n")
        buf.write(f"physical: {'yes' if report.passed else 'NO'} (min eigenvalue of V + iΩ = {report.min_eigenvalue:.4g})\n")
        buf.write(format_result_text(result) + "\n")
        if not (cfg.bypass_nopo1 or cfg.bypass_nopo2):
            buf.write("model assumptions:\n")
            buf.writelines(f"  - {a}\n" for a in ASSUMPTIONS)
        text = buf.getvalue()
    sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_MODEL


# criteria ------------------------------------------------------------------


def cmd_criteria(args) -> int:
    if args.covariance:
        cov = parse_covariance(Path(args.covariance).read_text())
        result = evaluate(cov, args.gains, OUTPUT_IDS) if args.gains else evaluate_optimal(cov, OUTPUT_IDS)
        footnote = ""
    else:
        if not args.measurements:
            raise ConfigError("give a measurement CSV or --covariance")
        table = read_measured_table(_data_path(args.measurements))
        result = criteria_from_measurements(table)
        footnote = ""
        if table == REFERENCE_TABLE:
            footnote = (
                f"footnote: Δ2 and Δ3 are {result.delta2:.2f} by direct arithmetic on this table; "
                f"the quoted reference value is {REFERENCE_DELTA23:.2f}\n"
            )
    if args.format == "csv":
        text = format_result_csv(result)
    else:
        text = format_result_text(result) + "\n" + footnote
    _emit(text, args.out)
    return EXIT_OK


def _data_path(value: str) -> Path:
    p = Path(value)
    if p.exists():
        return p
    candidate = shipped(value)
    return candidate if candidate.exists() else p


# calibrate -----------------------------------------------------------------


def cmd_calibrate(args) -> int:
    path = _config_path(args.config)
    sc = load_config(path)
    problem = _calibration_problem(sc)
    result = calibration.fit(problem, max_evaluations=sc.get("calibration", "max_evaluations"))
    text = calibration.format_result(result)
    _emit(text, args.out)
    if result.warning:
        print("warning: calibration stopped at the evaluation cap; reporting the best point found", file=sys.stderr)
    return EXIT_OK


def _calibration_problem(sc: ScenarioConfig) -> calibration.CalibrationProblem:
    free_text = sc.get("calibration", "free")
    if not free_text:
        raise ConfigError("calibration.free lists no parameters")
    free = calibration.free_parameter_list(free_text)
    try:
        weights = tuple(float(w) for w in sc.get("calibration", "weights").split(","))
    except ValueError:
        raise ConfigError("calibration.weights must be six comma-separated numbers") from None
    targets_path = sc.path("targets")
    table = REFERENCE_TABLE if targets_path is None else read_measured_table(targets_path)
    start = {
        p: sc.get("calibration", f"start_{p}")
        for p in calibration.PARAMETER_BOUNDS
        if sc.has("calibration", f"start_{p}")
    }
    return calibration.CalibrationProblem(sc.cascade(), free, table, start, weights)


# tuning-curve --------------------------------------------------------------


def cmd_tuning_curve(args) -> int:
    sets = phase_matching.load_dispersion(args.dispersion)
    if args.material not in sets:
        raise ConfigError(f"unknown material {args.material!r}; available: {', '.join(sets)}")
    crystal = sets[args.material]
    if args.anchor_signal is not None:
        crystal = phase_matching.calibrate_poling(crystal, args.pump, args.anchor_temperature, args.anchor_signal)
    n = int(round((args.t_stop - args.t_start) / args.t_step)) + 1
    temps = [args.t_start + k * args.t_step for k in range(n)]
    points = phase_matching.tuning_curve(crystal, args.pump, temps, branch=args.branch)
    buf = io.StringIO()
    buf.write("temperature_c,signal_nm,idler_nm\n")
    for p in points:
        buf.write(f"{p.temperature:.4f},{p.signal_wavelength:.6f},{p.idler_wavelength:.6f}\n")
    _emit(buf.getvalue(), args.out)
    if args.plot_script:
        Path(args.plot_script).write_text(plot_stub(args.out or "tuning.csv", "temperature_c", "signal_nm"))
    return EXIT_OK


# fiber-sweep ---------------------------------------------------------------


def cmd_fiber_sweep(args) -> int:
    table = fiber_link.load_attenuation(args.table)
    buf = io.StringIO()
    if args.max_distance:
        buf.write("wavelength_nm,alpha_db_per_km,max_distance_km\n")
        for wl, alpha in table.entries:
            d = fiber_link.max_distance(args.v_db, args.cutoff, alpha)
            buf.write(f"{wl:g},{alpha:g},{d:.4f}\n")
    else:
        n = int(round(args.max_km / args.step_km)) + 1
        distances = [k * args.step_km for k in range(n)]
        buf.write("wavelength_nm,distance_km,variance_db\n")
        for wl, alpha in table.entries:
            for d, v in fiber_link.sweep(args.v_db, alpha, distances):
                buf.write(f"{wl:g},{d:.4f},{v:.6f}\n")
    _emit(buf.getvalue(), args.out)
    if args.plot_script and not args.max_distance:
        Path(args.plot_script).write_text(
            plot_stub(args.out or "fiber.csv", "distance_km", "variance_db", group="wavelength_nm")
        )
    return EXIT_OK


# mz ------------------------------------------------------------------------


def cmd_mz(args) -> int:
    f = args.frequency_mhz * 1e6
    delta_l = args.delta_l if args.delta_l is not None else mz_detection.arm_delta_for_pi(f, args.index)
    cfg = mz_detection.MzConfig(f, args.index, delta_l, args.lock, args.visibility)
    readout = mz_detection.measured_quantities(cfg, args.s_x, args.s_y)
    text = f"arm length difference: {delta_l:.4f} m\n" + mz_detection.format_report(cfg, readout) + "\n"
    _emit(text, args.out)
    return EXIT_OK


# oracle-check --------------------------------------------------------------


def cmd_oracle_check(args) -> int:
    sc = load_config(_config_path(args.config))
    p2 = sc.nopo("nopo2")
    system = nopo_state_space(p2, mode_ids=(3, 4), bypass_gain=sc.get("cascade", "bypass_nopo2"))
    kappa = derived_rates(p2).kappa_total if not sc.get("cascade", "bypass_nopo2") else -system.drift[0, 0]
    omegas = [kappa * x for x in args.frequencies]
    combos = [QuadratureCombo.parse(c) for c in args.combo]
    plan = sde_oracle.make_plan(system, omegas, seed=args.seed, n_segments=args.segments)
    rows = sde_oracle.oracle_check(plan, combos, omegas)
    buf = io.StringIO()
    buf.write("combo,omega_over_kappa,analytic,simulated,std_error,pass\n")
    for r in rows:
        buf.write(f"{r.combo},{r.omega / kappa:.4g},{r.analytic:.6f},{r.simulated:.6f},{r.std_error:.6f},{int(r.passed)}\n")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_MODEL


# parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tricolor", description="Three-color cascaded-NOPO entanglement toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=False):
        if config:
            p.add_argument("--config", required=True, help="scenario file, or the name of a shipped one")
        p.add_argument("--out", help="write the main output here instead of stdout")
        p.add_argument("--format", choices=("text", "csv"), default="text")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = common(sub.add_parser("simulate", help="covariance, criteria and verdict of a scenario"), config=True)
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("criteria", help="criteria from measured dB values or a covariance file"))
    p.add_argument("measurements", nargs="?", help="six-row CSV of measured variances")
    p.add_argument("--covariance", help="covariance file written by 'simulate --out'")
    p.add_argument("--gains", type=_floats, help="g1,g2,g3 (default: optimal)")
    p.set_defaults(func=cmd_criteria)

    p = common(sub.add_parser("calibrate", help="fit nuisance parameters to measured dB values"), config=True)
    p.set_defaults(func=cmd_calibrate)

    p = common(sub.add_parser("tuning-curve", help="QPM signal/idler wavelengths versus temperature"))
    p.add_argument("--material", default="PPLN")
    p.add_argument("--dispersion", help="dispersion data file (default: shipped)")
    p.add_argument("--pump", type=float, default=746.64, help="pump wavelength, nm")
    p.add_argument("--anchor-temperature", type=float, default=154.0)
    p.add_argument("--anchor-signal", type=float, default=1550.60, help="signal nm at the anchor; calibrates the poling period")
    p.add_argument("--t-start", type=float, default=130.0)
    p.add_argument("--t-stop", type=float, default=160.0)
    p.add_argument("--t-step", type=float, default=1.0)
    p.add_argument("--branch", choices=("long", "short"), default="long")
    p.add_argument("--plot-script", help="also write a gnuplot stub here")
    p.set_defaults(func=cmd_tuning_curve)

    p = common(sub.add_parser("fiber-sweep", help="correlation variance versus fiber length"))
    p.add_argument("--table", help="attenuation table (default: shipped)")
    p.add_argument("--v-db", type=float, default=-3.2)
    p.add_argument("--cutoff", type=float, default=-0.2)
    p.add_argument("--max-km", type=float, default=60.0)
    p.add_argument("--step-km", type=float, default=1.0)
    p.add_argument("--max-distance", action="store_true", help="print the distance to the cutoff per wavelength")
    p.add_argument("--plot-script", help="also write a gnuplot stub here")
    p.set_defaults(func=cmd_fiber_sweep)

    p = common(sub.add_parser("mz", help="unbalanced Mach-Zehnder readout"))
    p.add_argument("--frequency-mhz", type=float, default=2.0)
    p.add_argument("--index", type=float, default=1.5625)
    p.add_argument("--delta-l", type=float, help="arm length difference, m (default: the π condition)")
    p.add_argument("--lock", choices=mz_detection.LOCKS, default=mz_detection.BALANCED)
    p.add_argument("--s-x", type=float, default=1.0)
    p.add_argument("--s-y", type=float, default=1.0)
    p.add_argument("--visibility", type=float, default=1.0)
    p.set_defaults(func=cmd_mz)

    p = common(sub.add_parser("oracle-check", help="time-domain check of the NOPO2 spectra"), config=True)
    p.add_argument("--combo", action="append", help="quadrature combination (repeatable)")
    p.add_argument("--frequencies", type=_floats, default=[0.1, 0.3, 1.0, 3.0, 10.0], help="Ω/κ values")
    p.add_argument("--segments", type=int, default=sde_oracle.MIN_SEGMENTS)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if getattr(args, "combo", "unset") is None:
        args.combo = ["X3-X4", "Y3+Y4"]
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TricolorError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
