"""Command-line entry point: ``twinbeam {simulate,analyze,cavity,report}``.

Exit codes: 0 success, 2 configuration error, 3 data-format error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import add_count_blocks, add_model_blocks, analyze_stream, new_report, run_simulate, run_sweep
from .cavity import (
    brightness_fit,
    coupling_g,
    lorentzian_fit,
    mode_volume_for,
    percent_per_uw,
    q_from_bandwidth,
    read_scan,
    shg_efficiency,
)
from .config import CavityConfig, RunConfig, load_config
from .errors import ConfigError, FormatError, TwinbeamError
from .montecarlo import simulate_counts
from .report import RENDERERS, Report, estimate_block, series_block
from .tagstream import open_stream

log = logging.getLogger("twinbeam")


def _emit(report: Report, out, fmt: str):
    text = RENDERERS[fmt](report)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _run_config(args) -> RunConfig:
    if not args.config:
        raise ConfigError(["--config is required"])
    return load_config(args.config, RunConfig, {"seed": args.seed})


def cmd_simulate(args):
    cfg = _run_config(args)
    if args.sweep:
        report = run_sweep(cfg, args.threads)
    elif args.counts_only:
        counts = simulate_counts(cfg.sim_config(), cfg.count_cap, args.threads)
        report = add_count_blocks(new_report("simulate-counts", cfg), counts, cfg)
        add_model_blocks(report, cfg)
    else:
        out = args.out or cfg.stream_path
        if not out:
            raise ConfigError(["simulate needs --out or stream_path for the tag stream"])
        report = run_simulate(cfg, out, args.threads, throughput=args.throughput)
        log.info("wrote %s", out)
    _emit(report, args.report or cfg.report_path, args.format)


def cmd_analyze(args):
    cfg = _run_config(args)
    try:
        stream = open_stream(args.stream)
    except OSError as exc:
        raise FormatError(f"{args.stream}: {exc.strerror}") from None
    report = analyze_stream(stream, cfg)
    _emit(report, args.out or cfg.report_path, args.format)


def cmd_cavity(args):
    report = new_report(f"cavity {args.cavity_command}", None)
    if args.cavity_command == "coupling":
        if not args.config:
            raise ConfigError(["--config is required"])
        cfg = load_config(args.config, CavityConfig)
        report.config_digest = cfg.digest()
        g = coupling_g(cfg.params())
        estimate_block(report, "coupling_g_angular", g.angular, units="rad/s")
        estimate_block(report, "coupling_g_over_2pi", g.hz, units="Hz")
        if args.target_g_hz:
            for conv in ("hz", "angular"):
                v = mode_volume_for(cfg.params(), args.target_g_hz, conv)
                estimate_block(report, f"mode_volume_for_target_{conv}", v * 1e18, units="um^3")
    elif args.cavity_command == "fit":
        scan = read_scan(args.scan, args.column, args.carrier_hz)
        fit = lorentzian_fit(scan, args.regime)
        report.add("diagnostics", "resonance_fit", q_loaded=fit.q_loaded, q_coupling=fit.q_coupling,
                   q_intrinsic=fit.q_intrinsic, extinction=fit.extinction, center_hz=fit.center,
                   baseline=fit.baseline, residual_rms=fit.residual_rms, regime=fit.regime,
                   linewidth_hz=fit.center / fit.q_loaded)
    elif args.cavity_command == "shg":
        eta = shg_efficiency(args.p_sh, args.p_pump)
        estimate_block(report, "shg_efficiency", percent_per_uw(eta), units="%/uW")
    elif args.cavity_command == "q":
        estimate_block(report, "q_from_bandwidth", q_from_bandwidth(args.center_hz, args.fwhm_hz))
    elif args.cavity_command == "brightness":
        points = _read_points(args.points)
        fit = brightness_fit(points, args.order)
        scale = 1e-6**fit.exponent  # per uW**k
        estimate_block(report, "coefficient", fit.coefficient * scale, units=f"1/s/uW^{fit.exponent:g}")
        estimate_block(report, "exponent", fit.exponent, fit.exponent_error if args.order == "free" else None)
        series_block(report, "residuals", ["pump", "rate", "residual"],
                     [[p, r, e] for (p, r), e in zip(points, fit.residuals)], ["W", "1/s", "1/s"])
    _emit(report, args.out, args.format)


def _read_points(path):
    pts = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        try:
            p, r = (float(x) for x in fields)
        except ValueError:
            raise FormatError(f"{path}:{lineno}: expected 'pump_w rate_hz'") from None
        pts.append((p, r))
    return pts


def cmd_report(args):
    try:
        text = Path(args.report_file).read_text()
    except OSError as exc:
        raise FormatError(f"{args.report_file}: {exc.strerror}") from None
    _emit(Report.from_json(text), args.out, args.format)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat TOML run configuration")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--format", choices=sorted(RENDERERS), default="json")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="twinbeam", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate a tag stream or slot counts")
    p.add_argument("--report", help="where to write the run report (stdout if omitted)")
    p.add_argument("--counts-only", action="store_true", help="skip the stream; report slot statistics")
    p.add_argument("--sweep", action="store_true", help="run every sweep point in slot mode")
    p.add_argument("--throughput", action="store_true", help="include wall-clock throughput (not byte-stable)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", parents=[common], help="analyze a TTAG stream")
    p.add_argument("stream")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("cavity", help="device calibration")
    csub = p.add_subparsers(dest="cavity_command", required=True)
    c = csub.add_parser("coupling", parents=[common])
    c.add_argument("--target-g-hz", type=float, help="also back-solve the mode volume for this coupling")
    c = csub.add_parser("fit", parents=[common])
    c.add_argument("scan")
    c.add_argument("--regime", choices=("over", "under", "auto"), default="auto")
    c.add_argument("--column", choices=("wavelength_nm", "detuning_ghz"))
    c.add_argument("--carrier-hz", type=float)
    c = csub.add_parser("shg", parents=[common])
    c.add_argument("p_sh", type=float, help="second-harmonic power, W")
    c.add_argument("p_pump", type=float, help="pump power, W")
    c = csub.add_parser("q", parents=[common])
    c.add_argument("center_hz", type=float)
    c.add_argument("fwhm_hz", type=float)
    c = csub.add_parser("brightness", parents=[common])
    c.add_argument("points", help="two-column text: pump power (W), rate (1/s)")
    c.add_argument("--order", choices=("linear", "quadratic", "free"), default="linear")
    p.set_defaults(func=cmd_cavity)

    p = sub.add_parser("report", parents=[common], help="render a saved report")
    p.add_argument("report_file")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return exc.exit_code
    except TwinbeamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
