"""Command-line interface: ``gkp-repeater {rate,figure,optimize,validate}``.

Exit codes: 0 on success (a zero key rate is a valid answer), 1 on domain
errors such as an inadmissible code dimension, 2 on invalid flags.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, oracle, polycode
from .figures import FIGURES, figure
from .half_teleport import SYMMETRIC_MODES, Placement
from .protocols import Protocol, RepeaterConfig, optimal_bare_dimension, optimal_spacing, rate
from .sweeps import Axis, RunConfig, SweepTable, atomic_write, run_sweep, write_table
from .validation import ValidationPoint, run_validation

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

# flag name -> RepeaterConfig field
CONFIG_FLAGS = {
    "protocol": "protocol",
    "dimension": "dim",
    "encoded": "encoded",
    "length_km": "length_km",
    "spacing_km": "spacing_km",
    "squeezing_db": "squeezing_db",
    "coupling": "coupling",
    "gamma": "gamma",
    "placement": "placement",
    "meas_var": "meas_var",
    "jmax": "jmax",
    "strict_code": "strict_code",
    "symmetric_mode": "symmetric_mode",
    "attenuation_km": "attenuation_km",
}


class UsageError(Exception):
    """Bad flag combination detected after argparse succeeded."""


def _protocol(text: str) -> str:
    try:
        return Protocol.parse(text).value
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown protocol {text!r}") from None


def _axis(text: str) -> Axis:
    try:
        return Axis.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    # defaults are None so that a --config file is only overridden by flags the user typed
    g = p.add_argument_group("repeater configuration")
    g.add_argument("--protocol", type=_protocol, help="two-way, one-way or half-teleport")
    g.add_argument("--dimension", "-D", type=int, help="qudit dimension D")
    g.add_argument("--encoded", action="store_true", default=None, help="use the [[D,1,(D+1)/2]] polynomial code")
    g.add_argument("--length-km", type=float, help="total length L")
    g.add_argument("--spacing-km", type=float, help="repeater spacing L0")
    g.add_argument("--squeezing-db", type=float, help="GKP squeezing in dB")
    g.add_argument("--coupling", type=float, help="coupling efficiency eta_c")
    g.add_argument("--gamma", type=float, help="discarding parameter (1 = no erasures)")
    g.add_argument("--placement", choices=[p.value for p in Placement], help="half-teleportation stabilizer placement")
    g.add_argument("--meas-var", type=float, help="extra homodyne noise variance")
    g.add_argument("--jmax", type=int, help="fixed lattice truncation instead of adaptive")
    g.add_argument("--any-prime", dest="strict_code", action="store_false", default=None,
                   help="allow primes D = 3 mod 4 for the polynomial code")
    g.add_argument("--symmetric-mode", choices=SYMMETRIC_MODES, help="variance model for after/before placements")
    g.add_argument("--attenuation-km", type=float, help="fiber attenuation length")
    g.add_argument("--config", type=Path, help="JSON run config to start from")
    g.add_argument("--save-config", type=Path, help="write the effective run config as JSON")


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the ``--config`` file, then explicit flags."""
    run = RunConfig()
    if getattr(args, "config", None):
        run = RunConfig.loads(args.config.read_text())
    changes = {field: getattr(args, flag) for flag, field in CONFIG_FLAGS.items() if getattr(args, flag, None) is not None}
    axes = tuple(getattr(args, "axis", None) or ()) or run.axes
    fmt = getattr(args, "format", None) or run.output_format
    return RunConfig(
        config=run.config.with_(**changes),
        axes=axes,
        output_format="json" if fmt == "table" else fmt,
        output_path=str(args.output) if getattr(args, "output", None) else run.output_path,
        seed=run.seed,
    )


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, default=_plain))


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _emit_table(table: SweepTable, fmt: str, output: Path | None, sidecar: dict | None = None) -> None:
    if output is None:
        sys.stdout.write(table.to_json() if fmt == "json" else table.to_csv())
        return
    for path in write_table(table, output, fmt, sidecar):
        print(f"wrote {path}", file=sys.stderr)


def cmd_rate(args) -> int:
    run = build_config(args)
    if args.save_config:
        atomic_write(args.save_config, run.dumps())
    if run.axes:
        table = run_sweep(run)
        _emit_table(table, "json" if args.format == "json" else "csv", args.output)
        return EXIT_OK
    result = rate(run.config)
    out = result.to_dict()
    out["config"] = run.config.to_dict()
    if args.format == "table":
        for key in ("skr_bits", "skr_per_station", "n_stations", "station_var", "p0_station", "p_cor_station"):
            print(f"{key:>16}  {out[key]}")
    else:
        _print_json(out)
    return EXIT_OK


def _parse_sets(pairs: list[str]) -> dict:
    overrides = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {pair!r}")
        overrides[key.strip().replace("-", "_")] = value.strip()
    return overrides


def cmd_figure(args) -> int:
    if args.list:
        for name, fig in FIGURES.items():
            print(f"{name:12s} {fig.description}")
        return EXIT_OK
    if args.name is None:
        raise UsageError("figure name required")
    fig = figure(args.name)
    overrides = _parse_sets(args.set)
    for flag in ("squeezing_db", "coupling", "length_km", "spacing_km", "max_dim", "dims", "gamma"):
        value = getattr(args, flag)
        if value is not None:
            if flag not in fig.defaults:
                raise UsageError(f"figure {fig.name} has no parameter {flag}")
            overrides[flag] = value
    try:
        params = fig.params(overrides)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    table = fig.run(params)
    output = args.output
    if output is None:
        output = Path(f"{fig.name}.{args.format}")
    elif str(output) == "-":
        output = None
    elif output.is_dir():
        output = output / f"{fig.name}.{args.format}"
    _emit_table(table, args.format, output)
    return EXIT_OK


def cmd_optimize(args) -> int:
    if args.target == "gamma":
        if args.sigma2 is None:
            raise UsageError("optimize gamma needs --sigma2")
        code = polycode.PolynomialCode(args.dimension if args.dimension is not None else 13)
        g_opt, f_opt = polycode.optimal_gamma(code, args.sigma2, args.resolution)
        out = {"code": str(code), "sigma2": args.sigma2, "gamma_opt": g_opt, "p_fail": f_opt,
               "p_fail_gamma_1": polycode.p_fail(code, args.sigma2, 1.0)}
        if args.curve:
            out["curve"] = polycode.gamma_curve(code, args.sigma2, np.linspace(0.5, 1.0, 501))
        _print_json(out)
        return EXIT_OK

    run = build_config(args)
    cfg = run.config
    if args.target == "dimension":
        if cfg.encoded:
            raise UsageError("optimize dimension scans bare qudits; drop --encoded")
        d_opt, skr = optimal_bare_dimension(cfg.length_km, cfg.spacing_km, cfg.squeezing_db, cfg.coupling,
                                            cfg.protocol, args.max_dim)
        out = {"dimension": d_opt, "skr_bits": skr, "config": cfg.to_dict()}
        if args.curve:
            out["curve"] = {d: rate(cfg.with_(dim=d)).skr_bits for d in range(2, args.max_dim + 1)}
        _print_json(out)
        return EXIT_OK

    spacings = Axis("spacing_km", args.spacing_min, args.spacing_max, args.spacing_steps).values()
    spacings = spacings[spacings <= cfg.length_km]
    best = optimal_spacing(cfg.with_(spacing_km=float(spacings[0])), spacings)
    out = {"spacing_km": best.spacing_km, "skr_per_station": best.skr_per_station, "skr_bits": best.skr_bits,
           "cutoff_km": best.cutoff_km, "config": cfg.with_(spacing_km=best.spacing_km).to_dict()}
    if args.curve:
        out["curve"] = {"spacing_km": best.spacings, "skr_bits": best.skr_curve, "skr_per_station": best.per_station_curve}
    _print_json(out)
    return EXIT_OK


def cmd_validate(args) -> int:
    spec = oracle.SamplerSpec(seed=args.seed, samples=args.samples, block_size=args.block_size, workers=args.workers)
    point = None
    if args.dimension is not None or args.sigma2 is not None:
        if args.dimension is None or args.sigma2 is None:
            raise UsageError("a custom validation point needs both --dimension and --sigma2")
        point = ValidationPoint(args.dimension, args.sigma2, args.gamma)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", oracle.ResolvabilityWarning)
        report = run_validation(spec, point, perturb=args.perturb)
    for note in report["warnings"]:
        print(f"warning: {note}", file=sys.stderr)
    text = json.dumps(report, indent=2, sort_keys=True, default=_plain) + "\n"
    if args.output:
        atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
    if not report["passed"]:
        print(f"validation failed: max |z| = {report['max_abs_z']}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gkp-repeater", description="Secret-key rates of GKP qudit repeaters.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="evaluate one configuration (or sweep with --axis)")
    _add_config_flags(p)
    p.add_argument("--axis", type=_axis, action="append", metavar="NAME:START:STOP:STEPS[:log]",
                   help="sweep a config field; repeat for a grid")
    p.add_argument("--format", choices=("json", "table", "csv"), default="json")
    p.add_argument("--output", "-o", type=Path, help="file for sweep output (default stdout)")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("figure", help="compute the data table for a named figure")
    p.add_argument("name", nargs="?", choices=list(FIGURES), help="figure to compute")
    p.add_argument("--list", action="store_true", help="list available figures")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a fixed parameter")
    p.add_argument("--squeezing-db", type=float)
    p.add_argument("--coupling", type=float)
    p.add_argument("--length-km", type=float)
    p.add_argument("--spacing-km", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--max-dim", type=int)
    p.add_argument("--dims", type=str, help="comma-separated code dimensions")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", type=Path, help="file or directory; '-' for stdout")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("optimize", help="optimise dimension, spacing or discarding parameter")
    p.add_argument("target", choices=("dimension", "spacing", "gamma"))
    _add_config_flags(p)
    p.add_argument("--max-dim", type=int, default=32, help="largest bare dimension scanned")
    p.add_argument("--spacing-min", type=float, default=0.1)
    p.add_argument("--spacing-max", type=float, default=2.0)
    p.add_argument("--spacing-steps", type=int, default=191)
    p.add_argument("--sigma2", type=float, help="physical noise variance (gamma target)")
    p.add_argument("--resolution", type=float, default=1e-3, help="gamma grid step")
    p.add_argument("--curve", action="store_true", help="include the scanned curve")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("validate", help="check closed forms against Monte Carlo")
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--samples", type=int, default=10**7)
    p.add_argument("--block-size", type=int, default=1 << 20)
    p.add_argument("--workers", type=int, default=None, help="threads (default GKPR_THREADS or 1)")
    p.add_argument("--dimension", "-D", type=int, help="check a single point instead of the default suite")
    p.add_argument("--sigma2", type=float)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--output", "-o", type=Path)
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 0) is None:
        from .sweeps import worker_count

        args.workers = worker_count()
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
