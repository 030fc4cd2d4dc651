"""Command-line entry point: ``ilapf {ore-sim,simulate,filter,bench,transfer}``."""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import bench
from .filtering import FilterParams, run_bootstrap, run_filter
from .noise import ParameterError, RngStream
from .ore import MODES, format_record, parse_record
from .particles import RESAMPLERS
from .ssm import Trajectory, default_process_noise, benchmark_model, benchmark_scenario, simulate

log = logging.getLogger("ilapf")

COMMANDS = ("ore-sim", "simulate", "filter", "bench", "transfer")

DEFAULTS = {
    "seed": 0,
    "particles": 200,
    "runs": 30,
    "tasks": 4,
    "i_param": 20.0,
    "lb0": 0.0,
    "ub0": 70.0,
    "ore_mode": "extrema",
    "resampler": "multinomial",
    "gamma_convention": "rate",
    "outlier_value": "posterior",
    "samples": 300,
    "workers": 1,
    "out": "results",
}


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer: {text}")
    return value


def _common(p: argparse.ArgumentParser) -> None:
    # defaults are None so config-file values can be told apart from flags
    p.add_argument("--seed", type=_u64)
    p.add_argument("--particles", type=int, help="particle count (default 200)")
    p.add_argument("--runs", type=int, help="Monte Carlo replicates (default 30)")
    p.add_argument("--i-param", dest="i_param", type=float, help="ORE uncertainty parameter I (default 20)")
    p.add_argument("--lb0", type=float, help="initial lower outlier bound (default 0)")
    p.add_argument("--ub0", type=float, help="initial upper outlier bound (default 70)")
    p.add_argument("--ore-mode", dest="ore_mode", choices=MODES)
    p.add_argument("--resampler", choices=sorted(RESAMPLERS))
    p.add_argument("--gamma-convention", dest="gamma_convention", choices=("rate", "scale"),
                   help="read Gamma(3,2) process noise as shape/rate (default) or shape/scale")
    p.add_argument("--ess-threshold", dest="ess_threshold", type=float,
                   help="resample only when ESS < threshold*N (default: every step)")
    p.add_argument("--outlier-value", dest="outlier_value", choices=("posterior", "prior"),
                   help="residual fed to the range estimator on a detection (default posterior)")
    p.add_argument("--fixed-trajectory", dest="fixed_trajectory", action="store_true", default=None,
                   help="reuse one simulated trajectory for all replicates")
    p.add_argument("--workers", type=int, help="parallel worker processes (default 1)")
    p.add_argument("--out", help="output directory (default ./results)")
    p.add_argument("--config", help="key = value file overriding defaults")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ilapf", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}")

    p = sub.add_parser("ore-sim", help="outlier range estimation convergence sweep")
    _common(p)
    p.add_argument("--samples", type=int, help="outliers fed per trace (default 300)")
    p.add_argument("--i-values", dest="i_values",
                   help="comma-separated I values (default 10,40,70,100 unless --i-param is given)")

    p = sub.add_parser("simulate", help="simulate one benchmark trajectory")
    _common(p)

    p = sub.add_parser("filter", help="run ILAPF and the bootstrap baseline on one trajectory")
    _common(p)
    p.add_argument("--trajectory", help="trajectory CSV to filter instead of simulating")
    p.add_argument("--warm-start", dest="warm_start", help="warm-start record file")

    p = sub.add_parser("bench", help="Monte Carlo MSE table")
    _common(p)

    p = sub.add_parser("transfer", help="consecutive-task transfer chain")
    _common(p)
    p.add_argument("--tasks", type=int, help="tasks per chain (default 4)")
    return parser


def _read_config(path: str) -> dict:
    cp = configparser.ConfigParser()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    try:
        cp.read_string(text if text.lstrip().startswith("[") else "[ilapf]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from None
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            out[key.replace("-", "_")] = value
    return out


_CASTS = {
    "seed": int, "particles": int, "runs": int, "tasks": int, "samples": int, "workers": int,
    "i_param": float, "lb0": float, "ub0": float, "ess_threshold": float,
    "ore_mode": str, "resampler": str, "gamma_convention": str, "outlier_value": str, "out": str, "i_values": str,
    "fixed_trajectory": lambda v: v.lower() in ("1", "true", "yes", "on"),
}


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Merge built-in defaults < config file < command-line flags."""
    merged = dict(DEFAULTS)
    merged.update(ess_threshold=None, fixed_trajectory=False, i_values=None, trajectory=None,
                  warm_start=None)
    if args.config:
        for key, value in _read_config(args.config).items():
            if key not in _CASTS:
                raise UsageError(f"unknown config key {key!r}")
            try:
                merged[key] = _CASTS[key](value)
            except ValueError:
                raise UsageError(f"bad value for {key}: {value!r}") from None
    explicit = {k: v for k, v in vars(args).items() if v is not None}
    merged["i_param_given"] = "i_param" in explicit
    merged.update(explicit)
    ns = argparse.Namespace(**merged)

    if ns.particles < 1 or ns.runs < 1 or ns.tasks < 1 or ns.samples < 1 or ns.workers < 1:
        raise UsageError("particles, runs, tasks, samples and workers must be >= 1")
    if ns.ore_mode not in MODES:
        raise UsageError(f"ore mode must be one of {MODES}")
    if ns.resampler not in RESAMPLERS:
        raise UsageError(f"resampler must be one of {sorted(RESAMPLERS)}")
    return ns


def _params(ns) -> FilterParams:
    params = FilterParams(ns.particles, ns.lb0, ns.ub0, ns.i_param, ns.ore_mode, ns.resampler,
                          ns.ess_threshold, ns.outlier_value)
    params.new_estimator()  # validates bounds and I
    return params


def _scenario(ns):
    return benchmark_scenario(seed=ns.seed,
                          model=benchmark_model(default_process_noise(convention=ns.gamma_convention)))


def cmd_ore_sim(ns, out: Path) -> None:
    if ns.i_values:
        I_values = [float(v) for v in ns.i_values.split(",")]
    elif ns.i_param_given:
        I_values = [ns.i_param]
    else:
        I_values = list(bench.ORE_I_VALUES)
    traces = bench.ore_sweep(I_values=I_values, n_samples=ns.samples, seed=ns.seed, mode=ns.ore_mode)
    bench.write_ore_sweep(traces, out)
    lines = [f"samples={ns.samples}"]
    for tr in traces:
        lb, ub = tr.final_bounds
        lines += [f"{tr.distribution}.I{tr.I:g}.final_lb={lb!r}", f"{tr.distribution}.I{tr.I:g}.final_ub={ub!r}"]
    bench.write_summary(lines, out / "summary.txt")


def cmd_simulate(ns, out: Path) -> None:
    config = _scenario(ns)
    traj = simulate(config, RngStream(ns.seed).derive(0, 0).derive(0))
    traj.to_csv(out / "trajectory.csv")


def cmd_filter(ns, out: Path) -> None:
    config = _scenario(ns)
    params = _params(ns)
    rng = RngStream(ns.seed).derive(0, 0)
    traj = Trajectory.from_csv(ns.trajectory) if ns.trajectory else simulate(config, rng.derive(0))
    warm = None
    if ns.warm_start:
        try:
            warm = parse_record(Path(ns.warm_start).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read warm-start record: {exc}") from None
    res = run_filter(config, params, rng, warm_start=warm, trajectory=traj)
    base = run_bootstrap(config, params, rng, trajectory=traj)
    traj.to_csv(out / "trajectory.csv")
    res.to_csv(out / "trace_ilapf.csv")
    base.to_csv(out / "trace_bootstrap.csv")
    (out / "warm_start.txt").write_text(format_record(res.ore.to_record()), encoding="utf-8")
    lb, ub = res.final_bounds
    bench.write_summary([
        f"ilapf.mse={res.mse!r}", f"bootstrap.mse={base.mse!r}", f"ilapf.final_lb={lb!r}",
        f"ilapf.final_ub={ub!r}", f"ilapf.final_n={res.final_n}",
        f"ilapf.outliers_declared={int(res.outlier_declared.sum())}",
        f"ilapf.seconds={res.seconds!r}", f"bootstrap.seconds={base.seconds!r}",
    ], out / "summary.txt")


def cmd_bench(ns, out: Path) -> None:
    result = bench.mse_table(ns.runs, ns.seed, _params(ns), _scenario(ns),
                               fixed_trajectory=ns.fixed_trajectory, workers=ns.workers)
    bench.write_bench(result, out)
    for name, row in result.summary.rows.items():
        print(f"{name:10s} mse mean {row.mse_mean:.4f}  var {row.mse_var:.4f}  time {row.seconds_mean:.4f}s")


def cmd_transfer(ns, out: Path) -> None:
    result = bench.transfer_chain(ns.tasks, ns.runs, ns.seed, _params(ns), _scenario(ns),
                                  fixed_trajectory=ns.fixed_trajectory, workers=ns.workers)
    bench.write_transfer(result, out)
    widths = result.final_widths().mean(axis=0)
    for t, s in enumerate(result.summaries, start=1):
        print(f"task {t}: mse mean {s.mse_mean:.4f}  var {s.mse_var:.4f}  final width {widths[t - 1]:.3f}")


HANDLERS = {
    "ore-sim": cmd_ore_sim,
    "simulate": cmd_simulate,
    "filter": cmd_filter,
    "bench": cmd_bench,
    "transfer": cmd_transfer,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        ns = resolve(args)
        out = Path(ns.out)
        out.mkdir(parents=True, exist_ok=True)
        HANDLERS[ns.command](ns, out)
    except (UsageError, ParameterError, ValueError) as exc:
        print(f"ilapf {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
