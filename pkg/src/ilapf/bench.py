"""Monte Carlo experiments: ORE convergence sweep, benchmark table, transfer chain.

Replicate ``r`` of task ``t`` always draws from ``RngStream(seed).derive(t, r)``,
so results do not depend on worker scheduling and a one-task chain reproduces
the benchmark's ILAPF row exactly.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .filtering import FilterParams, RunMetrics, run_bootstrap, run_filter
from .noise import Gaussian, GaussianMixture, NoiseLaw, RngStream, StudentT, Uniform
from .ore import run_sequence, write_trace
from .ssm import ScenarioConfig, Trajectory, benchmark_scenario, simulate

log = logging.getLogger(__name__)

ORE_INIT = (20.0, 70.0)
ORE_I_VALUES = (10.0, 40.0, 70.0, 100.0)


def sweep_outlier_laws() -> Dict[str, NoiseLaw]:
    return {
        "uniform": Uniform(40.0, 50.0),
        "gaussian": Gaussian(45.0, 1.0),
        "student_t": StudentT(3.0, 45.0, 1.0),
        "mixture": GaussianMixture(((0.5, 45.0, 1.0), (0.5, 47.0, 1.0))),
    }


def desired_bounds(law: NoiseLaw) -> Tuple[float, float]:
    """Reference range the ORE bounds should approach for ``law``.

    Support endpoints for a uniform; centre +/- 3 spread units otherwise,
    where the spread unit is the std of a Gaussian, the scale of a Student's
    t (its stated spread, whichever reading ``unit_std`` selects), and the
    component std of a mixture about its extreme means.
    """
    if isinstance(law, Uniform):
        return law.low, law.high
    if isinstance(law, Gaussian):
        return law.mean - 3 * law.std, law.mean + 3 * law.std
    if isinstance(law, StudentT):
        return law.location - 3 * law.scale, law.location + 3 * law.scale
    if isinstance(law, GaussianMixture):
        lo = min(law.components, key=lambda c: c[1])
        hi = max(law.components, key=lambda c: c[1])
        return lo[1] - 3 * math.sqrt(lo[2]), hi[1] + 3 * math.sqrt(hi[2])
    raise TypeError(f"no reference bounds for {type(law).__name__}")


@dataclass
class OreTrace:
    distribution: str
    I: float
    rows: List[Tuple[int, float, float, float]]
    desired: Tuple[float, float]

    @property
    def final_bounds(self) -> Tuple[float, float]:
        _, _, lb, ub = self.rows[-1]
        return lb, ub

    @property
    def data_range(self) -> Tuple[float, float]:
        z = [r[1] for r in self.rows]
        return min(z), max(z)


def ore_sweep(distributions: Optional[Dict[str, NoiseLaw]] = None,
              I_values: Sequence[float] = ORE_I_VALUES,
              init: Tuple[float, float] = ORE_INIT, n_samples: int = 300,
              seed: int = 0, mode: str = "extrema") -> List[OreTrace]:
    """Feed i.i.d. outliers to fresh estimators for every (law, I) pair.

    Every I sees the same draws for a given law.
    """
    distributions = distributions or sweep_outlier_laws()
    master = RngStream(seed)
    traces = []
    for d, (name, law) in enumerate(distributions.items()):
        values = law.sample(master.derive(d), n_samples)
        for I in I_values:
            rows = run_sequence(values, init[0], init[1], I, mode)
            traces.append(OreTrace(name, float(I), rows, desired_bounds(law)))
    return traces


def write_ore_sweep(traces: Sequence[OreTrace], out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for tr in traces:
        write_trace(tr.rows, out / f"ore_{tr.distribution}_I{tr.I:g}.csv")
    with open(out / "ore_desired_bounds.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["distribution", "I", "desired_lb", "desired_ub", "final_lb", "final_ub"])
        for tr in traces:
            lb, ub = tr.final_bounds
            writer.writerow([tr.distribution, f"{tr.I:g}", repr(tr.desired[0]), repr(tr.desired[1]),
                             repr(lb), repr(ub)])


# -- Monte Carlo benchmark ---------------------------------------------------


@dataclass
class AlgorithmSummary:
    mse_mean: float
    mse_var: float
    seconds_mean: float


@dataclass
class BenchSummary:
    runs: int
    rows: Dict[str, AlgorithmSummary]

    def to_lines(self) -> List[str]:
        lines = [f"runs={self.runs}"]
        for name, row in self.rows.items():
            lines += [f"{name}.mse_mean={row.mse_mean!r}",
                      f"{name}.mse_var={row.mse_var!r}",
                      f"{name}.seconds_mean={row.seconds_mean!r}"]
        return lines


def summarize(mses: Sequence[float], seconds: Sequence[float]) -> AlgorithmSummary:
    mses = np.asarray(mses, dtype=float)
    if len(mses) < 2:
        warnings.warn("variance of a single run is reported as 0", RuntimeWarning, stacklevel=2)
        var = 0.0
    else:
        var = float(np.var(mses, ddof=1))
    return AlgorithmSummary(float(np.mean(mses)), var, float(np.mean(seconds)))


@dataclass
class BenchResult:
    summary: BenchSummary
    ilapf: List[RunMetrics]
    bootstrap: List[RunMetrics]


def _replicate(args) -> Tuple[RunMetrics, RunMetrics]:
    config, params, seed, task, r, traj = args
    rng = RngStream(seed).derive(task, r)
    if traj is None:
        traj = simulate(config, rng.derive(0))
    return (run_filter(config, params, rng, trajectory=traj),
            run_bootstrap(config, params, rng, trajectory=traj))


def _map(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _fixed_trajectory(config: ScenarioConfig, seed: int, task: int) -> Trajectory:
    return simulate(config, RngStream(seed).derive(task, 0).derive(0))


def mse_table(runs: int = 30, seed: int = 0, params: FilterParams = FilterParams(),
                config: Optional[ScenarioConfig] = None, fixed_trajectory: bool = False,
                workers: int = 1) -> BenchResult:
    """ILAPF and the bootstrap baseline on ``runs`` independent scenarios."""
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    config = config or benchmark_scenario()
    traj = _fixed_trajectory(config, seed, 0) if fixed_trajectory else None
    results = _map(_replicate, [(config, params, seed, 0, r, traj) for r in range(runs)], workers)
    ilapf = [a for a, _ in results]
    boot = [b for _, b in results]
    summary = BenchSummary(runs, {
        "ilapf": summarize([m.mse for m in ilapf], [m.seconds for m in ilapf]),
        "bootstrap": summarize([m.mse for m in boot], [m.seconds for m in boot]),
    })
    log.info("bench: ilapf mse %.4f, bootstrap mse %.4f",
             summary.rows["ilapf"].mse_mean, summary.rows["bootstrap"].mse_mean)
    return BenchResult(summary, ilapf, boot)


def write_bench(result: BenchResult, out_dir) -> None:
    out = Path(out_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    for r, (a, b) in enumerate(zip(result.ilapf, result.bootstrap)):
        a.to_csv(out / "runs" / f"ilapf_{r:03d}.csv")
        b.to_csv(out / "runs" / f"bootstrap_{r:03d}.csv")
    with open(out / "runs.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run", "algorithm", "mse", "seconds"])
        for name, metrics in (("ilapf", result.ilapf), ("bootstrap", result.bootstrap)):
            for r, m in enumerate(metrics):
                writer.writerow([r, name, repr(m.mse), repr(m.seconds)])
    write_summary(result.summary.to_lines(), out / "summary.txt")


def write_summary(lines: Sequence[str], path) -> None:
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_summary(path) -> Dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition("=")
        out[key] = value
    return out


def summary_from_runs_csv(path) -> BenchSummary:
    """Recompute the benchmark summary from a ``runs.csv`` file."""
    data: Dict[str, Tuple[list, list]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            mses, secs = data.setdefault(row["algorithm"], ([], []))
            mses.append(float(row["mse"]))
            secs.append(float(row["seconds"]))
    runs = len(next(iter(data.values()))[0])
    return BenchSummary(runs, {name: summarize(m, s) for name, (m, s) in data.items()})


# -- transfer learning chain -------------------------------------------------


@dataclass
class TransferResult:
    summaries: List[AlgorithmSummary]
    runs: List[List[RunMetrics]] = field(repr=False)  # runs[r][t]

    @property
    def tasks(self) -> int:
        return len(self.summaries)

    def final_widths(self) -> np.ndarray:
        """Final bound width, shape (replicates, tasks)."""
        return np.array([[m.final_bounds[1] - m.final_bounds[0] for m in chain] for chain in self.runs])

    def summary_lines(self) -> List[str]:
        widths = self.final_widths().mean(axis=0)
        lines = [f"runs={len(self.runs)}", f"tasks={self.tasks}"]
        for t, s in enumerate(self.summaries, start=1):
            lines += [f"task{t}.mse_mean={s.mse_mean!r}", f"task{t}.mse_var={s.mse_var!r}",
                      f"task{t}.final_width_mean={float(widths[t - 1])!r}",
                      f"task{t}.seconds_mean={s.seconds_mean!r}"]
        return lines


def _chain(args) -> List[RunMetrics]:
    config, params, seed, tasks, r, trajs = args
    est = None
    chain = []
    for t in range(tasks):
        rng = RngStream(seed).derive(t, r)
        traj = trajs[t] if trajs is not None else simulate(config, rng.derive(0))
        m = run_filter(config, params, rng, warm_start=est, trajectory=traj)
        est = m.ore
        chain.append(m)
    return chain


def transfer_chain(tasks: int = 4, runs: int = 30, seed: int = 0,
                   params: FilterParams = FilterParams(), config: Optional[ScenarioConfig] = None,
                   fixed_trajectory: bool = False, workers: int = 1) -> TransferResult:
    """Run ``tasks`` consecutive scenarios, each warm-started from the last task's ORE state."""
    if tasks < 1 or runs < 1:
        raise ValueError("tasks and runs must be >= 1")
    config = config or benchmark_scenario()
    trajs = [_fixed_trajectory(config, seed, t) for t in range(tasks)] if fixed_trajectory else None
    chains = _map(_chain, [(config, params, seed, tasks, r, trajs) for r in range(runs)], workers)
    summaries = [summarize([c[t].mse for c in chains], [c[t].seconds for c in chains])
                 for t in range(tasks)]
    return TransferResult(summaries, chains)


def write_transfer(result: TransferResult, out_dir) -> None:
    out = Path(out_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    with open(out / "transfer_runs.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run", "task", "mse", "final_lb", "final_ub", "final_n", "seconds"])
        for r, chain in enumerate(result.runs):
            for t, m in enumerate(chain, start=1):
                writer.writerow([r, t, repr(m.mse), repr(m.final_bounds[0]), repr(m.final_bounds[1]),
                                 m.final_n, repr(m.seconds)])
                m.to_csv(out / "runs" / f"ilapf_r{r:03d}_t{t}.csv")
    for r, chain in enumerate(result.runs):
        with open(out / "runs" / f"bounds_r{r:03d}.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["task", "k", "lb_hat", "ub_hat"])
            for t, m in enumerate(chain, start=1):
                for k, lb, ub in zip(m.k, m.lb_hat, m.ub_hat):
                    writer.writerow([t, int(k), repr(float(lb)), repr(float(ub))])
    write_summary(result.summary_lines(), out / "summary.txt")
