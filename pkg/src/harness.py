"""Experiment engine: failure-probability curves for plain, RP and
fixed-period-restart runs.

An experiment is m independent outer runs of one mode on one problem. Each
outer run yields its best-so-far value at every (pseudo-)time t = 1..budget,
so all modes are compared at equal computational cost. The failure
probability at t is the fraction of outer runs whose best-so-far value
differs from the target f_m.

Outer runs are independent and may execute in worker processes; results are
always aggregated in run-index order, so outputs do not depend on the
number of workers.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import repeat
from typing import Sequence

import numpy as np
from scipy.stats import norm

from src.algo_core import (
    ObjectiveValue,
    Problem,
    StochasticAlgorithm,
    Trajectory,
    derive_seed,
    extend,
)
from src.config_loader import ConfigError
from src.restart import RestartConfig, run_rp
from src.theory import FailureCurve, synthetic_basin_curve

logger = logging.getLogger(__name__)

MODES = ("plain", "rp", "fixed")
CONFIDENCE_LEVEL = 0.99

# Below this many expected failures the normal interval is replaced by Wilson's.
WILSON_THRESHOLD = 5.0


# ---------------------------------------------------------------------------
# Synthetic oracle
# ---------------------------------------------------------------------------


class SyntheticBasinAlgorithm(StochasticAlgorithm):
    """Algorithm with a known failure curve.

    At spawn the instance is absorbed with probability ``beta`` and then never
    succeeds. Otherwise it succeeds at step ``warmup + G``, G geometric with
    parameter ``q``. The raw value is 1.0 before success and 0.0 from then on,
    so p(t) = beta + (1 - beta)(1 - q)^(t - warmup) for t >= warmup.
    """

    def __init__(self, beta: float, q: float, seed: int, warmup: int = 0) -> None:
        super().__init__()
        rng = np.random.default_rng(seed)
        self.absorbed = bool(rng.random() < beta)
        self.success_time: int | None = None
        if not self.absorbed:
            self.success_time = warmup + int(rng.geometric(q))

    def step(self) -> ObjectiveValue:
        self.steps_taken += 1
        succeeded = self.success_time is not None and self.steps_taken >= self.success_time
        return 0.0 if succeeded else 1.0

    def advance(self, n: int) -> np.ndarray:
        steps = np.arange(self.steps_taken + 1, self.steps_taken + n + 1)
        self.steps_taken += n
        if self.success_time is None:
            return np.ones(n)
        return np.where(steps >= self.success_time, 0.0, 1.0)


@dataclass(frozen=True)
class SyntheticBasinProblem:
    """Problem handle for ``SyntheticBasinAlgorithm``; target 0."""

    beta: float = 0.3
    q: float = 0.05
    warmup: int = 0
    name: str = "synthetic"

    def __post_init__(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ConfigError(f"synthetic.beta must lie in (0, 1), got {self.beta}")
        if not 0.0 < self.q <= 1.0:
            raise ConfigError(f"synthetic.q must lie in (0, 1], got {self.q}")
        if self.warmup < 0:
            raise ConfigError(f"synthetic.warmup must be >= 0, got {self.warmup}")

    @property
    def target(self) -> ObjectiveValue:
        return 0.0

    def create(self, seed: int) -> SyntheticBasinAlgorithm:
        return SyntheticBasinAlgorithm(self.beta, self.q, seed, warmup=self.warmup)

    def curve(self, t_max: int) -> FailureCurve:
        """Exact failure curve on 1..t_max."""
        return synthetic_basin_curve(self.beta, self.q, t_max, warmup=self.warmup)


# ---------------------------------------------------------------------------
# Experiment specification and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    """One cell of a comparison: a problem run in one mode.

    Attributes:
        problem: Problem handle; its ``target`` is f_m.
        mode: ``plain``, ``rp`` or ``fixed``.
        m: Number of outer runs.
        budget: Horizon T_c in (pseudo-)time steps.
        master_seed: Outer run i uses ``derive_seed(master_seed, i)``.
        restart_config: RP parameters for ``rp`` mode (budget and target
            are taken from this spec).
        restart_period: Restart period for ``fixed`` mode.
        label: Instance name for tables; defaults to ``problem.name``.
    """

    problem: Problem
    mode: str
    m: int
    budget: int
    master_seed: int = 0
    restart_config: RestartConfig = field(default_factory=RestartConfig)
    restart_period: int | None = None
    label: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")
        if self.mode == "fixed" and (self.restart_period is None or self.restart_period < 1):
            raise ConfigError("fixed_restart_period must be >= 1 in fixed mode")

    @property
    def instance(self) -> str:
        return self.label or self.problem.name

    def target(self) -> ObjectiveValue:
        target = self.problem.target
        if target is None:
            raise ConfigError(
                f"No target optimum for {self.instance}; add it to the registry"
            )
        return target


@dataclass
class OuterRun:
    """Best-so-far curve of one outer run, plus its RP trace in ``rp`` mode."""

    index: int
    curve: np.ndarray
    trace: list[dict] = field(default_factory=list)


@dataclass
class EstimatedCurve:
    """Estimated failure probability p^(t), t = 1..budget, with 99% CI."""

    label: str
    mode: str
    values: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    m: int

    def __len__(self) -> int:
        return int(self.values.size)

    def failure_curve(self) -> FailureCurve:
        return FailureCurve(self.values)

    def rows(self, points: Sequence[int] | None = None) -> list[dict]:
        """CSV rows (mode, t, pHat, ciLow, ciHigh) at ``points`` (default: all t)."""
        points = range(1, len(self) + 1) if points is None else points
        return [
            {
                "mode": self.mode,
                "t": t,
                "pHat": float(self.values[t - 1]),
                "ciLow": float(self.ci_low[t - 1]),
                "ciHigh": float(self.ci_high[t - 1]),
            }
            for t in points
        ]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    curve: EstimatedCurve
    runs: list[OuterRun]

    def traces(self) -> list[list[dict]]:
        return [run.trace for run in self.runs]


@dataclass(frozen=True)
class ComparisonRow:
    """One table line: failure probability at the horizon T_c."""

    instance: str
    mode: str
    t_c: int
    fp: float
    ci_low: float
    ci_high: float
    m: int

    def as_row(self) -> dict:
        return {
            "instance": self.instance,
            "mode": self.mode,
            "T_c": self.t_c,
            "fp": self.fp,
            "ciLow": self.ci_low,
            "ciHigh": self.ci_high,
            "m": self.m,
        }


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def confidence_interval(
    p_hat: np.ndarray, m: int, level: float = CONFIDENCE_LEVEL
) -> tuple[np.ndarray, np.ndarray]:
    """Binomial confidence interval for proportions estimated from m trials.

    Normal approximation, switching to the Wilson score interval where
    p_hat * m < 5. Bounds are clipped to [0, 1].
    """
    p = np.asarray(p_hat, dtype=float)
    z = norm.ppf(1.0 - (1.0 - level) / 2.0)
    half = z * np.sqrt(p * (1.0 - p) / m)
    low, high = p - half, p + half

    z2 = z * z
    scale = 1.0 + z2 / m
    centre = (p + z2 / (2 * m)) / scale
    wilson_half = z * np.sqrt(p * (1.0 - p) / m + z2 / (4 * m * m)) / scale
    use_wilson = p * m < WILSON_THRESHOLD
    low = np.where(use_wilson, centre - wilson_half, low)
    high = np.where(use_wilson, centre + wilson_half, high)
    return np.clip(low, 0.0, 1.0), np.clip(high, 0.0, 1.0)


def log_spaced_points(budget: int, count: int = 60) -> list[int]:
    """Roughly ``count`` distinct integer times, log-spaced over 1..budget."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    points = np.unique(np.rint(np.geomspace(1, budget, num=max(count, 2))).astype(int))
    return [int(t) for t in points]


# ---------------------------------------------------------------------------
# Outer runs
# ---------------------------------------------------------------------------


def _fit_to_budget(series: np.ndarray, budget: int) -> np.ndarray:
    """Truncate to ``budget`` or hold the last value up to it."""
    if series.size >= budget:
        return series[:budget]
    return np.concatenate([series, np.full(budget - series.size, series[-1])])


def plain_run(problem: Problem, budget: int, seed: int) -> Trajectory:
    """One uninterrupted run of ``budget`` steps."""
    trajectory = Trajectory(seed=seed)
    return extend(trajectory, problem.create(seed), budget)


def fixed_restart_run(problem: Problem, T: int, budget: int, seed: int) -> Trajectory:
    """Restart from scratch every ``T`` steps, keeping the best-so-far.

    Period j runs a fresh instance seeded with ``derive_seed(seed, j)``, so no
    state crosses a restart boundary.

    Raises:
        ConfigError: If ``T`` < 1.
    """
    if T < 1:
        raise ConfigError(f"fixed_restart_period must be >= 1, got {T}")
    trajectory = Trajectory(seed=seed)
    period = 0
    while trajectory.length < budget:
        period += 1
        algorithm = problem.create(derive_seed(seed, period))
        trajectory.append(algorithm.advance(min(T, budget - trajectory.length)))
    return trajectory


def _run_outer(spec: ExperimentSpec, index: int) -> OuterRun:
    seed = derive_seed(spec.master_seed, index)
    if spec.mode == "plain":
        curve = plain_run(spec.problem, spec.budget, seed).best_so_far
        return OuterRun(index, curve)
    if spec.mode == "fixed":
        curve = fixed_restart_run(spec.problem, spec.restart_period, spec.budget, seed).best_so_far
        return OuterRun(index, curve)

    config = replace(spec.restart_config, budget=spec.budget, target=spec.problem.target)
    result = run_rp(spec.problem, config, seed)
    curve = _fit_to_budget(result.pseudo_time_series(), spec.budget)
    return OuterRun(index, curve, [state.as_row() for state in result.trace])


def _map_runs(spec: ExperimentSpec, workers: int) -> list[OuterRun]:
    indices = range(1, spec.m + 1)
    if workers <= 1:
        return [_run_outer(spec, i) for i in indices]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order whatever order the workers finish in
        return list(pool.map(_run_outer, repeat(spec), indices))


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Run all outer runs of ``spec`` and estimate its failure curve.

    Raises:
        ConfigError: If the problem has no target.
    """
    target = spec.target()
    logger.info(
        "Running %s/%s: m=%d budget=%d workers=%d",
        spec.instance, spec.mode, spec.m, spec.budget, workers,
    )
    runs = _map_runs(spec, workers)
    matrix = np.vstack([run.curve for run in runs])
    if np.any(matrix < target):
        logger.warning(
            "%s: values below the target %s were found; the registry optimum is too high",
            spec.instance, target,
        )
    p_hat = np.mean(matrix != target, axis=0)
    ci_low, ci_high = confidence_interval(p_hat, spec.m)
    curve = EstimatedCurve(spec.instance, spec.mode, p_hat, ci_low, ci_high, spec.m)
    logger.info(
        "%s/%s done: failure probability %.4f at T_c=%d",
        spec.instance, spec.mode, p_hat[-1], spec.budget,
    )
    return ExperimentResult(spec, curve, runs)


def estimate_failure_curve(spec: ExperimentSpec, workers: int = 1) -> EstimatedCurve:
    """p^(t) = (1/m) #{i : Y_i(t) != f_m} for t = 1..budget, with 99% CIs."""
    return run_experiment(spec, workers).curve


def run_rp_traces(spec: ExperimentSpec, workers: int = 1) -> list[list[dict]]:
    """RP trace rows of every outer run of an ``rp`` spec."""
    if spec.mode != "rp":
        raise ConfigError(f"RP traces need mode 'rp', got {spec.mode!r}")
    return run_experiment(spec, workers).traces()


def comparison_rows(curves: Sequence[EstimatedCurve]) -> list[ComparisonRow]:
    """Failure probability at each curve's horizon, sorted by (instance, mode)."""
    rows = [
        ComparisonRow(
            instance=curve.label,
            mode=curve.mode,
            t_c=len(curve),
            fp=float(curve.values[-1]),
            ci_low=float(curve.ci_low[-1]),
            ci_high=float(curve.ci_high[-1]),
            m=curve.m,
        )
        for curve in curves
    ]
    return sorted(rows, key=lambda row: (row.instance, row.mode))


def compare(specs: Sequence[ExperimentSpec], workers: int = 1) -> list[ComparisonRow]:
    """Run every spec and tabulate failure probabilities at T_c."""
    return comparison_rows([estimate_failure_curve(spec, workers) for spec in specs])
