"""Adaptive restart procedure (RP).

The RP keeps a rectangular matrix of best-so-far values Y_i(t) for
replications i = 1..r_k and steps t = 1..T_k. After every iteration it:

  1. takes Y~_k, the matrix minimum, as a stand-in for the unknown optimum;
  2. estimates p^_k(t) = fraction of replications with Y_i(t) > Y~_k;
  3. locates sigma^_k, the first relative minimum of
     g_k(t) = [(1 - p^_k(t)^(1/t)) p^_k(t)]^-1;
  4. grows the replication count (sigma^_k < lambda * T_k) or the horizon.

Work is accounted in pseudo-time: every (replication, step) pair executed
gets the next pseudo-time instant, in the order the RP executes them.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from src.algo_core import ObjectiveValue, Problem, ReplicationPool
from src.config_loader import ConfigError
from src.theory import DomainError, FailureCurve, g_denominator, g_series

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LambdaSchedule:
    """lambda_k = min(maximum, start + step * k)."""

    start: float
    step: float
    maximum: float

    def __post_init__(self) -> None:
        if not 0.0 < self.start < 1.0 or not 0.0 < self.maximum < 1.0:
            raise ConfigError("restart.lambda_schedule: start and maximum must lie in (0, 1)")
        if self.step < 0.0 or self.maximum < self.start:
            raise ConfigError("restart.lambda_schedule: schedule must be nondecreasing")

    def at(self, k: int) -> float:
        return min(self.maximum, self.start + self.step * k)


@dataclass(frozen=True)
class RestartConfig:
    """RP parameters; defaults are the reference setting.

    Attributes:
        r0: Initial number of replications.
        t0: Initial horizon.
        c1: Replication growth factor, f_r(x) = ceil(c1 * x).
        c2: Horizon growth factor, f_T(x) = ceil(c2 * x).
        lam: Decision threshold lambda in (0, 1).
        budget: Pseudo-time budget; the RP stops once r_k * T_k reaches it.
        target: Optional objective value that stops the RP when reached.
        lambda_schedule: Optional increasing lambda; replaces ``lam``.
    """

    r0: int = 20
    t0: int = 100
    c1: float = 1.2
    c2: float = 1.1
    lam: float = 0.8
    budget: int = 100_000
    target: ObjectiveValue | None = None
    lambda_schedule: LambdaSchedule | None = None

    def __post_init__(self) -> None:
        if self.r0 < 1:
            raise ConfigError(f"restart.r0 must be >= 1, got {self.r0}")
        if self.t0 < 1:
            raise ConfigError(f"restart.t0 must be >= 1, got {self.t0}")
        if self.c1 <= 1.0:
            raise ConfigError(f"restart.c1 must be > 1, got {self.c1}")
        if self.c2 <= 1.0:
            raise ConfigError(f"restart.c2 must be > 1, got {self.c2}")
        if not 0.0 < self.lam < 1.0:
            raise ConfigError(f"restart.lambda must lie in (0, 1), got {self.lam}")
        if self.budget < 1:
            raise ConfigError(f"restart.budget must be >= 1, got {self.budget}")

    def lambda_at(self, k: int) -> float:
        if self.lambda_schedule is None:
            return self.lam
        return self.lambda_schedule.at(k)


def _ceil_product(factor: float, n: int) -> int:
    # factor is read as the decimal it was written as: ceil(1.1 * 100) is 110, not 111
    return math.ceil(Fraction(str(factor)) * n)


def grow_replications(r: int, c1: float) -> int:
    """f_r(r) = ceil(c1 * r); strictly larger than r for c1 > 1."""
    return max(r + 1, _ceil_product(c1, r))


def grow_horizon(t: int, c2: float) -> int:
    """f_T(T) = ceil(c2 * T); strictly larger than T for c2 > 1."""
    return max(t + 1, _ceil_product(c2, t))


# ---------------------------------------------------------------------------
# Pseudo-time ledger
# ---------------------------------------------------------------------------


@dataclass
class PseudoTimeLedger:
    """Execution order of all (replication, step) pairs.

    Stored as segments ``(replication, first_step, last_step)``; segment j
    covers pseudo-times ``ends[j-1]+1 .. ends[j]``.
    """

    segments: list[tuple[int, int, int]] = field(default_factory=list)
    ends: list[int] = field(default_factory=list)

    @property
    def total_pseudo_time(self) -> int:
        return self.ends[-1] if self.ends else 0

    def record(self, replication: int, first_step: int, last_step: int) -> None:
        if last_step < first_step:
            return
        self.segments.append((replication, first_step, last_step))
        self.ends.append(self.total_pseudo_time + last_step - first_step + 1)

    def pairs(self) -> Iterator[tuple[int, int]]:
        """Yield every (replication, step) pair in pseudo-time order."""
        for replication, first, last in self.segments:
            for t in range(first, last + 1):
                yield replication, t


def pseudo_time_map(ledger: PseudoTimeLedger, pseudo_t: int) -> tuple[int, int]:
    """Return the (replication, step) executed at pseudo-time ``pseudo_t``.

    Raises:
        DomainError: If ``pseudo_t`` is outside 1..total pseudo-time.
    """
    if not 1 <= pseudo_t <= ledger.total_pseudo_time:
        raise DomainError(
            f"pseudo-time {pseudo_t} outside 1..{ledger.total_pseudo_time}"
        )
    j = bisect.bisect_left(ledger.ends, pseudo_t)
    replication, first, _ = ledger.segments[j]
    start = ledger.ends[j - 1] if j else 0
    return replication, first + (pseudo_t - start - 1)


def pseudo_time_series(pool: ReplicationPool, ledger: PseudoTimeLedger) -> np.ndarray:
    """Return Y~(t) for every pseudo-time t = 1..total, as one array."""
    rows = {rep.index: rep.trajectory.raw for rep in pool.replications}
    chunks = [rows[i][first - 1:last] for i, first, last in ledger.segments]
    if not chunks:
        return np.empty(0)
    return np.minimum.accumulate(np.concatenate(chunks))


def best_so_far_at_pseudo_time(
    pool: ReplicationPool, ledger: PseudoTimeLedger, pseudo_t: int
) -> ObjectiveValue:
    """Best objective over every pair executed at pseudo-time <= ``pseudo_t``."""
    if not 1 <= pseudo_t <= ledger.total_pseudo_time:
        raise DomainError(
            f"pseudo-time {pseudo_t} outside 1..{ledger.total_pseudo_time}"
        )
    return float(pseudo_time_series(pool, ledger)[pseudo_t - 1])


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------


def surrogate_failure_curve(matrix: np.ndarray, y_tilde: ObjectiveValue) -> FailureCurve:
    """p^(t) = (1/r) * #{i : Y_i(t) > y_tilde} for t = 1..T.

    Raises:
        DomainError: If the matrix is empty.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.size == 0:
        raise DomainError("Surrogate failure curve needs a non-empty r x T matrix")
    return FailureCurve(np.mean(matrix > y_tilde, axis=0))


def g_denominator_series(p_hat: FailureCurve) -> np.ndarray:
    """Denominator of g_k; its global maximum sits at the argmin of g_k."""
    return g_denominator(p_hat.values)


def first_relative_minimum(g: np.ndarray) -> int:
    """First t (1-based) with g(t-1) > g(t) < g(t+1).

    g is padded with +inf on both ends, so t = 1 qualifies when g(1) < g(2)
    and t = T when g(T-1) > g(T). Plateaus never qualify. Returns T when no
    strict valley exists (e.g. g infinite everywhere).
    """
    g = np.asarray(g, dtype=float)
    if g.size == 0:
        raise DomainError("g must have at least one entry")
    padded = np.concatenate([[np.inf], g, [np.inf]])
    valleys = np.flatnonzero((padded[:-2] > padded[1:-1]) & (padded[1:-1] < padded[2:]))
    return int(valleys[0]) + 1 if valleys.size else int(g.size)


# ---------------------------------------------------------------------------
# Procedure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RestartState:
    """Summary of RP iteration k (after its replications have run)."""

    k: int
    r: int
    T: int
    y_tilde: ObjectiveValue
    p_hat: FailureCurve
    sigma_hat: int
    pseudo_time: int

    def as_row(self) -> dict:
        return {
            "k": self.k,
            "r": self.r,
            "T": self.T,
            "yTilde": self.y_tilde,
            "sigmaHat": self.sigma_hat,
            "pseudoTime": self.pseudo_time,
        }


def next_dimensions(
    r: int, T: int, sigma_hat: int, lam: float, c1: float, c2: float
) -> tuple[int, int]:
    """Apply the decision rule: more replications if sigma^ < lam * T,
    a longer horizon otherwise."""
    if sigma_hat < lam * T:
        return grow_replications(r, c1), T
    return r, grow_horizon(T, c2)


@dataclass
class RestartResult:
    """Output of one RP run."""

    trace: list[RestartState]
    best: ObjectiveValue
    ledger: PseudoTimeLedger
    pool: ReplicationPool

    def pseudo_time_series(self) -> np.ndarray:
        return pseudo_time_series(self.pool, self.ledger)


class RestartProcedure:
    """Runs the RP for one problem and master seed.

    Args:
        problem: Problem handle whose ``create`` spawns replications.
        config: RP parameters and stopping rule.
        master_seed: Seed all replication seeds derive from.
    """

    def __init__(self, problem: Problem, config: RestartConfig, master_seed: int) -> None:
        self.problem = problem
        self.config = config
        self.pool = ReplicationPool(problem, master_seed)
        self.ledger = PseudoTimeLedger()
        self.trace: list[RestartState] = []

    def initialize(self) -> RestartState:
        """Run r0 replications to T0 and evaluate iteration 0."""
        for rep in self.pool.grow(self.config.r0, self.config.t0):
            self.ledger.record(rep.index, 1, self.config.t0)
        return self._evaluate(k=0, T=self.config.t0)

    def decide_and_grow(self, state: RestartState) -> RestartState:
        """Grow r or T according to ``state`` and evaluate the next iteration."""
        lam = self.config.lambda_at(state.k)
        r, T = next_dimensions(
            state.r, state.T, state.sigma_hat, lam, self.config.c1, self.config.c2
        )
        if r > state.r:
            for rep in self.pool.grow(r - state.r, T):
                self.ledger.record(rep.index, 1, T)
            decision = "replications"
        else:
            for rep in self.pool.replications:
                self.ledger.record(rep.index, state.T + 1, T)
            self.pool.extend_all(T)
            decision = "horizon"
        logger.debug(
            "RP k=%d sigma=%d lambda*T=%.1f -> grow %s (r=%d, T=%d)",
            state.k, state.sigma_hat, lam * state.T, decision, r, T,
        )
        return self._evaluate(k=state.k + 1, T=T)

    def _evaluate(self, k: int, T: int) -> RestartState:
        matrix = self.pool.matrix(T)
        y_tilde = float(matrix.min())
        p_hat = surrogate_failure_curve(matrix, y_tilde)
        sigma_hat = first_relative_minimum(g_series(p_hat.values))
        state = RestartState(
            k=k,
            r=len(self.pool),
            T=T,
            y_tilde=y_tilde,
            p_hat=p_hat,
            sigma_hat=sigma_hat,
            pseudo_time=self.ledger.total_pseudo_time,
        )
        self.trace.append(state)
        return state

    def _finished(self, state: RestartState) -> bool:
        target = self.config.target
        if target is not None and state.y_tilde <= target:
            return True
        return state.pseudo_time >= self.config.budget

    def run(self) -> RestartResult:
        """Iterate until the budget is spent or the target is reached."""
        state = self.initialize()
        while not self._finished(state):
            state = self.decide_and_grow(state)
        logger.debug(
            "RP finished after %d iterations: r=%d T=%d best=%s pseudo-time=%d",
            state.k + 1, state.r, state.T, state.y_tilde, state.pseudo_time,
        )
        return RestartResult(
            trace=list(self.trace), best=state.y_tilde, ledger=self.ledger, pool=self.pool
        )


def run_rp(problem: Problem, config: RestartConfig, master_seed: int) -> RestartResult:
    """Run the full restart procedure once."""
    return RestartProcedure(problem, config, master_seed).run()
