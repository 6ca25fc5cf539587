"""End-to-end behaviour checks.

These runs take minutes; they are marked ``slow`` and skipped by default
(run them with ``pytest -m slow``).
"""

import math
from collections import Counter

import numpy as np
import pytest

from src.algo_core import derive_seed
from src.harness import (
    ExperimentSpec,
    SyntheticBasinProblem,
    compare,
    estimate_failure_curve,
    fixed_restart_run,
)
from src.mmas import BitstringProblem, MmasConfig, TspProblem
from src.restart import RestartConfig, run_rp
from src.theory import optimal_restart_time, restart_tail_probability
from src.tsplib import load_instance, load_registry
from tests.conftest import GRID50_PATH, REGISTRY_PATH, NoisyProblem

pytestmark = pytest.mark.slow

# Colony that settles on its first 2-opt optimum within a few iterations.
LOCK_IN_COLONY = MmasConfig(
    n_ants=1, alpha=3.0, rho=0.5, local_search="2opt",
    deposit_rule="schedule", best_so_far_period=1,
)


def _by_mode(rows):
    return {row.mode: row for row in rows}


def _standard_error(p, m):
    return math.sqrt(p * (1.0 - p) / m)


class TestSigmaConvergence:
    def test_sigma_within_ten_percent_of_optimal_restart_time(self, basin_problem):
        t_m, _ = optimal_restart_time(basin_problem.curve(10_000))
        hits = 0
        for seed in range(100):
            result = run_rp(basin_problem, RestartConfig(budget=1_000_000), master_seed=seed)
            hits += abs(result.trace[-1].sigma_hat - t_m) <= 0.1 * t_m
        assert hits >= 90


class TestRestartTail:
    RUNS = 1_000_000

    @pytest.mark.parametrize(
        "period,ks",
        [(22, (10, 21, 22, 23, 50)), (40, (30, 40, 41, 80, 100))],
    )
    def test_fixed_restart_matches_closed_form(self, basin_problem, period, ks):
        budget = max(ks)
        columns = np.array(ks) - 1
        failures = np.zeros(len(ks), dtype=np.int64)
        for i in range(1, self.RUNS + 1):
            curve = fixed_restart_run(basin_problem, period, budget, derive_seed(period, i)).best_so_far
            failures += curve[columns] > 0.0

        p = basin_problem.curve(period)
        for k, observed in zip(ks, failures / self.RUNS):
            expected = restart_tail_probability(p, period, k)
            assert abs(observed - expected) <= 3 * _standard_error(expected, self.RUNS) + 1e-12, k


class TestPseudoTimeConservation:
    def test_randomized_traces(self):
        rng = np.random.default_rng(2024)
        for seed in range(1_000):
            config = RestartConfig(
                r0=int(rng.integers(1, 8)),
                t0=int(rng.integers(1, 30)),
                c1=round(float(rng.uniform(1.05, 2.0)), 2),
                c2=round(float(rng.uniform(1.05, 2.0)), 2),
                lam=round(float(rng.uniform(0.1, 0.95)), 2),
                budget=int(rng.integers(50, 1_500)),
            )
            result = run_rp(NoisyProblem(target_value=None), config, master_seed=seed)
            for state in result.trace:
                assert state.pseudo_time == state.r * state.T, (seed, state.k)
            last = result.trace[-1]
            assert Counter(result.ledger.pairs()) == Counter(
                (i, t) for i in range(1, last.r + 1) for t in range(1, last.T + 1)
            ), seed


class TestSyntheticComparison:
    M = 1_000
    BUDGET = 2_000

    @pytest.fixture(scope="class")
    def curves(self):
        problem = SyntheticBasinProblem(beta=0.3, q=0.5, warmup=20)
        specs = {
            "plain": ExperimentSpec(problem, "plain", m=self.M, budget=self.BUDGET),
            "fixed": ExperimentSpec(problem, "fixed", m=self.M, budget=self.BUDGET, restart_period=22),
            "rp": ExperimentSpec(problem, "rp", m=self.M, budget=self.BUDGET),
        }
        return {mode: estimate_failure_curve(spec, workers=4).values for mode, spec in specs.items()}

    def test_first_replication_behaves_like_plain(self, curves, basin_problem):
        exact = basin_problem.curve(100)
        for t in (10, 21, 22, 50, 100):
            tolerance = 4 * math.sqrt(2.0) * _standard_error(exact.at(t), self.M) + 1e-12
            assert abs(curves["rp"][t - 1] - curves["plain"][t - 1]) <= tolerance, t

    def test_fixed_restart_leads_while_rp_learns(self, curves):
        for t in (50, 100):
            assert curves["fixed"][t - 1] < curves["rp"][t - 1]

    def test_rp_crosses_below_plain(self, curves):
        for t in (200, 500, 1_000, 2_000):
            assert curves["rp"][t - 1] < curves["plain"][t - 1], t

    def test_rp_and_fixed_restart_agree_at_large_time(self, curves):
        for t in (1_000, 2_000):
            assert abs(curves["rp"][t - 1] - curves["fixed"][t - 1]) <= 0.05

    def test_plain_stays_absorbed_with_probability_beta(self, curves):
        assert curves["plain"][-1] == pytest.approx(0.3, abs=0.05)


class TestBitstringRestartBenefit:
    def test_rp_failure_far_below_plain(self):
        problem = BitstringProblem(20, MmasConfig())
        specs = [
            ExperimentSpec(problem, "plain", m=200, budget=20_000, master_seed=1),
            ExperimentSpec(problem, "rp", m=200, budget=20_000, master_seed=1),
        ]
        rows = _by_mode(compare(specs, workers=4))
        assert rows["plain"].fp >= 0.1
        assert rows["rp"].fp <= 0.2 * rows["plain"].fp


class TestGridTour:
    def test_rp_fails_less_often_than_plain(self):
        instance = load_instance(GRID50_PATH, load_registry(REGISTRY_PATH))
        problem = TspProblem(instance, LOCK_IN_COLONY)
        restart = RestartConfig(r0=4, t0=25)
        specs = [
            ExperimentSpec(problem, "plain", m=40, budget=500, master_seed=3),
            ExperimentSpec(problem, "rp", m=40, budget=500, master_seed=3, restart_config=restart),
        ]
        rows = _by_mode(compare(specs, workers=4))
        assert rows["plain"].fp > 0.0
        assert rows["rp"].fp < rows["plain"].fp


class TestSyntheticProblemDefaults:
    def test_default_oracle_restarts_immediately(self):
        # Without warmup the default oracle's g is smallest at t = 1.
        t_m, _ = optimal_restart_time(SyntheticBasinProblem().curve(10_000))
        assert t_m == 1
