"""Command-line entry point: python -m src.cli {solve,experiment,tmin,check}.

Configuration is layered: dataclass defaults, then ``--preset paper``
(config/run_defaults.yaml), then ``--config FILE``, then command-line flags.
Progress goes to stderr through logging; stdout carries only results.

Exit status: 0 on success, 2 for configuration / TSPLIB / missing-file
errors, 1 for anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from dotenv import load_dotenv

from src import logger as results
from src.algo_core import Problem, derive_seed
from src.config_loader import (
    ConfigError,
    check_keys,
    default_output_dir,
    default_registry_path,
    load_run_defaults,
    load_yaml,
    merge_config,
    resolve_path,
)
from src.harness import (
    MODES,
    ExperimentSpec,
    SyntheticBasinProblem,
    comparison_rows,
    fixed_restart_run,
    log_spaced_points,
    plain_run,
    run_experiment,
)
from src.mmas import MmasConfig, TspProblem, parse_builtin
from src.restart import LambdaSchedule, RestartConfig, run_rp
from src.theory import FailureCurve, optimal_restart_time
from src.tsplib import TsplibParseError, load_instance, load_registry

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

TOP_KEYS = {
    "problem", "registry", "mode", "compare", "m", "budget", "seed", "workers",
    "output_dir", "fixed_restart_period", "restart", "mmas", "synthetic",
}
RESTART_KEYS = {"r0", "t0", "c1", "c2", "lambda", "lambda_schedule"}
SCHEDULE_KEYS = {"start", "step", "maximum"}
MMAS_KEYS = {
    "n_ants", "alpha", "beta", "rho", "candidate_list_size", "local_search",
    "deposit_rule", "best_so_far_period",
}
SYNTHETIC_KEYS = {"beta", "q", "warmup"}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _section(data: dict[str, Any], name: str, allowed: set[str]) -> dict[str, Any]:
    section = data.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"Config section {name} must be a mapping")
    check_keys(section, allowed, prefix=f"{name}.")
    return section


def _build(cls: type, values: dict[str, Any], section: str) -> Any:
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigError(f"Invalid {section} section: {e}") from e


@dataclass
class RunConfig:
    """Resolved run configuration.

    Attributes:
        problem: ``booleanN``, ``synthetic`` or a path to a .tsp file.
        registry: Known-optimum registry; defaults to RP_REGISTRY or
            config/known_optima.txt.
        mode: Main mode (plain, rp, fixed).
        compare: Further modes run alongside ``mode`` by ``experiment``.
        m: Outer runs per mode.
        budget: Horizon T_c in (pseudo-)time steps.
        seed: Master seed.
        workers: Worker processes for outer runs.
        output_dir: Result directory; defaults to RP_OUTPUT_DIR or results/.
        fixed_restart_period: Period for ``fixed`` mode.
    """

    problem: str = "boolean20"
    registry: str | None = None
    mode: str = "rp"
    compare: list[str] = field(default_factory=list)
    m: int = 20
    budget: int = 20_000
    seed: int = 0
    workers: int = 1
    output_dir: str | None = None
    fixed_restart_period: int | None = None
    restart: RestartConfig = field(default_factory=RestartConfig)
    mmas: MmasConfig = field(default_factory=MmasConfig)
    synthetic: SyntheticBasinProblem = field(default_factory=SyntheticBasinProblem)

    def __post_init__(self) -> None:
        for mode in self.modes:
            if mode not in MODES:
                raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {mode!r}")
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if "fixed" in self.modes and not self.fixed_restart_period:
            raise ConfigError("fixed_restart_period is required when fixed mode is used")

    @property
    def modes(self) -> list[str]:
        """``mode`` followed by the ``compare`` modes, without repeats."""
        return list(dict.fromkeys([self.mode, *self.compare]))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        """Build from a parsed YAML mapping.

        Raises:
            ConfigError: On unknown keys (named as dotted paths) or bad values.
        """
        check_keys(data, TOP_KEYS)
        restart = dict(_section(data, "restart", RESTART_KEYS))
        if "lambda" in restart:
            restart["lam"] = restart.pop("lambda")
        schedule = restart.pop("lambda_schedule", None)
        if schedule is not None:
            if not isinstance(schedule, dict):
                raise ConfigError("Config section restart.lambda_schedule must be a mapping")
            check_keys(schedule, SCHEDULE_KEYS, prefix="restart.lambda_schedule.")
            restart["lambda_schedule"] = _build(LambdaSchedule, schedule, "restart.lambda_schedule")
        mmas = _section(data, "mmas", MMAS_KEYS)
        synthetic = _section(data, "synthetic", SYNTHETIC_KEYS)

        top = {k: v for k, v in data.items() if k not in ("restart", "mmas", "synthetic")}
        compare = top.get("compare", [])
        if compare is None:
            top["compare"] = []
        elif isinstance(compare, str):
            top["compare"] = [compare]
        elif not isinstance(compare, list):
            raise ConfigError(f"compare must be a mode or a list of modes, got {compare!r}")
        return _build(cls, {
            **top,
            "restart": _build(RestartConfig, restart, "restart"),
            "mmas": _build(MmasConfig, mmas, "mmas"),
            "synthetic": _build(SyntheticBasinProblem, synthetic, "synthetic"),
        }, "top-level")

    def resolved_output_dir(self) -> Path:
        return resolve_path(self.output_dir) if self.output_dir else default_output_dir()

    def to_record(self) -> dict[str, Any]:
        return asdict(self)


def _flag_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Mapping of the flags that were given, in config-file layout."""
    top = {
        "problem": args.problem,
        "registry": args.registry,
        "mode": args.mode,
        "compare": args.compare,
        "m": args.m,
        "budget": args.budget,
        "seed": args.seed,
        "workers": args.workers,
        "output_dir": args.output_dir,
        "fixed_restart_period": args.fixed_restart_period,
    }
    restart = {"r0": args.r0, "t0": args.t0, "c1": args.c1, "c2": args.c2, "lambda": args.lam}
    mmas = {"local_search": args.local_search, "n_ants": args.n_ants}
    overrides: dict[str, Any] = {k: v for k, v in top.items() if v is not None}
    for name, section in (("restart", restart), ("mmas", mmas)):
        given = {k: v for k, v in section.items() if v is not None}
        if given:
            overrides[name] = given
    return overrides


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Layer preset, config file and flags into a ``RunConfig``."""
    data: dict[str, Any] = {}
    if args.preset == "paper":
        data = merge_config(data, load_run_defaults())
    if args.config:
        data = merge_config(data, load_yaml(args.config))
    data = merge_config(data, _flag_overrides(args))
    return RunConfig.from_dict(data)


def build_problem(config: RunConfig) -> Problem:
    """Resolve ``config.problem`` to a problem handle.

    Raises:
        ConfigError: For unknown built-in names.
        FileNotFoundError: For a missing .tsp file or explicit registry.
        TsplibParseError: For malformed TSPLIB or registry text.
    """
    if config.problem == "synthetic":
        return config.synthetic
    if not config.problem.endswith(".tsp"):
        return parse_builtin(config.problem, config.mmas)

    registry_path = resolve_path(config.registry) if config.registry else default_registry_path()
    registry = None
    if registry_path.exists() or config.registry:
        registry = load_registry(registry_path)
    instance = load_instance(resolve_path(config.problem), registry)
    return TspProblem(instance, config.mmas)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_solve(config: RunConfig) -> int:
    """Run one plain, RP or fixed-restart execution and print the outcome as JSON."""
    problem = build_problem(config)
    target = problem.target
    seed = derive_seed(config.seed, 1)
    output_dir = config.resolved_output_dir()

    if config.mode == "rp":
        rp_config = replace(config.restart, budget=config.budget, target=target)
        result = run_rp(problem, rp_config, seed)
        best, steps = result.best, result.ledger.total_pseudo_time
        results.write_trace([[state.as_row() for state in result.trace]], output_dir)
    elif config.mode == "fixed":
        trajectory = fixed_restart_run(problem, config.fixed_restart_period, config.budget, seed)
        best, steps = float(trajectory.best_so_far[-1]), trajectory.length
    else:
        trajectory = plain_run(problem, config.budget, seed)
        best, steps = float(trajectory.best_so_far[-1]), trajectory.length

    reached = target is not None and best <= target
    if target is not None and not reached:
        logger.warning("Target %s not reached on %s (best %s)", target, problem.name, best)
    outcome = {
        "problem": problem.name,
        "mode": config.mode,
        "best": best,
        "target": target,
        "reached": reached,
        "steps": steps,
    }
    print(json.dumps(outcome))
    results.log_run(output_dir, "solve", config.to_record(), outcome)
    return EXIT_OK


def cmd_experiment(config: RunConfig) -> int:
    """Estimate failure curves for every configured mode and write the CSVs."""
    problem = build_problem(config)
    output_dir = config.resolved_output_dir()

    experiments = []
    for mode in config.modes:
        spec = ExperimentSpec(
            problem=problem,
            mode=mode,
            m=config.m,
            budget=config.budget,
            master_seed=config.seed,
            restart_config=config.restart,
            restart_period=config.fixed_restart_period,
        )
        experiments.append(run_experiment(spec, workers=config.workers))

    curves = [experiment.curve for experiment in experiments]
    rows = comparison_rows(curves)
    traces = [trace for e in experiments if e.spec.mode == "rp" for trace in e.traces()]

    results.write_curves(curves, output_dir, log_spaced_points(config.budget))
    results.write_table(rows, output_dir)
    results.write_trace(traces, output_dir)

    outcome = {
        "output_dir": str(output_dir),
        "table": [row.as_row() for row in rows],
    }
    print(json.dumps(outcome))
    results.log_run(output_dir, "experiment", config.to_record(), outcome)
    return EXIT_OK


def cmd_tmin(curve_file: str, mode: str | None = None) -> int:
    """Print ``t_m g_min`` for a failure curve stored as CSV."""
    values = results.read_curve_csv(curve_file, mode=mode)
    t_m, g_min = optimal_restart_time(FailureCurve(values))
    print(f"{t_m} {g_min:.6g}")
    return EXIT_OK


def cmd_check(instance_path: str) -> int:
    """Parse a TSPLIB file and print ``<METRIC> <DIMENSION>``."""
    instance = load_instance(resolve_path(instance_path))
    print(f"{instance.metric} {instance.dimension}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _run_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--preset", choices=["paper"], help="Load config/run_defaults.yaml first")
    p.add_argument("--problem", help="booleanN, synthetic, or a .tsp path")
    p.add_argument("--registry", help="Known-optimum registry file")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--compare", nargs="+", choices=MODES, help="Extra modes for experiment")
    p.add_argument("--m", type=int, help="Outer runs per mode")
    p.add_argument("--budget", type=int, help="Horizon in (pseudo-)time steps")
    p.add_argument("--seed", type=int, help="Master seed")
    p.add_argument("--workers", type=int, help="Worker processes")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--fixed-restart-period", dest="fixed_restart_period", type=int)
    p.add_argument("--r0", type=int)
    p.add_argument("--t0", type=int)
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--local-search", dest="local_search")
    p.add_argument("--n-ants", dest="n_ants", type=int)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src.cli", description="Restart procedure experiments for MMAS"
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run_options = _run_options()
    sub.add_parser("solve", parents=[run_options], help="Run one execution")
    sub.add_parser("experiment", parents=[run_options], help="Estimate failure curves")

    s_tmin = sub.add_parser("tmin", help="Optimal restart time of a curve CSV")
    s_tmin.add_argument("curve_file")
    s_tmin.add_argument("--mode", help="Curve to use from a curve_full.csv")

    s_check = sub.add_parser("check", help="Validate a TSPLIB file")
    s_check.add_argument("instance")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)

    log_level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(
        level=log_level,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    try:
        if args.command == "tmin":
            return cmd_tmin(args.curve_file, args.mode)
        if args.command == "check":
            return cmd_check(args.instance)

        config = resolve_config(args)
        if args.command == "solve":
            return cmd_solve(config)
        return cmd_experiment(config)

    except (ConfigError, TsplibParseError, FileNotFoundError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.debug("Unhandled error", exc_info=True)
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    raise SystemExit(main())
