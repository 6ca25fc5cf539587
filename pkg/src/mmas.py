"""Max-Min Ant System for TSP tours and pseudo-Boolean bitstrings.

Both variants implement the resumable-algorithm contract: one ``step()``
is one colony iteration (every ant constructs a solution, TSP ants
optionally improve theirs by local search, one pheromone update), and it
returns the iteration-best objective value.

Trail limits:
  - TSP: tau_max = 1 / (rho * f_best), tau_min = tau_max / (2n). Before the
    first iteration f_best is the nearest-neighbour tour length; trails
    start at tau_max.
  - Bitstring: fixed tau_min = 1/N, tau_max = 1 - 1/N; each deposit adds rho.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from src.algo_core import ObjectiveValue, StochasticAlgorithm
from src.config_loader import ConfigError
from src.localsearch import LOCAL_SEARCHES
from src.tsplib import TspInstance, cycle_length, nearest_neighbor_length

logger = logging.getLogger(__name__)

DEFAULT_TSP_ANTS = 25
DEFAULT_BITSTRING_ANTS = 10

# Zero-length edges get the heuristic value of an edge of this length.
MIN_EDGE_LENGTH = 0.1

LOCAL_SEARCH_CHOICES = ("none", *LOCAL_SEARCHES)
DEPOSIT_RULES = ("iteration-best", "schedule")


# ---------------------------------------------------------------------------
# Configuration and pheromone model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MmasConfig:
    """MMAS hyperparameters.

    Attributes:
        n_ants: Colony size; None picks 25 for TSP and 10 for bitstrings.
        alpha: Pheromone exponent.
        beta: Heuristic exponent (TSP only).
        rho: Evaporation rate in (0, 1).
        candidate_list_size: Nearest-neighbour list length (TSP only).
        local_search: One of ``LOCAL_SEARCH_CHOICES`` (TSP only).
        deposit_rule: ``iteration-best`` or ``schedule``; with ``schedule``
            the best-so-far solution deposits every ``best_so_far_period``-th
            iteration instead of the iteration-best one.
        best_so_far_period: Period of best-so-far deposits.
    """

    n_ants: int | None = None
    alpha: float = 1.0
    beta: float = 2.0
    rho: float = 0.02
    candidate_list_size: int = 20
    local_search: str = "none"
    deposit_rule: str = "schedule"
    best_so_far_period: int = 10

    def __post_init__(self) -> None:
        if self.n_ants is not None and self.n_ants < 1:
            raise ConfigError(f"mmas.n_ants must be >= 1, got {self.n_ants}")
        if not 0.0 < self.rho < 1.0:
            raise ConfigError(f"mmas.rho must lie in (0, 1), got {self.rho}")
        if self.candidate_list_size < 1:
            raise ConfigError(
                f"mmas.candidate_list_size must be >= 1, got {self.candidate_list_size}"
            )
        if self.local_search not in LOCAL_SEARCH_CHOICES:
            raise ConfigError(
                f"mmas.local_search must be one of {', '.join(LOCAL_SEARCH_CHOICES)}, "
                f"got {self.local_search!r}"
            )
        if self.deposit_rule not in DEPOSIT_RULES:
            raise ConfigError(
                f"mmas.deposit_rule must be one of {', '.join(DEPOSIT_RULES)}, "
                f"got {self.deposit_rule!r}"
            )
        if self.best_so_far_period < 1:
            raise ConfigError(
                f"mmas.best_so_far_period must be >= 1, got {self.best_so_far_period}"
            )

    def ants(self, default: int) -> int:
        return self.n_ants if self.n_ants is not None else default


@dataclass
class PheromoneModel:
    """Trail matrix kept inside [tau_min, tau_max].

    TSP trails are an n x n city-pair matrix; bitstring trails are N x 2,
    column v holding the trail for "bit i takes value v".
    """

    trails: np.ndarray
    tau_min: float
    tau_max: float
    rho: float

    def __post_init__(self) -> None:
        if self.tau_min <= 0.0 or self.tau_min > self.tau_max:
            raise ValueError(
                f"Need 0 < tau_min <= tau_max, got {self.tau_min}, {self.tau_max}"
            )
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        self.trails = np.asarray(self.trails, dtype=float)
        self.clamp()

    @classmethod
    def uniform(cls, shape: tuple[int, ...], tau_min: float, tau_max: float,
                rho: float) -> "PheromoneModel":
        """All trails at tau_max."""
        return cls(np.full(shape, tau_max), tau_min, tau_max, rho)

    def set_limits(self, tau_min: float, tau_max: float) -> None:
        self.tau_min, self.tau_max = tau_min, tau_max
        self.clamp()

    def clamp(self) -> None:
        np.clip(self.trails, self.tau_min, self.tau_max, out=self.trails)


def pheromone_update(
    pheromone: PheromoneModel,
    components: tuple[np.ndarray, np.ndarray],
    amount: float,
) -> PheromoneModel:
    """Evaporate every trail, deposit ``amount`` on ``components``, clamp.

    Args:
        pheromone: Model updated in place.
        components: (rows, cols) index arrays of the depositing solution.
        amount: Deposit per component.

    Returns:
        The same model, for chaining.
    """
    pheromone.trails *= 1.0 - pheromone.rho
    pheromone.trails[components] += amount
    pheromone.clamp()
    return pheromone


# ---------------------------------------------------------------------------
# TSP
# ---------------------------------------------------------------------------


def heuristic_matrix(instance: TspInstance) -> np.ndarray:
    """eta = 1 / distance, distances floored at ``MIN_EDGE_LENGTH``."""
    return 1.0 / np.maximum(instance.matrix.astype(float), MIN_EDGE_LENGTH)


def tour_components(order: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Both orientations of every tour edge, as trail-matrix indices."""
    a = np.asarray(order)
    b = np.roll(a, -1)
    return np.concatenate([a, b]), np.concatenate([b, a])


def _walk(weights: np.ndarray, candidates: np.ndarray, rng: np.random.Generator) -> list[int]:
    n = weights.shape[0]
    visited = np.zeros(n, dtype=bool)
    current = int(rng.integers(n))
    visited[current] = True
    order = [current]
    for _ in range(n - 1):
        options = candidates[current]
        options = options[~visited[options]]
        if options.size == 0:
            options = np.flatnonzero(~visited)
        w = weights[current, options]
        total = w.sum()
        if total > 0.0:
            pick = int(np.searchsorted(np.cumsum(w), rng.random() * total, side="right"))
            current = int(options[min(pick, options.size - 1)])
        else:
            current = int(options[rng.integers(options.size)])
        visited[current] = True
        order.append(current)
    return order


def construct_tour(
    pheromone: PheromoneModel,
    instance: TspInstance,
    rng: np.random.Generator,
    alpha: float = 1.0,
    beta: float = 2.0,
    candidates: np.ndarray | None = None,
) -> list[int]:
    """Build one ant's tour (0-based cities) by candidate-list roulette.

    The next city is drawn from the unvisited candidates of the current city
    with probability proportional to tau^alpha * eta^beta; when every
    candidate is visited the draw is over all unvisited cities.
    """
    if candidates is None:
        candidates = np.asarray(instance.neighbor_lists(instance.dimension - 1))
    weights = np.power(pheromone.trails, alpha) * np.power(heuristic_matrix(instance), beta)
    return _walk(weights, candidates, rng)


class MmasTsp(StochasticAlgorithm):
    """One MMAS colony on a TSP instance."""

    def __init__(self, instance: TspInstance, config: MmasConfig, seed: int,
                 neighbors: list[list[int]] | None = None,
                 heuristic: np.ndarray | None = None,
                 initial_length: int | None = None) -> None:
        super().__init__()
        if instance.dimension < 3:
            raise ValueError(f"MMAS needs at least 3 cities, got {instance.dimension}")
        self.instance = instance
        self.config = config
        self.rng = np.random.default_rng(seed)
        self.n_ants = config.ants(DEFAULT_TSP_ANTS)
        self.neighbors = neighbors or instance.neighbor_lists(config.candidate_list_size)
        self.candidates = np.asarray(self.neighbors)
        eta = heuristic if heuristic is not None else heuristic_matrix(instance)
        self.eta_beta = np.power(eta, config.beta)
        self.local_search = LOCAL_SEARCHES.get(config.local_search)

        start_length = initial_length or nearest_neighbor_length(instance)
        tau_min, tau_max = self._limits(start_length)
        self.pheromone = PheromoneModel.uniform(
            (instance.dimension, instance.dimension), tau_min, tau_max, config.rho
        )
        self.best_order: list[int] | None = None
        self.best_length: ObjectiveValue = float("inf")

    def _limits(self, length: float) -> tuple[float, float]:
        # all-coincident cities give length 0
        tau_max = 1.0 / (self.config.rho * max(length, MIN_EDGE_LENGTH))
        return tau_max / (2 * self.instance.dimension), tau_max

    def _ant(self, weights: np.ndarray) -> tuple[list[int], int]:
        order = _walk(weights, self.candidates, self.rng)
        if self.local_search is not None:
            tour = self.local_search(order, self.instance, self.neighbors)
            return list(tour.order), tour.length
        return order, cycle_length(self.instance.rows, order)

    def step(self) -> ObjectiveValue:
        self.steps_taken += 1
        weights = np.power(self.pheromone.trails, self.config.alpha) * self.eta_beta

        iteration_order, iteration_length = self._ant(weights)
        for _ in range(self.n_ants - 1):
            order, length = self._ant(weights)
            if length < iteration_length:
                iteration_order, iteration_length = order, length

        if iteration_length < self.best_length:
            self.best_order, self.best_length = iteration_order, float(iteration_length)
            self.pheromone.set_limits(*self._limits(iteration_length))

        deposit_order, deposit_length = iteration_order, iteration_length
        if (self.config.deposit_rule == "schedule"
                and self.steps_taken % self.config.best_so_far_period == 0):
            deposit_order, deposit_length = self.best_order, self.best_length
        pheromone_update(
            self.pheromone, tour_components(deposit_order), 1.0 / max(deposit_length, MIN_EDGE_LENGTH)
        )
        return float(iteration_length)


@dataclass(eq=False)
class TspProblem:
    """TSP instance plus MMAS settings; spawns seeded colonies.

    Neighbour lists, heuristic values and the nearest-neighbour length are
    computed once and shared by every colony.
    """

    instance: TspInstance
    config: MmasConfig = MmasConfig()

    def __post_init__(self) -> None:
        self.name = self.instance.name
        self.neighbors = self.instance.neighbor_lists(self.config.candidate_list_size)
        self.heuristic = heuristic_matrix(self.instance)
        self.initial_length = nearest_neighbor_length(self.instance)

    @property
    def target(self) -> ObjectiveValue | None:
        optimum = self.instance.known_optimum
        return float(optimum) if optimum is not None else None

    def create(self, seed: int) -> MmasTsp:
        return MmasTsp(
            self.instance, self.config, seed,
            neighbors=self.neighbors,
            heuristic=self.heuristic,
            initial_length=self.initial_length,
        )


# ---------------------------------------------------------------------------
# Pseudo-Boolean bitstrings
# ---------------------------------------------------------------------------


def bitstring_fitness(bits: np.ndarray, n: int | None = None) -> np.ndarray | float:
    """f(x) = -|sum(x) - (N - 1) / 2|, row-wise for 2-D input.

    Two single-flip local optima: all zeros at -(N-1)/2 and the global
    optimum all ones at -(N+1)/2.
    """
    bits = np.asarray(bits)
    n = bits.shape[-1] if n is None else n
    values = -np.abs(bits.sum(axis=-1) - (n - 1) / 2.0)
    return float(values) if np.ndim(values) == 0 else values


def construct_bitstrings(
    pheromone: PheromoneModel, rng: np.random.Generator, count: int
) -> np.ndarray:
    """``count`` bitstrings; bit i is 1 with probability tau_i1 / (tau_i0 + tau_i1)."""
    trails = pheromone.trails
    p_one = trails[:, 1] / (trails[:, 0] + trails[:, 1])
    return (rng.random((count, trails.shape[0])) < p_one).astype(np.int8)


def construct_bitstring(pheromone: PheromoneModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """One bitstring of length ``n``."""
    if pheromone.trails.shape != (n, 2):
        raise ValueError(f"Trail shape {pheromone.trails.shape} does not match N={n}")
    return construct_bitstrings(pheromone, rng, 1)[0]


def bitstring_components(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    bits = np.asarray(bits, dtype=np.intp)
    return np.arange(bits.size), bits


class MmasBitstring(StochasticAlgorithm):
    """One MMAS colony minimising the pseudo-Boolean fitness."""

    def __init__(self, n: int, config: MmasConfig, seed: int) -> None:
        super().__init__()
        if n < 2:
            raise ValueError(f"Bitstring length must be >= 2, got {n}")
        self.n = n
        self.config = config
        self.rng = np.random.default_rng(seed)
        self.n_ants = config.ants(DEFAULT_BITSTRING_ANTS)
        self.pheromone = PheromoneModel.uniform((n, 2), 1.0 / n, 1.0 - 1.0 / n, config.rho)
        self.best_bits: np.ndarray | None = None
        self.best_value: ObjectiveValue = float("inf")

    def step(self) -> ObjectiveValue:
        self.steps_taken += 1
        colony = construct_bitstrings(self.pheromone, self.rng, self.n_ants)
        values = bitstring_fitness(colony, self.n)
        winner = int(np.argmin(values))
        iteration_bits, iteration_value = colony[winner], float(values[winner])

        if iteration_value < self.best_value:
            self.best_bits, self.best_value = iteration_bits.copy(), iteration_value

        deposit = iteration_bits
        if (self.config.deposit_rule == "schedule"
                and self.steps_taken % self.config.best_so_far_period == 0):
            deposit = self.best_bits
        # Fitness is negative, so every deposit is the constant rho.
        pheromone_update(self.pheromone, bitstring_components(deposit), self.config.rho)
        return iteration_value


@dataclass(eq=False)
class BitstringProblem:
    """Pseudo-Boolean problem of length ``n``; optimum -(n+1)/2 at all ones."""

    n: int
    config: MmasConfig = MmasConfig()

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ConfigError(f"boolean problem length must be >= 2, got {self.n}")
        self.name = f"boolean{self.n}"

    @property
    def target(self) -> ObjectiveValue:
        return -(self.n + 1) / 2.0

    def create(self, seed: int) -> MmasBitstring:
        return MmasBitstring(self.n, self.config, seed)


_BOOLEAN_NAME = re.compile(r"^boolean(\d+)$")


def parse_builtin(name: str, config: MmasConfig | None = None) -> BitstringProblem:
    """Resolve a built-in MMAS problem name such as ``boolean50``.

    Raises:
        ConfigError: If the name is not a built-in problem.
    """
    match = _BOOLEAN_NAME.match(name)
    if not match:
        raise ConfigError(f"Unknown problem: {name!r} (expected booleanN or a .tsp path)")
    config = config or MmasConfig()
    if config.local_search != "none":
        logger.warning("Local search ignored for %s", name)
        config = replace(config, local_search="none")
    return BitstringProblem(int(match.group(1)), config)
