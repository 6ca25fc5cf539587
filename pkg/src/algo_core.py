"""Resumable stochastic algorithms and the replication pool they feed.

Every underlying algorithm the restart procedure wraps (MMAS on TSP or
bitstrings, the synthetic basin oracle) implements the same small contract:
``step()`` advances exactly one iteration and returns the objective value of
the solution produced at that iteration. Steps are numbered from 1.

A replication is identified by ``(master_seed, index)``; its seed is derived
independently of the pool size, so growing the pool never perturbs the
replications already in it.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

logger = logging.getLogger(__name__)

# Objective values are exact: tour lengths are integers and the
# pseudo-Boolean fitness is a half-integer, both exact in float64.
ObjectiveValue = float


class ContractViolationError(ValueError):
    """Raised when a trajectory or pool operation is called out of contract."""

    pass


class StochasticAlgorithm(ABC):
    """Base class for the resumable-algorithm contract.

    Subclasses own all of their stochastic state (including the RNG) so a
    suspended instance resumes exactly where it stopped.
    """

    def __init__(self) -> None:
        self.steps_taken = 0

    @abstractmethod
    def step(self) -> ObjectiveValue:
        """Advance one iteration and return f(X(t)) for the new step t."""

    def advance(self, n: int) -> np.ndarray:
        """Advance ``n`` iterations and return their objective values.

        Subclasses with a closed-form step process override this with a
        vectorised version; the default just loops over ``step()``.
        """
        return np.fromiter((self.step() for _ in range(n)), dtype=float, count=n)


class Problem(Protocol):
    """Problem handle: knows its name, optional known optimum and how to
    create a fresh seeded algorithm instance."""

    name: str

    @property
    def target(self) -> ObjectiveValue | None: ...

    def create(self, seed: int) -> StochasticAlgorithm: ...


def derive_seed(master_seed: int, index: int) -> int:
    """Mix ``(master_seed, index)`` into a 64-bit replication seed.

    Args:
        master_seed: Non-negative experiment seed.
        index: Replication index, starting at 1.

    Returns:
        A 64-bit integer seed.

    Raises:
        ContractViolationError: If the index is below 1 or the seed negative.
    """
    if index < 1:
        raise ContractViolationError(f"Replication index must be >= 1, got {index}")
    if master_seed < 0:
        raise ContractViolationError(f"Master seed must be >= 0, got {master_seed}")
    state = np.random.SeedSequence([master_seed, index]).generate_state(1, np.uint64)
    return int(state[0])


def spawn_replication(problem: Problem, master_seed: int, index: int) -> StochasticAlgorithm:
    """Create replication ``index`` of ``problem`` under ``master_seed``."""
    return problem.create(derive_seed(master_seed, index))


@dataclass
class Trajectory:
    """Per-step objective series of one replication.

    ``raw[t-1]`` is f(X(t)); ``best_so_far[t-1]`` is Y(t) = min(raw[:t]).
    Both arrays only ever grow.
    """

    seed: int
    raw: np.ndarray = field(default_factory=lambda: np.empty(0))
    best_so_far: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def length(self) -> int:
        return int(self.raw.size)

    def append(self, values: np.ndarray) -> None:
        """Append newly produced raw values and extend the running minimum."""
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return
        running = np.minimum.accumulate(values)
        if self.length:
            running = np.minimum(running, self.best_so_far[-1])
        self.raw = np.concatenate([self.raw, values])
        self.best_so_far = np.concatenate([self.best_so_far, running])


def extend(traj: Trajectory, algo: StochasticAlgorithm, to_step: int) -> Trajectory:
    """Run ``algo`` until the trajectory has ``to_step`` entries.

    Raises:
        ContractViolationError: If ``to_step`` is shorter than the trajectory.
    """
    if to_step < traj.length:
        raise ContractViolationError(
            f"Cannot extend trajectory of length {traj.length} back to {to_step}"
        )
    missing = to_step - traj.length
    if missing:
        traj.append(algo.advance(missing))
    return traj


@dataclass
class Replication:
    """One row of the replication matrix: index, live algorithm, trajectory."""

    index: int
    algorithm: StochasticAlgorithm
    trajectory: Trajectory


class ReplicationPool:
    """Ordered collection of replications of a single problem.

    Args:
        problem: Problem handle used to spawn new replications.
        master_seed: Seed every replication seed is derived from.
    """

    def __init__(self, problem: Problem, master_seed: int) -> None:
        self.problem = problem
        self.master_seed = master_seed
        self.replications: list[Replication] = []

    def __len__(self) -> int:
        return len(self.replications)

    @property
    def common_length(self) -> int:
        """Length every trajectory has reached (0 for an empty pool)."""
        if not self.replications:
            return 0
        return min(rep.trajectory.length for rep in self.replications)

    def grow(self, count: int, to_step: int) -> list[Replication]:
        """Spawn ``count`` new replications and run each to ``to_step``."""
        added = []
        for _ in range(count):
            index = len(self.replications) + 1
            seed = derive_seed(self.master_seed, index)
            rep = Replication(index, self.problem.create(seed), Trajectory(seed=seed))
            extend(rep.trajectory, rep.algorithm, to_step)
            self.replications.append(rep)
            added.append(rep)
        return added

    def extend_all(self, to_step: int) -> None:
        """Continue every replication until ``to_step``."""
        for rep in self.replications:
            extend(rep.trajectory, rep.algorithm, to_step)

    def matrix(self, length: int | None = None) -> np.ndarray:
        """Return the r x T best-so-far matrix Y_A.

        Args:
            length: Number of columns; defaults to the common length.

        Raises:
            ContractViolationError: If the pool is empty or too short.
        """
        if not self.replications:
            raise ContractViolationError("Replication pool is empty")
        length = self.common_length if length is None else length
        if length > self.common_length:
            raise ContractViolationError(
                f"Pool common length {self.common_length} < requested {length}"
            )
        return np.vstack([rep.trajectory.best_so_far[:length] for rep in self.replications])
