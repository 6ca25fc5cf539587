"""Shared pytest fixtures for the restart-aco test suite."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from src.algo_core import StochasticAlgorithm
from src.harness import SyntheticBasinProblem
from src.tsplib import TspInstance, parse


# ---------------------------------------------------------------------------
# Paths to shipped data
# ---------------------------------------------------------------------------
PROJECT_ROOT = Path(__file__).resolve().parent.parent
GRID50_PATH = PROJECT_ROOT / "data" / "instances" / "grid50.tsp"
REGISTRY_PATH = PROJECT_ROOT / "config" / "known_optima.txt"

SQUARE_TSP = """NAME : square4
TYPE : TSP
DIMENSION : 4
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 0 0
2 10 10
3 10 0
4 0 10
EOF
"""

TRIANGLE_TSP = """NAME : tri3
TYPE : TSP
COMMENT : minimal fixture
DIMENSION : 3
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 0 0
2 3 0
3 0 4
EOF
"""


def random_instance(n: int, seed: int, scale: float = 1000.0) -> TspInstance:
    """Uniform random EUC_2D instance."""
    rng = np.random.default_rng(seed)
    coords = np.round(rng.random((n, 2)) * scale, 1)
    return TspInstance(name=f"rand{n}_{seed}", dimension=n, metric="EUC_2D", coords=coords)


# ---------------------------------------------------------------------------
# Scripted algorithms
# ---------------------------------------------------------------------------


class NoisyAlgorithm(StochasticAlgorithm):
    """Raw value at each step is an integer drawn from 0..9 by a seeded RNG."""

    def __init__(self, seed: int) -> None:
        super().__init__()
        self.rng = np.random.default_rng(seed)

    def step(self) -> float:
        self.steps_taken += 1
        return float(self.rng.integers(10))


@dataclass(frozen=True)
class NoisyProblem:
    name: str = "noisy"
    target_value: float | None = 0.0

    @property
    def target(self) -> float | None:
        return self.target_value

    def create(self, seed: int) -> NoisyAlgorithm:
        return NoisyAlgorithm(seed)


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


@pytest.fixture
def square_instance() -> TspInstance:
    """10 x 10 square listed in crossing order: length 48, optimum 40."""
    return parse(SQUARE_TSP)


@pytest.fixture
def triangle_text() -> str:
    return TRIANGLE_TSP


@pytest.fixture
def noisy_problem() -> NoisyProblem:
    return NoisyProblem()


@pytest.fixture
def basin_problem() -> SyntheticBasinProblem:
    """Synthetic oracle whose optimal restart time is 22."""
    return SyntheticBasinProblem(beta=0.3, q=0.5, warmup=20)


@pytest.fixture
def tmp_output_dir(tmp_path) -> str:
    """Return a temporary output directory path as a string."""
    output_dir = tmp_path / "results"
    output_dir.mkdir()
    return str(output_dir)
