"""TSPLIB instance parser and exact integer distances.

Supported subset: NODE_COORD_SECTION instances with EDGE_WEIGHT_TYPE
EUC_2D, ATT or CEIL_2D. Public functions use TSPLIB 1-based node numbers;
``TspInstance.matrix`` is the 0-based integer distance matrix the
optimisers use internally.

Known optima are not part of the TSPLIB file: they come from a registry
file with ``<name> <optimum>`` lines and ``#`` comments.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

SUPPORTED_METRICS = ("EUC_2D", "ATT", "CEIL_2D")


class TsplibParseError(ValueError):
    """Raised on malformed TSPLIB or registry text.

    Attributes:
        line: 1-based line number the problem was found on (0 if unknown).
    """

    def __init__(self, message: str, line: int = 0) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class MissingKeyError(TsplibParseError):
    """A required header key (DIMENSION, EDGE_WEIGHT_TYPE, ...) is absent."""


class UnsupportedMetricError(TsplibParseError):
    """EDGE_WEIGHT_TYPE is outside the supported subset."""


class CoordinateCountError(TsplibParseError):
    """NODE_COORD_SECTION row count does not match DIMENSION."""


class TourValidityError(ValueError):
    """Raised when a tour is not a permutation of the instance's nodes."""


@dataclass(frozen=True, eq=False)
class TspInstance:
    """A parsed TSPLIB instance.

    Attributes:
        name: NAME header value.
        dimension: Number of cities n.
        metric: One of ``SUPPORTED_METRICS``.
        coords: n x 2 array of node coordinates, row i is node i + 1.
        known_optimum: Registry optimum, if one was attached.
    """

    name: str
    dimension: int
    metric: str
    coords: np.ndarray
    known_optimum: int | None = None

    @cached_property
    def matrix(self) -> np.ndarray:
        """n x n integer distance matrix (0-based)."""
        return _distance_matrix(np.asarray(self.coords, dtype=float), self.metric)

    @cached_property
    def rows(self) -> list[list[int]]:
        """Distance matrix as nested lists, for scalar-heavy inner loops."""
        return self.matrix.tolist()

    def neighbor_lists(self, size: int) -> list[list[int]]:
        """Return the ``size`` nearest cities of every city (0-based, ties by index)."""
        size = max(1, min(size, self.dimension - 1))
        order = np.argsort(self.matrix, axis=1, kind="stable")
        lists = []
        for i in range(self.dimension):
            lists.append([int(j) for j in order[i] if j != i][:size])
        return lists


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------


def _nint(x: np.ndarray) -> np.ndarray:
    # TSPLIB nint: (int)(x + 0.5)
    return np.floor(x + 0.5)


def _distance_matrix(coords: np.ndarray, metric: str) -> np.ndarray:
    dx = coords[:, None, 0] - coords[None, :, 0]
    dy = coords[:, None, 1] - coords[None, :, 1]
    squared = dx * dx + dy * dy
    if metric == "EUC_2D":
        dist = _nint(np.sqrt(squared))
    elif metric == "CEIL_2D":
        dist = np.ceil(np.sqrt(squared))
    elif metric == "ATT":
        r = np.sqrt(squared / 10.0)
        t = _nint(r)
        dist = np.where(t < r, t + 1.0, t)
    else:
        raise UnsupportedMetricError(f"Unsupported EDGE_WEIGHT_TYPE {metric!r}")
    return dist.astype(np.int64)


def distance(instance: TspInstance, i: int, j: int) -> int:
    """Integer distance between TSPLIB nodes ``i`` and ``j`` (1-based).

    Raises:
        IndexError: If a node number is outside 1..n.
    """
    n = instance.dimension
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"Node numbers must lie in 1..{n}, got ({i}, {j})")
    return int(instance.matrix[i - 1, j - 1])


def cycle_length(rows: Sequence[Sequence[int]], order: Sequence[int]) -> int:
    """Length of the closed tour ``order`` (0-based cities) under ``rows``."""
    total = 0
    prev = order[-1]
    for city in order:
        total += rows[prev][city]
        prev = city
    return int(total)


def tour_length(instance: TspInstance, tour: Sequence[int]) -> int:
    """Length of a tour given as TSPLIB node numbers 1..n.

    Raises:
        TourValidityError: If ``tour`` is not a permutation of 1..n.
    """
    if sorted(tour) != list(range(1, instance.dimension + 1)):
        raise TourValidityError(
            f"Tour is not a permutation of 1..{instance.dimension}"
        )
    return cycle_length(instance.rows, [node - 1 for node in tour])


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _split_header(line: str) -> tuple[str, str]:
    key, _, value = line.partition(":")
    return key.strip().upper(), value.strip()


def parse(text: str) -> TspInstance:
    """Parse TSPLIB text into a ``TspInstance``.

    Unknown header keys are ignored and the EOF token is optional.

    Raises:
        MissingKeyError: DIMENSION, EDGE_WEIGHT_TYPE or NODE_COORD_SECTION absent.
        UnsupportedMetricError: EDGE_WEIGHT_TYPE outside EUC_2D / ATT / CEIL_2D.
        CoordinateCountError: Coordinate rows do not match DIMENSION.
        TsplibParseError: Any other malformed line.
    """
    lines = text.splitlines()
    header: dict[str, tuple[str, int]] = {}
    section_line = 0

    # --- 1. Header ---
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.upper().startswith("NODE_COORD_SECTION"):
            section_line = number
            break
        if stripped.upper() == "EOF":
            break
        key, value = _split_header(stripped)
        header[key] = (value, number)

    last_line = len(lines)
    if "DIMENSION" not in header:
        raise MissingKeyError("missing DIMENSION", line=section_line or last_line)
    dim_text, dim_line = header["DIMENSION"]
    try:
        dimension = int(dim_text)
    except ValueError:
        raise TsplibParseError(f"DIMENSION is not an integer: {dim_text!r}", line=dim_line)
    if dimension < 1:
        raise TsplibParseError(f"DIMENSION must be positive, got {dimension}", line=dim_line)

    if "EDGE_WEIGHT_TYPE" not in header:
        raise MissingKeyError("missing EDGE_WEIGHT_TYPE", line=section_line or last_line)
    metric, metric_line = header["EDGE_WEIGHT_TYPE"]
    metric = metric.upper()
    if metric not in SUPPORTED_METRICS:
        raise UnsupportedMetricError(
            f"unsupported EDGE_WEIGHT_TYPE {metric!r}; supported: {', '.join(SUPPORTED_METRICS)}",
            line=metric_line,
        )
    if not section_line:
        raise MissingKeyError("missing NODE_COORD_SECTION", line=last_line)

    # --- 2. Coordinates ---
    coords: dict[int, tuple[float, float]] = {}
    for number in range(section_line + 1, last_line + 1):
        stripped = lines[number - 1].strip()
        if not stripped:
            continue
        if stripped.upper() == "EOF":
            break
        parts = stripped.split()
        if not parts[0].isdigit():
            # Another section (e.g. DISPLAY_DATA_SECTION) ends the coordinates.
            break
        try:
            node = int(parts[0])
            x, y = float(parts[1]), float(parts[2])
        except (ValueError, IndexError):
            raise TsplibParseError(f"expected '<node> <x> <y>', got {stripped!r}", line=number)
        if not 1 <= node <= dimension or node in coords:
            raise CoordinateCountError(
                f"node number {node} invalid or repeated for DIMENSION {dimension}",
                line=number,
            )
        coords[node] = (x, y)

    if len(coords) != dimension:
        raise CoordinateCountError(
            f"DIMENSION is {dimension} but {len(coords)} coordinate rows were found",
            line=dim_line,
        )

    name = header.get("NAME", ("", 0))[0] or "unnamed"
    ordered = np.array([coords[node] for node in range(1, dimension + 1)], dtype=float)
    return TspInstance(name=name, dimension=dimension, metric=metric, coords=ordered)


def serialize(instance: TspInstance) -> str:
    """Write ``instance`` back as TSPLIB text (supported subset only)."""
    out = [
        f"NAME : {instance.name}",
        "TYPE : TSP",
        f"DIMENSION : {instance.dimension}",
        f"EDGE_WEIGHT_TYPE : {instance.metric}",
        "NODE_COORD_SECTION",
    ]
    for node, (x, y) in enumerate(np.asarray(instance.coords), start=1):
        out.append(f"{node} {float(x)!r} {float(y)!r}")
    out.append("EOF")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Files and registry
# ---------------------------------------------------------------------------


def load_registry(path: str | Path) -> dict[str, int]:
    """Read a known-optimum registry (``<name> <integer optimum>`` per line).

    Raises:
        FileNotFoundError: If the file does not exist.
        TsplibParseError: On malformed lines, naming the line number.
    """
    filepath = Path(path)
    if not filepath.exists():
        raise FileNotFoundError(f"Optimum registry not found: {filepath}")

    registry: dict[str, int] = {}
    with open(filepath, "r") as f:
        for number, line in enumerate(f, start=1):
            content = line.split("#", 1)[0].strip()
            if not content:
                continue
            parts = content.split()
            if len(parts) != 2:
                raise TsplibParseError(
                    f"registry entry must be '<name> <optimum>', got {content!r}", line=number
                )
            try:
                registry[parts[0]] = int(parts[1])
            except ValueError:
                raise TsplibParseError(
                    f"registry optimum is not an integer: {parts[1]!r}", line=number
                )
    return registry


def load_instance(path: str | Path, registry: dict[str, int] | None = None) -> TspInstance:
    """Parse a TSPLIB file and attach its registry optimum, if listed."""
    filepath = Path(path)
    if not filepath.exists():
        raise FileNotFoundError(f"TSPLIB file not found: {filepath}")
    instance = parse(filepath.read_text())
    if registry and instance.name in registry:
        instance = replace(instance, known_optimum=registry[instance.name])
    elif registry is not None:
        logger.warning("No registry optimum for instance %s", instance.name)
    return instance


def nearest_neighbor_length(instance: TspInstance, start: int = 0) -> int:
    """Length of the greedy nearest-neighbour tour from ``start`` (0-based)."""
    rows = instance.rows
    n = instance.dimension
    unvisited = set(range(n))
    unvisited.discard(start)
    order = [start]
    current = start
    while unvisited:
        current = min(unvisited, key=lambda j: (rows[current][j], j))
        unvisited.discard(current)
        order.append(current)
    return cycle_length(rows, order)

