"""Tests for src/tsplib.py -- TSPLIB parsing, distances and the optimum registry."""

import itertools

import numpy as np
import pytest

from src.tsplib import (
    CoordinateCountError,
    MissingKeyError,
    TourValidityError,
    TsplibParseError,
    TspInstance,
    UnsupportedMetricError,
    distance,
    load_instance,
    load_registry,
    nearest_neighbor_length,
    parse,
    serialize,
    tour_length,
)
from tests.conftest import GRID50_PATH, REGISTRY_PATH, random_instance


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _make_instance(coords, metric="EUC_2D") -> TspInstance:
    coords = np.asarray(coords, dtype=float)
    return TspInstance(name="t", dimension=len(coords), metric=metric, coords=coords)


# ---------------------------------------------------------------------------
# parse
# ---------------------------------------------------------------------------


class TestParse:
    def test_minimal_document(self, triangle_text):
        instance = parse(triangle_text)
        assert instance.name == "tri3"
        assert instance.dimension == 3
        assert instance.metric == "EUC_2D"

    def test_eof_optional(self, triangle_text):
        instance = parse(triangle_text.replace("EOF\n", ""))
        assert instance.dimension == 3

    def test_unknown_keys_ignored(self, triangle_text):
        text = triangle_text.replace("TYPE : TSP", "TYPE : TSP\nCUSTOM_KEY : whatever")
        assert parse(text).dimension == 3

    def test_explicit_metric_unsupported(self, triangle_text):
        text = triangle_text.replace("EUC_2D", "EXPLICIT")
        with pytest.raises(UnsupportedMetricError) as exc:
            parse(text)
        assert exc.value.line == 5

    def test_missing_dimension(self, triangle_text):
        text = triangle_text.replace("DIMENSION : 3\n", "")
        with pytest.raises(MissingKeyError):
            parse(text)

    def test_coordinate_count_mismatch(self, triangle_text):
        text = triangle_text.replace("DIMENSION : 3", "DIMENSION : 4")
        with pytest.raises(CoordinateCountError) as exc:
            parse(text)
        assert exc.value.line == 4

    def test_malformed_row_names_line(self, triangle_text):
        text = triangle_text.replace("2 3 0", "2 3")
        with pytest.raises(TsplibParseError) as exc:
            parse(text)
        assert exc.value.line == 8

    def test_missing_coord_section(self):
        with pytest.raises(MissingKeyError):
            parse("NAME : x\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nEOF\n")

    def test_serialize_round_trip(self, triangle_text):
        instance = parse(triangle_text)
        again = parse(serialize(instance))
        assert again.name == instance.name
        assert again.metric == instance.metric
        np.testing.assert_array_equal(again.coords, instance.coords)


# ---------------------------------------------------------------------------
# distance / tour_length
# ---------------------------------------------------------------------------


class TestDistance:
    def test_euc_2d_triangle(self):
        instance = _make_instance([[0, 0], [3, 4]])
        assert distance(instance, 1, 2) == 5

    def test_euc_2d_rounds_to_nearest(self):
        instance = _make_instance([[0, 0], [1, 1]])
        assert distance(instance, 1, 2) == 1

    def test_att(self):
        instance = _make_instance([[0, 0], [3, 4]], metric="ATT")
        assert distance(instance, 1, 2) == 2

    def test_att_exact_root_not_bumped(self):
        # 1000 / 10 = 100, r = 10 exactly
        instance = _make_instance([[0, 0], [10, 30]], metric="ATT")
        assert distance(instance, 1, 2) == 10

    def test_att_rounds_up_when_nint_below_root(self):
        # r = sqrt(127.7) ~ 11.30, nint 11 < r
        instance = _make_instance([[0, 0], [11, 34]], metric="ATT")
        assert distance(instance, 1, 2) == 12

    def test_ceil_2d(self):
        instance = _make_instance([[0, 0], [1, 1]], metric="CEIL_2D")
        assert distance(instance, 1, 2) == 2

    def test_identity_and_symmetry(self):
        instance = random_instance(12, seed=1)
        m = instance.matrix
        assert np.all(np.diag(m) == 0)
        np.testing.assert_array_equal(m, m.T)
        assert np.all(m >= 0)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            distance(_make_instance([[0, 0], [1, 0]]), 0, 1)


class TestTourLength:
    def test_unit_square_perimeter(self):
        instance = _make_instance([[0, 0], [1, 0], [1, 1], [0, 1]])
        assert tour_length(instance, [1, 2, 3, 4]) == 4

    def test_reversed_tour_same_length(self):
        instance = random_instance(9, seed=4)
        tour = [3, 1, 7, 2, 9, 4, 6, 5, 8]
        assert tour_length(instance, tour) == tour_length(instance, tour[::-1])

    def test_matches_independent_sum(self):
        instance = random_instance(8, seed=2)
        tour = [5, 2, 8, 1, 3, 7, 4, 6]
        closed = tour + tour[:1]
        expected = sum(
            int(np.floor(np.hypot(*(instance.coords[a - 1] - instance.coords[b - 1])) + 0.5))
            for a, b in zip(closed, closed[1:])
        )
        assert tour_length(instance, tour) == expected

    def test_non_permutation_rejected(self):
        instance = _make_instance([[0, 0], [1, 0], [1, 1]])
        with pytest.raises(TourValidityError):
            tour_length(instance, [1, 1, 2])


# ---------------------------------------------------------------------------
# Files and registry
# ---------------------------------------------------------------------------


class TestRegistry:
    def test_shipped_registry(self):
        registry = load_registry(REGISTRY_PATH)
        assert registry["grid50"] == 5000
        assert registry["att532"] == 27686

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "opt.txt"
        path.write_text("# comment\nfoo 12\nbar twelve\n")
        with pytest.raises(TsplibParseError) as exc:
            load_registry(path)
        assert exc.value.line == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_registry(tmp_path / "nope.txt")

    def test_load_instance_attaches_optimum(self):
        instance = load_instance(GRID50_PATH, load_registry(REGISTRY_PATH))
        assert instance.dimension == 50
        assert instance.known_optimum == 5000

    def test_load_instance_without_registry(self):
        assert load_instance(GRID50_PATH).known_optimum is None


class TestGridFixture:
    def test_serpentine_tour_reaches_optimum(self):
        instance = load_instance(GRID50_PATH)
        # up column 0, then snake through columns 1..9 over rows 1..4, back along row 0
        order = [1 + 10 * row for row in range(5)]
        for col in range(1, 10):
            rows = range(4, 0, -1) if col % 2 else range(1, 5)
            order += [1 + col + 10 * row for row in rows]
        order += [1 + col for col in range(9, 0, -1)]
        assert sorted(order) == list(range(1, 51))
        assert tour_length(instance, order) == 5000

    def test_nearest_neighbour_not_below_optimum(self):
        assert nearest_neighbor_length(load_instance(GRID50_PATH)) >= 5000

    def test_small_instance_brute_force_optimum(self):
        instance = random_instance(7, seed=5)
        best = min(
            tour_length(instance, [1, *perm]) for perm in itertools.permutations(range(2, 8))
        )
        assert nearest_neighbor_length(instance) >= best
