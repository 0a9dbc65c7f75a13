import math

import numpy as np
import pytest

from anorank import kernels
from anorank.binvec import BinaryMatrix
from anorank.errors import ConfigError, ContractError, DimensionError
from anorank.simsearch import (
    METRIC_KINDS,
    SimilarityMetric,
    max_similarity_to,
    neighbors_above,
    pair_counts,
    parse_metric,
    similarity,
)

R1 = [1, 0, 1, 1, 0]
R2 = [0, 1, 1, 1, 0]
R3 = [1, 1, 1, 0, 0]
ZERO = [0, 0, 0, 0, 0]


def brute_similarity(kind: str, x, y, sigma: float = 1.0) -> float:
    """Independent oracle: direct position-by-position formula transcription."""
    m = len(x)
    both = sum(1 for i in range(m) if x[i] == 1 and y[i] == 1)
    ox, oy = sum(x), sum(y)
    mism = sum(1 for i in range(m) if x[i] != y[i])
    if kind == "hamming":
        return 1 - mism / m
    if kind == "jaccard":
        union = sum(1 for i in range(m) if x[i] == 1 or y[i] == 1)
        return both / union if union else 1.0
    if kind == "cosine":
        if ox == 0 or oy == 0:
            return 1.0 if list(x) == list(y) else 0.0
        return both / (math.sqrt(ox) * math.sqrt(oy))
    if kind == "dice":
        return 2 * both / (ox + oy) if ox + oy else 1.0
    if kind == "euclidean":
        sq_dist = sum((x[i] - y[i]) ** 2 for i in range(m))
        return math.exp(-sq_dist / sigma**2)
    if kind == "nm1":
        return both / max(ox, oy) if max(ox, oy) else 1.0
    raise AssertionError(kind)


class TestPairCounts:
    def test_r1_r2(self):
        c = pair_counts(R1, R2)
        assert (c.both_ones, c.ones_x, c.ones_y, c.mismatches, c.length) == (2, 3, 3, 2, 5)

    def test_identity(self):
        c = pair_counts(R1, R1)
        assert c.both_ones == 3 and c.mismatches == 0

    def test_against_zero(self):
        c = pair_counts(R1, ZERO)
        assert c.both_ones == 0 and c.mismatches == 3

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            pair_counts([1, 0], [1, 0, 1])


class TestWorkedExamples:
    """Hand-derived values on the 3x5 example matrix."""

    CASES = [
        ("jaccard", R1, R2, 0.5),
        ("nm1", R1, R2, 2 / 3),
        ("dice", R2, R3, 2 / 3),
        ("hamming", R1, R3, 0.6),
        ("cosine", R1, R3, 2 / 3),
        ("euclidean", R1, R2, math.exp(-2)),
    ]

    @pytest.mark.parametrize("kind,x,y,expected", CASES)
    def test_exact_values(self, kind, x, y, expected):
        metric = SimilarityMetric(kind)
        assert similarity(metric, x, y) == pytest.approx(expected, abs=1e-12)
        assert brute_similarity(kind, x, y) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("kind", METRIC_KINDS)
    def test_reflexivity_on_nonzero(self, kind):
        assert similarity(SimilarityMetric(kind), R2, R2) == 1.0


class TestZeroVectorConvention:
    @pytest.mark.parametrize("kind", METRIC_KINDS)
    def test_both_all_zero_scores_one(self, kind):
        assert similarity(SimilarityMetric(kind), ZERO, ZERO) == 1.0

    @pytest.mark.parametrize("kind", ("jaccard", "cosine", "dice", "nm1"))
    def test_one_zero_operand_scores_zero(self, kind):
        assert similarity(SimilarityMetric(kind), R1, ZERO) == 0.0


class TestRandomPairProperties:
    @pytest.mark.parametrize("kind", METRIC_KINDS)
    def test_matches_brute_force_and_is_symmetric(self, kind):
        rng = np.random.default_rng(42)
        metric = SimilarityMetric(kind, sigma=1.7)
        for _ in range(200):
            m = int(rng.integers(1, 40))
            x = rng.integers(0, 2, m).tolist()
            y = rng.integers(0, 2, m).tolist()
            s_xy = similarity(metric, x, y)
            assert s_xy == pytest.approx(brute_similarity(kind, x, y, 1.7), abs=1e-12)
            assert s_xy == pytest.approx(similarity(metric, y, x), abs=1e-12)
            assert 0.0 <= s_xy <= 1.0

    def test_dice_jaccard_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            x = rng.integers(0, 2, 30).tolist()
            y = rng.integers(0, 2, 30).tolist()
            j = similarity(SimilarityMetric("jaccard"), x, y)
            d = similarity(SimilarityMetric("dice"), x, y)
            assert d == pytest.approx(2 * j / (1 + j), abs=1e-12)

    def test_nm1_at_least_jaccard(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            x = rng.integers(0, 2, 30).tolist()
            y = rng.integers(0, 2, 30).tolist()
            nm1 = similarity(SimilarityMetric("nm1"), x, y)
            j = similarity(SimilarityMetric("jaccard"), x, y)
            assert nm1 >= j - 1e-15


class TestMetricParsing:
    def test_case_insensitive_names(self):
        assert parse_metric("NM1").kind == "nm1"
        assert parse_metric(" Jaccard ").kind == "jaccard"

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            parse_metric("manhattan")

    def test_sigma_validated_for_euclidean(self):
        with pytest.raises(ConfigError):
            SimilarityMetric("euclidean", sigma=0.0)


class TestNeighborScans:
    def test_neighbors_above_jaccard_half(self, example_matrix):
        metric = SimilarityMetric("jaccard")
        got = neighbors_above(example_matrix, {0}, {1, 2}, metric, 0.5)
        assert got == {1, 2}

    def test_threshold_one_excludes_non_duplicates(self, example_matrix):
        got = neighbors_above(example_matrix, {0}, {1, 2}, SimilarityMetric("jaccard"), 1.0)
        assert got == set()

    def test_empty_seeds(self, example_matrix):
        assert neighbors_above(example_matrix, set(), {1, 2}, SimilarityMetric("nm1"), 0.0) == set()

    def test_result_excludes_seeds(self, example_matrix):
        got = neighbors_above(example_matrix, {0, 1}, {0, 1, 2}, SimilarityMetric("hamming"), 0.0)
        assert got == {2}

    def test_max_similarity_to_cosine(self, example_matrix):
        score = max_similarity_to(example_matrix, {1, 2}, 0, SimilarityMetric("cosine"))
        assert score == pytest.approx(2 / 3, abs=1e-12)

    def test_max_similarity_to_self(self, example_matrix):
        assert max_similarity_to(example_matrix, {0}, 0, SimilarityMetric("jaccard")) == 1.0

    def test_max_similarity_to_zero_seed_nm1(self):
        m = BinaryMatrix.from_dense(np.array([[0, 0, 0, 0, 0], R1]))
        assert max_similarity_to(m, {0}, 1, SimilarityMetric("nm1")) == 0.0

    def test_empty_seeds_is_contract_error(self, example_matrix):
        with pytest.raises(ContractError):
            max_similarity_to(example_matrix, set(), 0, SimilarityMetric("nm1"))


@pytest.mark.skipif(not kernels._NUMBA_OK, reason="numba unavailable")
class TestBackendEquivalence:
    def test_intersection_counts_agree(self):
        rng = np.random.default_rng(5)
        dense = rng.integers(0, 2, size=(60, 200), dtype=np.uint8)
        bits = kernels.pack_rows(dense)
        a, b = bits[:40], bits[40:]
        assert np.array_equal(
            kernels._numba_intersection_counts(a, b),
            kernels._numpy_intersection_counts(a, b),
        )

    def test_popcount_rows_agree(self):
        rng = np.random.default_rng(6)
        bits = kernels.pack_rows(rng.integers(0, 2, size=(30, 500), dtype=np.uint8))
        assert np.array_equal(
            kernels._numba_popcount_rows(bits),
            kernels._numpy_popcount_rows(bits),
        )
