import itertools
import math

import pytest

from anorank.binvec import GroundTruth
from anorank.errors import ContractError
from anorank.evalkit import dcg, idcg, ndcg


def brute_ndcg(ranking, anomaly_ids, k):
    """Independent oracle: literal transcription of the DCG/IDCG formulas."""
    rel = [1 if i in anomaly_ids else 0 for i in ranking]
    got = sum((2 ** rel[i - 1] - 1) / math.log2(i + 1) for i in range(1, min(k, len(rel)) + 1))
    in_scope = sum(rel)
    ideal = sum((2**1 - 1) / math.log2(i + 1) for i in range(1, min(in_scope, k) + 1))
    return got / ideal if ideal else 0.0


class TestDcg:
    def test_single_hit_at_rank_one(self):
        assert dcg([1, 0, 0], 3) == pytest.approx(1.0, abs=1e-12)

    def test_no_relevant_items(self):
        assert dcg([0, 0, 0], 3) == 0.0

    def test_two_hits(self):
        assert dcg([1, 1], 2) == pytest.approx(1 + 1 / math.log2(3), abs=1e-12)

    def test_cutoff_truncates(self):
        assert dcg([1, 1, 1], 1) == pytest.approx(1.0, abs=1e-12)

    def test_upward_swap_never_decreases(self):
        # moving an anomaly toward rank 1 is monotone
        rel = [0, 1, 0, 1, 0, 0, 1]
        for i in range(1, len(rel)):
            if rel[i] == 1 and rel[i - 1] == 0:
                swapped = rel.copy()
                swapped[i - 1], swapped[i] = 1, 0
                assert dcg(swapped, len(rel)) >= dcg(rel, len(rel))


class TestIdcg:
    def test_single_anomaly(self):
        assert idcg(1, 5) == pytest.approx(1.0, abs=1e-12)

    def test_zero_anomalies(self):
        assert idcg(0, 5) == 0.0

    def test_two_anomalies(self):
        assert idcg(2, 2) == pytest.approx(1 + 1 / math.log2(3), abs=1e-12)

    def test_cutoff_caps_terms(self):
        assert idcg(10, 2) == pytest.approx(idcg(2, 2), abs=1e-15)


class TestNdcg:
    def test_perfect_ranking_is_one(self):
        truth = GroundTruth(frozenset({4, 7}), 10)
        ranking = [4, 7] + [i for i in range(10) if i not in (4, 7)]
        assert ndcg(ranking, truth) == pytest.approx(1.0, abs=1e-15)

    def test_anomaly_at_rank_two(self):
        truth = GroundTruth(frozenset({5}), 10)
        assert ndcg([0, 5, 1], truth, k=3) == pytest.approx(1 / math.log2(3), abs=1e-12)

    def test_empty_ground_truth_is_zero(self):
        assert ndcg([0, 1, 2], GroundTruth(frozenset(), 3)) == 0.0

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ContractError):
            ndcg([0, 0, 1], GroundTruth(frozenset({1}), 3))

    def test_range(self):
        truth = GroundTruth(frozenset({0, 1, 2}), 8)
        for perm in itertools.permutations(range(5)):
            value = ndcg(list(perm) + [5, 6, 7], truth)
            assert 0.0 <= value <= 1.0 + 1e-15

    def test_matches_brute_force_small_exhaustive(self):
        # full exhaustive sweep lives in the acceptance suite; spot-check here
        for n in range(1, 6):
            for n_anoms in range(0, min(3, n) + 1):
                truth = GroundTruth(frozenset(range(n_anoms)), max(n, 1))
                k = max(1, n_anoms)
                for perm in itertools.permutations(range(n)):
                    want = brute_ndcg(perm, truth.anomaly_ids, k)
                    assert ndcg(perm, truth) == pytest.approx(want, abs=1e-12)
