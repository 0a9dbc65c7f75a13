"""Six similarity measures on binary vectors, plus seeded neighbor scans.

All measures reduce to integer bit counts per pair (shared ones, per-vector
ones, mismatches), so scores are computed in double precision from exact
integers. matrix-level scans run on the packed representation via kernels.

Zero-vector convention: whenever a measure's denominator is zero the score
is 1.0 if the two vectors are identical (both all-zero) and 0.0 otherwise,
which preserves reflexivity and symmetry on empty rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from anorank import kernels
from anorank.binvec import BinaryMatrix
from anorank.errors import ConfigError, ContractError, DimensionError

METRIC_KINDS = ("hamming", "jaccard", "cosine", "dice", "euclidean", "nm1")


@dataclass(frozen=True)
class SimilarityMetric:
    """A similarity measure; sigma is the Gaussian width, used only by euclidean."""

    kind: str
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ConfigError(f"unknown metric {self.kind!r}, expected one of {METRIC_KINDS}")
        if self.kind == "euclidean" and not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0 for euclidean, got {self.sigma}")


def parse_metric(name: str, sigma: float = 1.0) -> SimilarityMetric:
    """Build a metric from its case-insensitive CLI/config name."""
    return SimilarityMetric(name.strip().lower(), sigma)


@dataclass(frozen=True)
class PairCounts:
    """Bit counts shared by every measure: |x AND y|, |x|, |y|, |x != y|, m."""

    both_ones: int
    ones_x: int
    ones_y: int
    mismatches: int
    length: int


def pair_counts(x: Iterable[int], y: Iterable[int]) -> PairCounts:
    """Count shared ones, per-vector ones and mismatches of two 0/1 vectors."""
    xa = np.asarray(x, dtype=np.uint8)
    ya = np.asarray(y, dtype=np.uint8)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise DimensionError(f"length mismatch: {xa.shape} vs {ya.shape}")
    both = int(np.count_nonzero(xa & ya))
    ones_x = int(np.count_nonzero(xa))
    ones_y = int(np.count_nonzero(ya))
    return PairCounts(both, ones_x, ones_y, ones_x + ones_y - 2 * both, xa.size)


def similarity_from_counts(metric: SimilarityMetric, c: PairCounts) -> float:
    """Score in [0, 1] from pre-computed pair counts."""
    if metric.kind == "hamming":
        return 1.0 - c.mismatches / c.length
    if metric.kind == "euclidean":
        # On binary vectors the squared Euclidean distance is the mismatch count.
        return math.exp(-c.mismatches / (metric.sigma * metric.sigma))
    if metric.kind == "jaccard":
        union = c.ones_x + c.ones_y - c.both_ones
        return c.both_ones / union if union else 1.0
    if metric.kind == "dice":
        total = c.ones_x + c.ones_y
        return 2.0 * c.both_ones / total if total else 1.0
    if metric.kind == "nm1":
        larger = max(c.ones_x, c.ones_y)
        return c.both_ones / larger if larger else 1.0
    # cosine: zero denominator iff either vector is all-zero
    if c.ones_x == 0 or c.ones_y == 0:
        return 1.0 if c.ones_x == c.ones_y == 0 else 0.0
    return c.both_ones / math.sqrt(c.ones_x * c.ones_y)


def similarity(metric: SimilarityMetric, x: Iterable[int], y: Iterable[int]) -> float:
    """Similarity of two 0/1 vectors of equal length."""
    return similarity_from_counts(metric, pair_counts(x, y))


def _scores_from_count_arrays(
    metric: SimilarityMetric,
    both: np.ndarray,
    ones_a: np.ndarray,
    ones_b: np.ndarray,
    length: int,
) -> np.ndarray:
    """Vectorized similarity_from_counts. both: (na, nb); ones_a: (na,); ones_b: (nb,)."""
    oa = ones_a[:, None].astype(np.int64)
    ob = ones_b[None, :].astype(np.int64)
    if metric.kind == "hamming":
        return 1.0 - (oa + ob - 2 * both) / length
    if metric.kind == "euclidean":
        return np.exp(-(oa + ob - 2 * both) / (metric.sigma * metric.sigma))
    if metric.kind == "jaccard":
        denom = oa + ob - both
    elif metric.kind == "dice":
        denom = oa + ob
        both = 2 * both
    elif metric.kind == "nm1":
        denom = np.maximum(oa, ob)
    else:  # cosine
        denom = np.sqrt((oa * ob).astype(np.float64))
        zero = denom == 0.0
        with np.errstate(invalid="ignore", divide="ignore"):
            out = both / denom
        out[zero] = ((oa == 0) & (ob == 0)).astype(np.float64)[zero]
        return out
    zero = denom == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        out = both / denom
    out[zero] = 1.0  # integer denominators vanish only when both rows are all-zero
    return out


def _as_id_array(ids: Iterable[int]) -> np.ndarray:
    arr = np.fromiter(ids, dtype=np.int64)
    arr.sort()
    return arr


def max_similarity(
    matrix: BinaryMatrix,
    seeds: Iterable[int],
    candidates: Iterable[int],
    metric: SimilarityMetric,
) -> tuple[np.ndarray, np.ndarray]:
    """Max similarity of each candidate row to any seed row.

    Returns (candidate_ids sorted ascending, scores aligned with them).
    """
    seed_arr = _as_id_array(seeds)
    cand_arr = _as_id_array(candidates)
    if seed_arr.size == 0:
        raise ContractError("max_similarity requires at least one seed")
    ones = matrix.row_ones()
    both = kernels.intersection_counts(matrix.bits[cand_arr], matrix.bits[seed_arr])
    scores = _scores_from_count_arrays(
        metric, both, ones[cand_arr], ones[seed_arr], matrix.n_cols
    )
    return cand_arr, scores.max(axis=1)


def max_similarity_to(
    matrix: BinaryMatrix,
    seeds: Iterable[int],
    candidate: int,
    metric: SimilarityMetric,
) -> float:
    """Max similarity of one candidate row to any seed row; seeds must be nonempty."""
    _, scores = max_similarity(matrix, seeds, [candidate], metric)
    return float(scores[0])


def neighbors_above(
    matrix: BinaryMatrix,
    seeds: Iterable[int],
    candidates: Iterable[int],
    metric: SimilarityMetric,
    threshold: float,
) -> set[int]:
    """Candidates (excluding seeds) whose max similarity to any seed >= threshold.

    An empty seed set vacuously returns the empty set.
    """
    seed_set = set(seeds)
    cand = set(candidates) - seed_set
    if not seed_set or not cand:
        return set()
    cand_arr, best = max_similarity(matrix, seed_set, cand, metric)
    return {int(i) for i in cand_arr[best >= threshold]}
