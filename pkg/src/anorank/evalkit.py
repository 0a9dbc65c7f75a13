"""Ranking-quality metrics (DCG/IDCG/nDCG) and the metric x strategy grid.

nDCG rewards rankings that surface the true anomalies early: DCG discounts
each relevant item by log2(rank+1) and IDCG normalizes against the ideal
ranking with every anomaly on top, so 1.0 means a perfectly ranked list.

run_grid sweeps every similarity measure against every query strategy over
seeded loop runs and emits three artifacts: per-iteration trajectories
(CSV), per-cell score distributions (JSON, boxplot input) and a per-dataset
heatmap of mean nDCG (CSV, one column per measure-strategy pair).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from anorank.binvec import BinaryMatrix, GroundTruth
from anorank.errors import ConfigError, ContractError
from anorank.simsearch import METRIC_KINDS

STRATEGY_NAMES = ("s1", "s2", "hybrid")


def _log2(x: float) -> float:
    # natural-log ratio: bit-stable in double precision across platforms
    return math.log(x) / math.log(2.0)


def dcg(relevance: Sequence[int], k: int) -> float:
    """Discounted cumulative gain of binary relevance labels at cutoff k."""
    if k < 1:
        raise ConfigError(f"cutoff k must be >= 1, got {k}")
    total = 0.0
    for i, r in enumerate(relevance[:k], start=1):
        total += (2.0**r - 1.0) / _log2(i + 1)
    return total


def idcg(num_anomalies: int, k: int) -> float:
    """DCG of the ideal ranking: all anomalies first."""
    if num_anomalies < 0:
        raise ConfigError(f"num_anomalies must be >= 0, got {num_anomalies}")
    return sum(1.0 / _log2(i + 1) for i in range(1, min(num_anomalies, k) + 1))


def ndcg(ranking: Iterable[int], truth: GroundTruth, k: int | None = None) -> float:
    """Normalized DCG of an id ranking against ground truth.

    k defaults to the dataset's anomaly count; 0/0 (no anomalies in scope)
    is defined as 0.
    """
    ids = list(ranking)
    if len(set(ids)) != len(ids):
        raise ContractError("ranking contains duplicate ids")
    if k is None:
        k = max(1, len(truth.anomaly_ids))
    relevance = [1 if i in truth.anomaly_ids else 0 for i in ids]
    in_scope = sum(relevance)
    if in_scope == 0:
        return 0.0
    return dcg(relevance, k) / idcg(in_scope, k)


# ---------------------------------------------------------------------------
# experiment grid


@dataclass(frozen=True)
class GridSpec:
    """One loop configuration swept over datasets x metrics x strategies x seeds.

    base_config supplies everything except metric kind, strategy and seed:
    repeat r of any cell runs with seed base_config.seed + r.
    """

    datasets: tuple[tuple[str, BinaryMatrix, GroundTruth], ...]
    base_config: "LoopConfig"  # noqa: F821 - forward ref, resolved lazily
    metrics: tuple[str, ...] = METRIC_KINDS
    strategies: tuple[str, ...] = STRATEGY_NAMES
    repeats: int = 1

    def __post_init__(self):
        if not (self.datasets and self.metrics and self.strategies and self.repeats >= 1):
            raise ConfigError("grid axes must be nonempty and repeats >= 1")


@dataclass
class GridResult:
    # (dataset, metric, strategy, seed, iteration, ndcg) per loop iteration
    trajectories: list[tuple[str, str, str, int, int, float]]
    # "dataset|metric|strategy" -> all per-iteration ndcg values across seeds
    cell_scores: dict[str, list[float]]
    # dataset -> "metric_strategy" -> mean per-iteration ndcg across seeds
    heatmap: dict[str, dict[str, float]]
    columns: list[str]


def cell_key(dataset: str, metric: str, strategy: str) -> str:
    return f"{dataset}|{metric}|{strategy}"


def run_grid(spec: GridSpec, jobs: int = 1) -> GridResult:
    """Run every (dataset, metric, strategy, seed) cell with a truth-backed oracle."""
    tasks = []
    for name, matrix, truth in spec.datasets:
        if truth is None:
            raise ConfigError(f"dataset {name!r} has no ground truth")
        for metric in spec.metrics:
            for strategy in spec.strategies:
                for r in range(spec.repeats):
                    cfg = replace_cell(spec.base_config, metric, strategy, spec.base_config.seed + r)
                    tasks.append((name, matrix, truth, metric, strategy, cfg))

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_task, tasks))
    else:
        outcomes = [_run_task(t) for t in tasks]

    columns = [f"{m}_{s}" for m in spec.metrics for s in spec.strategies]
    trajectories: list[tuple[str, str, str, int, int, float]] = []
    cell_scores: dict[str, list[float]] = {}
    for (name, _, _, metric, strategy, cfg), ndcgs in zip(tasks, outcomes):
        key = cell_key(name, metric, strategy)
        scores = cell_scores.setdefault(key, [])
        for it, value in enumerate(ndcgs, start=1):
            trajectories.append((name, metric, strategy, cfg.seed, it, value))
            scores.append(value)

    heatmap: dict[str, dict[str, float]] = {}
    for name, _, _ in spec.datasets:
        row = {}
        for metric in spec.metrics:
            for strategy in spec.strategies:
                scores = cell_scores[cell_key(name, metric, strategy)]
                row[f"{metric}_{strategy}"] = sum(scores) / len(scores)
        heatmap[name] = row
    return GridResult(trajectories, cell_scores, heatmap, columns)


def replace_cell(base_config, metric: str, strategy: str, seed: int):
    from anorank.active_loop import parse_strategy
    from anorank.simsearch import SimilarityMetric

    return replace(
        base_config,
        metric=SimilarityMetric(metric, base_config.metric.sigma),
        strategy=parse_strategy(strategy),
        seed=seed,
    )


def _run_task(task):
    from anorank.active_loop import run_cell

    name, matrix, truth, metric, strategy, cfg = task
    return run_cell(matrix, truth, cfg)


# ---------------------------------------------------------------------------
# emitters (plain text, deterministic byte-for-byte for fixed inputs)


def write_trajectories_csv(result: GridResult, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("dataset,metric,strategy,seed,iteration,ndcg\n")
        for name, metric, strategy, seed, it, value in result.trajectories:
            fh.write(f"{name},{metric},{strategy},{seed},{it},{value!r}\n")


def write_heatmap_csv(result: GridResult, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("dataset," + ",".join(result.columns) + "\n")
        for name in sorted(result.heatmap):
            row = result.heatmap[name]
            fh.write(name + "," + ",".join(repr(row[c]) for c in result.columns) + "\n")


def write_boxplot_json(result: GridResult, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.cell_scores, fh, sort_keys=True, indent=2)
        fh.write("\n")
