"""Similarity-guided active-learning loop over an abstract labeling oracle.

Each iteration: score the unlabeled pool by reconstruction error, rank it
(minmax-normalized error plus a similarity bonus for anomaly-like points),
query the top k to the oracle, fold the answers into the labeled sets,
apply the configured strategy updates, and retrain the autoencoder on the
rows believed normal.

Strategies:
    s1      pseudo-label unlabeled points similar to confirmed normals
            (max similarity to any labeled normal >= rho) and add them to
            the training set; they stay queryable and never consume budget.
    s2      mark unlabeled points similar to confirmed anomalies
            (>= xi) as priority; their rank score gets an additive bonus
            lambda_priority * max-similarity-to-labeled-anomaly.
    hybrid  both.

The per-iteration nDCG in the history scores the analyst's view of the
ranking: confirmed anomalies first (discovery order), then the fresh
ranking of the pool. Everything is deterministic for a fixed config seed.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from anorank import autoencoder as ae
from anorank import evalkit
from anorank.binvec import BinaryMatrix, GroundTruth
from anorank.errors import ConfigError, ContractError
from anorank.simsearch import SimilarityMetric, max_similarity, neighbors_above

logger = logging.getLogger(__name__)

NORMAL = "normal"
ANOMALY = "anomaly"


class Strategy(enum.Enum):
    S1 = "s1"
    S2 = "s2"
    HYBRID = "hybrid"


def parse_strategy(name: str) -> Strategy:
    try:
        return Strategy(name.strip().lower())
    except ValueError:
        raise ConfigError(
            f"unknown strategy {name!r}, expected one of {[s.value for s in Strategy]}"
        ) from None


@dataclass(frozen=True)
class LoopTrainConfig:
    learning_rate: float = 1e-2
    epochs_initial: int = 50
    epochs_retrain: int = 20
    batch_size: int = 32
    weight_init_scale: float = 1.0

    def initial(self, seed: int) -> ae.TrainConfig:
        return ae.TrainConfig(
            self.learning_rate, self.epochs_initial, self.batch_size, seed, self.weight_init_scale
        )

    def retrain(self, seed: int) -> ae.TrainConfig:
        return ae.TrainConfig(
            self.learning_rate, self.epochs_retrain, self.batch_size, seed, self.weight_init_scale
        )


@dataclass(frozen=True)
class LoopConfig:
    T: int = 20
    k_query: int = 10
    strategy: Strategy = Strategy.HYBRID
    metric: SimilarityMetric = SimilarityMetric("nm1")
    rho: float = 0.9
    xi: float = 0.9
    lambda_priority: float = 1.0
    n0: int = 10
    early_stop_overlap: float | None = None
    train: LoopTrainConfig = field(default_factory=LoopTrainConfig)
    seed: int = 0
    latent_dim: int | None = None

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        if self.k_query < 1:
            raise ConfigError(f"k_query must be >= 1, got {self.k_query}")
        if not 0.0 <= self.rho <= 1.0 or not 0.0 <= self.xi <= 1.0:
            raise ConfigError(f"rho and xi must be in [0, 1], got rho={self.rho}, xi={self.xi}")
        if self.lambda_priority < 0:
            raise ConfigError(f"lambda_priority must be >= 0, got {self.lambda_priority}")
        if self.n0 < 1:
            raise ConfigError(f"n0 must be >= 1, got {self.n0}")


_CONFIG_KEYS = (
    "T", "k_query", "strategy", "metric", "rho", "xi", "lambda_priority",
    "n0", "sigma", "seed", "early_stop_overlap", "latent_dim", "train",
)
_TRAIN_KEYS = ("learning_rate", "epochs_initial", "epochs_retrain", "batch_size",
               "weight_init_scale")


def config_to_dict(cfg: LoopConfig) -> dict:
    """JSON form of a config; inverse of config_from_dict."""
    return {
        "T": cfg.T,
        "k_query": cfg.k_query,
        "strategy": cfg.strategy.value,
        "metric": cfg.metric.kind,
        "rho": cfg.rho,
        "xi": cfg.xi,
        "lambda_priority": cfg.lambda_priority,
        "n0": cfg.n0,
        "sigma": cfg.metric.sigma,
        "seed": cfg.seed,
        "early_stop_overlap": cfg.early_stop_overlap,
        "latent_dim": cfg.latent_dim,
        "train": {
            "learning_rate": cfg.train.learning_rate,
            "epochs_initial": cfg.train.epochs_initial,
            "epochs_retrain": cfg.train.epochs_retrain,
            "batch_size": cfg.train.batch_size,
            "weight_init_scale": cfg.train.weight_init_scale,
        },
    }


def config_from_dict(raw: dict) -> LoopConfig:
    """Build a config from parsed JSON, rejecting unknown keys by name."""
    unknown = sorted(set(raw) - set(_CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    train_raw = dict(raw.get("train") or {})
    unknown = sorted(set(train_raw) - set(_TRAIN_KEYS))
    if unknown:
        raise ConfigError(f"unknown train config keys: {unknown}")
    defaults = LoopConfig()
    train = LoopTrainConfig(
        learning_rate=float(train_raw.get("learning_rate", defaults.train.learning_rate)),
        epochs_initial=int(train_raw.get("epochs_initial", defaults.train.epochs_initial)),
        epochs_retrain=int(train_raw.get("epochs_retrain", defaults.train.epochs_retrain)),
        batch_size=int(train_raw.get("batch_size", defaults.train.batch_size)),
        weight_init_scale=float(
            train_raw.get("weight_init_scale", defaults.train.weight_init_scale)
        ),
    )
    early = raw.get("early_stop_overlap")
    latent = raw.get("latent_dim")
    return LoopConfig(
        T=int(raw.get("T", defaults.T)),
        k_query=int(raw.get("k_query", defaults.k_query)),
        strategy=parse_strategy(str(raw.get("strategy", defaults.strategy.value))),
        metric=SimilarityMetric(
            str(raw.get("metric", defaults.metric.kind)).strip().lower(),
            float(raw.get("sigma", defaults.metric.sigma)),
        ),
        rho=float(raw.get("rho", defaults.rho)),
        xi=float(raw.get("xi", defaults.xi)),
        lambda_priority=float(raw.get("lambda_priority", defaults.lambda_priority)),
        n0=int(raw.get("n0", defaults.n0)),
        early_stop_overlap=None if early is None else float(early),
        train=train,
        seed=int(raw.get("seed", defaults.seed)),
        latent_dim=None if latent is None else int(latent),
    )


# ---------------------------------------------------------------------------
# oracles


class Oracle:
    """Label source; answers must be stable across repeated asks."""

    def label(self, ids: Iterable[int]) -> dict[int, str]:
        raise NotImplementedError


class GroundTruthOracle(Oracle):
    def __init__(self, truth: GroundTruth):
        self.truth = truth

    def label(self, ids: Iterable[int]) -> dict[int, str]:
        out = {}
        for i in ids:
            i = int(i)
            if not 0 <= i < self.truth.total:
                raise ContractError(f"queried id {i} outside [0, {self.truth.total})")
            out[i] = ANOMALY if i in self.truth.anomaly_ids else NORMAL
        return out


def ground_truth_oracle(truth: GroundTruth) -> GroundTruthOracle:
    return GroundTruthOracle(truth)


# ---------------------------------------------------------------------------
# state


@dataclass(frozen=True)
class RankedList:
    """Unlabeled ids, best anomaly candidate first; ties broken by ascending id."""

    ids: np.ndarray
    scores: np.ndarray


@dataclass
class IterationRecord:
    iteration: int
    queried: list[int]
    answers: dict[int, str]
    top20: list[tuple[int, float]]
    ndcg: float | None
    # audit snapshots (sorted id arrays; *_after = state once the iteration finished)
    ranked_ids: np.ndarray
    labeled_normal_after: np.ndarray
    labeled_anomaly_after: np.ndarray
    pseudo_after: np.ndarray
    priority_after: np.ndarray
    unlabeled_after: np.ndarray


@dataclass
class LoopState:
    labeled_normal: list[int]  # discovery order
    labeled_anomaly: list[int]
    pseudo_normal: set[int]
    priority: set[int]
    unlabeled: set[int]
    iteration: int = 0
    history: list[IterationRecord] = field(default_factory=list)
    initial_ids: list[int] = field(default_factory=list)

    def labeled(self) -> set[int]:
        return set(self.labeled_normal) | set(self.labeled_anomaly)

    def total_queries(self) -> int:
        return len(self.labeled_normal) + len(self.labeled_anomaly)


def _snapshot(ids: Iterable[int]) -> np.ndarray:
    return np.array(sorted(ids), dtype=np.int64)


# ---------------------------------------------------------------------------
# loop operations


def initial_sample_ids(n_rows: int, cfg: LoopConfig) -> list[int]:
    """Seeded uniform draw of the n0 ids labeled before the loop starts."""
    rng = np.random.default_rng([cfg.seed, 17])
    return [int(i) for i in rng.choice(n_rows, size=cfg.n0, replace=False)]


def _training_rows(state: LoopState, matrix: BinaryMatrix) -> np.ndarray:
    ids = sorted(set(state.labeled_normal) | state.pseudo_normal)
    if not ids:
        logger.warning("no normal or pseudo-normal rows yet; training on all rows")
        ids = list(range(matrix.n_rows))
    return matrix.to_dense()[np.array(ids)].astype(np.float64)


def init_loop(
    matrix: BinaryMatrix, oracle: Oracle, cfg: LoopConfig
) -> tuple[LoopState, ae.ModelParams]:
    """Draw and label the initial sample, then train the first model on it."""
    n = matrix.n_rows
    if cfg.n0 + cfg.T * cfg.k_query > n:
        raise ConfigError(
            f"query budget n0 + T*k_query = {cfg.n0 + cfg.T * cfg.k_query} "
            f"exceeds {n} rows"
        )
    initial = initial_sample_ids(n, cfg)
    answers = oracle.label(initial)
    state = LoopState(
        labeled_normal=[i for i in initial if answers[i] == NORMAL],
        labeled_anomaly=[i for i in initial if answers[i] == ANOMALY],
        pseudo_normal=set(),
        priority=set(),
        unlabeled=set(range(n)) - set(initial),
        initial_ids=list(initial),
    )
    k = cfg.latent_dim if cfg.latent_dim is not None else ae.default_latent_dim(matrix.n_cols)
    params = ae.init(ae.ModelDims(matrix.n_cols, k), cfg.seed, cfg.train.weight_init_scale)
    params = ae.train(params, _training_rows(state, matrix), cfg.train.initial(cfg.seed))
    return state, params


def rank_candidates(
    errors: dict[int, float], state: LoopState, cfg: LoopConfig, matrix: BinaryMatrix
) -> RankedList:
    """Order the unlabeled pool by adjusted score, descending, ids breaking ties.

    Adjusted score = minmax-normalized error + lambda_priority * p(x), where
    p(x) is the max similarity to any labeled anomaly for priority points and
    0 otherwise.
    """
    if set(errors) != state.unlabeled:
        raise ContractError("errors must cover exactly the unlabeled ids")
    ids = _snapshot(state.unlabeled)
    err = np.array([errors[int(i)] for i in ids])
    span = err.max() - err.min() if ids.size else 0.0
    base = (err - err.min()) / span if span > 0 else np.zeros_like(err)
    score = base
    if state.priority and cfg.lambda_priority > 0 and state.labeled_anomaly:
        pr_ids, best = max_similarity(matrix, state.labeled_anomaly, state.priority, cfg.metric)
        bonus = np.zeros_like(score)
        bonus[np.searchsorted(ids, pr_ids)] = cfg.lambda_priority * best
        score = base + bonus
    order = np.lexsort((ids, -score))
    return RankedList(ids[order], score[order])


def select_queries(ranked: RankedList, state: LoopState, k_query: int) -> list[int]:
    """First min(k_query, pool size) ids of the ranking."""
    return [int(i) for i in ranked.ids[: min(k_query, ranked.ids.size)]]


def apply_strategy1(state: LoopState, matrix: BinaryMatrix, cfg: LoopConfig) -> LoopState:
    """Pseudo-label unlabeled points within rho of any labeled normal (accumulates)."""
    state.pseudo_normal |= neighbors_above(
        matrix, state.labeled_normal, state.unlabeled, cfg.metric, cfg.rho
    )
    return state


def apply_strategy2(state: LoopState, matrix: BinaryMatrix, cfg: LoopConfig) -> LoopState:
    """Recompute the priority set: unlabeled points within xi of any labeled anomaly."""
    state.priority = neighbors_above(
        matrix, state.labeled_anomaly, state.unlabeled, cfg.metric, cfg.xi
    )
    return state


def evaluation_ranking(state: LoopState, ranked: RankedList) -> list[int]:
    """The analyst's list: confirmed anomalies, then the pool ranking, then normals."""
    return list(state.labeled_anomaly) + [int(i) for i in ranked.ids] + list(state.labeled_normal)


def prepare_queries(
    state: LoopState, model: ae.ModelParams, matrix: BinaryMatrix, cfg: LoopConfig
) -> tuple[RankedList, list[int]]:
    """Scoring + ranking + selection; no state mutation."""
    errors = ae.score_all(model, matrix, state.unlabeled)
    ranked = rank_candidates(errors, state, cfg, matrix)
    return ranked, select_queries(ranked, state, cfg.k_query)


def complete_iteration(
    state: LoopState,
    model: ae.ModelParams,
    matrix: BinaryMatrix,
    cfg: LoopConfig,
    ranked: RankedList,
    pending: list[int],
    answers: dict[int, str],
    truth: GroundTruth | None = None,
) -> ae.ModelParams:
    """Fold oracle answers in, run strategy updates, retrain, record history."""
    missing = [i for i in pending if i not in answers]
    extra = sorted(set(answers) - set(pending))
    if missing or extra:
        raise ContractError(f"labels must cover pending ids; missing={missing}, extra={extra}")

    it = state.iteration + 1
    score = None
    if truth is not None:
        score = evalkit.ndcg(evaluation_ranking(state, ranked), truth)

    for i in pending:
        state.unlabeled.discard(i)
        state.priority.discard(i)
        if i in state.pseudo_normal:
            state.pseudo_normal.discard(i)
            if answers[i] == ANOMALY:
                logger.warning("pseudo-normal id %d was labeled anomalous at iteration %d", i, it)
        (state.labeled_normal if answers[i] == NORMAL else state.labeled_anomaly).append(i)

    if cfg.strategy in (Strategy.S1, Strategy.HYBRID):
        apply_strategy1(state, matrix, cfg)
    if cfg.strategy in (Strategy.S2, Strategy.HYBRID):
        apply_strategy2(state, matrix, cfg)

    model = ae.train(model, _training_rows(state, matrix), cfg.train.retrain(cfg.seed + it))

    state.iteration = it
    state.history.append(
        IterationRecord(
            iteration=it,
            queried=list(pending),
            answers={int(i): answers[i] for i in pending},
            top20=[(int(i), float(s)) for i, s in zip(ranked.ids[:20], ranked.scores[:20])],
            ndcg=score,
            ranked_ids=ranked.ids.copy(),
            labeled_normal_after=_snapshot(state.labeled_normal),
            labeled_anomaly_after=_snapshot(state.labeled_anomaly),
            pseudo_after=_snapshot(state.pseudo_normal),
            priority_after=_snapshot(state.priority),
            unlabeled_after=_snapshot(state.unlabeled),
        )
    )
    return model


def run_iteration(
    state: LoopState,
    model: ae.ModelParams,
    matrix: BinaryMatrix,
    oracle: Oracle,
    cfg: LoopConfig,
    truth: GroundTruth | None = None,
) -> tuple[LoopState, ae.ModelParams]:
    """One full loop round. If the oracle raises, the state is left untouched."""
    if state.iteration >= cfg.T:
        raise ContractError(f"loop already ran its {cfg.T} iterations")
    ranked, pending = prepare_queries(state, model, matrix, cfg)
    answers = oracle.label(pending)  # may raise; nothing mutated yet
    model = complete_iteration(state, model, matrix, cfg, ranked, pending, answers, truth)
    return state, model


@dataclass
class LoopResult:
    final_ranking: RankedList
    history: list[IterationRecord]
    total_queries: int
    final_ndcg: float | None
    state: LoopState
    model: ae.ModelParams
    config: LoopConfig


def _top_overlap(prev: np.ndarray, cur: np.ndarray, k: int) -> float:
    a, b = set(prev[:k].tolist()), set(cur[:k].tolist())
    union = a | b
    return len(a & b) / len(union) if union else 1.0


def run_loop(
    matrix: BinaryMatrix,
    oracle: Oracle,
    cfg: LoopConfig,
    truth: GroundTruth | None = None,
) -> LoopResult:
    """Run up to T iterations (fewer on pool exhaustion or ranking convergence)."""
    state, model = init_loop(matrix, oracle, cfg)
    for _ in range(cfg.T):
        if not state.unlabeled:
            break
        state, model = run_iteration(state, model, matrix, oracle, cfg, truth)
        if cfg.early_stop_overlap is not None and len(state.history) >= 2:
            overlap = _top_overlap(
                state.history[-2].ranked_ids, state.history[-1].ranked_ids, cfg.k_query
            )
            if overlap >= cfg.early_stop_overlap:
                logger.info("early stop: top-%d overlap %.3f", cfg.k_query, overlap)
                break

    if state.unlabeled:
        errors = ae.score_all(model, matrix, state.unlabeled)
        final = rank_candidates(errors, state, cfg, matrix)
    else:
        final = RankedList(np.empty(0, dtype=np.int64), np.empty(0))
    final_ndcg = None
    if truth is not None:
        final_ndcg = evalkit.ndcg(evaluation_ranking(state, final), truth)
    return LoopResult(
        final_ranking=final,
        history=state.history,
        total_queries=state.total_queries(),
        final_ndcg=final_ndcg,
        state=state,
        model=model,
        config=cfg,
    )


def run_cell(matrix: BinaryMatrix, truth: GroundTruth, cfg: LoopConfig) -> list[float]:
    """Grid helper: loop against the truth oracle, returning per-iteration nDCG."""
    result = run_loop(matrix, GroundTruthOracle(truth), cfg, truth)
    return [r.ndcg for r in result.history]


def export_history(result: LoopResult) -> list[dict]:
    """One JSON-able record per iteration: queried ids, labels, top-20, metrics."""
    out = []
    for rec in result.history:
        out.append(
            {
                "iteration": rec.iteration,
                "queried": rec.queried,
                "labels": {str(i): rec.answers[i] for i in rec.queried},
                "top20": [[i, s] for i, s in rec.top20],
                "ndcg": rec.ndcg,
            }
        )
    return out


# ---------------------------------------------------------------------------
# auditing


def audit(result: LoopResult, n_rows: int) -> dict:
    """Replay the history and verify every loop invariant; raises ContractError.

    Checks: partition of ids, pseudo/priority containment, monotone labeled
    growth, no repeated queries, query budget, per-strategy purity and that
    each ranking was a permutation of the then-unlabeled pool.
    """
    cfg = result.config
    state = result.state
    all_ids = frozenset(range(n_rows))
    seen_queries: set[int] = set(state.initial_ids)
    if len(seen_queries) != len(state.initial_ids):
        raise ContractError("initial sample contains duplicates")
    prev_normal: set[int] = set()
    prev_anomaly: set[int] = set()

    for rec in result.history:
        normal = set(rec.labeled_normal_after.tolist())
        anomaly = set(rec.labeled_anomaly_after.tolist())
        unlabeled = set(rec.unlabeled_after.tolist())
        pseudo = set(rec.pseudo_after.tolist())
        priority = set(rec.priority_after.tolist())
        it = rec.iteration

        if normal & anomaly or normal & unlabeled or anomaly & unlabeled:
            raise ContractError(f"iteration {it}: labeled/unlabeled sets overlap")
        if normal | anomaly | unlabeled != all_ids:
            raise ContractError(f"iteration {it}: partition does not cover all ids")
        if not pseudo <= unlabeled:
            raise ContractError(f"iteration {it}: pseudo-normal not within unlabeled")
        if not priority <= unlabeled:
            raise ContractError(f"iteration {it}: priority not within unlabeled")
        if not (prev_normal <= normal and prev_anomaly <= anomaly):
            raise ContractError(f"iteration {it}: labeled sets shrank")
        if cfg.strategy is Strategy.S1 and priority:
            raise ContractError(f"iteration {it}: S1 run produced a priority set")
        if cfg.strategy is Strategy.S2 and pseudo:
            raise ContractError(f"iteration {it}: S2 run produced pseudo-normals")

        queried = set(rec.queried)
        if len(queried) != len(rec.queried):
            raise ContractError(f"iteration {it}: duplicate ids in one query batch")
        if queried & seen_queries:
            raise ContractError(f"iteration {it}: re-queried ids {sorted(queried & seen_queries)}")
        if len(rec.queried) > cfg.k_query:
            raise ContractError(f"iteration {it}: queried more than k_query ids")
        ranked = rec.ranked_ids.tolist()
        if sorted(ranked) != sorted(unlabeled | queried):
            raise ContractError(f"iteration {it}: ranking is not a permutation of the pool")
        if rec.queried != ranked[: len(rec.queried)]:
            raise ContractError(f"iteration {it}: queried ids are not the top of the ranking")
        seen_queries |= queried
        prev_normal, prev_anomaly = normal, anomaly

    budget = cfg.n0 + cfg.T * cfg.k_query
    if len(seen_queries) > budget:
        raise ContractError(f"total queries {len(seen_queries)} exceed budget {budget}")
    if result.total_queries != len(seen_queries):
        raise ContractError("total_queries does not match distinct queried ids")
    return {
        "iterations": len(result.history),
        "total_queries": len(seen_queries),
        "budget": budget,
    }
