"""HTTP session service that lets a human analyst act as the labeling oracle.

The loop is driven in explicit steps so a request never blocks on a human:

    POST /sessions                start a session; the seed sample is pending
    GET  /sessions/{id}/queries   the pending batch with display context
    POST /sessions/{id}/labels    submit labels; training continues async
    GET  /sessions/{id}/state     snapshot for the console (poll during training)
    GET  /healthz                 liveness

Iteration 0 asks the analyst to label the seed sample (no model exists yet,
so those cards carry no scores); every later batch comes from the ranking.
Phase machine per session: awaiting_labels -> training -> ranking ->
awaiting_labels ... -> finished. Label submission returns promptly with
phase=training and the console polls state.

Reads are snapshot-consistent: query cards and the state payload are built
only at quiescent points (session start, label acceptance, batch prepared,
finish) while the session lock is held, so a polling console never sees a
half-updated loop state. Errors are JSON {code, message, details}. Sessions
are in-memory and single-process.
"""

from __future__ import annotations

import logging
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from anorank import autoencoder as ae
from anorank.active_loop import (
    ANOMALY,
    NORMAL,
    GroundTruthOracle,
    LoopConfig,
    LoopState,
    RankedList,
    _top_overlap,
    _training_rows,
    complete_iteration,
    config_from_dict,
    config_to_dict,
    evaluation_ranking,
    initial_sample_ids,
    prepare_queries,
    rank_candidates,
)
from anorank.binvec import BinaryMatrix, GroundTruth, load_csv, load_labels
from anorank.errors import AnorankError, ConfigError
from anorank.evalkit import ndcg
from anorank.simsearch import max_similarity

logger = logging.getLogger(__name__)

AWAITING = "awaiting_labels"
TRAINING = "training"
RANKING = "ranking"
FINISHED = "finished"

MAX_CARD_FEATURES = 50
STATE_TOP_N = 20


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str, details: Any = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class Session:
    id: str
    matrix: BinaryMatrix
    cfg: LoopConfig
    truth: GroundTruth | None
    phase: str
    state: LoopState | None = None
    model: ae.ModelParams | None = None
    pending: list[int] = field(default_factory=list)
    pending_cards: list[dict] = field(default_factory=list)
    ranked: RankedList | None = None
    final_ranking: RankedList | None = None
    final_ndcg: float | None = None
    snapshot: dict = field(default_factory=dict)
    error: str | None = None
    created_at: str = field(default_factory=_now)
    updated_at: str = field(default_factory=_now)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def touch(self):
        self.updated_at = _now()


class StartSessionRequest(BaseModel):
    config: dict = {}
    autopilot: bool = False
    data_path: str | None = None
    labels_path: str | None = None


class SubmitLabelsRequest(BaseModel):
    labels: dict[int, str]


# ---------------------------------------------------------------------------
# payload builders (call at quiescent points only)


def _label_counts(state: LoopState | None, extra: dict[int, str]) -> dict[str, int]:
    normal = len(state.labeled_normal) if state else 0
    anomaly = len(state.labeled_anomaly) if state else 0
    normal += sum(1 for v in extra.values() if v == NORMAL)
    anomaly += sum(1 for v in extra.values() if v == ANOMALY)
    return {"normal": normal, "anomaly": anomaly}


def _feature_context(
    matrix: BinaryMatrix, model: ae.ModelParams | None, sample_id: int
) -> list[dict]:
    """Active features of a row, ordered by attention weight, capped for the UI."""
    row = matrix.row_dense(sample_id)
    active = np.flatnonzero(row)
    if active.size == 0:
        return []
    if model is not None:
        alpha = ae.attention(model, row.astype(np.float64))
        order = active[np.argsort(-alpha[active], kind="stable")]
        weights = {int(j): float(alpha[j]) for j in active}
    else:
        order = active
        weights = {int(j): None for j in active}
    names = matrix.feature_names
    return [
        {"feature": names[j] if names else f"f{j}", "weight": weights[int(j)]}
        for j in order[:MAX_CARD_FEATURES]
    ]


def _make_cards(session: Session, pending: list[int]) -> list[dict]:
    state, model = session.state, session.model
    errors: dict[int, float] = {}
    sims: dict[int, float] = {}
    if model is not None and pending:
        errors = ae.score_all(model, session.matrix, pending)
        if state is not None and state.labeled_anomaly:
            ids, best = max_similarity(
                session.matrix, state.labeled_anomaly, pending, session.cfg.metric
            )
            sims = {int(i): float(s) for i, s in zip(ids, best)}
    cards = []
    for rank, sample_id in enumerate(pending, start=1):
        cards.append(
            {
                "sample_id": sample_id,
                "rank": rank,
                "reconstruction_error": errors.get(sample_id),
                "max_anomaly_similarity": sims.get(sample_id),
                "active_features": _feature_context(session.matrix, model, sample_id),
            }
        )
    return cards


def _history_records(state: LoopState | None) -> list[dict]:
    if state is None:
        return []
    return [
        {
            "iteration": rec.iteration,
            "queried": rec.queried,
            "labels": {str(i): rec.answers[i] for i in rec.queried},
            "ndcg": rec.ndcg,
        }
        for rec in state.history
    ]


def _build_snapshot(session: Session, extra_labels: dict[int, str] | None = None) -> dict:
    state = session.state
    source = session.final_ranking if session.phase == FINISHED else session.ranked
    top = []
    if source is not None:
        top = [
            {"sample_id": int(i), "score": float(s)}
            for i, s in zip(source.ids[:STATE_TOP_N], source.scores[:STATE_TOP_N])
        ]
    return {
        "session_id": session.id,
        "iteration": state.iteration if state else 0,
        "pending_count": len(session.pending),
        "label_counts": _label_counts(state, extra_labels or {}),
        "total_queries": state.total_queries() if state else 0,
        "top_ranking": top,
        "history": _history_records(state),
        "final_ndcg": session.final_ndcg,
        "ground_truth_attached": session.truth is not None,
        "config": config_to_dict(session.cfg),
        "created_at": session.created_at,
    }


# ---------------------------------------------------------------------------
# app


def create_app(
    matrix: BinaryMatrix | None = None,
    truth: GroundTruth | None = None,
    base_config: dict | None = None,
) -> FastAPI:
    """Build the service around an optional preloaded dataset."""
    app = FastAPI(title="anorank oracle service")
    # the analyst console is served statically from another origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    @app.exception_handler(ServiceError)
    async def service_error_handler(_request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    @app.exception_handler(AnorankError)
    async def anorank_error_handler(_request: Request, exc: AnorankError):
        status = 400 if isinstance(exc, ConfigError) else 500
        return JSONResponse(
            status_code=status,
            content={"code": type(exc).__name__, "message": str(exc), "details": None},
        )

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise ServiceError(404, "not_found", f"unknown session {session_id}")
        return session

    def require_phase(session: Session, phase: str):
        if session.phase != phase:
            raise ServiceError(
                409,
                "wrong_phase",
                f"operation requires phase {phase}, session is {session.phase}",
                {"phase": session.phase},
            )

    def resolve_dataset(req: StartSessionRequest) -> tuple[BinaryMatrix, GroundTruth | None]:
        if req.data_path:
            data = load_csv(req.data_path, has_header=_csv_has_header(req.data_path))
            data_truth = load_labels(req.labels_path, data.n_rows) if req.labels_path else None
            return data, data_truth
        if matrix is None:
            raise ServiceError(400, "no_dataset", "service has no dataset; pass data_path")
        return matrix, truth

    def advance_after_labels(session: Session, answers: dict[int, str]):
        """Worker step: fold labels in, retrain, prepare the next batch or finish.

        Runs with exclusive ownership of the loop state (phase=training/ranking
        keeps every other mutation out); only phase flips and snapshot swaps
        take the session lock.
        """
        try:
            if session.state is None:
                # answers cover the seed sample: build state, train first model
                cfg = session.cfg
                state = LoopState(
                    labeled_normal=[i for i in session.pending if answers[i] == NORMAL],
                    labeled_anomaly=[i for i in session.pending if answers[i] == ANOMALY],
                    pseudo_normal=set(),
                    priority=set(),
                    unlabeled=set(range(session.matrix.n_rows)) - set(session.pending),
                    initial_ids=list(session.pending),
                )
                k = cfg.latent_dim if cfg.latent_dim is not None else ae.default_latent_dim(
                    session.matrix.n_cols
                )
                model = ae.init(
                    ae.ModelDims(session.matrix.n_cols, k), cfg.seed, cfg.train.weight_init_scale
                )
                model = ae.train(
                    model, _training_rows(state, session.matrix), cfg.train.initial(cfg.seed)
                )
                session.state, session.model = state, model
            else:
                session.model = complete_iteration(
                    session.state,
                    session.model,
                    session.matrix,
                    session.cfg,
                    session.ranked,
                    session.pending,
                    answers,
                    session.truth,
                )
            with session.lock:
                session.phase = RANKING
                session.touch()
            _prepare_or_finish(session)
        except Exception as exc:
            logger.exception("session %s failed while advancing", session.id)
            with session.lock:
                session.error = str(exc)
                session.touch()

    def _should_stop(session: Session) -> bool:
        state, cfg = session.state, session.cfg
        if state.iteration >= cfg.T or not state.unlabeled:
            return True
        if cfg.early_stop_overlap is not None and len(state.history) >= 2:
            overlap = _top_overlap(
                state.history[-2].ranked_ids, state.history[-1].ranked_ids, cfg.k_query
            )
            return overlap >= cfg.early_stop_overlap
        return False

    def _prepare_or_finish(session: Session):
        if _should_stop(session):
            final, score = _final_ranking(session)
            with session.lock:
                session.final_ranking = final
                session.final_ndcg = score
                session.pending = []
                session.pending_cards = []
                session.phase = FINISHED
                session.snapshot = _build_snapshot(session)
                session.touch()
            return
        ranked, pending = prepare_queries(
            session.state, session.model, session.matrix, session.cfg
        )
        session.ranked = ranked
        session.pending = pending
        cards = _make_cards(session, pending)
        with session.lock:
            session.pending_cards = cards
            session.phase = AWAITING
            session.snapshot = _build_snapshot(session)
            session.touch()

    def _final_ranking(session: Session) -> tuple[RankedList, float | None]:
        state = session.state
        if state.unlabeled:
            errors = ae.score_all(session.model, session.matrix, state.unlabeled)
            final = rank_candidates(errors, state, session.cfg, session.matrix)
        else:
            final = RankedList(np.empty(0, dtype=np.int64), np.empty(0))
        score = None
        if session.truth is not None:
            score = ndcg(evaluation_ranking(state, final), session.truth)
        return final, score

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def start_session(req: StartSessionRequest):
        data, data_truth = resolve_dataset(req)
        merged = dict(base_config or {})
        merged.update(req.config)
        cfg = config_from_dict(merged)  # ConfigError -> 400 via handler
        if cfg.n0 + cfg.T * cfg.k_query > data.n_rows:
            raise ServiceError(
                400,
                "budget_exceeds_dataset",
                f"n0 + T*k_query = {cfg.n0 + cfg.T * cfg.k_query} exceeds {data.n_rows} rows",
                {"n_rows": data.n_rows},
            )
        session = Session(
            id=uuid.uuid4().hex,
            matrix=data,
            cfg=cfg,
            truth=data_truth,
            phase=AWAITING,
            pending=initial_sample_ids(data.n_rows, cfg),
        )
        session.pending_cards = _make_cards(session, session.pending)
        session.snapshot = _build_snapshot(session)
        if req.autopilot:
            if data_truth is None:
                raise ServiceError(400, "no_ground_truth", "autopilot needs a labels file")
            oracle = GroundTruthOracle(data_truth)
            while session.phase == AWAITING:
                answers = oracle.label(session.pending)
                session.phase = TRAINING
                advance_after_labels(session, answers)
                if session.error:
                    raise ServiceError(500, "autopilot_failed", session.error)
        with registry_lock:
            sessions[session.id] = session
        return {"session_id": session.id, "phase": session.phase, "config": config_to_dict(cfg)}

    @app.get("/sessions/{session_id}/queries")
    def pending_queries(session_id: str):
        session = get_session(session_id)
        with session.lock:
            require_phase(session, AWAITING)
            iteration = session.state.iteration + 1 if session.state else 0
            return {
                "session_id": session_id,
                "iteration": iteration,
                "queries": list(session.pending_cards),
            }

    @app.post("/sessions/{session_id}/labels")
    def submit_labels(session_id: str, req: SubmitLabelsRequest):
        session = get_session(session_id)
        with session.lock:
            require_phase(session, AWAITING)
            answers = {int(k): v.strip().lower() for k, v in req.labels.items()}
            bad = sorted(i for i, v in answers.items() if v not in (NORMAL, ANOMALY))
            if bad:
                raise ServiceError(
                    400, "bad_label", f"labels must be '{NORMAL}' or '{ANOMALY}'", {"ids": bad}
                )
            missing = sorted(set(session.pending) - set(answers))
            extra = sorted(set(answers) - set(session.pending))
            if missing or extra:
                raise ServiceError(
                    400,
                    "label_coverage",
                    "labels must cover exactly the pending ids",
                    {"missing": missing, "extra": extra},
                )
            submitted_iteration = session.state.iteration + 1 if session.state else 0
            last_ndcg = (
                session.state.history[-1].ndcg
                if session.state and session.state.history
                else None
            )
            counts = _label_counts(session.state, answers)
            session.phase = TRAINING
            session.snapshot = _build_snapshot(session, extra_labels=answers)
            session.touch()
        threading.Thread(target=advance_after_labels, args=(session, answers), daemon=True).start()
        return {
            "session_id": session_id,
            "iteration": submitted_iteration,
            "phase": TRAINING,
            "label_counts": counts,
            "ndcg": last_ndcg,
        }

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {
                **session.snapshot,
                "phase": session.phase,
                "error": session.error,
                "updated_at": session.updated_at,
            }

    return app


def _csv_has_header(path: str) -> bool:
    """A data CSV starts with 0/1 cells; anything else is a header row."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    cells = [c.strip() for c in first.split(",")]
    return not all(c in ("0", "1") for c in cells if c)
