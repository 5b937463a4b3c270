"""HTTP wrapper around the scoring chain.

The service loads one or more (checkpoint, cohort store) pairs at startup;
state is read-only afterward. POST /classify accepts raw feature matrices
(one per feature type), routes each system to the payload matching its
input dimension, and returns the fused decision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from fastapi import FastAPI, HTTPException

from ..errors import DialectIdError, DimensionError
from ..features import FeatureMatrix
from ..infer import System, fuse, load_cohorts
from ..train import load_checkpoint, model_from_checkpoint
from .schemas import (
    ClassifyRequest,
    ClassifyResponse,
    FeaturePayload,
    HealthResponse,
    SystemInfo,
    SystemScore,
    SystemsResponse,
)


@dataclass(frozen=True)
class ServiceState:
    systems: tuple
    labels: Optional[tuple] = None
    fusion_weights: Optional[tuple] = None
    combine_weight: float = 0.5
    cohort_norm: str = "minmax"
    softmax_only: bool = False

    def __post_init__(self):
        if not self.systems:
            raise DialectIdError("service needs at least one system")
        k = self.systems[0].model.cfg.n_classes
        if any(s.model.cfg.n_classes != k for s in self.systems):
            raise DialectIdError("all systems must share one class count")
        if self.labels is not None and len(self.labels) != k:
            raise DialectIdError(
                f"{len(self.labels)} labels for {k} classes"
            )

    @property
    def n_classes(self) -> int:
        return self.systems[0].model.cfg.n_classes

    def weights(self) -> list[float]:
        if self.fusion_weights is not None:
            return list(self.fusion_weights)
        return [1.0 / len(self.systems)] * len(self.systems)

    def decision_label(self, index: int) -> str:
        if self.labels is not None:
            return self.labels[index]
        return str(index)


def load_service_state(
    checkpoint_paths: Sequence[str],
    cohort_paths: Sequence[str],
    labels: Optional[Sequence[str]] = None,
    fusion_weights: Optional[Sequence[float]] = None,
    combine_weight: float = 0.5,
    cohort_norm: str = "minmax",
    softmax_only: bool = False,
) -> ServiceState:
    if len(checkpoint_paths) != len(cohort_paths):
        raise DialectIdError(
            f"{len(checkpoint_paths)} checkpoints but {len(cohort_paths)} cohort stores"
        )
    systems = tuple(
        System(model=model_from_checkpoint(load_checkpoint(cp)), cohorts=load_cohorts(co))
        for cp, co in zip(checkpoint_paths, cohort_paths)
    )
    return ServiceState(
        systems=systems,
        labels=None if labels is None else tuple(labels),
        fusion_weights=None if fusion_weights is None else tuple(fusion_weights),
        combine_weight=combine_weight,
        cohort_norm=cohort_norm,
        softmax_only=softmax_only,
    )


def _payload_to_features(payload: FeaturePayload) -> FeatureMatrix:
    try:
        data = np.asarray(payload.data, dtype=np.float32)
    except ValueError as exc:
        raise DimensionError(f"ragged feature matrix: {exc}") from exc
    try:
        return FeatureMatrix(
            data=data, frame_shift_ms=payload.frame_shift_ms, source=payload.source
        )
    except ValueError as exc:  # non-finite values
        raise DialectIdError(str(exc)) from exc


def _match_payload(system: System, feats: list[FeatureMatrix]) -> FeatureMatrix:
    in_dim = system.model.cfg.in_dim
    for f in feats:
        if f.dim == in_dim:
            return f
    raise DimensionError(
        f"{system.model.kind} expects {in_dim}-dim features; "
        f"request carries dims {[f.dim for f in feats]}"
    )


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="dialectid", version="1.0")

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", n_systems=len(state.systems))

    @app.get("/systems", response_model=SystemsResponse)
    def systems():
        return SystemsResponse(
            labels=None if state.labels is None else list(state.labels),
            fusion_weights=state.weights(),
            systems=[
                SystemInfo(
                    kind=s.model.kind,
                    n_classes=s.model.cfg.n_classes,
                    in_dim=s.model.cfg.in_dim,
                    embed_dim=s.model.cfg.embed_dim,
                    cohort_counts=list(s.cohorts.counts()),
                )
                for s in state.systems
            ],
        )

    @app.post("/classify", response_model=ClassifyResponse)
    def classify_endpoint(request: ClassifyRequest):
        try:
            feats = [_payload_to_features(p) for p in request.features]
            per_system = [
                s.scores(
                    _match_payload(s, feats),
                    combine_weight=state.combine_weight,
                    cohort_norm=state.cohort_norm,
                    softmax_only=state.softmax_only,
                )
                for s in state.systems
            ]
            fused = fuse(per_system, state.weights())
        except DialectIdError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        decision = int(np.argmax(fused))
        return ClassifyResponse(
            utt_id=request.utt_id,
            decision=state.decision_label(decision),
            decision_index=decision,
            scores=[float(v) for v in fused],
            per_system=[
                SystemScore(kind=s.model.kind, scores=[float(v) for v in vec])
                for s, vec in zip(state.systems, per_system)
            ],
        )

    return app
