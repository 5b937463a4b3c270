"""Request and response bodies for the classification service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class FeaturePayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data: list[list[float]] = Field(description="frames x dim feature matrix")
    frame_shift_ms: float = 10.0
    source: str = "mfcc"


class ClassifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    utt_id: str = "utt"
    features: list[FeaturePayload] = Field(min_length=1)


class SystemScore(BaseModel):
    kind: str
    scores: list[float]


class ClassifyResponse(BaseModel):
    utt_id: str
    decision: str
    decision_index: int
    scores: list[float]
    per_system: list[SystemScore]


class SystemInfo(BaseModel):
    kind: str
    n_classes: int
    in_dim: int
    embed_dim: int
    cohort_counts: list[int]


class SystemsResponse(BaseModel):
    labels: Optional[list[str]]
    fusion_weights: list[float]
    systems: list[SystemInfo]


class HealthResponse(BaseModel):
    status: str
    n_systems: int
