"""Pydantic request/response models for the segmentation service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    lm_order: int
    lm_smoothing: str
    ranker_mode: str | None
    k: int


class CandidatesRequest(BaseModel):
    hashtags: list[str] = Field(min_length=1)
    k: int | None = Field(default=None, ge=1)


class ScoredCandidate(BaseModel):
    rank: int
    segmentation: str
    score: float


class HashtagCandidates(BaseModel):
    hashtag: str
    candidates: list[ScoredCandidate] = []
    error: str | None = None


class CandidatesResponse(BaseModel):
    results: list[HashtagCandidates]


class SegmentRequest(BaseModel):
    hashtags: list[str] = Field(min_length=1)
    k: int | None = Field(default=None, ge=1)


class RankedSegmentation(BaseModel):
    rank: int
    segmentation: str


class HashtagSegmentations(BaseModel):
    hashtag: str
    segmentations: list[RankedSegmentation] = []
    error: str | None = None


class SegmentResponse(BaseModel):
    results: list[HashtagSegmentations]


class GoldEntryIn(BaseModel):
    hashtag: str
    golds: list[str] = Field(min_length=1, max_length=2)


class PredictionIn(BaseModel):
    hashtag: str
    ranked: list[str] = Field(min_length=1)


class EvaluateRequest(BaseModel):
    entries: list[GoldEntryIn] = Field(min_length=1)
    predictions: list[PredictionIn] = Field(min_length=1)


class MetricBlock(BaseModel):
    a1: float
    a2: float
    f1: float
    mrr: float
    n: int


class EvaluateResponse(BaseModel):
    overall: MetricBlock
    multi_token: MetricBlock
    single_token: MetricBlock
