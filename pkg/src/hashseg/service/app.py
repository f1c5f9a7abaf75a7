"""FastAPI service wrapping the segmentation engine.

The engine (language model, resources, optional ranker checkpoint) is loaded
once at startup; requests are then served from immutable state, so the
service is safe under concurrent reads.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..candidates import Segmentation, parse_hashtag
from ..gold import GoldEntry
from ..metrics import evaluate_dataset
from ..pipeline import Engine
from . import schemas


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="hashseg", version="0.1.0")
    app.state.engine = engine

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(
            status="ok",
            lm_order=engine.lm.order,
            lm_smoothing=engine.lm.smoothing,
            ranker_mode=engine.model.mode if engine.model else None,
            k=engine.k,
        )

    @app.post("/candidates", response_model=schemas.CandidatesResponse)
    def candidates(req: schemas.CandidatesRequest):
        results = []
        for raw in req.hashtags:
            try:
                cand_set = engine.candidates(raw, req.k)
            except ValueError as exc:
                results.append(schemas.HashtagCandidates(hashtag=raw, error=str(exc)))
                continue
            results.append(
                schemas.HashtagCandidates(
                    hashtag=raw,
                    candidates=[
                        schemas.ScoredCandidate(rank=i, segmentation=seg.text, score=score)
                        for i, (seg, score) in enumerate(cand_set.candidates, 1)
                    ],
                )
            )
        return schemas.CandidatesResponse(results=results)

    @app.post("/segment", response_model=schemas.SegmentResponse)
    def segment(req: schemas.SegmentRequest):
        results = []
        for raw in req.hashtags:
            try:
                ranked = engine.segment(raw, req.k)
            except ValueError as exc:
                results.append(schemas.HashtagSegmentations(hashtag=raw, error=str(exc)))
                continue
            results.append(
                schemas.HashtagSegmentations(
                    hashtag=raw,
                    segmentations=[
                        schemas.RankedSegmentation(rank=i, segmentation=seg.text)
                        for i, seg in enumerate(ranked, 1)
                    ],
                )
            )
        return schemas.SegmentResponse(results=results)

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(req: schemas.EvaluateRequest):
        try:
            entries = [
                GoldEntry(
                    hashtag=parse_hashtag(e.hashtag),
                    golds=tuple(
                        Segmentation(words=tuple(g.split())) for g in e.golds
                    ),
                )
                for e in req.entries
            ]
            outputs = {
                p.hashtag.lstrip("#"): [
                    Segmentation(words=tuple(r.split())) for r in p.ranked
                ]
                for p in req.predictions
            }
            report = evaluate_dataset(outputs, entries)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.EvaluateResponse(**report)

    return app
