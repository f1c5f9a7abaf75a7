"""Segmentation-level and token-level evaluation metrics."""

from __future__ import annotations

from typing import Sequence

from .candidates import Segmentation
from .gold import GoldEntry


def _matches_any_gold(seg: Segmentation, entry: GoldEntry) -> bool:
    key = seg.key()
    return any(key == g.key() for g in entry.golds)


def accuracy_at_k(ranked: Sequence[Segmentation], entry: GoldEntry, k: int) -> int:
    """1 iff any of the first k outputs exactly matches a gold segmentation."""
    if not ranked:
        raise ValueError("empty ranked list")
    return int(any(_matches_any_gold(seg, entry) for seg in ranked[:k]))


def token_f1(pred: Segmentation, entry: GoldEntry) -> float:
    """Token-span F1 of a prediction against the closest gold.

    Tokens are identified by character spans, so duplicated words must match
    positionally.  Returns the maximum F1 over the accepted golds.
    """
    pred_spans = set(pred.spans)
    best = 0.0
    for gold in entry.golds:
        gold_spans = set(gold.spans)
        match = len(pred_spans & gold_spans)
        if match == 0:
            continue
        precision = match / len(pred_spans)
        recall = match / len(gold_spans)
        best = max(best, 2 * precision * recall / (precision + recall))
    return best


def mrr(ranked: Sequence[Segmentation], entry: GoldEntry) -> float:
    """Reciprocal rank of the first gold match; 0 when absent from the list."""
    if not ranked:
        raise ValueError("empty ranked list")
    for i, seg in enumerate(ranked, 1):
        if _matches_any_gold(seg, entry):
            return 1.0 / i
    return 0.0


def _aggregate(rows: list[dict]) -> dict:
    n = len(rows)
    if n == 0:
        return {"a1": 0.0, "a2": 0.0, "f1": 0.0, "mrr": 0.0, "n": 0}
    return {
        "a1": sum(r["a1"] for r in rows) / n,
        "a2": sum(r["a2"] for r in rows) / n,
        "f1": sum(r["f1"] for r in rows) / n,
        "mrr": sum(r["mrr"] for r in rows) / n,
        "n": n,
    }


def evaluate_dataset(
    outputs: dict[str, Sequence[Segmentation]], entries: Sequence[GoldEntry]
) -> dict:
    """Macro-averaged A@1, A@2, F1@1 and MRR, overall and per hashtag type.

    ``outputs`` maps each hashtag's raw form to its ranked segmentations.
    A missing output is an error naming the hashtag.
    """
    missing = [e.hashtag.raw for e in entries if e.hashtag.raw not in outputs]
    if missing:
        raise ValueError(f"missing outputs for hashtags: {', '.join(missing)}")
    rows = []
    for entry in entries:
        ranked = list(outputs[entry.hashtag.raw])
        rows.append(
            {
                "multi": entry.is_multiword,
                "a1": accuracy_at_k(ranked, entry, 1),
                "a2": accuracy_at_k(ranked, entry, 2),
                "f1": token_f1(ranked[0], entry),
                "mrr": mrr(ranked, entry),
            }
        )
    return {
        "overall": _aggregate(rows),
        "multi_token": _aggregate([r for r in rows if r["multi"]]),
        "single_token": _aggregate([r for r in rows if not r["multi"]]),
    }
