"""End-to-end inference: candidate generation, reranking, greedy aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

from .candidates import (
    DEFAULT_BEAM_WIDTH,
    DEFAULT_K,
    CandidateSet,
    Segmentation,
    parse_hashtag,
    top_k_candidates,
)
from .features import FeatureBundle, ResourcePack, extract_bundle
from .ngram import NGramModel
from .ranker import LayoutMismatchError, RankerModel

T = TypeVar("T")


def aggregate_pairwise(score_fn: Callable[[T, T], float], items: Sequence[T]) -> list[T]:
    """Greedy rank extraction from a pairwise comparator.

    Each round scores every remaining item against all other remaining items,
    extracts the argmax and repeats.  The per-round totals are recomputed
    after each removal.  Ties keep the earliest input position.
    """
    if not items:
        raise ValueError("no candidates to aggregate")
    remaining = list(enumerate(items))
    out = []
    while remaining:
        best_pos = 0
        best_score = None
        for pos, (_, item) in enumerate(remaining):
            total = sum(
                score_fn(item, other) for p, (_, other) in enumerate(remaining) if p != pos
            )
            if best_score is None or total > best_score:
                best_score = total
                best_pos = pos
        out.append(remaining.pop(best_pos)[1])
    return out


def rank_candidates(
    model: RankerModel,
    cand_set: CandidateSet,
    bundle: FeatureBundle,
    mode: str | None = None,
) -> list[Segmentation]:
    """Rerank generator candidates with a trained model.

    Pair-comparison modes aggregate pairwise scores greedily; pointwise
    (margin-ranking) modes sort by the single-network score.  Ties keep the
    generator order.
    """
    if mode is not None and mode != model.mode:
        raise ValueError(f"model mode is {model.mode!r}, requested {mode!r}")
    if bundle.layout.hash != model.layout.hash:
        raise LayoutMismatchError("feature layout hash mismatch")
    segs = cand_set.segmentations
    if not segs:
        raise ValueError("empty candidate set")
    feats = np.stack([model.standardize(f) for f in bundle.candidates])
    k = len(segs)
    if k == 1:
        return list(segs)

    w = model.gate_value(bundle.hashtag_vec) if model.is_multitask else None

    if model.is_pointwise:
        scores, _ = model.ranker.forward(model._point_inputs(feats, w))
        order = sorted(range(k), key=lambda i: (-scores[i], i))
        return [segs[i] for i in order]

    ia, ib = zip(*[(i, j) for i in range(k) for j in range(k) if i != j])
    ia = np.array(ia)
    ib = np.array(ib)
    scores, _ = model.ranker.forward(model._pair_inputs(feats, ia, ib, w))
    matrix = np.zeros((k, k))
    matrix[ia, ib] = scores
    order = aggregate_pairwise(lambda i, j: matrix[i, j], list(range(k)))
    return [segs[i] for i in order]


@dataclass
class Engine:
    """Loaded pipeline state: generator LM, resources and an optional ranker."""

    lm: NGramModel
    resources: ResourcePack
    model: RankerModel | None = None
    k: int = DEFAULT_K
    beam_width: int = DEFAULT_BEAM_WIDTH
    max_word_len: int | None = None

    def candidates(self, raw: str, k: int | None = None) -> CandidateSet:
        hashtag = parse_hashtag(raw)
        return top_k_candidates(
            hashtag, self.lm, k or self.k, max(self.beam_width, k or self.k),
            self.max_word_len,
        )

    def segment(self, raw: str, k: int | None = None) -> list[Segmentation]:
        """Ranked segmentations; the first is the system output."""
        cand_set = self.candidates(raw, k)
        if self.model is None:
            return cand_set.segmentations
        bundle = extract_bundle(
            cand_set.hashtag, cand_set, self.resources, self.model.layout
        )
        return rank_candidates(self.model, cand_set, bundle)


def segment_hashtag(
    raw: str,
    lm: NGramModel,
    model: RankerModel,
    resources: ResourcePack,
    k: int = DEFAULT_K,
    beam_width: int = DEFAULT_BEAM_WIDTH,
    max_word_len: int | None = None,
) -> list[Segmentation]:
    """Parse, generate top-k candidates, extract features and rerank."""
    engine = Engine(lm=lm, resources=resources, model=model, k=k,
                    beam_width=beam_width, max_word_len=max_word_len)
    return engine.segment(raw)
