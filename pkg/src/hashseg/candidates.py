"""Hashtag parsing and beam-search candidate generation.

A hashtag of r characters admits 2^(r-1) segmentations; the generator runs a
position-synchronous beam search scored by the language model and returns the
top k.  Underscores are author-provided boundaries: they force a split and
are dropped from the word list, so words always reconstruct the hashtag with
underscores removed.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Sequence

from .ngram import BOS, NGramModel

_HASHTAG_RE = re.compile(r"[A-Za-z0-9_]+\Z")

ENUMERATION_CAP = 20
DEFAULT_K = 10
DEFAULT_BEAM_WIDTH = 100


@dataclass(frozen=True)
class Hashtag:
    """A hashtag with the leading '#' stripped; original casing retained."""

    raw: str

    @property
    def length(self) -> int:
        return len(self.raw)

    @property
    def norm(self) -> str:
        """Lowercased form used for language-model scoring."""
        return self.raw.lower()

    @property
    def joined(self) -> str:
        """Characters a segmentation's words must reconstruct (no underscores)."""
        return self.raw.replace("_", "")

    @property
    def runs(self) -> tuple[str, ...]:
        """Maximal runs between underscores, original casing."""
        return tuple(part for part in self.raw.split("_") if part)


def parse_hashtag(text: str) -> Hashtag:
    s = text.strip()
    if s.startswith("#"):
        s = s[1:]
    if not s or not _HASHTAG_RE.match(s) or not any(c.isalnum() for c in s):
        raise ValueError(f"invalid hashtag characters: {text!r}")
    return Hashtag(raw=s)


@dataclass(frozen=True)
class Segmentation:
    """An ordered word sequence; words concatenate to the hashtag characters."""

    words: tuple[str, ...]

    def __post_init__(self):
        if not self.words or any(not w for w in self.words):
            raise ValueError("segmentation words must be non-empty")

    @classmethod
    def from_words(cls, words: Sequence[str]) -> "Segmentation":
        return cls(words=tuple(words))

    @property
    def boundaries(self) -> tuple[int, ...]:
        """Interior split offsets into the concatenated character sequence."""
        out = []
        pos = 0
        for w in self.words[:-1]:
            pos += len(w)
            out.append(pos)
        return tuple(out)

    @property
    def spans(self) -> tuple[tuple[int, int], ...]:
        out = []
        pos = 0
        for w in self.words:
            out.append((pos, pos + len(w)))
            pos += len(w)
        return tuple(out)

    def key(self) -> tuple[str, ...]:
        """Casefolded word tuple; the identity used for comparisons."""
        return tuple(w.casefold() for w in self.words)

    @property
    def text(self) -> str:
        return " ".join(self.words)

    def reconstructs(self, hashtag: Hashtag) -> bool:
        return "".join(self.key()) == hashtag.joined.casefold()


def enumerate_segmentations(hashtag: Hashtag) -> list[Segmentation]:
    """All segmentations of a hashtag; oracle-sized inputs only.

    Underscore-free hashtags yield exactly 2^(r-1) segmentations.  Underscores
    are forced boundaries, so each inter-underscore run is enumerated
    independently and the results combined.
    """
    if hashtag.length > ENUMERATION_CAP:
        raise ValueError("enumeration cap exceeded")
    per_run = []
    for run in hashtag.runs:
        splits = []
        n = len(run)
        for mask in range(1 << (n - 1)):
            words = []
            start = 0
            for i in range(n - 1):
                if mask & (1 << i):
                    words.append(run[start : i + 1])
                    start = i + 1
            words.append(run[start:])
            splits.append(tuple(words))
        per_run.append(splits)
    return [
        Segmentation(words=tuple(itertools.chain.from_iterable(combo)))
        for combo in itertools.product(*per_run)
    ]


@dataclass
class CandidateSet:
    """Top-k candidate segmentations with their language-model scores."""

    hashtag: Hashtag
    candidates: list[tuple[Segmentation, float]]
    k: int

    @property
    def segmentations(self) -> list[Segmentation]:
        return [seg for seg, _ in self.candidates]

    @property
    def scores(self) -> list[float]:
        return [s for _, s in self.candidates]

    @property
    def best(self) -> Segmentation:
        return self.candidates[0][0]


def _hyp_key(hyp):
    score, words, _ = hyp
    return (-score, len(words), words)


def top_k_candidates(
    hashtag: Hashtag,
    model: NGramModel,
    k: int = DEFAULT_K,
    beam_width: int = DEFAULT_BEAM_WIDTH,
    max_word_len: int | None = None,
) -> CandidateSet:
    """Beam search over split points, ranked by summed word log-probability.

    With beam_width at least 2^(r-1) the result equals exhaustive enumeration.
    Ties order by fewer words, then lexicographic casefolded word sequence.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if beam_width < k:
        raise ValueError("beam_width must be >= k")
    raw = hashtag.raw
    norm = hashtag.norm
    length = len(raw)
    order = model.order
    log_prob = model.log_prob

    # next forced boundary at or after each position
    stops = [length] * (length + 1)
    nxt = length
    for p in range(length - 1, -1, -1):
        if raw[p] == "_":
            nxt = p
        stops[p] = nxt

    init_ctx = (BOS,) * (order - 1)
    beams: list[list] = [[] for _ in range(length + 1)]
    beams[0].append((0.0, (), init_ctx))
    for p in range(length):
        hyps = beams[p]
        if not hyps:
            continue
        if raw[p] == "_":
            beams[p + 1].extend(hyps)
            continue
        if len(hyps) > beam_width:
            hyps.sort(key=_hyp_key)
            hyps = hyps[:beam_width]
        stop = stops[p]
        if max_word_len is not None:
            stop = min(stop, p + max_word_len)
        for score, words, ctx in hyps:
            for q in range(p + 1, stop + 1):
                w = norm[p:q]
                new_score = score + log_prob(w, ctx)
                new_ctx = ctx[1:] + (w,) if order > 1 else ()
                beams[q].append((new_score, words + (w,), new_ctx))

    final = sorted(beams[length], key=_hyp_key)[:k]
    candidates = []
    for score, words, _ in final:
        # restore original casing by walking the raw string
        orig = []
        pos = 0
        for w in words:
            while raw[pos] == "_":
                pos += 1
            orig.append(raw[pos : pos + len(w)])
            pos += len(w)
        candidates.append((Segmentation(words=tuple(orig)), score))
    return CandidateSet(hashtag=hashtag, candidates=candidates, k=k)
