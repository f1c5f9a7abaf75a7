"""Gold supervision: edit-distance similarity between candidate and reference splits."""

from __future__ import annotations

from dataclasses import dataclass

from .candidates import Hashtag, Segmentation


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character insertions, deletions and substitutions."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class GoldEntry:
    """A hashtag with its one or two accepted segmentations."""

    hashtag: Hashtag
    golds: tuple[Segmentation, ...]

    def __post_init__(self):
        if not 1 <= len(self.golds) <= 2:
            raise ValueError("expected 1 or 2 gold segmentations")
        for g in self.golds:
            if not g.reconstructs(self.hashtag):
                raise ValueError(
                    f"gold {g.text!r} does not reconstruct hashtag {self.hashtag.raw!r}"
                )

    @property
    def is_multiword(self) -> bool:
        return any(len(g.words) > 1 for g in self.golds)


def similarity(seg: Segmentation, entry: GoldEntry) -> float:
    """Negated edit distance to the closest gold, on space-joined casefolded words.

    Zero iff the segmentation equals a gold; a single boundary error costs 1.
    """
    joined = " ".join(seg.key())
    return max(-levenshtein(joined, " ".join(g.key())) for g in entry.golds)


def gold_pair_score(sa: Segmentation, sb: Segmentation, entry: GoldEntry) -> float:
    """Gold comparison target: sim(sa) - sim(sb); positive iff sa is closer."""
    return similarity(sa, entry) - similarity(sb, entry)
