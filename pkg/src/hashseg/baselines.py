"""Reference segmenters: original hashtag, rule-based, Viterbi, linear pairwise ranker."""

from __future__ import annotations

from dataclasses import dataclass
from math import log
from typing import Sequence

import numpy as np

from .candidates import Hashtag, Segmentation
from .features import FeatureLayout
from .ranker import PairExample, Scaler, _group_pairs


def original_hashtag(hashtag: Hashtag) -> Segmentation:
    """The hashtag kept as a single token (underscores removed)."""
    return Segmentation(words=(hashtag.joined,))


def _camel_pieces(run: str) -> list[str]:
    pieces = []
    start = 0
    for i in range(1, len(run)):
        if run[i - 1].isalpha() and run[i - 1].islower() and run[i].isupper():
            pieces.append(run[start:i])
            start = i
    pieces.append(run[start:])
    return pieces


def _strip_digit_runs(piece: str) -> list[str]:
    out = []
    lead = len(piece) - len(piece.lstrip("0123456789"))
    if 0 < lead < len(piece):
        out.append(piece[:lead])
        piece = piece[lead:]
    trail = len(piece) - len(piece.rstrip("0123456789"))
    if 0 < trail < len(piece):
        out.append(piece[: len(piece) - trail])
        out.append(piece[len(piece) - trail :])
    else:
        out.append(piece)
    return out


def _greedy_dictionary_split(piece: str, dictionary) -> list[str]:
    """Longest dictionary-word match left to right; unmatched runs merge."""
    words = []
    residue = ""
    i = 0
    n = len(piece)
    while i < n:
        match = None
        for j in range(n, i, -1):
            if piece[i:j].lower() in dictionary:
                match = piece[i:j]
                break
        if match is None:
            residue += piece[i]
            i += 1
        else:
            if residue:
                words.append(residue)
                residue = ""
            words.append(match)
            i += len(match)
    if residue:
        words.append(residue)
    return words


def rule_based_segment(hashtag: Hashtag, dictionary) -> Segmentation:
    """Word-shape splits (underscore, camel case, digit runs) then greedy
    longest dictionary-word matching within the remaining pieces."""
    words = []
    for run in hashtag.runs:
        for camel in _camel_pieces(run):
            for piece in _strip_digit_runs(camel):
                if piece.isdigit():
                    words.append(piece)
                else:
                    words.extend(_greedy_dictionary_split(piece, dictionary))
    return Segmentation(words=tuple(words))


def viterbi_segment(
    hashtag: Hashtag,
    unigram_freqs: dict[str, int],
    total: int | None = None,
    max_word_len: int | None = None,
) -> Segmentation:
    """Maximum product of unigram probabilities by dynamic programming.

    Out-of-vocabulary words get the length-penalised floor
    1 / (total * 10^len(word)).  Ties prefer fewer words, then the
    lexicographically smallest word sequence.
    """
    if total is None:
        total = sum(unigram_freqs.values())
    if total <= 0:
        raise ValueError("empty frequency table")

    def word_logp(w: str) -> float:
        c = unigram_freqs.get(w, 0)
        if c > 0:
            return log(c) - log(total)
        return -log(total) - len(w) * log(10.0)

    words: list[str] = []
    for run in hashtag.runs:
        low = run.lower()
        n = len(low)
        # best[j]: (score, nwords, words) for the prefix of length j
        best: list = [None] * (n + 1)
        best[0] = (0.0, 0, ())
        for j in range(1, n + 1):
            lo = 0 if max_word_len is None else max(0, j - max_word_len)
            cand = None
            for i in range(lo, j):
                if best[i] is None:
                    continue
                s, m, ws = best[i]
                w = low[i:j]
                state = (s + word_logp(w), m + 1, ws + (w,))
                if cand is None or _viterbi_better(state, cand):
                    cand = state
            best[j] = cand
        pos = 0
        for w in best[n][2]:
            words.append(run[pos : pos + len(w)])
            pos += len(w)
    return Segmentation(words=tuple(words))


def _viterbi_better(a, b) -> bool:
    """True when state a beats b: higher score, then fewer words, then lex order."""
    if a[0] != b[0]:
        return a[0] > b[0]
    if a[1] != b[1]:
        return a[1] < b[1]
    return a[2] < b[2]


@dataclass
class LinearPairwiseRanker:
    """Perceptron-style linear ranker trained with hinge updates on pairs."""

    weights: np.ndarray
    scaler: Scaler

    def score(self, full_vec: np.ndarray) -> float:
        return float(self.weights @ self.scaler.transform(full_vec))

    def rank(self, full_vecs: Sequence[np.ndarray]) -> list[int]:
        """Candidate indices by descending linear score; ties keep input order."""
        scores = [self.score(v) for v in full_vecs]
        return sorted(range(len(scores)), key=lambda i: (-scores[i], i))


def save_linear_ranker(ranker: LinearPairwiseRanker, layout: FeatureLayout, path) -> None:
    import json

    doc = {
        "format": 1,
        "kind": "linear",
        "layout": layout.to_dict(),
        "layout_hash": layout.hash,
        "weights": ranker.weights.tolist(),
        "scaler": {"mean": ranker.scaler.mean.tolist(), "std": ranker.scaler.std.tolist()},
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_linear_ranker(path) -> tuple[LinearPairwiseRanker, FeatureLayout]:
    import json

    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("kind") != "linear":
        raise ValueError(f"not a linear ranker checkpoint: {path}")
    layout = FeatureLayout.from_dict(doc["layout"])
    ranker = LinearPairwiseRanker(
        weights=np.array(doc["weights"]),
        scaler=Scaler(np.array(doc["scaler"]["mean"]), np.array(doc["scaler"]["std"])),
    )
    return ranker, layout


def train_linear_ranker(
    pairs: Sequence[PairExample],
    layout: FeatureLayout,
    epochs: int = 10,
    lr: float = 0.01,
    seed: int = 0,
) -> LinearPairwiseRanker:
    """Hinge updates on misordered pairs: w += lr * l * (sa - sb).

    Pairs with a zero gold target are skipped; correctly ordered pairs with
    margin leave the weights unchanged.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty training set")
    rows = np.vstack([f.full for g in _group_pairs(pairs).values() for f in g["feats"]])
    scaler = Scaler.fit(rows, layout.candidate_bool_mask())
    dim = rows.shape[1]
    w = np.zeros(dim)
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        for idx in rng.permutation(len(pairs)):
            p = pairs[idx]
            if p.target == 0.0:
                continue
            label = 1.0 if p.target > 0 else -1.0
            diff = scaler.transform(p.fa.full) - scaler.transform(p.fb.full)
            if label * (w @ diff) < 1.0:
                w = w + lr * label * diff
    return LinearPairwiseRanker(weights=w, scaler=scaler)
