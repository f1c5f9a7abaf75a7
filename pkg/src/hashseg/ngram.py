"""Backoff n-gram language models with Good-Turing and modified Kneser-Ney smoothing.

Models are built from per-order n-gram counts, are immutable once fitted, and
answer conditional log-probability queries with Katz-style backoff.  Both
smoothing variants produce properly normalised conditional distributions:
for any context, the probabilities of vocabulary words plus the unknown token
sum to one.  Out-of-vocabulary queries never fail; they are mapped to the
unknown token.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

GOOD_TURING = "good-turing"
KNESER_NEY = "kneser-ney"

# Adjusted counts are used only below this raw count (Katz convention).
GT_SWITCH_THRESHOLD = 5

# Every context keeps at least this much mass for unseen continuations so
# log_prob stays finite for any query.
_MIN_UNSEEN_MASS = 1e-10

_FIXED_DISCOUNT = 0.75


@dataclass
class NGramCounts:
    """Raw n-gram occurrence counts of all orders 1..order.

    ``counts[n]`` maps an n-token tuple to its occurrence count over the
    padded training sentences.  ``count_of_counts[n][r]`` is the number of
    distinct order-n grams seen exactly r times.
    """

    order: int
    counts: dict[int, dict[tuple[str, ...], int]]
    total_tokens: int
    count_of_counts: dict[int, dict[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.count_of_counts:
            self.count_of_counts = {
                n: dict(Counter(self.counts[n].values())) for n in self.counts
            }


def _sentence_tokens(sentence) -> list[str]:
    if isinstance(sentence, str):
        return sentence.split()
    return list(sentence)


def count_ngrams(corpus: Iterable, order: int) -> NGramCounts:
    """Count n-grams of every order 1..order over a sentence stream.

    Each sentence is a whitespace-separated string or a token list.  For
    order >= 2, sentences are padded with order-1 start markers and one end
    marker; order-1 counting is unpadded so unigram counts are plain token
    frequencies.

    Raises ValueError("empty corpus") when no sentence holds a token.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    counts: dict[int, dict[tuple[str, ...], int]] = {n: defaultdict(int) for n in range(1, order + 1)}
    sentences = 0
    for sentence in corpus:
        tokens = _sentence_tokens(sentence)
        if not tokens:
            continue
        if any(not t for t in tokens):
            raise ValueError("corpus tokens must be non-empty strings")
        sentences += 1
        padded = [BOS] * (order - 1) + tokens + ([EOS] if order > 1 else [])
        for n in range(1, order + 1):
            table = counts[n]
            for i in range(len(padded) - n + 1):
                table[tuple(padded[i : i + n])] += 1
    if sentences == 0:
        raise ValueError("empty corpus")
    counts = {n: dict(t) for n, t in counts.items()}
    total = sum(counts[1].values())
    return NGramCounts(order=order, counts=counts, total_tokens=total)


def good_turing_adjusted(r: int, count_of_counts: dict[int, int]) -> float:
    """Good-Turing adjusted count r* = (r+1) * N_{r+1} / N_r.

    Applied only for r below GT_SWITCH_THRESHOLD; falls back to the raw
    count when N_r or N_{r+1} is missing.
    """
    if r >= GT_SWITCH_THRESHOLD:
        return float(r)
    n_r = count_of_counts.get(r, 0)
    n_r1 = count_of_counts.get(r + 1, 0)
    if n_r == 0 or n_r1 == 0:
        return float(r)
    return (r + 1) * n_r1 / n_r


@dataclass
class NGramModel:
    """A fitted backoff language model.

    ``logprob`` holds conditional natural-log probabilities keyed by n-gram;
    ``backoff`` holds log backoff weights keyed by context.  ``vocab`` is the
    sorted tuple of predictable tokens (includes the end marker, excludes the
    start marker and the unknown token).
    """

    order: int
    smoothing: str
    vocab: tuple[str, ...]
    logprob: dict[tuple[str, ...], float]
    backoff: dict[tuple[str, ...], float]

    def __post_init__(self):
        self._vocab_set = frozenset(self.vocab)

    def map_word(self, word: str) -> str:
        return word if word in self._vocab_set else UNK

    def map_context(self, context: Sequence[str]) -> tuple[str, ...]:
        if self.order == 1:
            return ()
        ctx = tuple(context)[-(self.order - 1) :]
        vocab = self._vocab_set
        return tuple(t if (t in vocab or t == BOS) else UNK for t in ctx)

    def log_prob(self, word: str, context: Sequence[str] = ()) -> float:
        """Natural-log P(word | context); total over any inputs."""
        w = word if word in self._vocab_set else UNK
        ctx = self.map_context(context)
        logprob = self.logprob
        backoff = self.backoff
        acc = 0.0
        while True:
            lp = logprob.get(ctx + (w,))
            if lp is not None:
                return acc + lp
            if not ctx:
                # unigram entries exist for all mapped words; defensive only
                return acc + logprob[(UNK,)]
            acc += backoff.get(ctx, 0.0)
            ctx = ctx[1:]

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        return math.exp(self.log_prob(word, context))


def score_segmentation(model: NGramModel, words: Sequence[str]) -> float:
    """Sum of log P(w_i | previous N-1 words) with start padding, no end term."""
    if not words:
        raise ValueError("empty segmentation")
    n = model.order
    ctx = (BOS,) * (n - 1)
    total = 0.0
    for w in words:
        total += model.log_prob(w, ctx)
        if n > 1:
            ctx = ctx[1:] + (w,)
    return total


def _rescaled(seen_mass: float) -> tuple[float, float]:
    """Clamp unseen mass into [_MIN_UNSEEN_MASS, 1) and rescale seen mass.

    Returns (scale for seen probabilities, unseen mass).  Degenerate
    count-of-counts can make the discounted seen mass reach or exceed one;
    the clamp keeps every distribution normalised with positive unseen mass.
    """
    unseen = 1.0 - seen_mass
    if unseen >= _MIN_UNSEEN_MASS:
        return 1.0, unseen
    if seen_mass <= 0.0:
        return 1.0, 1.0
    return (1.0 - _MIN_UNSEEN_MASS) / seen_mass, _MIN_UNSEEN_MASS


def _group_by_context(table: dict[tuple[str, ...], int]):
    grouped: dict[tuple[str, ...], list[tuple[str, int]]] = defaultdict(list)
    for gram, c in table.items():
        if gram[-1] == BOS:
            continue  # start marker is context-only, never predicted
        grouped[gram[:-1]].append((gram[-1], c))
    return grouped


def _model_vocab(counts: NGramCounts) -> tuple[str, ...]:
    return tuple(sorted(w for (w,) in counts.counts[1] if w != BOS))


def fit_good_turing(counts: NGramCounts, order: int | None = None) -> NGramModel:
    """Katz backoff model with Good-Turing discounted counts.

    Seen n-grams get probability r*/denominator (r* adjusted below the switch
    threshold); the freed mass goes to unseen continuations through backoff
    weights, and at the unigram level to the unknown token.
    """
    order = counts.order if order is None else order
    if order < 1 or order > counts.order:
        raise ValueError("model order must be within 1..counts.order")
    if not counts.counts[1]:
        raise ValueError("empty counts")

    vocab = _model_vocab(counts)
    logprob: dict[tuple[str, ...], float] = {}
    backoff: dict[tuple[str, ...], float] = {}
    model = NGramModel(order=order, smoothing=GOOD_TURING, vocab=vocab,
                       logprob=logprob, backoff=backoff)

    for n in range(1, order + 1):
        coc = counts.count_of_counts[n]
        grouped = _group_by_context(counts.counts[n])
        for ctx in sorted(grouped):
            entries = sorted(grouped[ctx])
            denom = sum(c for _, c in entries)
            starred = [good_turing_adjusted(c, coc) for _, c in entries]
            scale, unseen = _rescaled(sum(starred) / denom)
            for (w, _), star in zip(entries, starred):
                logprob[ctx + (w,)] = math.log(scale * star / denom)
            if n == 1:
                logprob[(UNK,)] = math.log(unseen)
            else:
                seen_lower = sum(model.prob(w, ctx[1:]) for w, _ in entries)
                alpha = unseen / max(1.0 - seen_lower, 1e-12)
                backoff[ctx] = math.log(alpha)
    return model


def _continuation_counts(counts: NGramCounts, n: int) -> dict[tuple[str, ...], int]:
    """Number of distinct one-token left extensions of each order-n gram."""
    cont: dict[tuple[str, ...], int] = defaultdict(int)
    for gram in counts.counts[n + 1]:
        if gram[-1] == BOS:
            continue
        cont[gram[1:]] += 1
    return dict(cont)


def _kn_discounts(values: Iterable[int], n: int) -> tuple[float, float, float]:
    """Chen-Goodman modified Kneser-Ney discounts D1, D2, D3+ for one order."""
    coc = Counter(values)
    t1, t2, t3, t4 = (coc.get(r, 0) for r in (1, 2, 3, 4))
    if t1 == 0 or t2 == 0:
        warnings.warn(
            f"degenerate count-of-counts at order {n}; using fixed discount {_FIXED_DISCOUNT}"
        )
        return (_FIXED_DISCOUNT,) * 3
    y = t1 / (t1 + 2.0 * t2)
    d1 = 1.0 - 2.0 * y * t2 / t1
    d2 = 2.0 - 3.0 * y * t3 / t2
    d3 = 3.0 - 4.0 * y * t4 / t3 if t3 > 0 else _FIXED_DISCOUNT
    return (min(max(d1, 0.0), 1.0), min(max(d2, 0.0), 2.0), min(max(d3, 0.0), 3.0))


def _discount_for(c: int, d: tuple[float, float, float]) -> float:
    if c == 1:
        return d[0]
    if c == 2:
        return d[1]
    return d[2]


def fit_kneser_ney(counts: NGramCounts, order: int | None = None) -> NGramModel:
    """Interpolated modified Kneser-Ney model.

    The top order uses raw counts; lower orders use continuation counts
    (distinct left contexts).  Three discounts per order are estimated from
    that order's count-of-counts, falling back to a fixed 0.75 discount when
    the estimates are degenerate.  A unigram-only model built from counts of
    order >= 2 exposes the continuation base distribution directly.
    """
    order = counts.order if order is None else order
    if order < 1 or order > counts.order:
        raise ValueError("model order must be within 1..counts.order")
    if not counts.counts[1]:
        raise ValueError("empty counts")

    vocab = _model_vocab(counts)
    n_events = len(vocab) + 1  # vocabulary plus the unknown token
    logprob: dict[tuple[str, ...], float] = {}
    backoff: dict[tuple[str, ...], float] = {}
    model = NGramModel(order=order, smoothing=KNESER_NEY, vocab=vocab,
                       logprob=logprob, backoff=backoff)

    def events_at(n: int) -> dict[tuple[str, ...], int]:
        if n == order and not (n == 1 and counts.order >= 2):
            return counts.counts[n]
        return _continuation_counts(counts, n)

    for n in range(1, order + 1):
        events = events_at(n)
        grouped = _group_by_context(events)
        d = _kn_discounts(
            (c for gram, c in events.items() if gram[-1] != BOS), n
        )
        for ctx in sorted(grouped):
            entries = sorted(grouped[ctx])
            denom = sum(c for _, c in entries)
            gamma_raw = sum(_discount_for(c, d) for _, c in entries) / denom
            scale = 1.0
            if gamma_raw < _MIN_UNSEEN_MASS:
                scale = (1.0 - _MIN_UNSEEN_MASS) / max(1.0 - gamma_raw, 1e-12)
                gamma_raw = _MIN_UNSEEN_MASS
            if n == 1:
                uniform = 1.0 / n_events
                for w, c in entries:
                    p = scale * max(c - _discount_for(c, d), 0.0) / denom + gamma_raw * uniform
                    logprob[(w,)] = math.log(p)
                logprob[(UNK,)] = math.log(gamma_raw * uniform)
                # words in the vocabulary but absent from the event table
                # (possible for continuation events) still need unigram mass
                seen = {w for w, _ in entries}
                for w in vocab:
                    if w not in seen:
                        logprob[(w,)] = math.log(gamma_raw * uniform)
            else:
                backoff[ctx] = math.log(gamma_raw)
                lower = ctx[1:]
                for w, c in entries:
                    p = (
                        scale * max(c - _discount_for(c, d), 0.0) / denom
                        + gamma_raw * model.prob(w, lower)
                    )
                    logprob[ctx + (w,)] = math.log(p)
    return model


def fit(counts: NGramCounts, smoothing: str, order: int | None = None) -> NGramModel:
    if smoothing in (GOOD_TURING, "gt"):
        return fit_good_turing(counts, order)
    if smoothing in (KNESER_NEY, "kn"):
        return fit_kneser_ney(counts, order)
    raise ValueError(f"unknown smoothing: {smoothing!r}")


def save_arpa(model: NGramModel, path) -> None:
    """Write the model in ARPA-style text (logprob TAB ngram TAB backoff).

    The preamble records the smoothing variant and that log probabilities are
    natural logs.  Start-marker grams that exist only as backoff contexts are
    written with the conventional -99 placeholder probability.
    """
    grams: dict[int, dict[tuple[str, ...], tuple[float | None, float | None]]] = defaultdict(dict)
    for gram, lp in model.logprob.items():
        grams[len(gram)][gram] = (lp, None)
    for ctx, bo in model.backoff.items():
        lp = grams[len(ctx)].get(ctx, (None, None))[0]
        grams[len(ctx)][ctx] = (lp, bo)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"smoothing: {model.smoothing}\n")
        f.write("log base: e\n")
        f.write("\n\\data\\\n")
        for n in range(1, model.order + 1):
            f.write(f"ngram {n}={len(grams.get(n, {}))}\n")
        for n in range(1, model.order + 1):
            f.write(f"\n\\{n}-grams:\n")
            for gram in sorted(grams.get(n, {})):
                lp, bo = grams[n][gram]
                lp_str = repr(lp) if lp is not None else "-99"
                line = f"{lp_str}\t{' '.join(gram)}"
                if bo is not None:
                    line += f"\t{bo!r}"
                f.write(line + "\n")
        f.write("\n\\end\\\n")


def load_arpa(path) -> NGramModel:
    """Read a model written by save_arpa."""
    smoothing = ""
    order = 0
    logprob: dict[tuple[str, ...], float] = {}
    backoff: dict[tuple[str, ...], float] = {}
    with open(path, encoding="utf-8") as f:
        lines = [ln.rstrip("\n") for ln in f]
    section = 0
    for ln in lines:
        if not ln:
            continue
        if ln.startswith("smoothing:"):
            smoothing = ln.split(":", 1)[1].strip()
        elif ln.startswith("log base:"):
            if ln.split(":", 1)[1].strip() != "e":
                raise ValueError("unsupported log base")
        elif ln == "\\data\\" or ln.startswith("ngram "):
            if ln.startswith("ngram "):
                order = max(order, int(ln.split("=", 1)[0].split()[1]))
        elif ln.endswith("-grams:"):
            section = int(ln[1:].split("-", 1)[0])
        elif ln == "\\end\\":
            break
        elif section:
            parts = ln.split("\t")
            gram = tuple(parts[1].split(" "))
            if not (parts[0] == "-99" and gram[-1] == BOS):
                logprob[gram] = float(parts[0])
            if len(parts) == 3:
                backoff[gram] = float(parts[2])
    if order == 0 or not logprob:
        raise ValueError(f"not a valid ARPA model file: {path}")
    vocab = tuple(sorted(g[0] for g in logprob if len(g) == 1 and g[0] not in (BOS, UNK)))
    return NGramModel(order=order, smoothing=smoothing, vocab=vocab,
                      logprob=logprob, backoff=backoff)


_URL_PREFIXES = ("http://", "https://", "www.")


def tokenize_tweet(line: str) -> list[str]:
    """Lowercase whitespace tokenization dropping URLs, @-mentions and hashtags.

    Hashtags are the prediction target of the segmenter, so they are removed
    from language-model training text entirely.
    """
    out = []
    for tok in line.split():
        low = tok.lower()
        if low.startswith(_URL_PREFIXES) or tok.startswith("@") or tok.startswith("#"):
            continue
        out.append(low)
    return out
