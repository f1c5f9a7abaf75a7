"""Feature extraction for candidate segmentations and hashtags.

Candidate features split into two named subsets: the KN subset (modified
Kneser-Ney language-model scores) and the GL subset (Good-Turing scores plus
lexical, linguistic and word-shape features).  Hashtag-level features feed
the single- vs. multi-word classifier.  Extraction is pure: the same inputs
always produce the same vectors.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .candidates import CandidateSet, Hashtag, Segmentation
from .ngram import NGramModel, score_segmentation

VOWELS = frozenset("aeiou")

KN_FEATURES = ("lm_kn_tweet", "lm_kn_news")
GL_FEATURES = (
    "word_count",
    "word_len_min",
    "word_len_max",
    "word_len_mean",
    "dict_fraction",
    "slang_fraction",
    "web_count_log",
    "lm_gt_tweet",
    "lm_gt_news",
    "is_title",
    "shape_camel",
    "shape_consonants",
    "shape_digit_prefix",
    "shape_digit_suffix",
    "shape_underscore",
)
HASHTAG_FEATURES = (
    "length",
    "web_count_log",
    "in_dict",
    "in_slang",
    "is_title",
    "has_camel",
    "ends_with_digit",
    "all_consonants",
    "best_lm_gt_tweet",
    "best_lm_gt_news",
    "best_lm_kn_tweet",
    "best_lm_kn_news",
)
BOOLEAN_FEATURES = frozenset(
    {
        "is_title",
        "shape_camel",
        "shape_consonants",
        "shape_digit_prefix",
        "shape_digit_suffix",
        "shape_underscore",
        "in_dict",
        "in_slang",
        "has_camel",
        "ends_with_digit",
        "all_consonants",
    }
)


@dataclass(frozen=True)
class FeatureLayout:
    """Fixed feature-name ordering; its hash travels with trained models."""

    kn_names: tuple[str, ...] = KN_FEATURES
    gl_names: tuple[str, ...] = GL_FEATURES
    hashtag_names: tuple[str, ...] = HASHTAG_FEATURES

    def __post_init__(self):
        names = self.kn_names + self.gl_names
        if len(set(names)) != len(names):
            raise ValueError("duplicate feature names across KN and GL subsets")

    @property
    def candidate_names(self) -> tuple[str, ...]:
        return self.kn_names + self.gl_names

    @property
    def kn_dim(self) -> int:
        return len(self.kn_names)

    @property
    def gl_dim(self) -> int:
        return len(self.gl_names)

    @property
    def hashtag_dim(self) -> int:
        return len(self.hashtag_names)

    def candidate_bool_mask(self) -> np.ndarray:
        return np.array([n in BOOLEAN_FEATURES for n in self.candidate_names])

    def hashtag_bool_mask(self) -> np.ndarray:
        return np.array([n in BOOLEAN_FEATURES for n in self.hashtag_names])

    @property
    def hash(self) -> str:
        payload = json.dumps(
            {"kn": self.kn_names, "gl": self.gl_names, "hashtag": self.hashtag_names},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "kn": list(self.kn_names),
            "gl": list(self.gl_names),
            "hashtag": list(self.hashtag_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureLayout":
        return cls(
            kn_names=tuple(d["kn"]),
            gl_names=tuple(d["gl"]),
            hashtag_names=tuple(d["hashtag"]),
        )


DEFAULT_LAYOUT = FeatureLayout()


@dataclass
class ResourcePack:
    """Local lexical resources plus the four feature language models."""

    english_words: frozenset
    slang_words: frozenset
    titles: frozenset
    web_counts: dict[str, int]
    lm_gt_tweet: NGramModel
    lm_kn_tweet: NGramModel
    lm_gt_news: NGramModel
    lm_kn_news: NGramModel
    squashed_titles: frozenset = field(default=frozenset())

    def __post_init__(self):
        if not self.squashed_titles:
            self.squashed_titles = frozenset(t.replace(" ", "") for t in self.titles)

    def web_log_count(self, phrase: str) -> float:
        return math.log1p(self.web_counts.get(phrase.casefold(), 0))


class WordShapeFlags(NamedTuple):
    camel: bool
    consonants: bool
    digit_prefix: bool
    digit_suffix: bool
    underscore: bool


def _camel_boundaries(raw: str) -> tuple[int, ...]:
    return tuple(
        i
        for i in range(1, len(raw))
        if raw[i - 1].isalpha() and raw[i - 1].islower() and raw[i].isupper()
    )


def has_camel_case(raw: str) -> bool:
    return bool(_camel_boundaries(raw))


def is_all_consonants(raw: str) -> bool:
    return raw.isalpha() and not any(c.lower() in VOWELS for c in raw)


def word_shape_flags(hashtag: Hashtag, seg: Segmentation) -> WordShapeFlags:
    """Boolean word-shape rules matched by the (hashtag, segmentation) pair.

    camel: the split is exactly at the lower-to-upper case changes.
    consonants: an all-consonant hashtag kept as a single token.
    digit_prefix / digit_suffix: a leading/trailing digit run split off.
    underscore: each word is exactly one inter-underscore run.
    """
    raw = hashtag.raw
    joined = hashtag.joined
    boundaries = seg.boundaries

    camel_pos = _camel_boundaries(joined)
    camel = bool(camel_pos) and boundaries == camel_pos

    consonants = is_all_consonants(raw) and len(seg.words) == 1

    digit_prefix = False
    lead = len(joined) - len(joined.lstrip("0123456789"))
    if 0 < lead < len(joined):
        digit_prefix = len(seg.words) == 2 and boundaries == (lead,)

    digit_suffix = False
    trail = len(joined) - len(joined.rstrip("0123456789"))
    if 0 < trail < len(joined):
        digit_suffix = len(seg.words) == 2 and boundaries == (len(joined) - trail,)

    underscore = "_" in raw and seg.key() == tuple(r.casefold() for r in hashtag.runs)

    return WordShapeFlags(camel, consonants, digit_prefix, digit_suffix, underscore)


@dataclass(frozen=True)
class CandidateFeatures:
    """Raw (unstandardized) feature vectors for one candidate."""

    kn: np.ndarray
    gl: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([self.kn, self.gl])


def _lm_score(model: NGramModel, seg: Segmentation) -> float:
    return score_segmentation(model, seg.key())


def candidate_features(
    hashtag: Hashtag, seg: Segmentation, res: ResourcePack
) -> CandidateFeatures:
    """KN and GL feature vectors for one candidate segmentation."""
    words = seg.key()
    lens = [len(w) for w in words]
    n = len(words)
    in_dict = sum(w in res.english_words for w in words)
    in_slang = sum(w in res.slang_words for w in words)
    joined = " ".join(words)
    shapes = word_shape_flags(hashtag, seg)

    gl = np.array(
        [
            float(n),
            float(min(lens)),
            float(max(lens)),
            sum(lens) / n,
            in_dict / n,
            in_slang / n,
            res.web_log_count(joined),
            _lm_score(res.lm_gt_tweet, seg),
            _lm_score(res.lm_gt_news, seg),
            float(joined in res.titles),
            float(shapes.camel),
            float(shapes.consonants),
            float(shapes.digit_prefix),
            float(shapes.digit_suffix),
            float(shapes.underscore),
        ]
    )
    kn = np.array([_lm_score(res.lm_kn_tweet, seg), _lm_score(res.lm_kn_news, seg)])
    return CandidateFeatures(kn=kn, gl=gl)


def hashtag_features(
    hashtag: Hashtag, res: ResourcePack, wb_best: Segmentation
) -> np.ndarray:
    """Hashtag-level vector for the single- vs. multi-word classifier.

    Includes the language-model scores of the generator's best candidate.
    """
    low = hashtag.norm
    return np.array(
        [
            float(hashtag.length),
            res.web_log_count(low),
            float(low in res.english_words),
            float(low in res.slang_words),
            float(low in res.titles or low in res.squashed_titles),
            float(has_camel_case(hashtag.raw)),
            float(hashtag.raw[-1].isdigit()),
            float(is_all_consonants(hashtag.raw)),
            _lm_score(res.lm_gt_tweet, wb_best),
            _lm_score(res.lm_gt_news, wb_best),
            _lm_score(res.lm_kn_tweet, wb_best),
            _lm_score(res.lm_kn_news, wb_best),
        ]
    )


@dataclass
class FeatureBundle:
    """All feature vectors for one hashtag's candidate set."""

    layout: FeatureLayout
    hashtag_vec: np.ndarray
    candidates: list[CandidateFeatures]


def extract_bundle(
    hashtag: Hashtag,
    cand_set: CandidateSet,
    res: ResourcePack,
    layout: FeatureLayout = DEFAULT_LAYOUT,
) -> FeatureBundle:
    feats = [candidate_features(hashtag, seg, res) for seg in cand_set.segmentations]
    hvec = hashtag_features(hashtag, res, cand_set.best)
    return FeatureBundle(layout=layout, hashtag_vec=hvec, candidates=feats)
