"""Dataset, resource and configuration file ingestion.

Dataset rows are tab-separated: ``hashtag<TAB>gold1[||gold2][<TAB>tweet]``.
A one-gold-per-row variant is also accepted; rows sharing a hashtag are
merged (up to two distinct golds).  Gold segmentations are space-separated
words that must reconstruct the hashtag.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .candidates import Hashtag, Segmentation, parse_hashtag
from .features import ResourcePack
from .gold import GoldEntry
from .ngram import load_arpa

SEED_ENV_VAR = "HASHSEG_SEED"

SPLITS = ("train", "dev", "test")


@dataclass
class DatasetRecord:
    hashtag: Hashtag
    golds: tuple[Segmentation, ...]
    tweet: str | None = None
    split: str = "test"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"invalid split tag: {self.split!r}")

    def to_gold_entry(self) -> GoldEntry:
        return GoldEntry(hashtag=self.hashtag, golds=self.golds)

    @property
    def is_multiword(self) -> bool:
        return any(len(g.words) > 1 for g in self.golds)


def _parse_gold(text: str, hashtag: Hashtag, path, lineno: int) -> Segmentation:
    words = tuple(w for w in text.split(" ") if w)
    if not words:
        raise ValueError(f"{path}:{lineno}: empty gold segmentation")
    seg = Segmentation(words=words)
    if not seg.reconstructs(hashtag):
        raise ValueError(
            f"{path}:{lineno}: gold {text!r} does not reconstruct hashtag {hashtag.raw!r}"
        )
    return seg


def load_dataset(path, split: str = "test", strict: bool = True) -> list[DatasetRecord]:
    """Load dataset records from a TSV file.

    With strict=False, records whose hashtag fails the alphanumeric-plus-
    underscore alphabet are skipped and counted instead of raising.
    """
    records: dict[str, DatasetRecord] = {}
    skipped = 0
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2 or len(parts) > 3:
                raise ValueError(f"{path}:{lineno}: malformed line (expected 2-3 fields)")
            try:
                hashtag = parse_hashtag(parts[0])
            except ValueError:
                if strict:
                    raise ValueError(f"{path}:{lineno}: invalid hashtag {parts[0]!r}")
                skipped += 1
                continue
            golds = tuple(
                _parse_gold(g, hashtag, path, lineno) for g in parts[1].split("||") if g
            )
            if not golds:
                raise ValueError(f"{path}:{lineno}: no gold segmentation")
            if len(golds) > 2:
                raise ValueError(
                    f"{path}:{lineno}: more than two golds for hashtag {hashtag.raw!r}"
                )
            tweet = parts[2] if len(parts) == 3 else None
            prev = records.get(hashtag.raw)
            if prev is None:
                records[hashtag.raw] = DatasetRecord(
                    hashtag=hashtag, golds=golds, tweet=tweet, split=split
                )
                continue
            # one-gold-per-row variant: merge distinct golds for the hashtag
            merged = list(prev.golds)
            for g in golds:
                if any(g.key() == old.key() for old in merged):
                    raise ValueError(
                        f"{path}:{lineno}: duplicate hashtag {hashtag.raw!r} in split"
                    )
                merged.append(g)
            if len(merged) > 2:
                raise ValueError(
                    f"{path}:{lineno}: more than two golds for hashtag {hashtag.raw!r}"
                )
            records[hashtag.raw] = DatasetRecord(
                hashtag=hashtag, golds=tuple(merged), tweet=prev.tweet, split=split
            )
    if skipped:
        import logging

        logging.getLogger(__name__).info("skipped %d non-conforming records", skipped)
    return list(records.values())


def save_dataset(records, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            golds = "||".join(g.text for g in r.golds)
            line = f"{r.hashtag.raw}\t{golds}"
            if r.tweet is not None:
                line += f"\t{r.tweet}"
            f.write(line + "\n")


def load_word_list(path) -> frozenset:
    out = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            w = line.strip().casefold()
            if w:
                out.add(w)
    return frozenset(out)


def load_count_table(path) -> dict[str, int]:
    """TSV ``ngram<TAB>count``; keys casefolded."""
    out: dict[str, int] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'ngram<TAB>count'")
            out[parts[0].casefold()] = int(parts[1])
    return out


_PATH_KEYS = (
    "english_dictionary",
    "slang_dictionary",
    "wikipedia_titles",
    "web_ngram_counts",
    "lm_gt_tweet",
    "lm_kn_tweet",
    "lm_gt_news",
    "lm_kn_news",
)
_INT_KEYS = ("k", "beam_width", "max_word_len", "epochs", "seed", "order")
_FLOAT_KEYS = ("lr_ranker", "lr_classifier", "dropout", "lambda_rank", "lambda_aux")


@dataclass
class Config:
    """Key = value configuration naming resources and run parameters.

    All referenced paths must exist at load time.  The seed can be overridden
    by the HASHSEG_SEED environment variable.
    """

    paths: dict[str, Path] = field(default_factory=dict)
    values: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "Config":
        base = Path(path).parent
        paths: dict[str, Path] = {}
        values: dict = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value'")
                key, _, value = line.partition("=")
                key = key.strip()
                value = value.strip()
                if key in _PATH_KEYS:
                    p = Path(value)
                    if not p.is_absolute():
                        p = base / p
                    if not p.exists():
                        raise ValueError(f"{path}:{lineno}: missing file for {key}: {p}")
                    paths[key] = p
                elif key in _INT_KEYS:
                    values[key] = int(value)
                elif key in _FLOAT_KEYS:
                    values[key] = float(value)
                else:
                    values[key] = value
        if SEED_ENV_VAR in os.environ:
            values["seed"] = int(os.environ[SEED_ENV_VAR])
        return cls(paths=paths, values=values)

    def get(self, key, default=None):
        return self.values.get(key, default)


def load_resources(config: Config) -> ResourcePack:
    missing = [k for k in _PATH_KEYS if k not in config.paths]
    if missing:
        raise ValueError(f"config missing resource paths: {', '.join(missing)}")
    return ResourcePack(
        english_words=load_word_list(config.paths["english_dictionary"]),
        slang_words=load_word_list(config.paths["slang_dictionary"]),
        titles=load_word_list(config.paths["wikipedia_titles"]),
        web_counts=load_count_table(config.paths["web_ngram_counts"]),
        lm_gt_tweet=load_arpa(config.paths["lm_gt_tweet"]),
        lm_kn_tweet=load_arpa(config.paths["lm_kn_tweet"]),
        lm_gt_news=load_arpa(config.paths["lm_gt_news"]),
        lm_kn_news=load_arpa(config.paths["lm_kn_news"]),
    )
