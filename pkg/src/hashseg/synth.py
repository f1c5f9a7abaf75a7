"""Deterministic synthetic corpus, resources and an end-to-end experiment.

Builds a desk-scale world: a pseudo-word vocabulary with Zipfian frequencies,
phrase corpora for language-model training, lexical resources derived from
them, and a hashtag dataset formed by concatenating phrases (with a share of
single-word hashtags).  ``run_experiment`` trains the adaptive multi-task
ranker on that world and writes a model checkpoint plus an evaluation report
comparing it against the beam-search generator baseline.  Everything is a
pure function of the seed.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .candidates import Hashtag, Segmentation, top_k_candidates
from .dataio import DatasetRecord, save_dataset
from .features import ResourcePack, extract_bundle
from .gold import GoldEntry
from .metrics import evaluate_dataset
from .ngram import count_ngrams, fit_good_turing, fit_kneser_ney, save_arpa
from .pipeline import rank_candidates
from .ranker import TrainConfig, build_training_pairs, save_model, train

_CONSONANTS = "bcdfghjklmnpqrstvwxz"
_VOWELS = "aeiou"


def _make_words(rng, n_words: int) -> list[str]:
    """Unique consonant-vowel pseudo-words, 3 to 8 characters."""
    words: list[str] = []
    seen = set()
    while len(words) < n_words:
        length = int(rng.integers(3, 9))
        start_c = bool(rng.integers(0, 2))
        chars = []
        for i in range(length):
            pool = _CONSONANTS if (i % 2 == 0) == start_c else _VOWELS
            chars.append(pool[int(rng.integers(0, len(pool)))])
        w = "".join(chars)
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


@dataclass
class SynthWorld:
    words: list[str]
    tweet_corpus: list[str]
    news_corpus: list[str]
    train_records: list[DatasetRecord]
    test_records: list[DatasetRecord]
    resources: ResourcePack


def _sample_phrases(rng, words, weights, n_lines: int) -> list[str]:
    lengths = rng.integers(2, 4, size=n_lines)
    idx = rng.choice(len(words), size=int(lengths.sum()), p=weights)
    lines = []
    pos = 0
    for ln in lengths:
        lines.append(" ".join(words[i] for i in idx[pos : pos + ln]))
        pos += ln
    return lines


def _sample_records(rng, words, weights, n_records: int, split: str,
                    single_share: float = 0.3, used=None) -> list[DatasetRecord]:
    used = used if used is not None else set()
    n_single = round(n_records * single_share)
    records = []
    while len(records) < n_records:
        if len(records) < n_single:
            gold_words = (words[int(rng.choice(len(words), p=weights))],)
        else:
            ln = int(rng.integers(2, 4))
            gold_words = tuple(
                words[i] for i in rng.choice(len(words), size=ln, p=weights)
            )
        raw = "".join(gold_words)
        if raw in used or len(raw) > 24:
            continue
        used.add(raw)
        records.append(
            DatasetRecord(
                hashtag=Hashtag(raw=raw),
                golds=(Segmentation(words=gold_words),),
                split=split,
            )
        )
    rng.shuffle(records)
    return records


def build_world(
    seed: int,
    n_words: int = 5000,
    n_train: int = 2000,
    n_test: int = 500,
    tweet_lines: int = 30000,
    news_lines: int = 8000,
    order: int = 3,
) -> SynthWorld:
    rng = np.random.default_rng(seed)
    words = _make_words(rng, n_words)
    ranks = np.arange(1, n_words + 1, dtype=float)
    weights = 1.0 / ranks**1.05
    weights /= weights.sum()

    tweet_corpus = _sample_phrases(rng, words, weights, tweet_lines)
    news_corpus = _sample_phrases(rng, words, weights, news_lines)

    used: set[str] = set()
    train_records = _sample_records(rng, words, weights, n_train, "train", used=used)
    test_records = _sample_records(rng, words, weights, n_test, "test", used=used)

    web_counts: Counter = Counter()
    for line in tweet_corpus:
        toks = line.split()
        for n in range(1, order + 1):
            for i in range(len(toks) - n + 1):
                web_counts[" ".join(toks[i : i + n])] += 1

    n_slang = min(400, max(1, n_words // 10))
    slang = frozenset(words[i] for i in rng.choice(n_words, size=n_slang, replace=False))
    phrase_pool = [
        " ".join(r.golds[0].words)
        for r in train_records + test_records
        if r.is_multiword
    ]
    title_idx = rng.choice(len(phrase_pool), size=min(500, len(phrase_pool)), replace=False)
    titles = frozenset(phrase_pool[i] for i in title_idx)

    tweet_counts = count_ngrams(tweet_corpus, order)
    news_counts = count_ngrams(news_corpus, order)
    resources = ResourcePack(
        english_words=frozenset(words),
        slang_words=slang,
        titles=titles,
        web_counts=dict(web_counts),
        lm_gt_tweet=fit_good_turing(tweet_counts),
        lm_kn_tweet=fit_kneser_ney(tweet_counts),
        lm_gt_news=fit_good_turing(news_counts),
        lm_kn_news=fit_kneser_ney(news_counts),
    )
    return SynthWorld(
        words=words,
        tweet_corpus=tweet_corpus,
        news_corpus=news_corpus,
        train_records=train_records,
        test_records=test_records,
        resources=resources,
    )


def write_world(world: SynthWorld, out_dir) -> dict[str, Path]:
    """Write corpora, resource files, LMs and dataset TSVs; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    def _write(name, lines):
        p = out / name
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths[name] = p
        return p

    _write("tweets.txt", world.tweet_corpus)
    _write("news.txt", world.news_corpus)
    _write("english.txt", sorted(world.resources.english_words))
    _write("slang.txt", sorted(world.resources.slang_words))
    _write("titles.txt", sorted(world.resources.titles))
    _write(
        "web_counts.tsv",
        [f"{k}\t{v}" for k, v in sorted(world.resources.web_counts.items())],
    )
    for name, model in (
        ("lm_gt_tweet.arpa", world.resources.lm_gt_tweet),
        ("lm_kn_tweet.arpa", world.resources.lm_kn_tweet),
        ("lm_gt_news.arpa", world.resources.lm_gt_news),
        ("lm_kn_news.arpa", world.resources.lm_kn_news),
    ):
        save_arpa(model, out / name)
        paths[name] = out / name
    save_dataset(world.train_records, out / "train.tsv")
    save_dataset(world.test_records, out / "test.tsv")
    paths["train.tsv"] = out / "train.tsv"
    paths["test.tsv"] = out / "test.tsv"

    config_lines = [
        "english_dictionary = english.txt",
        "slang_dictionary = slang.txt",
        "wikipedia_titles = titles.txt",
        "web_ngram_counts = web_counts.tsv",
        "lm_gt_tweet = lm_gt_tweet.arpa",
        "lm_kn_tweet = lm_kn_tweet.arpa",
        "lm_gt_news = lm_gt_news.arpa",
        "lm_kn_news = lm_kn_news.arpa",
    ]
    _write("resources.cfg", config_lines)
    return paths


def run_experiment(
    out_dir,
    seed: int = 7,
    mode: str = "mse-mt",
    epochs: int = 100,
    k: int = 10,
    beam_width: int = 20,
    max_word_len: int = 12,
    world: SynthWorld | None = None,
) -> dict:
    """Train on the synthetic world and report held-out metrics.

    Writes ``model.json`` and ``report.json`` into out_dir; returns the
    report.  Byte-identical outputs for identical seeds.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if world is None:
        world = build_world(seed)
    res = world.resources
    lm = res.lm_gt_tweet  # the generator ranks with the Good-Turing tweet LM

    def candidates_for(record):
        return top_k_candidates(record.hashtag, lm, k=k, beam_width=beam_width,
                                max_word_len=max_word_len)

    pairs = []
    for record in world.train_records:
        cand_set = candidates_for(record)
        bundle = extract_bundle(record.hashtag, cand_set, res)
        pairs.extend(build_training_pairs(cand_set, record.to_gold_entry(), bundle))

    config = TrainConfig(mode=mode, epochs=epochs, k=k, seed=seed)
    model = train(pairs, config)
    save_model(model, out / "model.json")

    ranker_outputs: dict[str, list[Segmentation]] = {}
    wb_outputs: dict[str, list[Segmentation]] = {}
    gate_correct = 0
    entries: list[GoldEntry] = []
    for record in world.test_records:
        cand_set = candidates_for(record)
        bundle = extract_bundle(record.hashtag, cand_set, res)
        ranked = rank_candidates(model, cand_set, bundle)
        ranker_outputs[record.hashtag.raw] = ranked
        wb_outputs[record.hashtag.raw] = cand_set.segmentations
        entries.append(record.to_gold_entry())
        if model.gate is not None:
            predicted_multi = model.gate_value(bundle.hashtag_vec) >= 0.5
            gate_correct += int(predicted_multi == record.is_multiword)

    report = {
        "seed": seed,
        "mode": mode,
        "n_train": len(world.train_records),
        "n_test": len(world.test_records),
        "ranker": evaluate_dataset(ranker_outputs, entries),
        "word_breaker": evaluate_dataset(wb_outputs, entries),
        "classifier_accuracy": (
            gate_correct / len(world.test_records) if model.gate is not None else None
        ),
    }
    with open(out / "report.json", "w", encoding="utf-8") as f:
        json.dump(report, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")
    return report
