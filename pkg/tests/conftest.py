import numpy as np
import pytest

from hashseg.ngram import count_ngrams, fit_good_turing

_ACCEPTANCE_RESULTS = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if "test_acceptance" in item.nodeid and "criterion" in item.name:
        status = None
        if rep.when == "call":
            status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        elif rep.when == "setup" and rep.outcome in ("failed", "skipped"):
            status = "FAIL" if rep.outcome == "failed" else "SKIP"
        if status:
            _ACCEPTANCE_RESULTS.append((item.name, status))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status in sorted(set(_ACCEPTANCE_RESULTS)):
        terminalreporter.write_line(f"{status}  {name}")
from hashseg.ranker import TrainConfig, build_training_pairs, train
from hashseg.candidates import top_k_candidates
from hashseg.features import extract_bundle
from hashseg.synth import build_world


@pytest.fixture(scope="session")
def small_world():
    """A small deterministic synthetic world shared across integration tests."""
    return build_world(seed=5, n_words=800, n_train=60, n_test=30,
                       tweet_lines=3000, news_lines=1000)


@pytest.fixture(scope="session")
def small_pairs(small_world):
    res = small_world.resources
    pairs = []
    per_record = []
    for record in small_world.train_records:
        cand_set = top_k_candidates(record.hashtag, res.lm_gt_tweet, k=10,
                                    beam_width=20, max_word_len=12)
        bundle = extract_bundle(record.hashtag, cand_set, res)
        entry = record.to_gold_entry()
        p = build_training_pairs(cand_set, entry, bundle)
        pairs.extend(p)
        per_record.append((record, cand_set, bundle, entry))
    return pairs, per_record


@pytest.fixture(scope="session")
def small_model(small_pairs):
    pairs, _ = small_pairs
    return train(pairs, TrainConfig(mode="mse-mt", epochs=15, seed=1))


@pytest.fixture(scope="session")
def tiny_lm():
    """Trigram Good-Turing model over a tiny themed corpus."""
    rng = np.random.default_rng(11)
    vocab = ["the", "cat", "sat", "on", "a", "mat", "snow", "fall",
             "epic", "fail", "home", "sweet", "dog", "ran", "fast"]
    corpus = [
        " ".join(rng.choice(vocab, size=rng.integers(2, 6)))
        for _ in range(300)
    ]
    corpus += ["snow fall", "epic fail", "home sweet home", "the cat sat"] * 10
    return fit_good_turing(count_ngrams(corpus, 3))
