import json

import pytest

from hashseg.cli import run_cli
from hashseg.ngram import load_arpa
from hashseg.synth import write_world


@pytest.fixture(scope="module")
def world_dir(tmp_path_factory, small_world):
    d = tmp_path_factory.mktemp("world")
    write_world(small_world, d)
    return d


@pytest.fixture(scope="module")
def corpus_file(world_dir):
    return world_dir / "tweets.txt"


def read_rows(path):
    return [line.split("\t") for line in path.read_text().splitlines() if line]


class TestTrainLm:
    def test_writes_loadable_arpa(self, tmp_path, corpus_file):
        out = tmp_path / "lm.arpa"
        rc = run_cli(["train-lm", "--order", "3", "--smoothing", "kn",
                      "--in", str(corpus_file), "--out", str(out)])
        assert rc == 0
        model = load_arpa(out)
        assert model.order == 3
        assert model.smoothing == "kneser-ney"

    def test_gt_smoothing(self, tmp_path, corpus_file):
        out = tmp_path / "lm.arpa"
        rc = run_cli(["train-lm", "--order", "2", "--smoothing", "gt",
                      "--in", str(corpus_file), "--out", str(out)])
        assert rc == 0
        assert load_arpa(out).smoothing == "good-turing"

    def test_missing_file_is_error(self, tmp_path):
        rc = run_cli(["train-lm", "--smoothing", "gt",
                      "--in", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "o")])
        assert rc == 1


class TestCandidatesCommand:
    def test_tsv_output(self, tmp_path, world_dir, small_world):
        infile = tmp_path / "tags.txt"
        raws = [r.hashtag.raw for r in small_world.test_records[:3]]
        infile.write_text("\n".join(raws) + "\n")
        out = tmp_path / "cands.tsv"
        rc = run_cli(["candidates", "--lm", str(world_dir / "lm_gt_tweet.arpa"),
                      "--k", "4", "--beam-width", "16",
                      "--in", str(infile), "--out", str(out)])
        assert rc == 0
        rows = read_rows(out)
        assert all(len(r) == 4 for r in rows)
        assert {r[0] for r in rows} == set(raws)
        for raw in raws:
            ranks = [int(r[1]) for r in rows if r[0] == raw]
            assert ranks == list(range(1, len(ranks) + 1))
            scores = [float(r[3]) for r in rows if r[0] == raw]
            assert scores == sorted(scores, reverse=True)

    def test_requires_lm_without_server(self, tmp_path):
        infile = tmp_path / "t.txt"
        infile.write_text("abc\n")
        assert run_cli(["candidates", "--in", str(infile)]) == 1


@pytest.fixture(scope="module")
def trained_model_path(tmp_path_factory, world_dir):
    out = tmp_path_factory.mktemp("model") / "model.json"
    rc = run_cli([
        "train", "--data", str(world_dir / "train.tsv"),
        "--lm", str(world_dir / "lm_gt_tweet.arpa"),
        "--config", str(world_dir / "resources.cfg"),
        "--mode", "mse-mt", "--epochs", "8", "--seed", "3",
        "--beam-width", "16", "--max-word-len", "12",
        "--out", str(out),
    ])
    assert rc == 0
    return out


class TestTrainAndSegment:
    def test_segment_row_cardinality(self, tmp_path, world_dir, trained_model_path, small_world):
        infile = tmp_path / "tags.txt"
        raws = [r.hashtag.raw for r in small_world.test_records[:3]]
        infile.write_text("\n".join(raws) + "\n")
        out = tmp_path / "pred.tsv"
        topk = 4
        rc = run_cli(["segment", "--lm", str(world_dir / "lm_gt_tweet.arpa"),
                      "--model", str(trained_model_path), "--mode", "mse-mt",
                      "--config", str(world_dir / "resources.cfg"),
                      "--topk", str(topk), "--beam-width", "16",
                      "--max-word-len", "12",
                      "--in", str(infile), "--out", str(out)])
        assert rc == 0
        rows = read_rows(out)
        assert len(rows) == 3 * topk
        assert all(len(r) == 3 for r in rows)

    def test_mode_mismatch_errors(self, tmp_path, world_dir, trained_model_path):
        infile = tmp_path / "t.txt"
        infile.write_text("abc\n")
        rc = run_cli(["segment", "--lm", str(world_dir / "lm_gt_tweet.arpa"),
                      "--model", str(trained_model_path), "--mode", "mr",
                      "--in", str(infile)])
        assert rc == 1

    def test_seeded_training_reproducible_bytes(self, tmp_path, world_dir):
        outs = []
        for name in ("m1.json", "m2.json"):
            out = tmp_path / name
            rc = run_cli([
                "train", "--data", str(world_dir / "train.tsv"),
                "--lm", str(world_dir / "lm_gt_tweet.arpa"),
                "--config", str(world_dir / "resources.cfg"),
                "--mode", "mse", "--epochs", "2", "--seed", "5",
                "--beam-width", "12", "--max-word-len", "12",
                "--out", str(out),
            ])
            assert rc == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_segment_output_reproducible_bytes(self, tmp_path, world_dir,
                                               trained_model_path, small_world):
        infile = tmp_path / "tags.txt"
        infile.write_text("\n".join(r.hashtag.raw for r in small_world.test_records[:4]) + "\n")
        outs = []
        for name in ("p1.tsv", "p2.tsv"):
            out = tmp_path / name
            rc = run_cli(["segment", "--lm", str(world_dir / "lm_gt_tweet.arpa"),
                          "--model", str(trained_model_path), "--mode", "mse-mt",
                          "--config", str(world_dir / "resources.cfg"),
                          "--topk", "3", "--beam-width", "16", "--max-word-len", "12",
                          "--in", str(infile), "--out", str(out)])
            assert rc == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_linear_mode(self, tmp_path, world_dir, small_world):
        out = tmp_path / "linear.json"
        rc = run_cli([
            "train", "--data", str(world_dir / "train.tsv"),
            "--lm", str(world_dir / "lm_gt_tweet.arpa"),
            "--config", str(world_dir / "resources.cfg"),
            "--mode", "linear", "--epochs", "3",
            "--beam-width", "12", "--max-word-len", "12",
            "--out", str(out),
        ])
        assert rc == 0
        infile = tmp_path / "t.txt"
        infile.write_text(small_world.test_records[0].hashtag.raw + "\n")
        pred = tmp_path / "p.tsv"
        rc = run_cli(["segment", "--lm", str(world_dir / "lm_gt_tweet.arpa"),
                      "--model", str(out), "--mode", "linear",
                      "--config", str(world_dir / "resources.cfg"),
                      "--topk", "3", "--beam-width", "12", "--max-word-len", "12",
                      "--in", str(infile), "--out", str(pred)])
        assert rc == 0
        assert len(read_rows(pred)) == 3


class TestEvaluateCommand:
    def test_report_written(self, tmp_path):
        gold = tmp_path / "gold.tsv"
        gold.write_text("epicfail\tepic fail\nsnow\tsnow\n")
        pred = tmp_path / "pred.tsv"
        pred.write_text(
            "epicfail\t1\tepic fail\nepicfail\t2\tepicfail\n"
            "snow\t1\tsnow\n"
        )
        out = tmp_path / "report.json"
        rc = run_cli(["evaluate", "--gold", str(gold), "--pred", str(pred),
                      "--out", str(out)])
        assert rc == 0
        report = json.loads(out.read_text())
        assert report["overall"]["a1"] == 1.0
        assert set(report) == {"overall", "multi_token", "single_token"}
        assert set(report["overall"]) == {"a1", "a2", "f1", "mrr", "n"}

    def test_missing_prediction_is_error(self, tmp_path):
        gold = tmp_path / "gold.tsv"
        gold.write_text("epicfail\tepic fail\n")
        pred = tmp_path / "pred.tsv"
        pred.write_text("")
        rc = run_cli(["evaluate", "--gold", str(gold), "--pred", str(pred)])
        assert rc == 1


class TestBaselineCommand:
    def test_original(self, tmp_path):
        infile = tmp_path / "t.txt"
        infile.write_text("#snowfall\n")
        out = tmp_path / "o.tsv"
        rc = run_cli(["baseline", "--method", "original",
                      "--in", str(infile), "--out", str(out)])
        assert rc == 0
        assert read_rows(out) == [["#snowfall", "1", "snowfall"]]

    def test_rule_needs_dict(self, tmp_path):
        infile = tmp_path / "t.txt"
        infile.write_text("thecat\n")
        assert run_cli(["baseline", "--method", "rule", "--in", str(infile)]) == 1
        d = tmp_path / "dict.txt"
        d.write_text("the\ncat\n")
        out = tmp_path / "o.tsv"
        rc = run_cli(["baseline", "--method", "rule", "--dict", str(d),
                      "--in", str(infile), "--out", str(out)])
        assert rc == 0
        assert read_rows(out) == [["thecat", "1", "the cat"]]

    def test_viterbi(self, tmp_path):
        infile = tmp_path / "t.txt"
        infile.write_text("thecat\n")
        freqs = tmp_path / "f.tsv"
        freqs.write_text("the\t100\ncat\t50\n")
        out = tmp_path / "o.tsv"
        rc = run_cli(["baseline", "--method", "viterbi", "--freqs", str(freqs),
                      "--in", str(infile), "--out", str(out)])
        assert rc == 0
        assert read_rows(out) == [["thecat", "1", "the cat"]]


class TestUsage:
    def test_unknown_flag_exits_2(self):
        assert run_cli(["candidates", "--definitely-not-a-flag"]) == 2

    def test_unknown_subcommand_exits_2(self):
        assert run_cli(["frobnicate"]) == 2

    def test_no_args_exits_2(self):
        assert run_cli([]) == 2
