"""Command-line interface.

Subcommands: train-lm, candidates, train, segment, evaluate, baseline, serve.
All pipeline logic lives in the library; this module parses arguments, wires
files together and formats TSV.  ``candidates`` and ``segment`` can also act
as thin clients of a running service via --server.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import defaultdict
from pathlib import Path

from . import baselines, dataio, metrics, ngram, pipeline, ranker
from .candidates import Segmentation, parse_hashtag, top_k_candidates
from .dataio import SEED_ENV_VAR
from .features import DEFAULT_LAYOUT, ResourcePack, extract_bundle
from .ranker import MODES, build_training_pairs

LINEAR_MODE = "linear"


def _read_hashtags(args) -> list[str]:
    stream = open(args.infile, encoding="utf-8") if args.infile else sys.stdin
    try:
        return [line.strip() for line in stream if line.strip()]
    finally:
        if args.infile:
            stream.close()


def _open_out(args):
    return open(args.out, "w", encoding="utf-8") if args.out else sys.stdout


def _close_out(f):
    if f is not sys.stdout:
        f.close()


def _make_client(server: str):
    import httpx

    return httpx.Client(base_url=server, timeout=300.0)


def _post(server: str, path: str, payload: dict) -> dict:
    with _make_client(server) as client:
        resp = client.post(path, json=payload)
        resp.raise_for_status()
        return resp.json()


def _minimal_resources(lm) -> ResourcePack:
    """Resource pack backed only by the generator LM; used when no config is given."""
    return ResourcePack(
        english_words=frozenset(),
        slang_words=frozenset(),
        titles=frozenset(),
        web_counts={},
        lm_gt_tweet=lm,
        lm_kn_tweet=lm,
        lm_gt_news=lm,
        lm_kn_news=lm,
    )


def _resources_from(args, lm) -> ResourcePack:
    if getattr(args, "config", None):
        return dataio.load_resources(dataio.Config.load(args.config))
    return _minimal_resources(lm)


def _seed_from(args) -> int:
    if SEED_ENV_VAR in os.environ:
        return int(os.environ[SEED_ENV_VAR])
    return args.seed


def _cmd_train_lm(args) -> int:
    with open(args.infile, encoding="utf-8") as f:
        if args.raw:
            sentences = [line.split() for line in f]
        else:
            sentences = [ngram.tokenize_tweet(line) for line in f]
    counts = ngram.count_ngrams((s for s in sentences if s), args.order)
    model = ngram.fit(counts, args.smoothing)
    ngram.save_arpa(model, args.out)
    print(f"wrote {args.smoothing} {args.order}-gram model to {args.out}", file=sys.stderr)
    return 0


def _cmd_candidates(args) -> int:
    hashtags = _read_hashtags(args)
    out = _open_out(args)
    try:
        if args.server:
            data = _post(args.server, "/candidates", {"hashtags": hashtags, "k": args.k})
            for result in data["results"]:
                if result.get("error"):
                    raise ValueError(f"{result['hashtag']}: {result['error']}")
                for c in result["candidates"]:
                    out.write(
                        f"{result['hashtag']}\t{c['rank']}\t{c['segmentation']}\t{c['score']}\n"
                    )
            return 0
        if not args.lm:
            raise ValueError("--lm is required unless --server is given")
        lm = ngram.load_arpa(args.lm)
        engine = pipeline.Engine(
            lm=lm, resources=_minimal_resources(lm), k=args.k,
            beam_width=max(args.beam_width, args.k), max_word_len=args.max_word_len,
        )
        for raw in hashtags:
            cand_set = engine.candidates(raw)
            for rank, (seg, score) in enumerate(cand_set.candidates, 1):
                out.write(f"{raw}\t{rank}\t{seg.text}\t{score}\n")
        return 0
    finally:
        _close_out(out)


def _load_ranker(args):
    if args.mode == LINEAR_MODE:
        linear, layout = baselines.load_linear_ranker(args.model)
        return ("linear", linear, layout)
    model = ranker.load_model(args.model)
    if model.mode != args.mode:
        raise ValueError(f"model mode is {model.mode!r}, requested {args.mode!r}")
    return ("neural", model, model.layout)


def _cmd_segment(args) -> int:
    hashtags = _read_hashtags(args)
    out = _open_out(args)
    try:
        if args.server:
            data = _post(args.server, "/segment", {"hashtags": hashtags, "k": args.topk})
            for result in data["results"]:
                if result.get("error"):
                    raise ValueError(f"{result['hashtag']}: {result['error']}")
                for s in result["segmentations"]:
                    out.write(f"{result['hashtag']}\t{s['rank']}\t{s['segmentation']}\n")
            return 0
        if not args.lm or not args.model:
            raise ValueError("--lm and --model are required unless --server is given")
        kind, model, layout = _load_ranker(args)
        lm = ngram.load_arpa(args.lm)
        res = _resources_from(args, lm)
        for raw in hashtags:
            hashtag = parse_hashtag(raw)
            cand_set = top_k_candidates(
                hashtag, lm, k=args.topk,
                beam_width=max(args.beam_width, args.topk),
                max_word_len=args.max_word_len,
            )
            if kind == "linear":
                bundle = extract_bundle(hashtag, cand_set, res, layout)
                order = model.rank([f.full for f in bundle.candidates])
                ranked = [cand_set.segmentations[i] for i in order]
            else:
                bundle = extract_bundle(hashtag, cand_set, res, model.layout)
                ranked = pipeline.rank_candidates(model, cand_set, bundle)
            for rank, seg in enumerate(ranked, 1):
                out.write(f"{raw}\t{rank}\t{seg.text}\n")
        return 0
    finally:
        _close_out(out)


def _cmd_train(args) -> int:
    records = dataio.load_dataset(args.data, split="train", strict=False)
    if not records:
        raise ValueError(f"no training records in {args.data}")
    lm = ngram.load_arpa(args.lm)
    res = _resources_from(args, lm)
    seed = _seed_from(args)
    pairs = []
    for record in records:
        cand_set = top_k_candidates(
            record.hashtag, lm, k=args.k,
            beam_width=max(args.beam_width, args.k), max_word_len=args.max_word_len,
        )
        bundle = extract_bundle(record.hashtag, cand_set, res)
        pairs.extend(
            build_training_pairs(
                cand_set, record.to_gold_entry(), bundle,
                ordered=not args.unordered_pairs,
            )
        )
    if args.mode == LINEAR_MODE:
        linear = baselines.train_linear_ranker(
            pairs, DEFAULT_LAYOUT, epochs=args.epochs, seed=seed
        )
        baselines.save_linear_ranker(linear, DEFAULT_LAYOUT, args.out)
    else:
        config = ranker.TrainConfig(
            mode=args.mode, epochs=args.epochs, dropout=args.dropout,
            k=args.k, seed=seed,
        )
        model = ranker.train(pairs, config)
        ranker.save_model(model, args.out)
    print(f"trained {args.mode} model on {len(records)} hashtags -> {args.out}",
          file=sys.stderr)
    return 0


def _cmd_evaluate(args) -> int:
    records = dataio.load_dataset(args.gold, strict=False)
    entries = [r.to_gold_entry() for r in records]
    grouped: dict[str, list[tuple[int, str]]] = defaultdict(list)
    with open(args.pred, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise ValueError(f"{args.pred}:{lineno}: expected hashtag/rank/segmentation")
            grouped[parts[0].lstrip("#")].append((int(parts[1]), parts[2]))
    outputs = {
        tag: [Segmentation(words=tuple(text.split())) for _, text in sorted(rows)]
        for tag, rows in grouped.items()
    }
    report = metrics.evaluate_dataset(outputs, entries)
    payload = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    return 0


def _cmd_baseline(args) -> int:
    hashtags = _read_hashtags(args)
    out = _open_out(args)
    try:
        if args.method == "original":
            segment = lambda h: baselines.original_hashtag(h)
        elif args.method == "rule":
            if not args.dict:
                raise ValueError("--dict is required for the rule-based baseline")
            dictionary = dataio.load_word_list(args.dict)
            segment = lambda h: baselines.rule_based_segment(h, dictionary)
        else:  # viterbi
            if not args.freqs:
                raise ValueError("--freqs is required for the viterbi baseline")
            freqs = dataio.load_count_table(args.freqs)
            segment = lambda h: baselines.viterbi_segment(h, freqs)
        for raw in hashtags:
            seg = segment(parse_hashtag(raw))
            out.write(f"{raw}\t1\t{seg.text}\n")
        return 0
    finally:
        _close_out(out)


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    lm = ngram.load_arpa(args.lm)
    model = ranker.load_model(args.model) if args.model else None
    engine = pipeline.Engine(
        lm=lm, resources=_resources_from(args, lm), model=model,
        k=args.k, beam_width=max(args.beam_width, args.k),
        max_word_len=args.max_word_len,
    )
    uvicorn.run(create_app(engine), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hashseg",
                                     description="Hashtag segmentation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-lm", help="train an n-gram language model")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--smoothing", choices=["gt", "kn", "good-turing", "kneser-ney"],
                   required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--raw", action="store_true",
                   help="skip tweet normalization; split on whitespace only")
    p.set_defaults(func=_cmd_train_lm)

    p = sub.add_parser("candidates", help="top-k candidate segmentations")
    p.add_argument("--lm")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--beam-width", type=int, default=100)
    p.add_argument("--max-word-len", type=int, default=None)
    p.add_argument("--in", dest="infile")
    p.add_argument("--out")
    p.add_argument("--server", help="delegate to a running service at this base URL")
    p.set_defaults(func=_cmd_candidates)

    p = sub.add_parser("train", help="train a pairwise ranking model")
    p.add_argument("--data", required=True)
    p.add_argument("--lm", required=True)
    p.add_argument("--config")
    p.add_argument("--mode", choices=list(MODES) + [LINEAR_MODE], default="mse-mt")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--beam-width", type=int, default=100)
    p.add_argument("--max-word-len", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--unordered-pairs", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("segment", help="segment hashtags end to end")
    p.add_argument("--lm")
    p.add_argument("--model")
    p.add_argument("--mode", choices=list(MODES) + [LINEAR_MODE], default="mse-mt")
    p.add_argument("--topk", type=int, default=10)
    p.add_argument("--beam-width", type=int, default=100)
    p.add_argument("--max-word-len", type=int, default=None)
    p.add_argument("--config")
    p.add_argument("--in", dest="infile")
    p.add_argument("--out")
    p.add_argument("--server", help="delegate to a running service at this base URL")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("evaluate", help="score predictions against gold data")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("baseline", help="run a reference segmenter")
    p.add_argument("--method", choices=["original", "rule", "viterbi"], required=True)
    p.add_argument("--dict")
    p.add_argument("--freqs")
    p.add_argument("--in", dest="infile")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("serve", help="run the segmentation service")
    p.add_argument("--lm", required=True)
    p.add_argument("--model")
    p.add_argument("--config")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--beam-width", type=int, default=100)
    p.add_argument("--max-word-len", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
