"""Command-line front end.

Subcommands: align, eval, refine, sweep, prep-mask, bench, heatmap.
Every command is deterministic given (inputs, flags, seed); a JSON run
manifest with input digests is written next to each output unless
--no-manifest is given.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .corpus_io import (
    AlignmentSet,
    PairEmbeddings,
    parse_gold_alignments,
    parse_parallel_corpus,
    read_embedding_container,
    write_alignments,
    write_embedding_container,
)
from .errors import EmbalignError
from .evaluate import benchmark, score_corpus, score_corpus_macro, threshold_sweep
from .objectives import RefinementConfig, mlm_mask, psi_sample, refine_embeddings, tlm_concat
from .pipeline import extract_word_alignment
from .align_core import similarity_matrix
from .symmetrize import ExtractionConfig


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_path: Path, args: argparse.Namespace, inputs: list[Path],
                    elapsed: float) -> None:
    if getattr(args, "no_manifest", False):
        return
    manifest = {
        "tool": "embalign",
        "version": __version__,
        "command": args.command,
        "config": {k: v for k, v in vars(args).items()
                   if k not in ("func", "command") and not isinstance(v, Path)},
        "inputs": {str(p): _sha256(p) for p in inputs},
        "elapsed_seconds": elapsed,
    }
    Path(str(out_path) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8"
    )


def _load_corpus_with_embeddings(corpus_path: Path, emb_path: Path,
                                 skip_list: Path | None = None):
    pairs = parse_parallel_corpus(corpus_path.read_text(encoding="utf-8"))
    if skip_list is not None:
        skipped = {int(line) for line in skip_list.read_text().split()}
        pairs = [p for i, p in enumerate(pairs) if i not in skipped]
    records = read_embedding_container(emb_path.read_bytes())
    if len(pairs) != len(records):
        raise EmbalignError(
            f"corpus has {len(pairs)} pairs but container has {len(records)}"
        )
    data = []
    for pair, (src_map, tgt_map, emb) in zip(pairs, records):
        pair.src_subword_to_word = src_map
        pair.tgt_subword_to_word = tgt_map
        # re-validate maps against the word counts
        pair.__post_init__()
        data.append((pair, emb))
    return data


def _extraction_config(args: argparse.Namespace) -> ExtractionConfig:
    method = {"softmax": "softmax", "entmax": "entmax15", "entmax15": "entmax15",
              "ot": "ot"}[args.method]
    return ExtractionConfig(
        method=method,
        threshold=args.threshold,
        symmetrization=getattr(args, "symmetrization", "intersect"),
        final_and=getattr(args, "final_and", False),
        ot_metric=getattr(args, "ot_metric", "cosine"),
        ot_epsilon=getattr(args, "ot_eps", 0.1),
    )


def cmd_align(args: argparse.Namespace) -> None:
    start = time.perf_counter()
    data = _load_corpus_with_embeddings(args.corpus, args.embeddings,
                                        skip_list=args.skip_list)
    cfg = _extraction_config(args)
    hyps = []
    for index, (pair, emb) in enumerate(data):
        try:
            hyps.append(extract_word_alignment(pair, emb, cfg))
        except EmbalignError as exc:
            raise EmbalignError(f"pair {index}: {exc}") from exc
    args.out.write_text(write_alignments(hyps, one_indexed=args.one_indexed),
                        encoding="utf-8")
    _write_manifest(args.out, args, [args.corpus, args.embeddings],
                    time.perf_counter() - start)


def cmd_eval(args: argparse.Namespace) -> None:
    hyps = parse_gold_alignments(args.hyp.read_text(encoding="utf-8"),
                                 one_indexed=args.one_indexed)
    golds = parse_gold_alignments(args.gold.read_text(encoding="utf-8"),
                                  one_indexed=args.one_indexed)
    result = score_corpus(hyps, golds)
    payload = result.as_dict()
    if args.macro:
        payload["macro_aer"] = score_corpus_macro(hyps, golds)
    if args.json:
        print(json.dumps(payload))
    else:
        for key, value in payload.items():
            print(f"{key}={value:.6f}" if isinstance(value, float) else f"{key}={value}")


def cmd_refine(args: argparse.Namespace) -> None:
    start = time.perf_counter()
    data = _load_corpus_with_embeddings(args.corpus, args.embeddings)
    cfg = RefinementConfig(
        beta=args.beta,
        steps=args.steps,
        learning_rate=args.lr,
        method={"softmax": "softmax", "entmax": "entmax15", "entmax15": "entmax15"}[args.method],
        threshold=args.threshold,
    )
    supervised = None
    if args.gold is not None:
        supervised = parse_gold_alignments(args.gold.read_text(encoding="utf-8"),
                                           one_indexed=args.one_indexed)
        if len(supervised) != len(data):
            raise EmbalignError(
                f"gold has {len(supervised)} lines but corpus has {len(data)}"
            )
    refined, trace = refine_embeddings(data, cfg, supervised=supervised)
    records = [
        (pair.src_subword_to_word, pair.tgt_subword_to_word, emb)
        for (pair, _), emb in zip(data, refined)
    ]
    args.out.write_bytes(write_embedding_container(records))
    trace_path = Path(str(args.out) + ".trace.json")
    trace_path.write_text(
        json.dumps([{"step": k, "so": so, "co": co}
                    for k, (so, co) in enumerate(trace)]) + "\n",
        encoding="utf-8",
    )
    inputs = [args.corpus, args.embeddings] + ([args.gold] if args.gold else [])
    _write_manifest(args.out, args, inputs, time.perf_counter() - start)


def cmd_sweep(args: argparse.Namespace) -> None:
    start = time.perf_counter()
    data = _load_corpus_with_embeddings(args.corpus, args.embeddings)
    golds = parse_gold_alignments(args.gold.read_text(encoding="utf-8"),
                                  one_indexed=args.one_indexed)
    cfg = _extraction_config(args)
    thresholds = [float(c) for c in args.thresholds.split(",")]
    rows = threshold_sweep(data, golds, cfg, thresholds)
    lines = [f"{row['threshold']:g}\t{row['aer']:.6f}\t{row['links']}" for row in rows]
    text = "threshold\taer\tlinks\n" + "\n".join(lines) + "\n"
    if args.out:
        args.out.write_text(text, encoding="utf-8")
        _write_manifest(args.out, args, [args.corpus, args.embeddings, args.gold],
                        time.perf_counter() - start)
    else:
        sys.stdout.write(text)


def cmd_prep_mask(args: argparse.Namespace) -> None:
    start = time.perf_counter()
    pairs = parse_parallel_corpus(args.corpus.read_text(encoding="utf-8"))
    lines = []
    if args.mode == "mlm":
        for index, pair in enumerate(pairs):
            for side, tokens in (("src", pair.src_words), ("tgt", pair.tgt_words)):
                batch = mlm_mask(tokens, set(range(len(tokens))),
                                 (args.seed, index, 0 if side == "src" else 1))
                lines.append(_batch_record(batch, index=index, side=side))
    elif args.mode == "tlm":
        for index, pair in enumerate(pairs):
            xy, yx = tlm_concat(pair, (args.seed, index))
            lines.append(_batch_record(xy, index=index, side="xy"))
            lines.append(_batch_record(yx, index=index, side="yx"))
    else:  # psi
        for index in range(len(pairs)):
            sample = psi_sample(pairs, index, args.seed)
            lines.append(json.dumps(
                {"index": index, "first": sample.first, "second": sample.second,
                 "label": sample.label}))
    args.out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(args.out, args, [args.corpus], time.perf_counter() - start)


def _batch_record(batch, **extra) -> str:
    record = dict(extra)
    record.update(
        input_tokens=batch.input_tokens,
        original_tokens=batch.original_tokens,
        masked_positions=batch.masked_positions,
        substitution_kinds={str(k): v for k, v in sorted(batch.substitution_kinds.items())},
    )
    return json.dumps(record)


def cmd_bench(args: argparse.Namespace) -> None:
    records = read_embedding_container(args.embeddings.read_bytes())
    data = []
    for src_map, tgt_map, emb in records:
        pair = _pair_from_maps(src_map, tgt_map)
        data.append((pair, emb))
    cfg = _extraction_config(args)
    result = benchmark(data, cfg, repetitions=args.reps)
    print(json.dumps(result))


def _pair_from_maps(src_map, tgt_map):
    from .corpus_io import TokenizedPair

    n = max(src_map) + 1
    m = max(tgt_map) + 1
    return TokenizedPair(
        src_words=[f"w{i}" for i in range(n)],
        tgt_words=[f"w{j}" for j in range(m)],
        src_subword_to_word=src_map,
        tgt_subword_to_word=tgt_map,
    )


def cmd_heatmap(args: argparse.Namespace) -> None:
    start = time.perf_counter()
    records = read_embedding_container(args.embeddings.read_bytes())
    if not 0 <= args.pair < len(records):
        raise EmbalignError(
            f"pair index {args.pair} outside container of {len(records)} pairs"
        )
    _, _, emb = records[args.pair]
    values = similarity_matrix(emb)
    if args.format == "csv":
        lines = [",".join(repr(v) for v in row) for row in values.tolist()]
        args.out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        lo, hi = values.min(), values.max()
        if hi == lo:
            pixels = np.full(values.shape, 128, dtype=np.uint8)
        else:
            pixels = np.round((values - lo) / (hi - lo) * 255.0).astype(np.uint8)
        header = f"P5\n{values.shape[1]} {values.shape[0]}\n255\n".encode("ascii")
        args.out.write_bytes(header + pixels.tobytes())
    _write_manifest(args.out, args, [args.embeddings], time.perf_counter() - start)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embalign",
        description="Word alignment from contextualized embeddings",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_method_flags(p, with_symmetrization=True):
        p.add_argument("--method", choices=["softmax", "entmax", "entmax15", "ot"],
                       default="softmax")
        p.add_argument("--threshold", type=float, default=None,
                       help="defaults: 0.001 (softmax/ot), 0 (entmax)")
        if with_symmetrization:
            p.add_argument("--symmetrization",
                           choices=["intersect", "grow-diag", "grow-diag-final"],
                           default="intersect")
            p.add_argument("--final-and", dest="final_and", action="store_true")
        p.add_argument("--ot-metric", choices=["cosine", "dot", "euclidean"],
                       default="cosine")
        p.add_argument("--ot-eps", type=float, default=0.1)

    p = sub.add_parser("align", help="extract alignments from embeddings")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--embeddings", type=Path, required=True)
    add_method_flags(p)
    p.add_argument("--one-indexed", action="store_true")
    p.add_argument("--skip-list", type=Path, default=None,
                   help="exporter sidecar of corpus line indices without embeddings")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-manifest", action="store_true")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("eval", help="score hypothesis alignments against gold")
    p.add_argument("--hyp", type=Path, required=True)
    p.add_argument("--gold", type=Path, required=True)
    p.add_argument("--one-indexed", action="store_true")
    p.add_argument("--json", action="store_true")
    p.add_argument("--macro", action="store_true",
                   help="also report the mean of per-pair AERs")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("refine", help="gradient-ascent embedding refinement")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--method", choices=["softmax", "entmax", "entmax15"],
                   default="softmax")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--gold", type=Path, default=None,
                   help="supervised links replacing the self-training pass")
    p.add_argument("--one-indexed", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-manifest", action="store_true")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("sweep", help="threshold sensitivity sweep")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--gold", type=Path, required=True)
    p.add_argument("--thresholds", type=str, required=True,
                   help="comma-separated threshold values")
    add_method_flags(p)
    p.add_argument("--one-indexed", action="store_true")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--no-manifest", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("prep-mask", help="export MLM/TLM/PSI training data")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--mode", choices=["mlm", "tlm", "psi"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-manifest", action="store_true")
    p.set_defaults(func=cmd_prep_mask)

    p = sub.add_parser("bench", help="extraction throughput benchmark")
    p.add_argument("--embeddings", type=Path, required=True)
    add_method_flags(p, with_symmetrization=False)
    p.add_argument("--reps", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("heatmap", help="similarity matrix as PGM or CSV")
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--pair", type=int, required=True)
    p.add_argument("--format", choices=["pgm", "csv"], default="pgm")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-manifest", action="store_true")
    p.set_defaults(func=cmd_heatmap)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except EmbalignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
