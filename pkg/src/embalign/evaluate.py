"""Alignment scoring (AER, precision, recall, F1), threshold sweeps and
extraction throughput benchmarking.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .corpus_io import AlignmentSet, PairEmbeddings, TokenizedPair
from .errors import ContractError
from .pipeline import extract_word_alignment
from .symmetrize import ExtractionConfig


@dataclass
class AlignmentScore:
    aer: float
    precision: float
    recall: float
    f1: float
    # (|A|, |S|, |A n S|, |A n P|)
    counts: tuple[int, int, int, int]

    def as_dict(self) -> dict:
        return {
            "aer": self.aer,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "hyp_links": self.counts[0],
            "sure_links": self.counts[1],
            "hyp_sure_overlap": self.counts[2],
            "hyp_possible_overlap": self.counts[3],
        }


def _score_from_counts(n_a: int, n_s: int, n_as: int, n_ap: int) -> AlignmentScore:
    aer = 1.0 - (n_as + n_ap) / (n_a + n_s) if n_a + n_s > 0 else 0.0
    precision = n_ap / n_a if n_a > 0 else 1.0
    recall = n_as / n_s if n_s > 0 else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return AlignmentScore(aer=aer, precision=precision, recall=recall, f1=f1,
                          counts=(n_a, n_s, n_as, n_ap))


def score(hyp: AlignmentSet, gold: AlignmentSet) -> AlignmentScore:
    """Och-Ney sure/possible scoring of one hypothesis alignment.

    AER = 1 - (|A n S| + |A n P|) / (|A| + |S|) with A = hyp.sure.
    """
    a = hyp.sure
    return _score_from_counts(
        len(a), len(gold.sure), len(a & gold.sure), len(a & gold.possible)
    )


def score_corpus(hyps: list[AlignmentSet], golds: list[AlignmentSet]) -> AlignmentScore:
    """Micro-averaged score: counts summed over pairs, formulas applied once."""
    if len(hyps) != len(golds):
        raise ContractError(f"hypothesis count {len(hyps)} != gold count {len(golds)}")
    n_a = n_s = n_as = n_ap = 0
    for hyp, gold in zip(hyps, golds):
        a = hyp.sure
        n_a += len(a)
        n_s += len(gold.sure)
        n_as += len(a & gold.sure)
        n_ap += len(a & gold.possible)
    return _score_from_counts(n_a, n_s, n_as, n_ap)


def score_corpus_macro(hyps: list[AlignmentSet], golds: list[AlignmentSet]) -> float:
    """Mean of per-pair AERs (alternative averaging, off by default)."""
    if len(hyps) != len(golds):
        raise ContractError(f"hypothesis count {len(hyps)} != gold count {len(golds)}")
    if not hyps:
        return 0.0
    return sum(score(h, g).aer for h, g in zip(hyps, golds)) / len(hyps)


def threshold_sweep(
    data: list[tuple[TokenizedPair, PairEmbeddings]],
    golds: list[AlignmentSet],
    cfg: ExtractionConfig,
    thresholds: list[float],
) -> list[dict]:
    """Run the extraction pipeline at each threshold and score against gold.

    Rows report (threshold, AER, link count); link counts are
    non-increasing in the threshold for intersection symmetrization.
    """
    if not thresholds:
        raise ContractError("thresholds must be non-empty")
    if len(data) != len(golds):
        raise ContractError("corpus and gold lengths differ")
    rows = []
    for c in thresholds:
        run_cfg = ExtractionConfig(
            method=cfg.method,
            threshold=c,
            symmetrization=cfg.symmetrization,
            final_and=cfg.final_and,
            ot_metric=cfg.ot_metric,
            ot_epsilon=cfg.ot_epsilon,
            ot_max_iters=cfg.ot_max_iters,
            ot_tol=cfg.ot_tol,
        )
        hyps = [extract_word_alignment(pair, emb, run_cfg) for pair, emb in data]
        result = score_corpus(hyps, golds)
        rows.append(
            {"threshold": c, "aer": result.aer, "links": sum(len(h.sure) for h in hyps)}
        )
    return rows


def benchmark(
    data: list[tuple[TokenizedPair, PairEmbeddings]],
    cfg: ExtractionConfig,
    repetitions: int = 3,
) -> dict:
    """Median wall-clock extraction throughput in sentence pairs per second."""
    if repetitions < 1:
        raise ContractError("repetitions must be >= 1")
    timings = []
    for _ in range(repetitions):
        start = time.perf_counter()
        for pair, emb in data:
            extract_word_alignment(pair, emb, cfg)
        timings.append(time.perf_counter() - start)
    timings.sort()
    median = timings[len(timings) // 2]
    return {
        "method": cfg.method,
        "pairs": len(data),
        "repetitions": repetitions,
        "median_seconds": median,
        "sentences_per_second": len(data) / median if median > 0 else float("inf"),
    }
