"""Embedding-level training objectives: self-training and consistency losses
with analytic gradients and a gradient-ascent refinement loop, plus
deterministic MLM/TLM masking and parallel-sentence-identification sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .align_core import forward_backward
from .corpus_io import AlignmentSet, PairEmbeddings, TokenizedPair
from .errors import ContractError
from .symmetrize import intersect

Link = tuple[int, int]

MASK_TOKEN = "[MASK]"

KIND_MASK = "mask-token"
KIND_RANDOM = "random-token"
KIND_UNCHANGED = "unchanged"


@dataclass
class RefinementConfig:
    beta: float = 0.0
    steps: int = 100
    learning_rate: float = 0.05
    method: str = "softmax"  # softmax | entmax15
    threshold: float | None = None

    def __post_init__(self):
        if self.beta < 0:
            raise ContractError("beta must be >= 0")
        if self.learning_rate <= 0:
            raise ContractError("learning_rate must be > 0")
        if self.method not in ("softmax", "entmax15"):
            raise ContractError(f"refinement method {self.method!r} not supported")
        if self.threshold is None:
            self.threshold = 0.0 if self.method == "entmax15" else 0.001


@dataclass
class MaskedBatch:
    input_tokens: list[str]
    original_tokens: list[str]
    masked_positions: list[int]
    substitution_kinds: dict[int, str]


@dataclass
class PsiSample:
    first: list[str]
    second: list[str]
    label: int


def so_loss(s_xy: np.ndarray, s_yx: np.ndarray, links: set[Link], n: int, m: int) -> float:
    """Self-training objective: mass the two directional matrices put on the
    first-pass links, sum of 0.5*(S_xy[i,j]/n + S_yx[j,i]/m) over links.
    """
    s_xy = np.asarray(s_xy, dtype=np.float64)
    s_yx = np.asarray(s_yx, dtype=np.float64)
    if s_yx.shape != (s_xy.shape[1], s_xy.shape[0]):
        raise ContractError("S_yx must be the transposed shape of S_xy")
    total = 0.0
    for i, j in links:
        total += 0.5 * (s_xy[i, j] / n + s_yx[j, i] / m)
    return total


def co_loss(s_xy: np.ndarray, s_yx: np.ndarray) -> float:
    """Consistency objective: -trace(S_xy^T S_yx) / min(rows, cols)."""
    s_xy = np.asarray(s_xy, dtype=np.float64)
    s_yx = np.asarray(s_yx, dtype=np.float64)
    a, b = s_xy.shape
    if s_yx.shape != (b, a):
        raise ContractError("S_yx must be the transposed shape of S_xy")
    return -float((s_xy * s_yx.T).sum()) / min(a, b)


def _softmax_row_vjp(probs: np.ndarray, grad: np.ndarray) -> np.ndarray:
    inner = (grad * probs).sum(axis=1, keepdims=True)
    return probs * (grad - inner)


def _entmax15_row_vjp(probs: np.ndarray, grad: np.ndarray) -> np.ndarray:
    supp = np.sqrt(probs)
    scaled = grad * supp
    q = scaled.sum(axis=1, keepdims=True) / supp.sum(axis=1, keepdims=True)
    return scaled - q * supp


_ROW_VJP = {"softmax": _softmax_row_vjp, "entmax15": _entmax15_row_vjp}


def refinement_objective(
    emb: PairEmbeddings, links: set[Link], cfg: RefinementConfig
) -> tuple[float, float]:
    """(L_SO, L_CO) for one pair, treating the link set as constant."""
    sim = emb.src @ emb.tgt.T
    s_xy, s_yx = forward_backward(sim, cfg.method)
    n, m = sim.shape
    return (
        so_loss(s_xy.values, s_yx.values, links, n, m),
        co_loss(s_xy.values, s_yx.values),
    )


def so_co_gradients(
    emb: PairEmbeddings, links: set[Link], cfg: RefinementConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of J = L_SO - beta * L_CO w.r.t. both embedding
    matrices (ascent direction; the link set is a stop-gradient constant).
    """
    h_x, h_y = emb.src, emb.tgt
    sim = h_x @ h_y.T
    n, m = sim.shape
    s_xy, s_yx = forward_backward(sim, cfg.method)
    p, q = s_xy.values, s_yx.values

    link_mask = np.zeros((n, m))
    for i, j in links:
        if not (0 <= i < n and 0 <= j < m):
            raise ContractError(f"link ({i}, {j}) outside {n}x{m} matrices")
        link_mask[i, j] = 1.0

    scale = cfg.beta / min(n, m)
    grad_p = link_mask / (2.0 * n) + scale * q.T
    grad_q = link_mask.T / (2.0 * m) + scale * p.T

    vjp = _ROW_VJP[cfg.method]
    d_sim = vjp(p, grad_p) + vjp(q, grad_q).T
    return d_sim @ h_y, d_sim.T @ h_x


def refine_embeddings(
    pairs: list[tuple[TokenizedPair, PairEmbeddings]],
    cfg: RefinementConfig,
    supervised: list[AlignmentSet] | None = None,
) -> tuple[list[PairEmbeddings], list[tuple[float, float]]]:
    """Gradient-ascent refinement loop.

    Each step recomputes the first-pass alignment (intersection under the
    configured method/threshold, or the supervised links expanded through
    the subword maps), then takes one step of size ``learning_rate`` on
    J = L_SO - beta * L_CO summed over the batch.  Returns the refined
    embeddings and the per-step (L_SO, L_CO) batch totals.
    """
    if supervised is not None and len(supervised) != len(pairs):
        raise ContractError("supervised alignments must match the number of pairs")
    working = [
        PairEmbeddings(src=emb.src.copy(), tgt=emb.tgt.copy()) for _, emb in pairs
    ]
    trace: list[tuple[float, float]] = []
    for _ in range(cfg.steps):
        so_total = 0.0
        co_total = 0.0
        for k, (pair, _) in enumerate(pairs):
            emb = working[k]
            if supervised is None:
                s_xy, s_yx = forward_backward(emb.src @ emb.tgt.T, cfg.method)
                links = intersect(s_xy, s_yx, cfg.threshold)
            else:
                links = _expand_word_links(supervised[k].sure, pair)
            so, co = refinement_objective(emb, links, cfg)
            so_total += so
            co_total += co
            g_src, g_tgt = so_co_gradients(emb, links, cfg)
            emb.src += cfg.learning_rate * g_src
            emb.tgt += cfg.learning_rate * g_tgt
        trace.append((so_total, co_total))
    return working, trace


def _expand_word_links(word_links: set[Link], pair: TokenizedPair) -> set[Link]:
    """Subword links covering every gold word link through the maps."""
    links = set()
    for si, wi in enumerate(pair.src_subword_to_word):
        for tj, wj in enumerate(pair.tgt_subword_to_word):
            if (wi, wj) in word_links:
                links.add((si, tj))
    return links


def mlm_mask(tokens: list[str], maskable: set[int], seed) -> MaskedBatch:
    """Deterministic BERT-style masking over the maskable positions.

    Selects floor(0.15 * |maskable|) positions (at least 1 when
    |maskable| >= 7) without replacement; each gets mask/random/unchanged
    with probability 0.8/0.1/0.1.  The random kind records a placeholder
    vocabulary draw index for the consumer to resolve.
    """
    for pos in maskable:
        if not 0 <= pos < len(tokens):
            raise ContractError(f"maskable position {pos} outside token range")
    rng = np.random.default_rng(_seed_key(seed))
    k = len(maskable)
    count = math.floor(0.15 * k)
    if count == 0 and k >= 7:
        count = 1
    ordered = sorted(maskable)
    chosen = sorted(rng.choice(len(ordered), size=count, replace=False).tolist())
    positions = [ordered[c] for c in chosen]

    input_tokens = list(tokens)
    kinds: dict[int, str] = {}
    for pos in positions:
        roll = rng.random()
        if roll < 0.8:
            kinds[pos] = KIND_MASK
            input_tokens[pos] = MASK_TOKEN
        elif roll < 0.9:
            draw = int(rng.integers(0, 2**31))
            kinds[pos] = KIND_RANDOM
            input_tokens[pos] = f"[RANDOM:{draw}]"
        else:
            kinds[pos] = KIND_UNCHANGED
    return MaskedBatch(
        input_tokens=input_tokens,
        original_tokens=list(tokens),
        masked_positions=positions,
        substitution_kinds=kinds,
    )


def tlm_concat(pair: TokenizedPair, seed) -> tuple[MaskedBatch, MaskedBatch]:
    """Both concatenation orders [x; y] and [y; x], independently masked.

    Positions are consecutive across the concatenation (no position reset
    for the second sentence).
    """
    xy = pair.src_words + pair.tgt_words
    yx = pair.tgt_words + pair.src_words
    batch_xy = mlm_mask(xy, set(range(len(xy))), _seed_key(seed) + (0,))
    batch_yx = mlm_mask(yx, set(range(len(yx))), _seed_key(seed) + (1,))
    return batch_xy, batch_yx


def psi_sample(corpus: list[TokenizedPair], index: int, seed) -> PsiSample:
    """A parallel (label 1) or mismatched (label 0) sentence pair, chosen
    with equal probability; the mismatched target comes from another index.
    """
    if not 0 <= index < len(corpus):
        raise ContractError(f"index {index} outside corpus of {len(corpus)} pairs")
    rng = np.random.default_rng(_seed_key(seed) + (index,))
    src = corpus[index].src_words
    if rng.random() < 0.5:
        return PsiSample(first=list(src), second=list(corpus[index].tgt_words), label=1)
    if len(corpus) < 2:
        raise ContractError("non-parallel draw needs a corpus of at least 2 pairs")
    other = int(rng.integers(0, len(corpus) - 1))
    if other >= index:
        other += 1
    return PsiSample(first=list(src), second=list(corpus[other].tgt_words), label=0)


def psi_loss(score: float, label: int) -> float:
    """Binary log-likelihood l*log(s) + (1-l)*log(1-s) (to be maximized)."""
    if not 0.0 < score < 1.0:
        raise ContractError("score must lie strictly inside (0, 1); clamp upstream")
    if label not in (0, 1):
        raise ContractError("label must be 0 or 1")
    return label * math.log(score) + (1 - label) * math.log(1.0 - score)


def _seed_key(seed) -> tuple[int, ...]:
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)
