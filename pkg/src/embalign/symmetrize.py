"""Symmetrization of directional probability matrices into word alignments:
thresholded intersection, grow-diag(-final) heuristics, subword-to-word
projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .align_core import AlignmentProbabilityMatrix
from .corpus_io import AlignmentSet, TokenizedPair
from .errors import ContractError

Link = tuple[int, int]

# 8-neighborhood offsets, diagonals included
_NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


@dataclass
class ExtractionConfig:
    """Alignment extraction settings.

    Defaults follow the probability-thresholding setup: softmax with
    c=0.001; entmax15 uses c=0; OT uses c=0.001 with cosine cost.
    """

    method: str = "softmax"  # softmax | entmax15 | ot
    threshold: float | None = None
    entmax_alpha: float = 1.5
    symmetrization: str = "intersect"  # intersect | grow-diag | grow-diag-final
    final_and: bool = False
    ot_metric: str = "cosine"
    ot_epsilon: float = 0.1
    ot_max_iters: int = 1000
    ot_tol: float = 1e-6

    def __post_init__(self):
        if self.method not in ("softmax", "entmax15", "ot"):
            raise ContractError(f"unknown extraction method {self.method!r}")
        if self.symmetrization not in ("intersect", "grow-diag", "grow-diag-final"):
            raise ContractError(f"unknown symmetrization {self.symmetrization!r}")
        if self.threshold is None:
            self.threshold = 0.0 if self.method == "entmax15" else 0.001
        if self.threshold < 0:
            raise ContractError("threshold must be >= 0")


def _check_shapes(s_xy: AlignmentProbabilityMatrix, s_yx: AlignmentProbabilityMatrix):
    a, b = s_xy.values.shape
    if s_yx.values.shape != (b, a):
        raise ContractError(
            f"shape mismatch: S_xy {s_xy.values.shape} vs S_yx {s_yx.values.shape}"
        )


def intersect(
    s_xy: AlignmentProbabilityMatrix, s_yx: AlignmentProbabilityMatrix, c: float
) -> set[Link]:
    """Links (i, j) with S_xy[i][j] > c and S_yx[j][i] > c (strict)."""
    _check_shapes(s_xy, s_yx)
    mask = (s_xy.values > c) & (s_yx.values.T > c)
    return {(int(i), int(j)) for i, j in zip(*np.nonzero(mask))}


def directional_sets(
    s_xy: AlignmentProbabilityMatrix, s_yx: AlignmentProbabilityMatrix, c: float
) -> tuple[set[Link], set[Link]]:
    """Forward and backward link sets thresholded independently."""
    _check_shapes(s_xy, s_yx)
    forward = {(int(i), int(j)) for i, j in zip(*np.nonzero(s_xy.values > c))}
    backward = {(int(j), int(i)) for i, j in zip(*np.nonzero(s_yx.values > c))}
    return forward, backward


def grow_diag(
    forward: set[Link],
    backward: set[Link],
    n_sub: int,
    m_sub: int,
    final: bool = False,
    final_and: bool = False,
) -> set[Link]:
    """Moses-style grow-diag(-final) over subword link sets.

    Starts from forward & backward; repeatedly adds union links adjacent
    (8-neighborhood) to a current link whose source or target position is
    still unaligned, scanning row-major until fixpoint.  With ``final``,
    remaining union links with an unaligned source or target (both, under
    ``final_and``) are added afterwards.
    """
    union = forward | backward
    for i, j in union:
        if not (0 <= i < n_sub and 0 <= j < m_sub):
            raise ContractError(f"link ({i}, {j}) outside {n_sub}x{m_sub} grid")
    alignment = set(forward & backward)
    src_aligned = {i for i, _ in alignment}
    tgt_aligned = {j for _, j in alignment}

    changed = True
    while changed:
        changed = False
        for i, j in sorted(alignment):
            for di, dj in _NEIGHBORS:
                ni, nj = i + di, j + dj
                if (ni, nj) not in union or (ni, nj) in alignment:
                    continue
                if ni not in src_aligned or nj not in tgt_aligned:
                    alignment.add((ni, nj))
                    src_aligned.add(ni)
                    tgt_aligned.add(nj)
                    changed = True

    if final:
        for i, j in sorted(union - alignment):
            src_free = i not in src_aligned
            tgt_free = j not in tgt_aligned
            if (src_free and tgt_free) if final_and else (src_free or tgt_free):
                alignment.add((i, j))
                src_aligned.add(i)
                tgt_aligned.add(j)
    return alignment


def project_to_words(sub_links: set[Link], pair: TokenizedPair) -> AlignmentSet:
    """Word link (w_i, w_j) iff some subword link maps onto it."""
    src_map, tgt_map = pair.src_subword_to_word, pair.tgt_subword_to_word
    words = set()
    for i, j in sub_links:
        if not (0 <= i < len(src_map) and 0 <= j < len(tgt_map)):
            raise ContractError(f"subword link ({i}, {j}) outside map range")
        words.add((src_map[i], tgt_map[j]))
    return AlignmentSet(sure=words)


def symmetrize(
    s_xy: AlignmentProbabilityMatrix,
    s_yx: AlignmentProbabilityMatrix,
    cfg: ExtractionConfig,
) -> set[Link]:
    """Apply the configured symmetrization at the subword level."""
    if cfg.symmetrization == "intersect":
        return intersect(s_xy, s_yx, cfg.threshold)
    forward, backward = directional_sets(s_xy, s_yx, cfg.threshold)
    n_sub, m_sub = s_xy.values.shape
    final = cfg.symmetrization == "grow-diag-final"
    return grow_diag(forward, backward, n_sub, m_sub, final=final, final_and=cfg.final_and)
