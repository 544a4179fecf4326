"""End-to-end extraction for one sentence pair: embeddings -> similarity ->
directional matrices -> symmetrized subword links -> word alignment.
"""

from __future__ import annotations

from .align_core import (
    AlignmentProbabilityMatrix,
    TransportProblem,
    cost_matrix,
    forward_backward,
    similarity_matrix,
    sinkhorn_transport,
)
from .corpus_io import AlignmentSet, PairEmbeddings, TokenizedPair
from .symmetrize import ExtractionConfig, project_to_words, symmetrize


def directional_matrices(
    emb: PairEmbeddings, cfg: ExtractionConfig
) -> tuple[AlignmentProbabilityMatrix, AlignmentProbabilityMatrix]:
    """Compute (S_xy, S_yx) under the configured method.

    For OT a single transport plan serves both directions (the reversed
    problem is the exact transpose), with uniform subword marginals.
    """
    if cfg.method == "ot":
        import numpy as np

        n, m = emb.src.shape[0], emb.tgt.shape[0]
        problem = TransportProblem(
            cost=cost_matrix(emb, cfg.ot_metric),
            row_marginal=np.full(n, 1.0 / n),
            col_marginal=np.full(m, 1.0 / m),
            epsilon=cfg.ot_epsilon,
            max_iters=cfg.ot_max_iters,
            tol=cfg.ot_tol,
        )
        plan = sinkhorn_transport(problem)
        reverse = AlignmentProbabilityMatrix(
            values=plan.values.T,
            kind="transport",
            converged=plan.converged,
            marginal_error=plan.marginal_error,
        )
        return plan, reverse
    return forward_backward(similarity_matrix(emb), cfg.method)


def extract_subword_links(emb: PairEmbeddings, cfg: ExtractionConfig):
    s_xy, s_yx = directional_matrices(emb, cfg)
    return symmetrize(s_xy, s_yx, cfg)


def extract_word_alignment(
    pair: TokenizedPair, emb: PairEmbeddings, cfg: ExtractionConfig
) -> AlignmentSet:
    return project_to_words(extract_subword_links(emb, cfg), pair)
