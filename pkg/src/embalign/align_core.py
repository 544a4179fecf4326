"""Similarity matrices and their conversion to directional alignment
probability / transport matrices (softmax, 1.5-entmax, entropic OT).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .corpus_io import PairEmbeddings
from .errors import ContractError


@dataclass
class TransportProblem:
    """An entropically regularized optimal transport instance."""

    cost: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray
    epsilon: float = 0.1
    max_iters: int = 1000
    tol: float = 1e-6

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=np.float64)
        self.row_marginal = np.asarray(self.row_marginal, dtype=np.float64)
        self.col_marginal = np.asarray(self.col_marginal, dtype=np.float64)
        if self.cost.ndim != 2:
            raise ContractError("cost must be a matrix")
        if self.cost.shape != (self.row_marginal.size, self.col_marginal.size):
            raise ContractError("marginal sizes do not match the cost matrix")
        if self.cost.min() < 0 or self.cost.max() > 1:
            raise ContractError("cost entries must lie in [0, 1]")
        for name, marg in (("row", self.row_marginal), ("col", self.col_marginal)):
            if abs(marg.sum() - 1.0) > 1e-12 or (marg < 0).any():
                raise ContractError(f"{name} marginal is not a probability vector")
        if self.epsilon <= 0 or self.max_iters < 1 or self.tol <= 0:
            raise ContractError("epsilon, max_iters and tol must be positive")


@dataclass
class AlignmentProbabilityMatrix:
    """Directional alignment matrix; row-stochastic or a transport plan."""

    values: np.ndarray
    kind: str  # "row-stochastic" | "transport"
    converged: bool = True
    marginal_error: float = 0.0


def similarity_matrix(emb: PairEmbeddings) -> np.ndarray:
    """Pairwise dot products between source and target subword embeddings."""
    if emb.src.shape[1] != emb.tgt.shape[1]:
        raise ContractError("embedding dims differ")
    return emb.src @ emb.tgt.T


def softmax_rows(values: np.ndarray) -> AlignmentProbabilityMatrix:
    """Row-wise softmax with max-subtraction for stability."""
    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise ContractError("similarity matrix contains non-finite values")
    shifted = values - values.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    return AlignmentProbabilityMatrix(values=probs, kind="row-stochastic")


def entmax15_rows(values: np.ndarray) -> AlignmentProbabilityMatrix:
    """Row-wise 1.5-entmax via the exact sort-based threshold.

    For each row z, p_i = max(0, z_i/2 - tau)^2 with tau chosen so the row
    sums to 1.  Produces exact zeros; shift-invariant like softmax.
    """
    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise ContractError("similarity matrix contains non-finite values")
    z = (values - values.max(axis=1, keepdims=True)) / 2.0
    d = z.shape[1]
    # stable sort keeps tie order by index
    zs = -np.sort(-z, axis=1, kind="stable")
    rho = np.arange(1, d + 1, dtype=np.float64)
    mean = np.cumsum(zs, axis=1) / rho
    mean_sq = np.cumsum(zs**2, axis=1) / rho
    ss = rho * (mean_sq - mean**2)
    delta = np.maximum((1.0 - ss) / rho, 0.0)
    tau = mean - np.sqrt(delta)
    support = (tau <= zs).sum(axis=1)
    tau_star = np.take_along_axis(tau, (support - 1)[:, None], axis=1)
    probs = np.maximum(z - tau_star, 0.0) ** 2
    probs /= probs.sum(axis=1, keepdims=True)  # remove residual rounding drift
    return AlignmentProbabilityMatrix(values=probs, kind="row-stochastic")


def entmax_bisect_rows(values: np.ndarray, alpha: float = 1.5, iters: int = 60) -> np.ndarray:
    """Bisection solver for alpha-entmax thresholds (reference path).

    Solves sum_i max(0, (alpha-1) z_i - tau)^(1/(alpha-1)) = 1 per row; kept
    independent of the sort-based route so the two can cross-check.
    """
    values = np.asarray(values, dtype=np.float64)
    a = alpha - 1.0
    z = a * (values - values.max(axis=1, keepdims=True))
    lo = z.max(axis=1) - 1.0
    hi = z.max(axis=1).copy()
    for _ in range(iters):
        mid = (lo + hi) / 2.0
        total = (np.maximum(z - mid[:, None], 0.0) ** (1.0 / a)).sum(axis=1)
        too_small = total < 1.0
        hi = np.where(too_small, mid, hi)
        lo = np.where(too_small, lo, mid)
    tau = (lo + hi) / 2.0
    probs = np.maximum(z - tau[:, None], 0.0) ** (1.0 / a)
    return probs / probs.sum(axis=1, keepdims=True)


def cost_matrix(emb: PairEmbeddings, metric: str = "cosine") -> np.ndarray:
    """Pairwise distance matrix min-max scaled to [0, 1].

    cosine -> 1 - cosine similarity; dot -> negative dot product;
    euclidean -> L2 distance.  A constant matrix scales to all 0.5.
    """
    src, tgt = emb.src, emb.tgt
    if metric == "cosine":
        src_norm = np.linalg.norm(src, axis=1)
        tgt_norm = np.linalg.norm(tgt, axis=1)
        for name, norms in (("src", src_norm), ("tgt", tgt_norm)):
            zero = np.flatnonzero(norms == 0)
            if zero.size:
                raise ContractError(f"zero-norm {name} row {zero[0]} under cosine metric")
        dist = 1.0 - (src / src_norm[:, None]) @ (tgt / tgt_norm[:, None]).T
    elif metric == "dot":
        dist = -(src @ tgt.T)
    elif metric == "euclidean":
        sq = (
            (src**2).sum(axis=1)[:, None]
            + (tgt**2).sum(axis=1)[None, :]
            - 2.0 * src @ tgt.T
        )
        dist = np.sqrt(np.maximum(sq, 0.0))
    else:
        raise ContractError(f"unknown metric {metric!r}")
    lo, hi = dist.min(), dist.max()
    if hi == lo:
        return np.full_like(dist, 0.5)
    return (dist - lo) / (hi - lo)


def sinkhorn_transport(problem: TransportProblem) -> AlignmentProbabilityMatrix:
    """Log-domain Sinkhorn-Knopp solver for entropic optimal transport.

    Iterates the dual potentials until both marginal L1 errors drop below
    ``tol`` or ``max_iters`` is reached; non-convergence is flagged on the
    result, not fatal.
    """
    C, eps = problem.cost, problem.epsilon
    log_a = np.log(problem.row_marginal)
    log_b = np.log(problem.col_marginal)
    f = np.zeros_like(log_a)
    g = np.zeros_like(log_b)
    minus_c = -C / eps
    converged = False
    err = np.inf
    for _ in range(problem.max_iters):
        f = eps * (log_a - logsumexp(minus_c + g[None, :] / eps, axis=1))
        g = eps * (log_b - logsumexp(minus_c + f[:, None] / eps, axis=0))
        plan = np.exp(minus_c + f[:, None] / eps + g[None, :] / eps)
        err = max(
            np.abs(plan.sum(axis=1) - problem.row_marginal).sum(),
            np.abs(plan.sum(axis=0) - problem.col_marginal).sum(),
        )
        if err < problem.tol:
            converged = True
            break
    plan = np.exp(minus_c + f[:, None] / eps + g[None, :] / eps)
    return AlignmentProbabilityMatrix(
        values=plan, kind="transport", converged=converged, marginal_error=float(err)
    )


_NORMALIZERS = {"softmax": softmax_rows, "entmax15": entmax15_rows}


def forward_backward(
    values: np.ndarray, method: str = "softmax"
) -> tuple[AlignmentProbabilityMatrix, AlignmentProbabilityMatrix]:
    """Normalize rows of S and rows of S^T into (S_xy, S_yx)."""
    try:
        normalize = _NORMALIZERS[method]
    except KeyError:
        raise ContractError(f"unknown normalization method {method!r}") from None
    values = np.asarray(values, dtype=np.float64)
    return normalize(values), normalize(values.T)
