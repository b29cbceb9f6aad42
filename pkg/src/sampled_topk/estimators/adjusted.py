"""Adjusted sampled metric functions: bias-variance (BV) and multinomial (MN).

Both fit a per-sampled-rank score ``F^(r)`` so that ``sum_r P~(r) F^(r)``
tracks the global metric, given a prior pmf over global ranks.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.linalg

from ..core import MetricSpec, RankPmf, SampledEvalError, SampledRankSet, SamplingScheme, SingularSystem
from ..metrics import metric_vector
from ..sampling import conditional_matrix

log = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.01
_RIDGE = 1e-12


def solve_symmetric(S: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``S x = rhs`` for symmetric ``S``, retrying once with a tiny ridge."""
    try:
        return scipy.linalg.solve(S, rhs, assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        pass
    try:
        return scipy.linalg.solve(S + _RIDGE * np.eye(S.shape[0]), rhs, assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularSystem(str(exc)) from exc


def bv_system(A: np.ndarray, prior: np.ndarray, gamma: float):
    """BV normal matrix and the ``sqrt(P(R))``-weighted design.

    ``A_w[R, r] = sqrt(P(R)) P(r|R)``, ``c_r = sum_R P(R) P(r|R)`` and the
    matrix is ``(1 - gamma) A_w^T A_w + gamma diag(c)``.
    """
    if not 0 < gamma <= 1:
        raise SampledEvalError(f"gamma must lie in (0, 1], got {gamma}")
    sq = np.sqrt(prior)
    Aw = sq[:, None] * A
    c = prior @ A
    S = (1.0 - gamma) * (Aw.T @ Aw) + gamma * np.diag(c)
    return S, Aw, sq


def bv_solve(A: np.ndarray, prior: np.ndarray, F: np.ndarray, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """``F^`` for one metric vector (length N) or several (N x k)."""
    S, Aw, sq = bv_system(A, prior, gamma)
    b = sq[:, None] * F if F.ndim == 2 else sq * F
    return solve_symmetric(S, Aw.T @ b)


def mn_system(A: np.ndarray, prior: np.ndarray, n_users: int) -> np.ndarray:
    """``A^T D A - A^T A / M + Lambda_1 / M`` with ``Lambda_1 = diag(sum_R P(r|R))``."""
    if n_users < 1:
        raise SampledEvalError("n_users must be >= 1")
    ADA = A.T @ (prior[:, None] * A)
    return ADA - (A.T @ A) / n_users + np.diag(A.sum(axis=0)) / n_users


def mn_solve(A: np.ndarray, prior: np.ndarray, F: np.ndarray, n_users: int) -> np.ndarray:
    S = mn_system(A, prior, n_users)
    b = prior[:, None] * F if F.ndim == 2 else prior * F
    return solve_symmetric(S, A.T @ b)


def mn_loss(x: np.ndarray, A: np.ndarray, prior: np.ndarray, F: np.ndarray, n_users: int) -> float:
    """Bias term plus the ``1/M``-scaled multinomial variance term."""
    Ax = A @ x
    bias = prior @ (Ax - F) ** 2
    var = (x**2) @ A.sum(axis=0) - Ax @ Ax
    return float(bias + var / n_users)


def _prepare(samples: SampledRankSet, prior: RankPmf, scheme):
    if prior.n_items != samples.n_items:
        raise SampledEvalError("prior and samples disagree on N")
    A = conditional_matrix(samples.n_items, samples.sample_size, scheme)
    return A, samples.rank_distribution()


def bv_metric(samples: SampledRankSet, prior: RankPmf, spec: MetricSpec,
              gamma: float = DEFAULT_GAMMA,
              scheme=SamplingScheme.WITH_REPLACEMENT) -> tuple[float, np.ndarray]:
    A, p_tilde = _prepare(samples, prior, scheme)
    f_hat = bv_solve(A, prior.probs, metric_vector(spec, prior.n_items), gamma)
    return float(p_tilde @ f_hat), f_hat


def bv_rank_pmf(samples: SampledRankSet, prior: RankPmf, gamma: float = DEFAULT_GAMMA,
                scheme=SamplingScheme.WITH_REPLACEMENT, return_clamped: bool = False):
    """Rank pmf from successive differences of BV Recall@R estimates.

    The BV estimate is linear in the metric vector, so ``P^(R)`` is the BV
    estimate for the indicator of ``R`` alone. Negative entries are clamped
    to zero before renormalising.
    """
    A, p_tilde = _prepare(samples, prior, scheme)
    S, Aw, sq = bv_system(A, prior.probs, gamma)
    # p~^T S^-1 A_w^T diag(sqrt P) without forming an N x N matrix
    y = solve_symmetric(S, p_tilde)
    est = (Aw @ y) * sq
    clamped = int((est < 0).sum())
    if clamped:
        log.info("bv_rank_pmf clamped %d negative entries", clamped)
    pmf = RankPmf.from_weights(np.maximum(est, 0.0))
    return (pmf, clamped) if return_clamped else pmf


def mn_metric(samples: SampledRankSet, prior: RankPmf, n_users: int, spec: MetricSpec,
              scheme=SamplingScheme.WITH_REPLACEMENT) -> tuple[float, np.ndarray]:
    A, p_tilde = _prepare(samples, prior, scheme)
    x = mn_solve(A, prior.probs, metric_vector(spec, prior.n_items), n_users)
    return float(p_tilde @ x), x
