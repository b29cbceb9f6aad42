"""Maximum-entropy rank pmf penalised by the sampled-distribution misfit.

Maximises ``eta * H(pi) - E(pi)`` over the simplex, where
``E(pi) = sum_r P~(r) (sum_R P(r|R) pi_R - P~(r))**2``. The objective is
concave; it is solved by exponentiated-gradient ascent with backtracking.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import entr

from ..core import NonConvergence, RankPmf, SampledEvalError, SampledRankSet, SamplingScheme
from ..sampling import conditional_matrix


@dataclass(frozen=True)
class MesConfig:
    eta: float = 0.001
    max_iters: int = 2000
    step_size: float = 1.0
    rel_tol: float = 1e-9
    scheme: SamplingScheme = SamplingScheme.WITH_REPLACEMENT

    def __post_init__(self):
        object.__setattr__(self, "scheme", SamplingScheme(self.scheme))
        if self.eta < 0:
            raise SampledEvalError("eta must be >= 0")
        if self.max_iters < 1 or not self.step_size > 0 or not self.rel_tol > 0:
            raise SampledEvalError("max_iters, step_size and rel_tol must be positive")


def mes_objective(pi: np.ndarray, A: np.ndarray, p_tilde: np.ndarray, eta: float) -> float:
    resid = pi @ A - p_tilde
    return float(eta * entr(pi).sum() - p_tilde @ resid**2)


def _gradient(pi, A, p_tilde, eta):
    resid = pi @ A - p_tilde
    g = -2.0 * (A @ (p_tilde * resid))
    if eta:
        g = g - eta * (np.log(np.maximum(pi, 1e-300)) + 1.0)
    return g


def mes_solve(A: np.ndarray, p_tilde: np.ndarray, cfg: MesConfig = MesConfig(),
              pi0=None) -> tuple[np.ndarray, list, bool]:
    """Exponentiated-gradient ascent on the MES objective.

    Returns the best iterate, the objective trace (one entry per accepted
    iterate, starting at ``pi0``) and whether the stopping rule fired.
    """
    N = A.shape[0]
    pi = np.full(N, 1.0 / N) if pi0 is None else np.asarray(pi0, dtype=float).copy()
    obj = mes_objective(pi, A, p_tilde, cfg.eta)
    trace = [obj]
    step = cfg.step_size
    for _ in range(cfg.max_iters):
        g = _gradient(pi, A, p_tilde, cfg.eta)
        g = g - g.max()  # shift-invariant on the simplex
        for _ in range(60):
            logits = np.log(np.maximum(pi, 1e-300)) + step * g
            cand = np.exp(logits - logits.max())
            cand /= cand.sum()
            cand_obj = mes_objective(cand, A, p_tilde, cfg.eta)
            if cand_obj >= obj - 1e-15 * max(1.0, abs(obj)):
                break
            step *= 0.5
        else:
            return pi, trace, True  # no ascent direction left at machine precision
        change = cand_obj - obj
        pi, obj = cand, cand_obj
        trace.append(obj)
        step *= 1.5
        if abs(change) < cfg.rel_tol * max(1e-12, abs(obj)) or abs(change) < 1e-18:
            return pi, trace, True
    warnings.warn(f"MES stopped after {cfg.max_iters} iterations", NonConvergence, stacklevel=2)
    return pi, trace, False


def mes(samples: SampledRankSet, n_items: int, cfg: MesConfig = MesConfig()) -> RankPmf:
    A = conditional_matrix(n_items, samples.sample_size, cfg.scheme)
    pi, _, _ = mes_solve(A, samples.rank_distribution(), cfg)
    return RankPmf.from_weights(pi)
