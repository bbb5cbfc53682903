"""Gaussian quasi-likelihood and its analytic score.

With eps_t the devolatilized residual and R_t the filtered correlation,

    l_t = 1/2 eps_t' R_t^{-1} eps_t + 1/2 sum_i ln h_it + 1/2 ln |R_t|

and the objective is L = sum_t l_t (additive constants dropped). Scores are
assembled from the Jacobian of ln h_t: eps_t, the residual windows behind
Psi and every R_t depend on the volatility coordinates only through ln h.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.errors import DimensionMismatch, NonFiniteInput, NonFiniteLikelihood
from src.filters.corrfilter import (
    DEFAULT_EIG_FLOOR,
    CorrPath,
    dcc_filter,
    repair_path,
    run_corr_filter,
    sliding_sums,
)
from src.filters.volfilter import (
    DEFAULT_FLOOR,
    LogSquares,
    as_general,
    derivative_states,
    log_sq_returns,
    run_filter,
)
from src.model.params import AnyParams, LowRankParams, layout, vech_lower_indices

logger = logging.getLogger(__name__)

DEFAULT_PENALTY = 1e3
DEFAULT_CHUNK_BUDGET = 4_000_000


@dataclass
class LikelihoodTerms:
    value: float
    raw_value: float
    contributions: np.ndarray
    n_repaired: int
    scores: Optional[np.ndarray] = None


class QuasiLikelihood:
    """Quasi-likelihood evaluator bound to one return panel.

    The log-squared returns are computed once and shared by every evaluation,
    which is what the multistart optimizer and the Hessian differencing need.
    """

    def __init__(
        self,
        panel: np.ndarray,
        floor: float = DEFAULT_FLOOR,
        eig_floor: float = DEFAULT_EIG_FLOOR,
        penalty: float = DEFAULT_PENALTY,
        chunk_budget: int = DEFAULT_CHUNK_BUDGET,
    ):
        y = np.asarray(panel, dtype=float)
        if y.ndim != 2:
            raise DimensionMismatch(f"panel must be n x m, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise NonFiniteInput("panel contains non-finite values")
        self.panel = y
        self.n, self.m = y.shape
        self.log_sq: LogSquares = log_sq_returns(y, floor)
        self.eig_floor = eig_floor
        self.penalty = penalty
        self.chunk_budget = max(1, int(chunk_budget))

    @property
    def n_floored(self) -> int:
        return self.log_sq.n_floored

    def _check(self, params: AnyParams) -> None:
        order = params.order
        if order.m != self.m:
            raise DimensionMismatch(f"model has m={order.m}, panel has {self.m} columns")
        if self.n < order.window + 1:
            raise DimensionMismatch(
                f"panel has {self.n} rows, needs at least k+1={order.window + 1}"
            )

    # -- public ----------------------------------------------------------

    def value(self, params: AnyParams) -> float:
        return self.evaluate(params).value

    def value_and_gradient(self, params: AnyParams) -> Tuple[float, np.ndarray]:
        terms = self.evaluate(params, scores=True)
        return terms.value, terms.scores.sum(axis=0)

    def scores(self, params: AnyParams) -> np.ndarray:
        return self.evaluate(params, scores=True).scores

    def evaluate(self, params: AnyParams, scores: bool = False) -> LikelihoodTerms:
        self._check(params)
        general = as_general(params)
        y = self.panel

        if scores:
            bundle = derivative_states(params, self.log_sq)
            log_h = bundle.log_h
        else:
            log_h = run_filter(general, self.log_sq, y).log_h
        eps = y * np.exp(-0.5 * log_h)

        corr = run_corr_filter(general, eps)
        R_used, repaired = repair_path(corr.R, self.eig_floor)
        chol = np.linalg.cholesky(R_used)
        logdet = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
        r_eps = np.linalg.solve(R_used, eps[:, :, None])[:, :, 0]
        quad = np.einsum("ti,ti->t", eps, r_eps)
        contributions = 0.5 * (quad + log_h.sum(axis=1) + logdet)

        finite = np.isfinite(contributions)
        if not finite.all():
            raise NonFiniteLikelihood(int(np.argmin(finite)))

        n_repaired = int(repaired.sum())
        raw = float(contributions.sum())
        terms = LikelihoodTerms(
            value=raw + self.penalty * n_repaired,
            raw_value=raw,
            contributions=contributions,
            n_repaired=n_repaired,
        )
        if scores:
            terms.scores = self._scores(params, bundle.jacobian, eps, corr, R_used, r_eps)
        return terms

    # -- score assembly --------------------------------------------------

    def _scores(
        self,
        params: AnyParams,
        J: np.ndarray,
        eps: np.ndarray,
        corr: CorrPath,
        R_used: np.ndarray,
        r_eps: np.ndarray,
    ) -> np.ndarray:
        general = as_general(params)
        order = params.order
        n, m = eps.shape
        k = order.window
        b1, b2 = general.beta1, general.beta2
        Rbar = np.asarray(general.Rbar)
        lay = layout(order, lowrank=isinstance(params, LowRankParams))
        p = J.shape[2]

        R_inv = np.linalg.inv(R_used)
        W = 0.5 * (R_inv - r_eps[:, :, None] * r_eps[:, None, :])
        a = 0.5 * (1.0 - eps * r_eps)
        out = np.zeros((n, lay.size))
        out[:, :p] = np.einsum("ti,tip->tp", a, J)

        # residual derivatives over the extended window (pre-sample rows
        # depend on omega_bar only)
        J_pre = np.zeros((k, m, p))
        J_pre[:, :, lay.omega] = np.eye(m)
        ext = corr.ext
        eps_dot = -0.5 * np.concatenate([J_pre, J], axis=0) * ext[:, :, None]

        diag_S = np.diagonal(corr.sums, axis1=1, axis2=2)
        scale = np.sqrt(diag_S)
        norm = scale[:, :, None] * scale[:, None, :]
        idx = np.arange(m)
        chunk = max(1, self.chunk_budget // max(1, (n + k) * m * m))
        for start in range(0, p, chunk):
            cols = slice(start, min(p, start + chunk))
            prod = eps_dot[:, :, None, cols] * ext[:, None, :, None]
            S_dot = sliding_sums(prod + prod.swapaxes(1, 2), k, n)
            half = 0.5 * S_dot[:, idx, idx, :] / diag_S[:, :, None]
            psi_dot = S_dot / norm[..., None] - corr.psi[..., None] * (
                half[:, :, None, :] + half[:, None, :, :]
            )
            psi_dot[:, idx, idx, :] = 0.0
            R_dot = b1 * dcc_filter(psi_dot, b2)
            out[:, cols] += np.einsum("tij,tijp->tp", W, R_dot)

        dR_b1 = dcc_filter(corr.psi - Rbar[None], b2)
        R_lag = np.concatenate([Rbar[None], corr.R[:-1]], axis=0)
        dR_b2 = dcc_filter(R_lag - Rbar[None], b2)
        out[:, lay.beta.start] = np.einsum("tij,tij->t", W, dR_b1)
        out[:, lay.beta.start + 1] = np.einsum("tij,tij->t", W, dR_b2)

        if m > 1:
            powers = b2 ** np.arange(1, n + 1)
            coef = (1.0 - b1 - b2) * (1.0 - powers) / (1.0 - b2) + powers
            rows, cols_ = vech_lower_indices(m)
            out[:, lay.rbar] = 2.0 * coef[:, None] * W[:, rows, cols_]
        return out


def neg_loglik(params: AnyParams, panel: np.ndarray, floor: float = DEFAULT_FLOOR) -> float:
    """Quasi negative log-likelihood (PD-repair penalty included)."""
    return QuasiLikelihood(panel, floor=floor).value(params)


def grad_neg_loglik(params: AnyParams, panel: np.ndarray, floor: float = DEFAULT_FLOOR) -> np.ndarray:
    """Analytic gradient in theta (general) or vartheta (low-rank) coordinates."""
    return QuasiLikelihood(panel, floor=floor).value_and_gradient(params)[1]


def per_observation_scores(
    params: AnyParams, panel: np.ndarray, floor: float = DEFAULT_FLOOR
) -> np.ndarray:
    return QuasiLikelihood(panel, floor=floor).scores(params)
