"""One-step covariance forecasts, minimum-variance VaR and backtests.

Hits are ``z_t < Q_t`` with ``Q_t = sigma_t * b_tau``: the negative VaR of
the lower tail for small tau and the upper quantile for tau > 0.5.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import xlogy
from scipy.stats import chi2

from src.errors import ConstraintViolation, DimensionMismatch, MGARCHError, SingularH
from src.filters.corrfilter import DEFAULT_EIG_FLOOR, repair_path, run_corr_filter
from src.filters.volfilter import (
    DEFAULT_FLOOR,
    as_general,
    forecast_log_h,
    log_sq_returns,
    run_filter,
)
from src.model.params import AnyParams, GeneralParams, ModelOrder
from src.services.estimation import FitOptions, FitReport, get_estimator
from src.utils.parallel import spawn_seeds

logger = logging.getLogger(__name__)

QUANTILE_METHOD = "linear"
DEFAULT_DQ_LAGS = 4
RANK_TOL = 1e-10
WEEKLY = 5


# ---------------------------------------------------------------------------
# Forecasts and weights
# ---------------------------------------------------------------------------


def _compose(log_h: np.ndarray, R: np.ndarray) -> np.ndarray:
    d = np.exp(0.5 * log_h)
    return d[..., :, None] * R * d[..., None, :]


def covariance_path(
    params: AnyParams,
    history: np.ndarray,
    floor: float = DEFAULT_FLOOR,
    eig_floor: float = DEFAULT_EIG_FLOOR,
) -> np.ndarray:
    """H_t for every row of ``history`` plus the next period (n + 1 matrices)."""
    params = as_general(params)
    y = np.asarray(history, dtype=float)
    if y.ndim != 2 or y.shape[1] != params.order.m:
        raise DimensionMismatch(f"history shape {y.shape} does not match m={params.order.m}")
    if y.shape[0] < params.order.window:
        raise DimensionMismatch(
            f"history has {y.shape[0]} rows, needs at least k={params.order.window}"
        )
    log_sq = log_sq_returns(y, floor)
    path = run_filter(params, log_sq, y)
    R, _ = repair_path(run_corr_filter(params, path.eps, extra_step=True).R, eig_floor)
    log_h = np.vstack([path.log_h, forecast_log_h(params, log_sq)[None]])
    return _compose(log_h, R)


def forecast_H(
    fit: Union[FitReport, AnyParams],
    history: np.ndarray,
    floor: float = DEFAULT_FLOOR,
    eig_floor: float = DEFAULT_EIG_FLOOR,
) -> np.ndarray:
    """H for the period after the last row of ``history``; uses data through t-1 only."""
    params = fit.params if isinstance(fit, FitReport) else fit
    return covariance_path(params, history, floor, eig_floor)[-1]


def mv_weights(H: np.ndarray) -> np.ndarray:
    """Minimum-variance weights H^{-1}1 / (1'H^{-1}1), short selling allowed."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionMismatch(f"H must be square, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise SingularH("H has non-finite entries")
    try:
        x = cho_solve(cho_factor(H, lower=True), np.ones(H.shape[0]))
    except LinAlgError as e:
        raise SingularH(f"H is not positive definite: {e}") from e
    total = x.sum()
    if not np.isfinite(total) or total <= 0:
        raise SingularH("1'H^{-1}1 is not positive")
    weights = x / total
    # absorb rounding so the weights sum to one
    weights[-1] = 1.0 - weights[:-1].sum()
    return weights


# ---------------------------------------------------------------------------
# Backtest statistics
# ---------------------------------------------------------------------------


def _as_hits(hits: Sequence) -> np.ndarray:
    h = np.asarray(hits, dtype=float).ravel()
    if not np.all((h == 0) | (h == 1)):
        raise ConstraintViolation("hits in {0, 1}")
    return h


def _check_tau(tau: float) -> None:
    if not 0 < tau < 1:
        raise ConstraintViolation("0 < tau < 1", f"tau={tau}")


def ecr_pe(hits: Sequence, tau: float, n_out: Optional[int] = None) -> Dict[str, float]:
    """Empirical coverage rate (percent) and prediction error."""
    _check_tau(tau)
    h = _as_hits(hits)
    n_out = h.size if n_out is None else int(n_out)
    if n_out < 1:
        raise ConstraintViolation("n_out >= 1")
    rate = h.sum() / n_out
    pe = abs(rate - tau) / np.sqrt(tau * (1.0 - tau) / n_out)
    return {"ecr": float(100.0 * rate), "pe": float(pe)}


@dataclass(frozen=True)
class CoverageTest:
    lr_uc: float
    uc_p: float
    lr_ind: float
    stat: float
    p: float


def _bernoulli_loglik(n0: float, n1: float, p: float) -> float:
    return float(xlogy(n0, 1.0 - p) + xlogy(n1, p))


def cc_test(hits: Sequence, tau: float) -> CoverageTest:
    """Conditional coverage LR test: unconditional coverage plus first-order independence."""
    _check_tau(tau)
    h = _as_hits(hits)
    n = h.size
    if n < 10:
        raise ConstraintViolation("hits length >= 10", f"got {n}")
    n1 = float(h.sum())
    n0 = n - n1
    lr_uc = -2.0 * (_bernoulli_loglik(n0, n1, tau) - _bernoulli_loglik(n0, n1, n1 / n))

    lr_ind = 0.0
    if n1 > 0:
        prev, curr = h[:-1], h[1:]
        n00 = float(np.sum((prev == 0) & (curr == 0)))
        n01 = float(np.sum((prev == 0) & (curr == 1)))
        n10 = float(np.sum((prev == 1) & (curr == 0)))
        n11 = float(np.sum((prev == 1) & (curr == 1)))
        pi01 = n01 / (n00 + n01) if n00 + n01 > 0 else 0.0
        pi11 = n11 / (n10 + n11) if n10 + n11 > 0 else 0.0
        pi = (n01 + n11) / (n - 1)
        restricted = _bernoulli_loglik(n00 + n10, n01 + n11, pi)
        markov = _bernoulli_loglik(n00, n01, pi01) + _bernoulli_loglik(n10, n11, pi11)
        lr_ind = max(-2.0 * (restricted - markov), 0.0)

    stat = lr_uc + lr_ind
    return CoverageTest(
        lr_uc=float(lr_uc),
        uc_p=float(chi2.sf(lr_uc, 1)),
        lr_ind=float(lr_ind),
        stat=float(stat),
        p=float(chi2.sf(stat, 2)),
    )


@dataclass(frozen=True)
class DQTest:
    stat: float
    p: float
    df: int
    coef: np.ndarray
    collinear: bool
    dropped: List[int] = field(default_factory=list)


def _independent_columns(X: np.ndarray) -> List[int]:
    """Greedy left-to-right selection of linearly independent columns."""
    kept: List[int] = []
    for col in range(X.shape[1]):
        trial = kept + [col]
        if np.linalg.matrix_rank(X[:, trial], tol=RANK_TOL * max(1.0, np.abs(X).max())) == len(trial):
            kept.append(col)
    return kept


def dq_test(
    hits: Sequence, var_series: Sequence, tau: float, n_lags: int = DEFAULT_DQ_LAGS
) -> DQTest:
    """Dynamic quantile test of (hit_t - tau) on [1, lagged hits, Q_t].

    Linearly dependent regressors are dropped (coefficient 0) and the result
    is flagged; the statistic keeps n_lags + 2 degrees of freedom.
    """
    _check_tau(tau)
    h = _as_hits(hits)
    q = np.asarray(var_series, dtype=float).ravel()
    if q.size != h.size:
        raise DimensionMismatch(f"hits ({h.size}) and VaR ({q.size}) lengths differ")
    n = h.size
    if n <= n_lags + 7:
        raise ConstraintViolation(f"series length > {n_lags + 7}", f"got {n}")

    target = h[n_lags:] - tau
    lags = [h[n_lags - i:n - i] for i in range(1, n_lags + 1)]
    X = np.column_stack([np.ones(n - n_lags), *lags, q[n_lags:]])

    kept = _independent_columns(X)
    coef = np.zeros(X.shape[1])
    coef[kept] = np.linalg.lstsq(X[:, kept], target, rcond=None)[0]
    fitted = X @ coef
    stat = float(fitted @ fitted / (tau * (1.0 - tau)))
    df = n_lags + 2
    dropped = [col for col in range(X.shape[1]) if col not in kept]
    if dropped:
        logger.debug(f"⚠️ DQ regressors {dropped} are collinear and were dropped")
    return DQTest(
        stat=stat,
        p=float(chi2.sf(stat, df)),
        df=df,
        coef=coef,
        collinear=bool(dropped),
        dropped=dropped,
    )


# ---------------------------------------------------------------------------
# Rolling VaR
# ---------------------------------------------------------------------------


@dataclass
class VarBacktestReport:
    tau: float
    index: np.ndarray
    var_series: np.ndarray
    portfolio_series: np.ndarray
    sigma_series: np.ndarray
    hits: np.ndarray
    ecr: float
    pe: float
    lr_uc: float
    uc_p: float
    cc_stat: float
    cc_p: float
    dq_stat: float
    dq_p: float
    dq_df: int = DEFAULT_DQ_LAGS + 2
    dq_collinear: bool = False
    n_out: int = 0
    n_failed: int = 0
    notes: List[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "index": self.index,
                "z": self.portfolio_series,
                "sigma": self.sigma_series,
                "var": self.var_series,
                "hit": self.hits.astype(int),
            }
        )

    def summary(self) -> dict:
        return {
            "tau": self.tau,
            "n_out": self.n_out,
            "n_failed": self.n_failed,
            "ecr": self.ecr,
            "pe": self.pe,
            "lr_uc": self.lr_uc,
            "uc_p": self.uc_p,
            "cc_stat": self.cc_stat,
            "cc_p": self.cc_p,
            "dq_stat": self.dq_stat,
            "dq_p": self.dq_p,
            "dq_df": self.dq_df,
            "dq_collinear": self.dq_collinear,
            "notes": list(self.notes),
        }


def backtest_report(
    tau: float,
    index: np.ndarray,
    z: np.ndarray,
    sigma: np.ndarray,
    var: np.ndarray,
    n_failed: int = 0,
) -> VarBacktestReport:
    """Backtest statistics for one quantile level on a finished forecast stream."""
    hits = (z < var).astype(float)
    coverage = ecr_pe(hits, tau)
    cc = cc_test(hits, tau)
    dq = dq_test(hits, var, tau)
    return VarBacktestReport(
        tau=tau,
        index=np.asarray(index),
        var_series=np.asarray(var),
        portfolio_series=np.asarray(z),
        sigma_series=np.asarray(sigma),
        hits=hits,
        ecr=coverage["ecr"],
        pe=coverage["pe"],
        lr_uc=cc.lr_uc,
        uc_p=cc.uc_p,
        cc_stat=cc.stat,
        cc_p=cc.p,
        dq_stat=dq.stat,
        dq_p=dq.p,
        dq_df=dq.df,
        dq_collinear=dq.collinear,
        n_out=int(hits.size),
        n_failed=n_failed,
        notes=[
            f"b_tau is the {QUANTILE_METHOD}-interpolated sample quantile of in-window residuals",
            f"DQ p-value from chi2({dq.df})",
        ],
    )


@dataclass
class _Calibration:
    """Weights and residual quantiles fixed between refits."""

    params: GeneralParams
    weights: np.ndarray
    quantiles: np.ndarray


def _calibrate(
    params: GeneralParams, window: np.ndarray, levels: np.ndarray, floor: float, eig_floor: float
) -> _Calibration:
    H = covariance_path(params, window, floor, eig_floor)
    weights = mv_weights(H[-1])
    sigma = np.sqrt(np.einsum("i,tij,j->t", weights, H[:-1], weights))
    residuals = window @ weights / sigma
    quantiles = np.quantile(residuals, levels, method=QUANTILE_METHOD)
    return _Calibration(params=params, weights=weights, quantiles=np.atleast_1d(quantiles))


def rolling_var(
    panel: np.ndarray,
    n0: int,
    order: Optional[ModelOrder] = None,
    estimator: str = "general",
    levels: Sequence[float] = (0.01, 0.025, 0.05, 0.95, 0.975, 0.99),
    refit_every: int = 1,
    opts: Optional[FitOptions] = None,
    fixed_params: Optional[AnyParams] = None,
    index: Optional[Sequence] = None,
) -> Dict[float, VarBacktestReport]:
    """Rolling one-step MV-portfolio VaR on a fixed moving window of n0 rows.

    At each refit origin the model is fitted on the trailing window (warm
    started from the previous estimate), the MV weights come from that
    origin's forecast H, and b_tau from the in-window standardized portfolio
    residuals. Between refits the last estimate filters forward over the
    moving window. Origins whose fit or forecast fails are excluded and
    counted.
    """
    y = np.asarray(panel, dtype=float)
    if y.ndim != 2:
        raise DimensionMismatch(f"panel must be n x m, got shape {y.shape}")
    n, m = y.shape
    if not 0 < n0 < n:
        raise ConstraintViolation("0 < n0 < n", f"n0={n0}, n={n}")
    if refit_every < 1:
        raise ConstraintViolation("refit_every >= 1", f"got {refit_every}")
    if fixed_params is None and order is None:
        raise ConstraintViolation("order or fixed_params given")
    tau = np.array(sorted(float(t) for t in levels))
    for t in tau:
        _check_tau(t)
    labels = np.arange(n) if index is None else np.asarray(index)
    if labels.size != n:
        raise DimensionMismatch(f"index has {labels.size} labels for {n} rows")

    options = opts or FitOptions()
    floor, eig_floor = options.floor, options.eig_floor
    fit = get_estimator(estimator) if fixed_params is None else None
    n_refits = -(-(n - n0) // refit_every)
    refit_seeds = spawn_seeds(options.seed, n_refits)
    logger.info(
        f"🚀 Rolling VaR: {n - n0} origins, window {n0}, refit every {refit_every}, "
        f"{'fixed parameters' if fit is None else estimator}"
    )

    fixed = as_general(fixed_params) if fixed_params is not None else None
    estimate: Optional[AnyParams] = fixed_params
    calib: Optional[_Calibration] = None
    kept_t: List[int] = []
    z_out: List[float] = []
    sigma_out: List[float] = []
    q_out: List[np.ndarray] = []
    n_failed = 0

    for step, t in enumerate(range(n0, n)):
        window = y[t - n0:t]
        if step % refit_every == 0:
            calib = None
            try:
                if fit is not None:
                    report = fit(
                        window,
                        order,
                        options.model_copy(update={"seed": refit_seeds[step // refit_every]}),
                        initial=estimate,
                    )
                    estimate = report.estimate
                    params = report.params
                else:
                    params = fixed
                calib = _calibrate(params, window, tau, floor, eig_floor)
            except MGARCHError as e:
                logger.warning(f"⚠️ Refit at origin {t} failed: {e}")
        if calib is None:
            n_failed += 1
            continue
        try:
            H = forecast_H(calib.params, window, floor, eig_floor)
        except MGARCHError as e:
            logger.warning(f"⚠️ Forecast at origin {t} failed: {e}")
            n_failed += 1
            continue
        sigma = float(np.sqrt(calib.weights @ H @ calib.weights))
        kept_t.append(t)
        z_out.append(float(calib.weights @ y[t]))
        sigma_out.append(sigma)
        q_out.append(sigma * calib.quantiles)

    if not kept_t:
        raise MGARCHError("every forecast origin failed")
    if n_failed:
        logger.warning(f"⚠️ {n_failed} of {n - n0} origins excluded")

    z = np.array(z_out)
    sig = np.array(sigma_out)
    Q = np.vstack(q_out)
    reports = {
        float(level): backtest_report(float(level), labels[kept_t], z, sig, Q[:, col], n_failed)
        for col, level in enumerate(tau)
    }
    for level, rep in reports.items():
        logger.info(f"📊 tau={level:g}: ECR {rep.ecr:.2f}%, PE {rep.pe:.3f}, CC p {rep.cc_p:.3f}")
    return reports

