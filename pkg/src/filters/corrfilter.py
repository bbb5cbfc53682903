"""DCC-T conditional correlation filter.

R_t = (1 - beta1 - beta2) Rbar + beta1 Psi_{t-1} + beta2 R_{t-1}

Psi_{t-1} is the sample correlation of the last k devolatilized residuals
(eps_{t-k}, ..., eps_{t-1}), without centering. Windows reaching before the
sample use eps = exp(-omega_bar / 2) (the residual implied by ln y^2 = 0 at
ln h = omega_bar), and R_{-1} = Rbar.
"""
import logging
from collections import deque
from dataclasses import dataclass
from typing import Deque, Optional, Tuple

import numpy as np
from scipy.signal import lfilter

from src.errors import DegenerateColumn, DimensionMismatch
from src.model.params import AnyParams, GeneralParams

logger = logging.getLogger(__name__)

DEFAULT_EIG_FLOOR = 1e-6


def presample_residuals(omega_bar: np.ndarray, k: int) -> np.ndarray:
    """k rows of the pre-sample residual exp(-omega_bar / 2)."""
    return np.tile(np.exp(-0.5 * np.asarray(omega_bar, dtype=float)), (k, 1))


def _set_unit_diagonal(R: np.ndarray) -> np.ndarray:
    idx = np.arange(R.shape[-1])
    R[..., idx, idx] = 1.0
    return R


def sample_corr(window: np.ndarray) -> np.ndarray:
    """Uncentered sample correlation of a k x m window."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 2:
        raise DimensionMismatch(f"window must be k x m, got shape {window.shape}")
    S = window.T @ window
    diag = np.diag(S)
    if np.any(diag <= 0):
        column = int(np.argmax(diag <= 0))
        raise DegenerateColumn(f"column {column} of the window is identically zero", column=column)
    scale = np.sqrt(diag)
    return _set_unit_diagonal(S / np.outer(scale, scale))


def ensure_pd(R: np.ndarray, eig_floor: float = DEFAULT_EIG_FLOOR) -> Tuple[np.ndarray, bool]:
    """Clip eigenvalues at ``eig_floor`` and rescale back to unit diagonal.

    Returns the input unchanged with ``False`` when it already clears the floor.
    """
    R = np.asarray(R, dtype=float)
    sym = 0.5 * (R + R.T)
    vals, vecs = np.linalg.eigh(sym)
    if vals.min() >= eig_floor:
        return R, False
    clipped = (vecs * np.maximum(vals, eig_floor)) @ vecs.T
    d = np.sqrt(np.diag(clipped))
    repaired = clipped / np.outer(d, d)
    repaired = 0.5 * (repaired + repaired.T)
    return _set_unit_diagonal(repaired), True


def step_R(
    R_prev: np.ndarray, psi: np.ndarray, beta1: float, beta2: float, Rbar: np.ndarray
) -> np.ndarray:
    """One DCC-T update; the diagonal is exactly one."""
    R = (1.0 - beta1 - beta2) * Rbar + beta1 * psi + beta2 * R_prev
    return _set_unit_diagonal(R)


class CorrState:
    """Streaming correlation state: residual window plus the previous R."""

    def __init__(self, params: AnyParams):
        self.params = params
        k = params.order.window
        self.window: Deque[np.ndarray] = deque(presample_residuals(params.omega_bar, k), maxlen=k)
        self.R_prev = np.asarray(params.Rbar, dtype=float).copy()

    def psi(self) -> np.ndarray:
        return sample_corr(np.array(self.window))

    def next_R(self) -> np.ndarray:
        """R for the coming period, from the current window; advances R_prev."""
        p = self.params
        R = step_R(self.R_prev, self.psi(), p.beta1, p.beta2, p.Rbar)
        self.R_prev = R
        return R

    def push(self, eps: np.ndarray) -> None:
        self.window.append(np.asarray(eps, dtype=float))


@dataclass(frozen=True)
class CorrPath:
    """Batch correlation path.

    ``ext`` stacks the k pre-sample rows on top of eps; ``sums[t]`` is the
    cross-product sum of ext rows [t, t + k) (the window feeding R_t),
    ``psi[t]`` its correlation and ``R[t]`` the filtered correlation.
    """

    ext: np.ndarray
    sums: np.ndarray
    psi: np.ndarray
    R: np.ndarray


def sliding_sums(values: np.ndarray, k: int, count: int) -> np.ndarray:
    """Sums of k consecutive rows (axis 0) for the first ``count`` windows."""
    cs = np.concatenate([np.zeros((1,) + values.shape[1:]), np.cumsum(values, axis=0)])
    return cs[k:k + count] - cs[:count]


def psi_from_sums(sums: np.ndarray) -> np.ndarray:
    diag = np.diagonal(sums, axis1=1, axis2=2)
    if np.any(diag <= 0):
        t, column = np.argwhere(diag <= 0)[0]
        raise DegenerateColumn(
            f"residual window for t={int(t)} has series {int(column)} identically zero",
            t=int(t),
            column=int(column),
        )
    scale = np.sqrt(diag)
    psi = sums / (scale[:, :, None] * scale[:, None, :])
    return _set_unit_diagonal(psi)


def dcc_filter(X: np.ndarray, beta2: float) -> np.ndarray:
    """out_t = X_t + beta2 * out_{t-1}, out_{-1} = 0, along axis 0."""
    return lfilter([1.0], [1.0, -beta2], X, axis=0)


def run_corr_filter(params: GeneralParams, eps: np.ndarray, extra_step: bool = False) -> CorrPath:
    """Batch R_t for t = 0..n-1 (and R_n with ``extra_step``)."""
    eps = np.asarray(eps, dtype=float)
    n, m = eps.shape
    if m != params.order.m:
        raise DimensionMismatch(f"eps has {m} columns, model has m={params.order.m}")
    k = params.order.window
    ext = np.vstack([presample_residuals(params.omega_bar, k), eps])
    count = n + 1 if extra_step else n
    sums = sliding_sums(ext[:, :, None] * ext[:, None, :], k, count)
    psi = psi_from_sums(sums)
    b1, b2 = params.beta1, params.beta2
    Rbar = np.asarray(params.Rbar)
    X = (1.0 - b1 - b2) * Rbar[None] + b1 * psi
    R = dcc_filter(X, b2) + (b2 ** np.arange(1, count + 1))[:, None, None] * Rbar[None]
    return CorrPath(ext=ext, sums=sums, psi=psi, R=_set_unit_diagonal(R))


def repair_path(R: np.ndarray, eig_floor: float = DEFAULT_EIG_FLOOR) -> Tuple[np.ndarray, np.ndarray]:
    """Cholesky factors for every R_t, repairing only the matrices that fail.

    Returns (R_used, repaired_mask).
    """
    mask = np.zeros(R.shape[0], dtype=bool)
    try:
        np.linalg.cholesky(R)
        return R, mask
    except np.linalg.LinAlgError:
        pass
    R_used = R.copy()
    for t in range(R.shape[0]):
        try:
            np.linalg.cholesky(R[t])
        except np.linalg.LinAlgError:
            R_used[t], mask[t] = ensure_pd(R[t], eig_floor)
    if mask.any():
        logger.debug(f"⚠️ repaired {int(mask.sum())} correlation matrices")
    return R_used, mask


def forecast_R(params: GeneralParams, eps: np.ndarray, eig_floor: Optional[float] = None) -> np.ndarray:
    """Correlation matrix for the period after the last residual row."""
    R = run_corr_filter(params, eps, extra_step=True).R[-1]
    if eig_floor is not None:
        R, _ = ensure_pd(R, eig_floor)
    return R
