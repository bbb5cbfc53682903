"""Path simulation with normal or scaled Student-t innovations."""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.errors import ConstraintViolation, ExplosivePath, UnknownName
from src.filters.corrfilter import DEFAULT_EIG_FLOOR, CorrState, ensure_pd
from src.filters.volfilter import (
    DEFAULT_FLOOR,
    LOG_H_LIMIT,
    VolFilterState,
    as_general,
    log_sq_row,
)
from src.model.params import AnyParams, GeneralParams
from src.services.stationarity import StationarityReport, check_stationarity

logger = logging.getLogger(__name__)

DISTRIBUTIONS = ("normal", "t")
SQRT_CONVENTION = "lower Cholesky factor of R_t"


def default_burn(k_window: int) -> int:
    return max(500, 5 * k_window)


def draw_innovations(
    rng: np.random.Generator, size: tuple, dist: str = "normal", df: float = 5.0
) -> np.ndarray:
    """i.i.d. innovations with zero mean and unit variance per component."""
    if dist == "normal":
        return rng.standard_normal(size)
    if dist == "t":
        if df <= 2:
            raise ConstraintViolation("t degrees of freedom > 2", f"df={df}")
        return rng.standard_t(df, size) * np.sqrt((df - 2.0) / df)
    raise UnknownName(f"unknown innovation distribution '{dist}' (normal or t)")


@dataclass
class SimulationResult:
    """Simulated path; ``full_*`` arrays keep the burn-in rows as well."""

    params: GeneralParams
    burn: int
    full_panel: np.ndarray
    full_log_h: np.ndarray
    full_eps: np.ndarray
    full_R: np.ndarray
    full_eta: np.ndarray
    dist: str = "normal"
    df: Optional[float] = None
    seed: Optional[int] = None
    n_repairs: int = 0
    stationarity: Optional[StationarityReport] = None
    notes: list = field(default_factory=list)

    @property
    def panel(self) -> np.ndarray:
        return self.full_panel[self.burn:]

    @property
    def log_h(self) -> np.ndarray:
        return self.full_log_h[self.burn:]

    @property
    def eps(self) -> np.ndarray:
        return self.full_eps[self.burn:]

    @property
    def R(self) -> np.ndarray:
        return self.full_R[self.burn:]

    @property
    def H(self) -> np.ndarray:
        """Conditional covariances D_t R_t D_t of the retained rows."""
        d = np.exp(0.5 * self.log_h)
        return d[:, :, None] * self.R * d[:, None, :]

    @property
    def diagnostics(self) -> dict:
        return {
            "n": int(self.panel.shape[0]),
            "burn": self.burn,
            "dist": self.dist,
            "df": self.df,
            "seed": self.seed,
            "n_repairs": self.n_repairs,
            "sqrt_convention": SQRT_CONVENTION,
            "stationarity": self.stationarity.to_dict() if self.stationarity else None,
            "notes": list(self.notes),
        }


def simulate(
    params: AnyParams,
    n: int,
    burn: Optional[int] = None,
    dist: str = "normal",
    df: float = 5.0,
    seed: Optional[int] = None,
    allow_nonstationary: bool = False,
    floor: float = DEFAULT_FLOOR,
    eig_floor: float = DEFAULT_EIG_FLOOR,
) -> SimulationResult:
    """Simulate n retained observations after ``burn`` discarded ones.

    Filter states start at zero, R at Rbar, and the first correlation windows
    hold the pre-sample residuals, exactly as in estimation. Identical
    arguments give a bit-identical panel.
    """
    general = as_general(params).validate()
    k = general.order.window
    burn = default_burn(k) if burn is None else int(burn)
    if burn < k:
        raise ConstraintViolation("burn >= k_window", f"burn={burn}, k={k}")
    if n < 1:
        raise ConstraintViolation("n >= 1", f"n={n}")
    stationarity = check_stationarity(general)
    if not stationarity.satisfied and not allow_nonstationary:
        raise ConstraintViolation("stationarity condition", stationarity.message)

    m = general.order.m
    total = burn + n
    rng = np.random.default_rng(seed)
    eta = draw_innovations(rng, (total, m), dist, df)

    vol = VolFilterState(general)
    corr = CorrState(general)
    panel = np.empty((total, m))
    log_h = np.empty((total, m))
    eps = np.empty((total, m))
    R_path = np.empty((total, m, m))
    n_repairs = 0

    for t in range(total):
        lh = vol.log_h()
        if not np.all(np.isfinite(lh)) or np.any(np.abs(lh) > LOG_H_LIMIT):
            raise ExplosivePath(f"simulated ln h left the range at t={t}", t=t)
        R = corr.next_R()
        try:
            chol = np.linalg.cholesky(R)
        except np.linalg.LinAlgError:
            R, _ = ensure_pd(R, eig_floor)
            chol = np.linalg.cholesky(R)
            n_repairs += 1
        e = chol @ eta[t]
        y = np.exp(0.5 * lh) * e

        panel[t], log_h[t], eps[t], R_path[t] = y, lh, e, R
        vol.update(log_sq_row(y, floor))
        corr.push(e)

    if n_repairs:
        logger.warning(f"⚠️ {n_repairs} simulated correlation matrices needed repair")
    logger.debug(f"✅ Simulated n={n} (burn {burn}, {dist}) for m={m}")
    return SimulationResult(
        params=general,
        burn=burn,
        full_panel=panel,
        full_log_h=log_h,
        full_eps=eps,
        full_R=R_path,
        full_eta=eta,
        dist=dist,
        df=df if dist == "t" else None,
        seed=seed,
        n_repairs=n_repairs,
        stationarity=stationarity,
        notes=[f"H^(1/2) convention: {SQRT_CONVENTION}", f"burn-in {burn} rows discarded"],
    )
