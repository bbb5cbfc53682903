"""Sandwich covariance, standard errors and spillover tests.

Sigma      = (1/n) sum_t s_t s_t'           (outer product of scores)
Sigma_star = (1/n) d^2 L / d theta d theta' (central differences of the analytic gradient)

General fits use avar = Sigma_star^{-1} Sigma Sigma_star^{-1}. Low-rank fits
project onto the tangent space of the factor manifold:

    P = Delta (Delta' Sigma_star Delta)^g Delta' Sigma_star,   avar = P Sigma_G P'

Gaussian mode replaces the sandwich by Sigma_star^{-1} (general) or
Delta (Delta' Sigma_star Delta)^g Delta' (low rank).
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd
from scipy.stats import norm

from src.errors import ConstraintViolation, IndexOutOfRange, SingularInformation
from src.filters.volfilter import DEFAULT_FLOOR, phi_matrix
from src.model.params import (
    GeneralParams,
    g_index,
    lowrank_jacobian,
    pack,
    param_labels,
    unpack,
)
from src.services.estimation import FitReport
from src.services.likelihood import QuasiLikelihood

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
SINGULAR_EIG = 1e-12
PINV_RCOND = 1e-10


@dataclass
class CovReport:
    mode: str
    n_obs: int
    sigma: np.ndarray
    sigma_star: np.ndarray
    avar: np.ndarray
    gaussian: bool = False
    labels: List[str] = field(default_factory=list)
    min_eig_sigma_star: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n_obs": self.n_obs,
            "gaussian": self.gaussian,
            "labels": list(self.labels),
            "min_eig_sigma_star": self.min_eig_sigma_star,
            "sigma": self.sigma.tolist(),
            "sigma_star": self.sigma_star.tolist(),
            "avar": self.avar.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CovReport":
        return cls(
            mode=data["mode"],
            n_obs=int(data["n_obs"]),
            sigma=np.array(data["sigma"], dtype=float),
            sigma_star=np.array(data["sigma_star"], dtype=float),
            avar=np.array(data["avar"], dtype=float),
            gaussian=bool(data.get("gaussian", False)),
            labels=list(data.get("labels", [])),
            min_eig_sigma_star=float(data.get("min_eig_sigma_star", float("nan"))),
        )


@dataclass(frozen=True)
class SpilloverResult:
    i: int
    j: int
    estimate: float
    se: float
    z: float
    p_value: float

    def to_dict(self) -> dict:
        return {
            "i": self.i,
            "j": self.j,
            "estimate": self.estimate,
            "se": self.se,
            "z": self.z,
            "p_value": self.p_value,
        }


def _likelihood(panel: np.ndarray, floor: float) -> QuasiLikelihood:
    return QuasiLikelihood(panel, floor=floor)


def estimate_sigma(
    params: GeneralParams, panel: np.ndarray, floor: float = DEFAULT_FLOOR
) -> np.ndarray:
    """Outer-product-of-scores estimate (d x d)."""
    scores = _likelihood(panel, floor).scores(params)
    return scores.T @ scores / scores.shape[0]


def estimate_sigma_star(
    params: GeneralParams,
    panel: np.ndarray,
    step: float = DEFAULT_STEP,
    floor: float = DEFAULT_FLOOR,
) -> np.ndarray:
    """Hessian of the mean objective by central differences of the gradient."""
    lik = _likelihood(panel, floor)
    theta = pack(params)
    d = theta.size
    hessian = np.zeros((d, d))
    for col in range(d):
        shift = np.zeros(d)
        shift[col] = step
        up = lik.value_and_gradient(unpack(theta + shift, params.order, validate=False))[1]
        down = lik.value_and_gradient(unpack(theta - shift, params.order, validate=False))[1]
        hessian[:, col] = (up - down) / (2.0 * step)
    hessian /= lik.n
    return 0.5 * (hessian + hessian.T)


def asymptotic_cov(
    fit: FitReport,
    panel: np.ndarray,
    gaussian: bool = False,
    step: float = DEFAULT_STEP,
    floor: Optional[float] = None,
) -> CovReport:
    """Asymptotic covariance of sqrt(n)(theta_hat - theta_0) in theta coordinates."""
    if floor is None:
        floor = float(fit.options.get("floor", DEFAULT_FLOOR))
    params = fit.params
    n = int(np.asarray(panel).shape[0])
    logger.info(f"📊 Estimating {'Gaussian' if gaussian else 'sandwich'} covariance ({fit.mode})")

    sigma = estimate_sigma(params, panel, floor)
    sigma_star = estimate_sigma_star(params, panel, step, floor)
    min_eig = float(np.linalg.eigvalsh(sigma_star).min())

    if fit.mode == "lowrank" and fit.lowrank is not None:
        delta = lowrank_jacobian(fit.lowrank)
        inner = np.linalg.pinv(delta.T @ sigma_star @ delta, rcond=PINV_RCOND)
        if gaussian:
            avar = delta @ inner @ delta.T
        elif min_eig >= SINGULAR_EIG:
            star_inv = np.linalg.inv(sigma_star)
            sigma_g = star_inv @ sigma @ star_inv
            proj = delta @ inner @ delta.T @ sigma_star
            avar = proj @ sigma_g @ proj.T
        else:
            # P Sigma_G P' reduces to this form without inverting Sigma_star
            logger.warning(f"⚠️ Sigma_star is near singular (min eig {min_eig:.2e}); using reduced form")
            reduced = delta @ inner @ delta.T
            avar = reduced @ sigma @ reduced.T
    else:
        if min_eig < SINGULAR_EIG:
            raise SingularInformation(
                f"Sigma_star minimum eigenvalue {min_eig:.3e} is below {SINGULAR_EIG:g}"
            )
        star_inv = np.linalg.inv(sigma_star)
        avar = star_inv if gaussian else star_inv @ sigma @ star_inv

    avar = 0.5 * (avar + avar.T)
    logger.info(f"✅ Covariance ready (min eig Sigma_star {min_eig:.3e})")
    return CovReport(
        mode=fit.mode,
        n_obs=n,
        sigma=sigma,
        sigma_star=sigma_star,
        avar=avar,
        gaussian=gaussian,
        labels=param_labels(params.order),
        min_eig_sigma_star=min_eig,
    )


def _z_and_p(estimate: float, se: float):
    if not np.isfinite(se) or se <= 0:
        return float("nan"), float("nan")
    z = estimate / se
    return float(z), float(2.0 * norm.sf(abs(z)))


def standard_errors(params: GeneralParams, cov: CovReport) -> pd.DataFrame:
    """Fitted coefficients with s.e. = sqrt(diag(avar) / n), z and two-sided p."""
    theta = pack(params)
    se = np.sqrt(np.maximum(np.diag(cov.avar), 0.0) / cov.n_obs)
    rows = []
    for label, value, s in zip(param_labels(params.order), theta, se):
        z, p = _z_and_p(float(value), float(s))
        rows.append({"parameter": label, "estimate": float(value), "se": float(s), "z": z, "p_value": p})
    return pd.DataFrame(rows, columns=["parameter", "estimate", "se", "z", "p_value"])


def spillover_contrast(params: GeneralParams, i: int, j: int) -> np.ndarray:
    """Indices in theta summing to Phi_1[i, j] (1-based i, j)."""
    order = params.order
    if not (1 <= i <= order.m and 1 <= j <= order.m):
        raise IndexOutOfRange(f"series index ({i}, {j}) outside 1..{order.m}")
    idx = [g_index(order, "G0", k, i - 1, j - 1) for k in range(order.r)]
    idx += [g_index(order, "G1", k, i - 1, j - 1) for k in range(order.s)]
    return np.array(idx, dtype=int)


def spillover_test(params: GeneralParams, cov: CovReport, i: int, j: int) -> SpilloverResult:
    """Wald z-test of H0: Phi_1[i, j] = 0 (no first-lag spillover from j to i).

    Only off-diagonal pairs are spillovers; i == j is rejected.
    """
    spillover_contrast(params, i, j)
    if i == j:
        raise ConstraintViolation("i != j", f"({i}, {j}) is an own-lag coefficient, not a spillover")
    return _phi1_entry_test(params, cov, i, j)


def _phi1_entry_test(params: GeneralParams, cov: CovReport, i: int, j: int) -> SpilloverResult:
    idx = spillover_contrast(params, i, j)
    theta = pack(params)
    estimate = 0.0
    # same accumulation order as phi_matrix
    for position in idx:
        estimate = estimate + theta[position]
    c = np.zeros(theta.size)
    c[idx] = 1.0
    variance = float(c @ cov.avar @ c) / cov.n_obs
    se = float(np.sqrt(max(variance, 0.0)))
    z, p = _z_and_p(float(estimate), se)
    return SpilloverResult(i=i, j=j, estimate=float(estimate), se=se, z=z, p_value=p)


def spillover_matrix(params: GeneralParams, cov: CovReport) -> pd.DataFrame:
    """Every entry of Phi_1 with its standard error and test."""
    m = params.order.m
    phi1 = phi_matrix(params, 1)
    rows = []
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            res = _phi1_entry_test(params, cov, i, j)
            row = res.to_dict()
            row["phi1"] = float(phi1[i - 1, j - 1])
            row["off_diagonal"] = i != j
            rows.append(row)
    return pd.DataFrame(rows, columns=["i", "j", "estimate", "se", "z", "p_value", "phi1", "off_diagonal"])
