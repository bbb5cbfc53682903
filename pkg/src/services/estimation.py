"""Multistart quasi-maximum-likelihood estimation (general and low-rank)."""
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize

from src.config import Config
from src.errors import (
    DegenerateColumn,
    DimensionMismatch,
    DuplicateEigenvalue,
    FilterOverflow,
    NoConvergence,
    NonFiniteLikelihood,
    UnknownName,
)
from src.filters.corrfilter import ensure_pd
from src.filters.volfilter import log_sq_returns
from src.model.params import (
    AnyParams,
    GeneralParams,
    LowRankParams,
    ModelOrder,
    canonicalize,
    canonicalize_lowrank,
    normalize_factors,
    pack,
    pack_lowrank,
    params_from_json,
    params_to_json,
    theta_of_vartheta,
    unpack,
    unpack_lowrank,
)
from src.model.transforms import ParamTransform
from src.services.likelihood import QuasiLikelihood
from src.services.stationarity import StationarityReport, check_stationarity
from src.utils.parallel import run_parallel, spawn_seeds

logger = logging.getLogger(__name__)

FAILED_VALUE = 1e10
BOUNDARY_TOL = 1e-4
PRESAMPLE_NOTES = [
    "pre-sample ln y^2 = 0 (filter states start at zero)",
    "pre-sample residuals exp(-omega_bar/2) fill the first correlation windows",
    "R_{-1} = Rbar",
]


class FitOptions(BaseModel):
    """Optimizer and safeguard settings for one estimation run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_starts: int = Field(5, ge=1)
    max_iter: int = Field(500, ge=1)
    grad_tol: float = Field(1e-6, gt=0)
    accept_tol: float = Field(1e-3, gt=0)
    seed: Optional[int] = None
    floor: float = Field(1e-8, gt=0)
    eig_floor: float = Field(1e-6, gt=0)
    penalty: float = Field(1e3, ge=0)
    margin: float = Field(1e-6, gt=0, lt=0.5)
    threads: int = Field(1, ge=1)
    chunk_budget: int = Field(4_000_000, ge=1)

    @classmethod
    def from_config(cls, config: Config, **overrides: Any) -> "FitOptions":
        values = {
            "n_starts": config.STARTS_EMPIRICAL,
            "max_iter": config.MAX_ITER,
            "grad_tol": config.GRAD_TOL,
            "floor": config.LOG_SQ_FLOOR,
            "eig_floor": config.EIG_FLOOR,
            "penalty": config.PD_PENALTY,
            "margin": config.PARAM_MARGIN,
            "threads": config.THREADS,
            "chunk_budget": config.GRADIENT_CHUNK_BUDGET,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class FitReport:
    mode: str
    params: GeneralParams
    neg_loglik: float
    converged: bool
    n_evals: int
    n_iter: int
    gradient_norm: float
    stationarity: StationarityReport
    pd_repair_count: int
    n_obs: int
    n_floored: int = 0
    lowrank: Optional[LowRankParams] = None
    start_index: int = 0
    n_starts_converged: int = 0
    boundary_flags: List[str] = field(default_factory=list)
    message: str = ""
    seed: Optional[int] = None
    options: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=lambda: list(PRESAMPLE_NOTES))

    @property
    def order(self) -> ModelOrder:
        return self.params.order

    @property
    def estimate(self) -> AnyParams:
        """The fitted point in its own parameterization."""
        return self.lowrank if self.lowrank is not None else self.params

    @property
    def dim(self) -> int:
        return self.order.dim_lowrank if self.mode == "lowrank" else self.order.dim

    @property
    def stationarity_margin(self) -> float:
        return self.stationarity.margin

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "order": self.order.to_dict(),
            "params": params_to_json(self.params),
            "lowrank": params_to_json(self.lowrank) if self.lowrank is not None else None,
            "neg_loglik": self.neg_loglik,
            "converged": self.converged,
            "n_evals": self.n_evals,
            "n_iter": self.n_iter,
            "gradient_norm": self.gradient_norm,
            "stationarity": self.stationarity.to_dict(),
            "stationarity_margin": self.stationarity_margin,
            "pd_repair_count": self.pd_repair_count,
            "n_obs": self.n_obs,
            "n_floored": self.n_floored,
            "dim": self.dim,
            "start_index": self.start_index,
            "n_starts_converged": self.n_starts_converged,
            "boundary_flags": list(self.boundary_flags),
            "message": self.message,
            "seed": self.seed,
            "options": dict(self.options),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FitReport":
        lowrank = data.get("lowrank")
        return cls(
            mode=data["mode"],
            params=params_from_json(data["params"], validate=False),
            neg_loglik=float(data["neg_loglik"]),
            converged=bool(data["converged"]),
            n_evals=int(data["n_evals"]),
            n_iter=int(data["n_iter"]),
            gradient_norm=float(data["gradient_norm"]),
            stationarity=StationarityReport.from_dict(data["stationarity"]),
            pd_repair_count=int(data["pd_repair_count"]),
            n_obs=int(data["n_obs"]),
            n_floored=int(data.get("n_floored", 0)),
            lowrank=params_from_json(lowrank, validate=False) if lowrank else None,
            start_index=int(data.get("start_index", 0)),
            n_starts_converged=int(data.get("n_starts_converged", 0)),
            boundary_flags=list(data.get("boundary_flags", [])),
            message=data.get("message", ""),
            seed=data.get("seed"),
            options=dict(data.get("options", {})),
            notes=list(data.get("notes", PRESAMPLE_NOTES)),
        )


# ---------------------------------------------------------------------------
# Starting values
# ---------------------------------------------------------------------------


def _distinct_uniform(rng: np.random.Generator, low: float, high: float, size: int) -> np.ndarray:
    while True:
        values = rng.uniform(low, high, size)
        if size < 2 or np.min(np.diff(np.sort(values))) > 1e-3:
            return values


def _phi_sum(params: GeneralParams) -> np.ndarray:
    """sum_{i>=1} Phi_i in closed form."""
    m = params.order.m
    total = np.zeros((m, m))
    for k in range(params.order.r):
        total += params.G0[k] / (1.0 - params.lam[k])
    for k in range(params.order.s):
        geo = 1.0 / (1.0 - params.gamma[k] * np.exp(1j * params.phi[k]))
        total += geo.real * params.G1[k] + geo.imag * params.G2[k]
    return total


def draw_start(
    panel: np.ndarray, order: ModelOrder, rng: np.random.Generator, lowrank: bool = False
) -> AnyParams:
    """Random starting point.

    lambda, gamma ~ U(0.3, 0.9) with random lambda signs, phi ~ U(0.5, 2.5),
    coefficient entries ~ N(0, 0.05^2) (unit-norm left factors in low-rank
    mode), beta = (0.05, 0.80), Rbar = sample correlation, and omega_bar set
    so that E ln h matches each series' log sample variance.
    """
    m, r, s = order.m, order.r, order.s
    y = np.asarray(panel, dtype=float)
    lam = _distinct_uniform(rng, 0.3, 0.9, r) * rng.choice([-1.0, 1.0], r)
    gamma = _distinct_uniform(rng, 0.3, 0.9, s)
    phi = rng.uniform(0.5, 2.5, s)
    if m > 1:
        corr = np.corrcoef(y.T)
        corr = 0.5 * (corr + corr.T)
        np.fill_diagonal(corr, 1.0)
        Rbar, _ = ensure_pd(corr, 1e-3)
    else:
        Rbar = np.eye(1)
    shared = dict(order=order, omega_bar=np.zeros(m), lam=lam, gamma=gamma, phi=phi,
                  beta1=0.05, beta2=0.80, Rbar=Rbar)

    start: AnyParams
    if lowrank:
        def factors(count: int, width: int) -> np.ndarray:
            g = rng.normal(0.0, 0.05, (count, width, m))
            left = rng.normal(size=(count, width // 2, m))
            g[:, 0::2] = left / np.linalg.norm(left, axis=2, keepdims=True)
            return g

        start = LowRankParams(g0=factors(r, 2), g1=factors(s, 4), g2=factors(s, 4), **shared)
        general = start.to_general()
    else:
        start = GeneralParams(
            G0=rng.normal(0.0, 0.05, (r, m, m)),
            G1=rng.normal(0.0, 0.05, (s, m, m)),
            G2=rng.normal(0.0, 0.05, (s, m, m)),
            **shared,
        )
        general = start

    log_var = np.log(np.maximum(y.var(axis=0), 1e-12))
    mean_log_sq = log_sq_returns(y).values.mean(axis=0)
    omega_bar = log_var - _phi_sum(general) @ mean_log_sq
    return start.replace(omega_bar=omega_bar)


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------


class _Objective:
    """Mean negative log-likelihood in unconstrained coordinates."""

    def __init__(self, lik: QuasiLikelihood, transform: ParamTransform):
        self.lik = lik
        self.transform = transform
        self.n_evals = 0

    def to_params(self, u: np.ndarray) -> AnyParams:
        return self._unpack(self.transform.to_natural(u))

    def _unpack(self, x: np.ndarray) -> AnyParams:
        if self.transform.lowrank:
            return unpack_lowrank(x, self.transform.order, validate=False)
        return unpack(x, self.transform.order, validate=False)

    def __call__(self, u: np.ndarray) -> Tuple[float, np.ndarray]:
        self.n_evals += 1
        x, jac = self.transform.to_natural_with_jacobian(u)
        params = self._unpack(x)
        try:
            value, grad = self.lik.value_and_gradient(params)
        except (FilterOverflow, NonFiniteLikelihood, DegenerateColumn, np.linalg.LinAlgError):
            return FAILED_VALUE, np.zeros_like(u)
        n = self.lik.n
        return value / n, (jac.T @ grad) / n


@dataclass
class StartResult:
    index: int
    vector: Optional[np.ndarray]
    value: float
    raw_value: float
    n_repaired: int
    converged: bool
    n_evals: int
    n_iter: int
    gradient_norm: float
    message: str


def _run_start(task: tuple) -> StartResult:
    """Worker: one BFGS run from one starting point (module level for pickling)."""
    index, panel, order, lowrank, start_vector, lam_signs, options = task
    lik = QuasiLikelihood(
        panel,
        floor=options.floor,
        eig_floor=options.eig_floor,
        penalty=options.penalty,
        chunk_budget=options.chunk_budget,
    )
    transform = ParamTransform(order, lam_signs, lowrank=lowrank, margin=options.margin)
    objective = _Objective(lik, transform)
    u0 = transform.to_internal(start_vector)
    try:
        result = minimize(
            objective,
            u0,
            jac=True,
            method="BFGS",
            options={"gtol": options.grad_tol, "maxiter": options.max_iter},
        )
        params = objective.to_params(result.x)
        terms = lik.evaluate(params)
    except Exception as e:  # a start that blows up is simply discarded
        logger.debug(f"❌ start {index} failed: {e}")
        return StartResult(index, None, np.inf, np.inf, 0, False, objective.n_evals, 0, np.inf, str(e))

    grad_norm = float(np.max(np.abs(result.jac))) if result.jac.size else 0.0
    converged = bool(result.success) or (result.status == 2 and grad_norm <= options.accept_tol)
    vector = transform.to_natural(result.x)
    logger.debug(
        f"🔄 start {index}: L={terms.value:.6f} |g|={grad_norm:.2e} status={result.status}"
    )
    return StartResult(
        index=index,
        vector=vector,
        value=terms.value,
        raw_value=terms.raw_value,
        n_repaired=terms.n_repaired,
        converged=converged,
        n_evals=objective.n_evals,
        n_iter=int(result.nit),
        gradient_norm=grad_norm,
        message=str(result.message),
    )


def _finalize(vector: np.ndarray, order: ModelOrder, lowrank: bool) -> Tuple[GeneralParams, Optional[LowRankParams]]:
    if lowrank:
        lr = normalize_factors(unpack_lowrank(vector, order, validate=False))
        try:
            lr = canonicalize_lowrank(lr)
        except DuplicateEigenvalue:
            logger.warning("⚠️ coincident eigenvalues in the estimate; ordering left as found")
        return theta_of_vartheta(lr), lr
    params = unpack(vector, order, validate=False)
    try:
        params = canonicalize(params)
    except DuplicateEigenvalue:
        logger.warning("⚠️ coincident eigenvalues in the estimate; ordering left as found")
    return params, None


def _fit(
    panel: np.ndarray,
    order: ModelOrder,
    options: Optional[FitOptions],
    initial: Optional[AnyParams],
    lowrank: bool,
) -> FitReport:
    options = options or FitOptions()
    y = np.asarray(panel, dtype=float)
    if y.ndim != 2 or y.shape[1] != order.m:
        raise DimensionMismatch(f"panel shape {y.shape} does not match m={order.m}")
    if y.shape[0] < order.window + 1:
        raise DimensionMismatch(f"panel has {y.shape[0]} rows, needs at least {order.window + 1}")
    mode = "lowrank" if lowrank else "general"
    logger.info(
        f"🚀 Fitting {mode} model m={order.m} r={order.r} s={order.s} "
        f"(n={y.shape[0]}, starts={options.n_starts})"
    )

    starts: List[AnyParams] = []
    if initial is not None:
        if isinstance(initial, LowRankParams) != lowrank:
            raise ValueError(f"initial point does not match the {mode} parameterization")
        starts.append(initial)
    seeds = spawn_seeds(options.seed, options.n_starts)
    for seed in seeds[len(starts):]:
        starts.append(draw_start(y, order, np.random.default_rng(seed), lowrank=lowrank))

    tasks = []
    for index, start in enumerate(starts):
        vector = pack_lowrank(start) if lowrank else pack(start)
        tasks.append((index, y, order, lowrank, vector, np.sign(start.lam), options))
    results = run_parallel(_run_start, tasks, options.threads)

    usable = [res for res in results if res.vector is not None]
    converged = [res for res in usable if res.converged]
    pool = converged or usable
    if not pool:
        raise NoConvergence(f"all {len(results)} starts failed", report=None)
    best = min(pool, key=lambda res: res.value)

    params, lr = _finalize(best.vector, order, lowrank)
    flags = [
        name for name, value in (("beta1", params.beta1), ("beta2", params.beta2))
        if value < BOUNDARY_TOL
    ]
    report = FitReport(
        mode=mode,
        params=params,
        lowrank=lr,
        neg_loglik=best.raw_value,
        converged=bool(converged),
        n_evals=sum(res.n_evals for res in results),
        n_iter=best.n_iter,
        gradient_norm=best.gradient_norm,
        stationarity=check_stationarity(params),
        pd_repair_count=best.n_repaired,
        n_obs=y.shape[0],
        n_floored=log_sq_returns(y, options.floor).n_floored,
        start_index=best.index,
        n_starts_converged=len(converged),
        boundary_flags=[f"{name} within {BOUNDARY_TOL:g} of 0" for name in flags],
        message=best.message,
        seed=options.seed,
        options=options.model_dump(),
    )
    if not report.converged:
        logger.error(f"❌ No start converged (best L={best.raw_value:.6f})")
        raise NoConvergence(f"none of {len(results)} starts converged", report=report)
    logger.info(
        f"✅ Fit done: L={report.neg_loglik:.6f}, {len(converged)}/{len(results)} starts converged"
    )
    if not report.stationarity.satisfied:
        logger.warning(f"⚠️ {report.stationarity.message}")
    return report


def fit_general(
    panel: np.ndarray,
    order: ModelOrder,
    opts: Optional[FitOptions] = None,
    initial: Optional[GeneralParams] = None,
) -> FitReport:
    """QMLE of the full-matrix model."""
    return _fit(panel, order, opts, initial, lowrank=False)


def fit_lowrank(
    panel: np.ndarray,
    order: ModelOrder,
    opts: Optional[FitOptions] = None,
    initial: Optional[LowRankParams] = None,
) -> FitReport:
    """QMLE of the rank-one factor model; the report carries theta(vartheta_hat)."""
    return _fit(panel, order, opts, initial, lowrank=True)


ESTIMATORS = {"general": fit_general, "lowrank": fit_lowrank}


def get_estimator(name: str):
    if name not in ESTIMATORS:
        raise UnknownName(f"unknown estimator '{name}' (general or lowrank)")
    return ESTIMATORS[name]


def load_fit_report(data: Union[dict, str]) -> FitReport:
    """Rebuild a FitReport from its JSON dict or a path to fit.json."""
    if isinstance(data, str):
        with open(data) as f:
            data = json.load(f)
    return FitReport.from_dict(data)
