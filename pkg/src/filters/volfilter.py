"""Log-volatility ARCH(infinity) filter.

ln h_t = omega_bar + sum_{i>=1} Phi_i ln y^2_{t-i}, with

    Phi_i = sum_k lambda_k^{i-1} G0_k
          + sum_k gamma_k^{i-1} (cos((i-1) phi_k) G1_k + sin((i-1) phi_k) G2_k)

The infinite sum collapses into one state vector per eigenvalue term; the
state recursions are first-order linear filters, run over the whole sample
with ``scipy.signal.lfilter`` (pre-sample ln y^2 are zero, states start at 0).
"""
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.signal import lfilter

from src.errors import DimensionMismatch, FilterOverflow, IndexOutOfRange, NonFiniteInput
from src.model.params import (
    AnyParams,
    GeneralParams,
    LowRankParams,
    layout,
    pack,
    unpack,
)

logger = logging.getLogger(__name__)

DEFAULT_FLOOR = 1e-8
LOG_H_LIMIT = 700.0


@dataclass(frozen=True)
class LogSquares:
    """ln(max(y^2, floor^2)) for a panel, with the number of floored cells."""

    values: np.ndarray
    n_floored: int
    floor: float = DEFAULT_FLOOR


@dataclass(frozen=True)
class VolPath:
    log_h: np.ndarray
    eps: np.ndarray


def as_general(params: AnyParams) -> GeneralParams:
    if isinstance(params, LowRankParams):
        return params.to_general()
    return params


def log_sq_row(y: np.ndarray, floor: float = DEFAULT_FLOOR) -> np.ndarray:
    """ln(max(y^2, floor^2)); the floor applies to |y|."""
    y = np.asarray(y, dtype=float)
    return np.log(np.maximum(y * y, floor * floor))


def log_sq_returns(panel: np.ndarray, floor: float = DEFAULT_FLOOR) -> LogSquares:
    """Log squared returns; returns with |y| below ``floor`` are clamped so zeros stay finite."""
    y = np.asarray(panel, dtype=float)
    if y.ndim != 2:
        raise DimensionMismatch(f"panel must be n x m, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise NonFiniteInput("panel contains non-finite values")
    floored = np.abs(y) < floor
    n_floored = int(floored.sum())
    if n_floored:
        logger.debug(f"⚠️ {n_floored} returns with |y| below floor {floor:g}")
    return LogSquares(log_sq_row(y, floor), n_floored, floor)


def _values(log_sq: Union[LogSquares, np.ndarray]) -> np.ndarray:
    if isinstance(log_sq, LogSquares):
        return log_sq.values
    return np.asarray(log_sq, dtype=float)


def phi_matrix(params: AnyParams, i: int) -> np.ndarray:
    """ARCH(infinity) coefficient matrix Phi_i, i >= 1."""
    if i < 1:
        raise IndexOutOfRange(f"Phi_i is defined for i >= 1, got {i}")
    params = as_general(params)
    m = params.order.m
    out = np.zeros((m, m))
    for k in range(params.order.r):
        out = out + params.lam[k] ** (i - 1) * params.G0[k]
    for k in range(params.order.s):
        angle = (i - 1) * params.phi[k]
        out = out + params.gamma[k] ** (i - 1) * (
            np.cos(angle) * params.G1[k] + np.sin(angle) * params.G2[k]
        )
    return out


class VolFilterState:
    """Streaming form of the filter: one ``update`` per observed ln y^2 row."""

    def __init__(self, params: AnyParams):
        self.params = as_general(params)
        order = self.params.order
        self.s = np.zeros((order.r, order.m))
        self.z = np.zeros((order.s, order.m), dtype=complex)
        self._coef = self.params.gamma * np.exp(1j * self.params.phi)

    def log_h(self) -> np.ndarray:
        p = self.params
        out = p.omega_bar.copy()
        out += np.einsum("kij,kj->i", p.G0, self.s)
        out += np.einsum("kij,kj->i", p.G1, self.z.real)
        out += np.einsum("kij,kj->i", p.G2, self.z.imag)
        return out

    def update(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        self.s = x[None, :] + self.params.lam[:, None] * self.s
        self.z = x[None, :] + self._coef[:, None] * self.z


def _decay_filter(coef, x: np.ndarray) -> np.ndarray:
    """out_0 = 0, out_t = x_{t-1} + coef * out_{t-1} along axis 0."""
    return lfilter([0.0, 1.0], [1.0, -coef], x, axis=0)


@dataclass(frozen=True)
class FilterAccumulators:
    s: np.ndarray  # (T, r, m) real states
    z: np.ndarray  # (T, s, m) complex states a + i b


def filter_accumulators(
    params: AnyParams, log_sq, extra_step: bool = False
) -> FilterAccumulators:
    """State sequences for t = 0..n-1 (and t = n when ``extra_step``)."""
    params = as_general(params)
    x = _values(log_sq)
    m = params.order.m
    if x.ndim != 2 or x.shape[1] != m:
        raise DimensionMismatch(f"ln y^2 has shape {x.shape}, expected (n, {m})")
    if extra_step:
        x = np.vstack([x, np.zeros((1, m))])
    T = x.shape[0]
    s = np.zeros((T, params.order.r, m))
    for k, lam in enumerate(params.lam):
        s[:, k] = _decay_filter(lam, x)
    z = np.zeros((T, params.order.s, m), dtype=complex)
    xc = x.astype(complex)
    for k in range(params.order.s):
        z[:, k] = _decay_filter(params.gamma[k] * np.exp(1j * params.phi[k]), xc)
    return FilterAccumulators(s, z)


def _log_h_from(params: GeneralParams, acc: FilterAccumulators) -> np.ndarray:
    log_h = np.broadcast_to(params.omega_bar, (acc.s.shape[0], params.order.m)).copy()
    log_h += np.einsum("kij,tkj->ti", params.G0, acc.s)
    log_h += np.einsum("kij,tkj->ti", params.G1, acc.z.real)
    log_h += np.einsum("kij,tkj->ti", params.G2, acc.z.imag)
    return log_h


def _check_range(log_h: np.ndarray) -> None:
    bad = ~np.isfinite(log_h) | (np.abs(log_h) > LOG_H_LIMIT)
    if np.any(bad):
        t = int(np.argmax(bad.any(axis=1)))
        raise FilterOverflow(f"|ln h| exceeds {LOG_H_LIMIT:g} at t={t}", t=t)


def run_filter(params: AnyParams, log_sq, panel: np.ndarray) -> VolPath:
    """ln h_t and devolatilized residuals eps_t = y_t * exp(-ln h_t / 2)."""
    params = as_general(params)
    y = np.asarray(panel, dtype=float)
    x = _values(log_sq)
    if y.shape != x.shape:
        raise DimensionMismatch(f"panel {y.shape} and ln y^2 {x.shape} differ")
    log_h = _log_h_from(params, filter_accumulators(params, x))
    _check_range(log_h)
    return VolPath(log_h=log_h, eps=y * np.exp(-0.5 * log_h))


def forecast_log_h(params: AnyParams, log_sq) -> np.ndarray:
    """ln h for the period after the last observed row."""
    params = as_general(params)
    acc = filter_accumulators(params, log_sq, extra_step=True)
    log_h = _log_h_from(params, FilterAccumulators(acc.s[-1:], acc.z[-1:]))
    _check_range(log_h)
    return log_h[0]


# ---------------------------------------------------------------------------
# Derivatives
# ---------------------------------------------------------------------------


@dataclass
class DerivativeStates:
    s: np.ndarray
    u: np.ndarray  # d s / d lambda
    z: np.ndarray
    zg: np.ndarray  # d z / d gamma
    zp: np.ndarray  # d z / d phi
    w: Optional[np.ndarray] = None  # d^2 s / d lambda^2
    zgg: Optional[np.ndarray] = None
    zgp: Optional[np.ndarray] = None
    zpp: Optional[np.ndarray] = None


@dataclass
class DerivativeBundle:
    """Jacobian of ln h_t (n x m x p) in the volatility coordinates.

    ``hessian`` (n x m x p x p) is only filled on request, general mode only.
    """

    log_h: np.ndarray
    jacobian: np.ndarray
    states: DerivativeStates
    hessian: Optional[np.ndarray] = None


def _derivative_states(params: GeneralParams, x: np.ndarray, second_order: bool) -> DerivativeStates:
    acc = filter_accumulators(params, x)
    n, m = x.shape
    r, s = params.order.r, params.order.s
    u = np.zeros_like(acc.s)
    w = np.zeros_like(acc.s) if second_order else None
    for k, lam in enumerate(params.lam):
        u[:, k] = _decay_filter(lam, acc.s[:, k])
        if w is not None:
            w[:, k] = _decay_filter(lam, 2.0 * u[:, k])

    zg = np.zeros_like(acc.z)
    zp = np.zeros_like(acc.z)
    zgg = np.zeros_like(acc.z) if second_order else None
    zgp = np.zeros_like(acc.z) if second_order else None
    zpp = np.zeros_like(acc.z) if second_order else None
    for k in range(s):
        rot = np.exp(1j * params.phi[k])
        coef = params.gamma[k] * rot
        z = acc.z[:, k]
        zg[:, k] = _decay_filter(coef, rot * z)
        zp[:, k] = _decay_filter(coef, 1j * coef * z)
        if second_order:
            zgg[:, k] = _decay_filter(coef, 2.0 * rot * zg[:, k])
            zgp[:, k] = _decay_filter(
                coef, 1j * rot * z + rot * zp[:, k] + 1j * coef * zg[:, k]
            )
            zpp[:, k] = _decay_filter(coef, -coef * z + 2j * coef * zp[:, k])
    return DerivativeStates(acc.s, u, acc.z, zg, zp, w, zgg, zgp, zpp)


def _fill_outer(J: np.ndarray, offset: int, x: np.ndarray) -> None:
    """Columns of vec(G) for a term G x_t: d (G x)_a / d G[a, b] = x_b."""
    m = x.shape[1]
    for a in range(m):
        J[:, a, offset + a + m * np.arange(m)] = x


def _general_jacobian(params: GeneralParams, st: DerivativeStates) -> np.ndarray:
    order = params.order
    lay = layout(order)
    n, m = st.s.shape[0], order.m
    J = np.zeros((n, m, lay.beta.start))
    J[:, :, lay.omega] = np.eye(m)
    for k in range(order.r):
        J[:, :, lay.lam.start + k] = st.u[:, k] @ params.G0[k].T
        _fill_outer(J, lay.G0.start + k * m * m, st.s[:, k])
    for k in range(order.s):
        G1, G2 = params.G1[k], params.G2[k]
        J[:, :, lay.gamma.start + k] = st.zg[:, k].real @ G1.T + st.zg[:, k].imag @ G2.T
        J[:, :, lay.phi.start + k] = st.zp[:, k].real @ G1.T + st.zp[:, k].imag @ G2.T
        _fill_outer(J, lay.G1.start + k * m * m, st.z[:, k].real)
        _fill_outer(J, lay.G2.start + k * m * m, st.z[:, k].imag)
    return J


def _factor_columns(J: np.ndarray, offset: int, left: np.ndarray, right: np.ndarray, x: np.ndarray) -> None:
    """Columns for a rank-one term left (right' x_t)."""
    m = left.size
    J[:, :, offset:offset + m] = (x @ right)[:, None, None] * np.eye(m)[None]
    J[:, :, offset + m:offset + 2 * m] = left[None, :, None] * x[:, None, :]


def _lowrank_jacobian(lr: LowRankParams, st: DerivativeStates) -> np.ndarray:
    order = lr.order
    general = lr.to_general()
    lay = layout(order, lowrank=True)
    n, m = st.s.shape[0], order.m
    J = np.zeros((n, m, lay.beta.start))
    J[:, :, lay.omega] = np.eye(m)
    for k in range(order.r):
        J[:, :, lay.lam.start + k] = st.u[:, k] @ general.G0[k].T
        _factor_columns(J, lay.G0.start + 2 * k * m, lr.g0[k, 0], lr.g0[k, 1], st.s[:, k])
    for k in range(order.s):
        G1, G2 = general.G1[k], general.G2[k]
        J[:, :, lay.gamma.start + k] = st.zg[:, k].real @ G1.T + st.zg[:, k].imag @ G2.T
        J[:, :, lay.phi.start + k] = st.zp[:, k].real @ G1.T + st.zp[:, k].imag @ G2.T
        for block, factors, x in (
            (lay.G1, lr.g1, st.z[:, k].real),
            (lay.G2, lr.g2, st.z[:, k].imag),
        ):
            offset = block.start + 4 * k * m
            _factor_columns(J, offset, factors[k, 0], factors[k, 1], x)
            _factor_columns(J, offset + 2 * m, factors[k, 2], factors[k, 3], x)
    return J


def _fill_outer_pair(H: np.ndarray, col: int, offset: int, x: np.ndarray) -> None:
    m = x.shape[1]
    for a in range(m):
        idx = offset + a + m * np.arange(m)
        H[:, a, col, idx] = x
        H[:, a, idx, col] = x


def _general_hessian(params: GeneralParams, st: DerivativeStates) -> np.ndarray:
    order = params.order
    lay = layout(order)
    n, m = st.s.shape[0], order.m
    p = lay.beta.start
    H = np.zeros((n, m, p, p))
    for k in range(order.r):
        col = lay.lam.start + k
        H[:, :, col, col] = st.w[:, k] @ params.G0[k].T
        _fill_outer_pair(H, col, lay.G0.start + k * m * m, st.u[:, k])
    for k in range(order.s):
        G1, G2 = params.G1[k], params.G2[k]
        cg, cp = lay.gamma.start + k, lay.phi.start + k
        H[:, :, cg, cg] = st.zgg[:, k].real @ G1.T + st.zgg[:, k].imag @ G2.T
        H[:, :, cp, cp] = st.zpp[:, k].real @ G1.T + st.zpp[:, k].imag @ G2.T
        cross = st.zgp[:, k].real @ G1.T + st.zgp[:, k].imag @ G2.T
        H[:, :, cg, cp] = cross
        H[:, :, cp, cg] = cross
        off1 = lay.G1.start + k * m * m
        off2 = lay.G2.start + k * m * m
        _fill_outer_pair(H, cg, off1, st.zg[:, k].real)
        _fill_outer_pair(H, cg, off2, st.zg[:, k].imag)
        _fill_outer_pair(H, cp, off1, st.zp[:, k].real)
        _fill_outer_pair(H, cp, off2, st.zp[:, k].imag)
    return H


def derivative_states(
    params: AnyParams, log_sq, second_order: bool = False
) -> DerivativeBundle:
    """First (and optionally second) derivatives of ln h_t.

    General parameters give columns in theta's volatility coordinates
    (omega_bar, lambda, gamma, phi, vec G); low-rank parameters give columns in
    the factor coordinates of vartheta.
    """
    if isinstance(params, LowRankParams):
        if second_order:
            raise ValueError("second derivatives are available for general parameters only")
        return lowrank_derivative_states(params, log_sq)
    general = params
    st = _derivative_states(general, _values(log_sq), second_order)
    log_h = _log_h_from(general, FilterAccumulators(st.s, st.z))
    _check_range(log_h)
    hessian = _general_hessian(general, st) if second_order else None
    return DerivativeBundle(log_h, _general_jacobian(general, st), st, hessian)


def lowrank_derivative_states(lr: LowRankParams, log_sq) -> DerivativeBundle:
    """d ln h_t in the factor coordinates: d/d left = (right' x) I, d/d right = left x'."""
    general = lr.to_general()
    st = _derivative_states(general, _values(log_sq), second_order=False)
    log_h = _log_h_from(general, FilterAccumulators(st.s, st.z))
    _check_range(log_h)
    return DerivativeBundle(log_h, _lowrank_jacobian(lr, st), st)


def check_second_derivatives(params: GeneralParams, log_sq, step: float = 1e-6) -> float:
    """Largest deviation between analytic second derivatives of ln h_t and
    central differences of the analytic first derivatives, relative to the
    largest second derivative (at least one)."""
    x = _values(log_sq)
    analytic = derivative_states(params, x, second_order=True).hessian
    theta = pack(params)
    p = analytic.shape[-1]
    worst = 0.0
    for col in range(p):
        shift = np.zeros_like(theta)
        shift[col] = step
        up = derivative_states(unpack(theta + shift, params.order, validate=False), x).jacobian
        down = derivative_states(unpack(theta - shift, params.order, validate=False), x).jacobian
        numeric = (up - down) / (2.0 * step)
        worst = max(worst, float(np.max(np.abs(numeric - analytic[..., col]))))
    scale = max(1.0, float(np.max(np.abs(analytic))))
    return worst / scale
