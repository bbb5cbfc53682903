"""Parameter containers for the (r, s) log-volatility model with DCC-T correlations.

Two parameterizations share one packing convention:

* ``GeneralParams`` carries the full m x m coefficient matrices of every real
  (lambda) and complex (gamma, phi) term, flat vector of length ``order.dim``.
* ``LowRankParams`` carries rank-one factors, G0_k = g_k1 g_k2' and
  G_{1,2}k = g_k1 g_k2' + g_k3 g_k4', flat vector of length ``order.dim_lowrank``.

Matrices are vectorised column-major; the strict lower triangle of Rbar is
stacked column by column.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from src.errors import (
    ConstraintViolation,
    DimensionMismatch,
    DuplicateEigenvalue,
    NonFiniteInput,
)

logger = logging.getLogger(__name__)

DEFAULT_MARGIN = 1e-6
DISTINCT_TOL = 1e-10


@dataclass(frozen=True)
class ModelOrder:
    """Dimension m, r real terms, s complex pairs and correlation window k."""

    m: int
    r: int
    s: int
    k_window: Optional[int] = None

    def __post_init__(self):
        if self.m < 1:
            raise ConstraintViolation("m >= 1", f"m={self.m}")
        if self.r < 0 or self.s < 0:
            raise ConstraintViolation("r, s >= 0", f"r={self.r}, s={self.s}")
        if self.r + 2 * self.s > self.m:
            raise ConstraintViolation(
                "r + 2s <= m", f"r={self.r}, s={self.s}, m={self.m}"
            )
        k = self.m if self.k_window is None else int(self.k_window)
        if k < self.m:
            raise ConstraintViolation("k_window >= m", f"k={k}, m={self.m}")
        object.__setattr__(self, "k_window", k)

    @property
    def window(self) -> int:
        return int(self.k_window)  # type: ignore[arg-type]

    @property
    def n_terms(self) -> int:
        """r + 2s, the order used for BIC tie-breaks and fit classification."""
        return self.r + 2 * self.s

    @property
    def n_rbar(self) -> int:
        return self.m * (self.m - 1) // 2

    @property
    def dim(self) -> int:
        return self.m + self.n_terms * (1 + self.m * self.m) + self.n_rbar + 2

    @property
    def dim_lowrank(self) -> int:
        return (
            self.m
            + self.n_terms
            + 2 * self.m * (self.r + 4 * self.s)
            + self.n_rbar
            + 2
        )

    def with_terms(self, r: int, s: int) -> "ModelOrder":
        return ModelOrder(self.m, r, s, self.k_window)

    def to_dict(self) -> Dict[str, int]:
        return {"m": self.m, "r": self.r, "s": self.s, "k_window": self.window}

    @classmethod
    def from_dict(cls, data: Dict[str, int]) -> "ModelOrder":
        return cls(int(data["m"]), int(data["r"]), int(data["s"]), data.get("k_window"))


@dataclass(frozen=True)
class ParamLayout:
    """Named slices of a flat parameter vector."""

    omega: slice
    lam: slice
    gamma: slice
    phi: slice
    G0: slice
    G1: slice
    G2: slice
    beta: slice
    rbar: slice
    size: int

    @property
    def free(self) -> slice:
        """Coefficient block between phi and beta (matrices or factors)."""
        return slice(self.phi.stop, self.beta.start)

    @property
    def delta(self) -> slice:
        """Volatility coordinates: everything before beta."""
        return slice(0, self.beta.start)


def layout(order: ModelOrder, lowrank: bool = False) -> ParamLayout:
    m, r, s = order.m, order.r, order.s
    if lowrank:
        sizes = [m, r, s, s, 2 * m * r, 4 * m * s, 4 * m * s, 2, order.n_rbar]
    else:
        sizes = [m, r, s, s, r * m * m, s * m * m, s * m * m, 2, order.n_rbar]
    bounds = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    slices = [slice(int(bounds[i]), int(bounds[i + 1])) for i in range(len(sizes))]
    return ParamLayout(*slices, size=int(bounds[-1]))


def vech_lower_indices(m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Row and column indices of the strict lower triangle, column-stacked."""
    upper_rows, upper_cols = np.triu_indices(m, 1)
    return upper_cols, upper_rows


def _frozen(value, shape: Tuple[int, ...], name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.size == 0 and int(np.prod(shape)) == 0:
        arr = arr.reshape(shape)
    if arr.shape != shape:
        raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


def _check_distinct(values: np.ndarray, name: str) -> None:
    if values.size < 2:
        return
    ordered = np.sort(values)
    gaps = np.diff(ordered)
    if np.any(gaps <= DISTINCT_TOL):
        raise DuplicateEigenvalue(f"{name} distinct", f"values={values.tolist()}")


def _validate_shared(
    lam: np.ndarray,
    gamma: np.ndarray,
    phi: np.ndarray,
    beta1: float,
    beta2: float,
    Rbar: np.ndarray,
    margin: float,
) -> None:
    upper = 1.0 - margin
    if np.any(np.abs(lam) < margin) or np.any(np.abs(lam) > upper):
        raise ConstraintViolation("|lambda| in [eta, 1-eta]", f"lambda={lam.tolist()}")
    _check_distinct(lam, "lambda")
    if np.any(gamma < margin) or np.any(gamma > upper):
        raise ConstraintViolation("gamma in [eta, 1-eta]", f"gamma={gamma.tolist()}")
    _check_distinct(gamma, "gamma")
    if np.any(phi < margin) or np.any(phi > np.pi - margin):
        raise ConstraintViolation("phi in [eta, pi-eta]", f"phi={phi.tolist()}")
    if beta1 < 0 or beta2 < 0 or beta1 > upper or beta2 > upper:
        raise ConstraintViolation(
            "beta1, beta2 in [0, 1-eta]", f"beta1={beta1}, beta2={beta2}"
        )
    if beta1 + beta2 > upper:
        raise ConstraintViolation("beta1 + beta2 <= 1-eta", f"sum={beta1 + beta2}")
    if not np.array_equal(Rbar, Rbar.T):
        raise ConstraintViolation("Rbar symmetric")
    if np.any(np.abs(np.diag(Rbar) - 1.0) > 1e-12):
        raise ConstraintViolation("Rbar unit diagonal")
    off = Rbar[~np.eye(Rbar.shape[0], dtype=bool)]
    if np.any(np.abs(off) >= 1.0):
        raise ConstraintViolation("|Rbar_ij| < 1")
    if np.linalg.eigvalsh(Rbar).min() <= 0:
        raise ConstraintViolation("Rbar positive definite")


@dataclass(frozen=True, eq=False)
class GeneralParams:
    """Full-matrix parameter point theta."""

    order: ModelOrder
    omega_bar: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray
    phi: np.ndarray
    G0: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    beta1: float
    beta2: float
    Rbar: np.ndarray

    def __post_init__(self):
        m, r, s = self.order.m, self.order.r, self.order.s
        object.__setattr__(self, "omega_bar", _frozen(self.omega_bar, (m,), "omega_bar"))
        object.__setattr__(self, "lam", _frozen(self.lam, (r,), "lambda"))
        object.__setattr__(self, "gamma", _frozen(self.gamma, (s,), "gamma"))
        object.__setattr__(self, "phi", _frozen(self.phi, (s,), "phi"))
        object.__setattr__(self, "G0", _frozen(self.G0, (r, m, m), "G0"))
        object.__setattr__(self, "G1", _frozen(self.G1, (s, m, m), "G1"))
        object.__setattr__(self, "G2", _frozen(self.G2, (s, m, m), "G2"))
        object.__setattr__(self, "Rbar", _frozen(self.Rbar, (m, m), "Rbar"))
        object.__setattr__(self, "beta1", float(self.beta1))
        object.__setattr__(self, "beta2", float(self.beta2))
        if not (np.isfinite(self.beta1) and np.isfinite(self.beta2)):
            raise NonFiniteInput("beta contains non-finite values")

    def validate(self, margin: float = DEFAULT_MARGIN) -> "GeneralParams":
        _validate_shared(
            self.lam, self.gamma, self.phi, self.beta1, self.beta2, self.Rbar, margin
        )
        return self

    def replace(self, **changes) -> "GeneralParams":
        return dataclasses.replace(self, **changes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GeneralParams):
            return NotImplemented
        return self.order == other.order and np.array_equal(pack(self), pack(other))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class LowRankParams:
    """Rank-one factor parameter point vartheta."""

    order: ModelOrder
    omega_bar: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray
    phi: np.ndarray
    g0: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    beta1: float
    beta2: float
    Rbar: np.ndarray

    def __post_init__(self):
        m, r, s = self.order.m, self.order.r, self.order.s
        object.__setattr__(self, "omega_bar", _frozen(self.omega_bar, (m,), "omega_bar"))
        object.__setattr__(self, "lam", _frozen(self.lam, (r,), "lambda"))
        object.__setattr__(self, "gamma", _frozen(self.gamma, (s,), "gamma"))
        object.__setattr__(self, "phi", _frozen(self.phi, (s,), "phi"))
        object.__setattr__(self, "g0", _frozen(self.g0, (r, 2, m), "g0"))
        object.__setattr__(self, "g1", _frozen(self.g1, (s, 4, m), "g1"))
        object.__setattr__(self, "g2", _frozen(self.g2, (s, 4, m), "g2"))
        object.__setattr__(self, "Rbar", _frozen(self.Rbar, (m, m), "Rbar"))
        object.__setattr__(self, "beta1", float(self.beta1))
        object.__setattr__(self, "beta2", float(self.beta2))

    def validate(self, margin: float = DEFAULT_MARGIN) -> "LowRankParams":
        _validate_shared(
            self.lam, self.gamma, self.phi, self.beta1, self.beta2, self.Rbar, margin
        )
        return self

    def to_general(self) -> GeneralParams:
        return theta_of_vartheta(self)

    def replace(self, **changes) -> "LowRankParams":
        return dataclasses.replace(self, **changes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LowRankParams):
            return NotImplemented
        return self.order == other.order and np.array_equal(
            pack_lowrank(self), pack_lowrank(other)
        )

    __hash__ = None  # type: ignore[assignment]


AnyParams = Union[GeneralParams, LowRankParams]


# ---------------------------------------------------------------------------
# Packing
# ---------------------------------------------------------------------------


def _vec_blocks(G: np.ndarray) -> np.ndarray:
    # (K, m, m) -> K column-major vecs, concatenated
    return np.transpose(G, (0, 2, 1)).reshape(-1)


def _unvec_blocks(v: np.ndarray, count: int, m: int) -> np.ndarray:
    return v.reshape(count, m, m).transpose(0, 2, 1)


def _rbar_from_vech(vech: np.ndarray, m: int) -> np.ndarray:
    rows, cols = vech_lower_indices(m)
    R = np.eye(m)
    R[rows, cols] = vech
    R[cols, rows] = vech
    return R


def _tail(beta1: float, beta2: float, Rbar: np.ndarray) -> List[np.ndarray]:
    rows, cols = vech_lower_indices(Rbar.shape[0])
    return [np.array([beta1, beta2]), Rbar[rows, cols]]


def pack(params: GeneralParams) -> np.ndarray:
    """Flatten theta in the canonical order (length ``order.dim``)."""
    parts = [
        params.omega_bar,
        params.lam,
        params.gamma,
        params.phi,
        _vec_blocks(params.G0),
        _vec_blocks(params.G1),
        _vec_blocks(params.G2),
    ]
    parts += _tail(params.beta1, params.beta2, params.Rbar)
    return np.concatenate(parts).astype(float)


def _check_vector(v, size: int) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != size:
        raise DimensionMismatch(f"parameter vector has length {v.size}, expected {size}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("parameter vector contains non-finite values")
    return v


def unpack(
    vector,
    order: ModelOrder,
    validate: bool = True,
    margin: float = DEFAULT_MARGIN,
) -> GeneralParams:
    """Inverse of ``pack``; validates constraints unless told otherwise."""
    v = _check_vector(vector, order.dim)
    lay = layout(order)
    m, r, s = order.m, order.r, order.s
    params = GeneralParams(
        order=order,
        omega_bar=v[lay.omega],
        lam=v[lay.lam],
        gamma=v[lay.gamma],
        phi=v[lay.phi],
        G0=_unvec_blocks(v[lay.G0], r, m),
        G1=_unvec_blocks(v[lay.G1], s, m),
        G2=_unvec_blocks(v[lay.G2], s, m),
        beta1=v[lay.beta][0],
        beta2=v[lay.beta][1],
        Rbar=_rbar_from_vech(v[lay.rbar], m),
    )
    if validate:
        params.validate(margin)
    return params


def pack_lowrank(params: LowRankParams) -> np.ndarray:
    parts = [
        params.omega_bar,
        params.lam,
        params.gamma,
        params.phi,
        params.g0.reshape(-1),
        params.g1.reshape(-1),
        params.g2.reshape(-1),
    ]
    parts += _tail(params.beta1, params.beta2, params.Rbar)
    return np.concatenate(parts).astype(float)


def unpack_lowrank(
    vector,
    order: ModelOrder,
    validate: bool = True,
    margin: float = DEFAULT_MARGIN,
) -> LowRankParams:
    v = _check_vector(vector, order.dim_lowrank)
    lay = layout(order, lowrank=True)
    m, r, s = order.m, order.r, order.s
    params = LowRankParams(
        order=order,
        omega_bar=v[lay.omega],
        lam=v[lay.lam],
        gamma=v[lay.gamma],
        phi=v[lay.phi],
        g0=v[lay.G0].reshape(r, 2, m),
        g1=v[lay.G1].reshape(s, 4, m),
        g2=v[lay.G2].reshape(s, 4, m),
        beta1=v[lay.beta][0],
        beta2=v[lay.beta][1],
        Rbar=_rbar_from_vech(v[lay.rbar], m),
    )
    if validate:
        params.validate(margin)
    return params


def pack_any(params: AnyParams) -> np.ndarray:
    if isinstance(params, LowRankParams):
        return pack_lowrank(params)
    return pack(params)


def unpack_like(vector, template: AnyParams, validate: bool = True) -> AnyParams:
    if isinstance(template, LowRankParams):
        return unpack_lowrank(vector, template.order, validate=validate)
    return unpack(vector, template.order, validate=validate)


def param_labels(order: ModelOrder, lowrank: bool = False) -> List[str]:
    """Human-readable names in pack order (1-based indices)."""
    m, r, s = order.m, order.r, order.s
    labels = [f"omega_bar[{i + 1}]" for i in range(m)]
    labels += [f"lambda[{k + 1}]" for k in range(r)]
    labels += [f"gamma[{k + 1}]" for k in range(s)]
    labels += [f"phi[{k + 1}]" for k in range(s)]
    if lowrank:
        for name, count, width in (("g0", r, 2), ("g1", s, 4), ("g2", s, 4)):
            for k in range(count):
                for c in range(width):
                    labels += [f"{name}_{k + 1}_{c + 1}[{i + 1}]" for i in range(m)]
    else:
        for name, count in (("G0", r), ("G1", s), ("G2", s)):
            for k in range(count):
                labels += [
                    f"{name}_{k + 1}[{i + 1},{j + 1}]"
                    for j in range(m)
                    for i in range(m)
                ]
    labels += ["beta1", "beta2"]
    rows, cols = vech_lower_indices(m)
    labels += [f"Rbar[{i + 1},{j + 1}]" for i, j in zip(rows, cols)]
    return labels


def g_index(order: ModelOrder, block: str, k: int, i: int, j: int) -> int:
    """Flat index of G{block}_k[i, j] in theta (all indices 0-based)."""
    lay = layout(order)
    start = {"G0": lay.G0, "G1": lay.G1, "G2": lay.G2}[block].start
    m = order.m
    return start + k * m * m + j * m + i


# ---------------------------------------------------------------------------
# Low-rank map
# ---------------------------------------------------------------------------


def theta_of_vartheta(lr: LowRankParams) -> GeneralParams:
    """Expand rank-one factors into full coefficient matrices."""
    G0 = np.einsum("ki,kj->kij", lr.g0[:, 0], lr.g0[:, 1])
    G1 = np.einsum("ki,kj->kij", lr.g1[:, 0], lr.g1[:, 1]) + np.einsum(
        "ki,kj->kij", lr.g1[:, 2], lr.g1[:, 3]
    )
    G2 = np.einsum("ki,kj->kij", lr.g2[:, 0], lr.g2[:, 1]) + np.einsum(
        "ki,kj->kij", lr.g2[:, 2], lr.g2[:, 3]
    )
    return GeneralParams(
        order=lr.order,
        omega_bar=lr.omega_bar,
        lam=lr.lam,
        gamma=lr.gamma,
        phi=lr.phi,
        G0=G0,
        G1=G1,
        G2=G2,
        beta1=lr.beta1,
        beta2=lr.beta2,
        Rbar=lr.Rbar,
    )


def lowrank_jacobian(lr: LowRankParams) -> np.ndarray:
    """Delta = d theta / d vartheta', shape (d, d*)."""
    order = lr.order
    m = order.m
    full = layout(order)
    low = layout(order, lowrank=True)
    delta = np.zeros((full.size, low.size))
    eye = np.eye(m)

    for a, b in ((full.omega, low.omega), (full.lam, low.lam), (full.gamma, low.gamma),
                 (full.phi, low.phi), (full.beta, low.beta), (full.rbar, low.rbar)):
        delta[a, b] = np.eye(a.stop - a.start)

    def outer_block(row0: int, col0: int, left: np.ndarray, right: np.ndarray) -> None:
        rows = slice(row0, row0 + m * m)
        # vec(left right') = (right kron I) left = (I kron left) right
        delta[rows, col0:col0 + m] = np.kron(right[:, None], eye)
        delta[rows, col0 + m:col0 + 2 * m] = np.kron(eye, left[:, None])

    for k in range(order.r):
        outer_block(full.G0.start + k * m * m, low.G0.start + 2 * k * m, lr.g0[k, 0], lr.g0[k, 1])
    for block_full, block_low, factors in ((full.G1, low.G1, lr.g1), (full.G2, low.G2, lr.g2)):
        for k in range(order.s):
            row0 = block_full.start + k * m * m
            col0 = block_low.start + 4 * k * m
            outer_block(row0, col0, factors[k, 0], factors[k, 1])
            outer_block(row0, col0 + 2 * m, factors[k, 2], factors[k, 3])
    return delta


def _normalize_pair(left: np.ndarray, right: np.ndarray) -> None:
    norm = float(np.linalg.norm(left))
    if norm == 0.0:
        return
    nonzero = np.flatnonzero(left)
    scale = norm * (1.0 if left[nonzero[0]] > 0 else -1.0)
    left /= scale
    right *= scale


def normalize_factors(lr: LowRankParams) -> LowRankParams:
    """Unit-norm left factors with nonnegative leading entry; theta unchanged."""
    g0, g1, g2 = lr.g0.copy(), lr.g1.copy(), lr.g2.copy()
    for k in range(lr.order.r):
        _normalize_pair(g0[k, 0], g0[k, 1])
    for factors in (g1, g2):
        for k in range(lr.order.s):
            _normalize_pair(factors[k, 0], factors[k, 1])
            _normalize_pair(factors[k, 2], factors[k, 3])
    return lr.replace(g0=g0, g1=g1, g2=g2)


# ---------------------------------------------------------------------------
# Canonical ordering
# ---------------------------------------------------------------------------


def _descending(values: np.ndarray, name: str) -> np.ndarray:
    _check_distinct(values, name)
    return np.argsort(-values, kind="stable")


def canonical_permutation(params: AnyParams) -> np.ndarray:
    """Permutation of the flat vector that sorts lambda and gamma descending."""
    lowrank = isinstance(params, LowRankParams)
    order = params.order
    lay = layout(order, lowrank=lowrank)
    lam_idx = _descending(np.asarray(params.lam), "lambda")
    gam_idx = _descending(np.asarray(params.gamma), "gamma")

    perm = np.arange(lay.size)
    perm[lay.lam] = lay.lam.start + lam_idx
    perm[lay.gamma] = lay.gamma.start + gam_idx
    perm[lay.phi] = lay.phi.start + gam_idx

    m = order.m
    width0 = 2 * m if lowrank else m * m
    width12 = 4 * m if lowrank else m * m

    def permute_block(block: slice, width: int, idx: np.ndarray) -> None:
        if idx.size == 0:
            return
        src = block.start + (idx[:, None] * width + np.arange(width)[None, :])
        perm[block] = src.reshape(-1)

    permute_block(lay.G0, width0, lam_idx)
    permute_block(lay.G1, width12, gam_idx)
    permute_block(lay.G2, width12, gam_idx)
    return perm


def canonicalize(params: GeneralParams) -> GeneralParams:
    """Sort real terms by lambda and complex terms by gamma, both descending."""
    perm = canonical_permutation(params)
    return unpack(pack(params)[perm], params.order, validate=False)


def canonicalize_lowrank(params: LowRankParams) -> LowRankParams:
    perm = canonical_permutation(params)
    return unpack_lowrank(pack_lowrank(params)[perm], params.order, validate=False)


# ---------------------------------------------------------------------------
# Log-GARCH(1,1) conversion
# ---------------------------------------------------------------------------


def from_log_garch11(
    omega,
    A1,
    B1,
    k_window: Optional[int] = None,
    beta1: float = 0.0,
    beta2: float = 0.0,
    Rbar=None,
    margin: float = DEFAULT_MARGIN,
) -> GeneralParams:
    """Rewrite ln h_t = omega + A1 ln y^2_{t-1} + B1 ln h_{t-1} in (r, s, G) form.

    B1 must be diagonalizable with nonzero eigenvalues inside the unit circle.
    A real eigenvalue w_k with eigenvector v_k contributes G0_k = v_k a_k', where
    a_k is the matching row of V^{-1} A1. A complex pair gamma e^{+-i phi}
    contributes G1 = 2 Re(v a'), G2 = -2 Im(v a') using the member with phi in
    (0, pi).
    """
    omega = np.asarray(omega, dtype=float).reshape(-1)
    A1 = np.asarray(A1, dtype=float)
    B1 = np.asarray(B1, dtype=float)
    m = omega.size
    if A1.shape != (m, m) or B1.shape != (m, m):
        raise DimensionMismatch("A1 and B1 must be m x m")

    eigvals, V = np.linalg.eig(B1)
    if np.max(np.abs(eigvals)) >= 1.0:
        raise ConstraintViolation("spectral radius of B1 < 1")
    if np.min(np.abs(eigvals)) < margin:
        raise ConstraintViolation("eigenvalues of B1 nonzero")
    if np.linalg.cond(V) > 1e12:
        raise ConstraintViolation("B1 diagonalizable")
    rows = np.linalg.solve(V, A1.astype(complex))

    lam, G0, gamma, phi, G1, G2 = [], [], [], [], [], []
    for k, w in enumerate(eigvals):
        outer = np.outer(V[:, k], rows[k])
        if abs(w.imag) <= 1e-12:
            lam.append(w.real)
            G0.append(outer.real)
        elif w.imag > 0:
            gamma.append(abs(w))
            phi.append(float(np.angle(w)))
            G1.append(2.0 * outer.real)
            G2.append(-2.0 * outer.imag)

    r, s = len(lam), len(gamma)
    order = ModelOrder(m, r, s, k_window)
    omega_bar = np.linalg.solve(np.eye(m) - B1, omega)
    params = GeneralParams(
        order=order,
        omega_bar=omega_bar,
        lam=np.array(lam),
        gamma=np.array(gamma),
        phi=np.array(phi),
        G0=np.array(G0).reshape(r, m, m),
        G1=np.array(G1).reshape(s, m, m),
        G2=np.array(G2).reshape(s, m, m),
        beta1=beta1,
        beta2=beta2,
        Rbar=np.eye(m) if Rbar is None else Rbar,
    )
    logger.debug(f"🔄 Converted log-GARCH(1,1) into order (r={r}, s={s})")
    return canonicalize(params.validate(margin))


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def params_to_json(params: AnyParams) -> dict:
    lowrank = isinstance(params, LowRankParams)
    vector = pack_any(params)
    labels = param_labels(params.order, lowrank=lowrank)
    return {
        "kind": "lowrank" if lowrank else "general",
        "order": params.order.to_dict(),
        "values": {label: float(value) for label, value in zip(labels, vector)},
    }


def params_from_json(data: dict, validate: bool = True) -> AnyParams:
    order = ModelOrder.from_dict(data["order"])
    lowrank = data.get("kind", "general") == "lowrank"
    labels = param_labels(order, lowrank=lowrank)
    values = data["values"]
    missing = [label for label in labels if label not in values]
    if missing:
        raise DimensionMismatch(f"parameter file is missing {missing[:3]}")
    vector = np.array([values[label] for label in labels], dtype=float)
    if lowrank:
        return unpack_lowrank(vector, order, validate=validate)
    return unpack(vector, order, validate=validate)
