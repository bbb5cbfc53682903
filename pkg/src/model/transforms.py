"""Smooth map between unconstrained optimizer coordinates and the parameter box.

* lambda_k = sign_k * (eta + (1 - 2 eta) (1 + tanh u) / 2), branch fixed per start
* gamma_k in (eta, 1 - eta), phi_k in (eta, pi - eta) through the same tanh map
* (beta1, beta2) = (1 - eta) * softmax(u1, u2, 0)[:2]
* Rbar = L L' with L the hyperspherical Cholesky factor, angles in (eta, pi - eta)
* G matrices or low-rank factors are unconstrained
"""
from typing import Tuple

import numpy as np

from src.model.params import ModelOrder, ParamLayout, layout, vech_lower_indices

_ARCTANH_CLIP = 1.0 - 1e-12


def _bounded(u: np.ndarray, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    t = np.tanh(u)
    return lo + (hi - lo) * (1.0 + t) / 2.0, (hi - lo) * (1.0 - t * t) / 2.0


def _bounded_inverse(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    z = 2.0 * (np.asarray(x, dtype=float) - lo) / (hi - lo) - 1.0
    return np.arctanh(np.clip(z, -_ARCTANH_CLIP, _ARCTANH_CLIP))


def hyperspherical_cholesky(angles: np.ndarray, m: int) -> np.ndarray:
    """Lower-triangular L with unit-norm rows; angles row-major over (i, j<i)."""
    L = np.zeros((m, m))
    L[0, 0] = 1.0
    pos = 0
    for i in range(1, m):
        prod = 1.0
        for j in range(i):
            theta = angles[pos]
            L[i, j] = prod * np.cos(theta)
            prod *= np.sin(theta)
            pos += 1
        L[i, i] = prod
    return L


def hyperspherical_angles(R: np.ndarray) -> np.ndarray:
    """Angles reproducing the Cholesky factor of a correlation matrix."""
    m = R.shape[0]
    L = np.linalg.cholesky(R)
    angles = []
    for i in range(1, m):
        row = L[i] / np.linalg.norm(L[i])
        prod = 1.0
        for j in range(i):
            c = np.clip(row[j] / prod, -1.0, 1.0) if prod > 0 else 1.0
            theta = float(np.arccos(c))
            angles.append(theta)
            prod *= np.sin(theta)
    return np.array(angles)


def _cholesky_row_derivatives(angles: np.ndarray, L: np.ndarray, i: int, offset: int) -> np.ndarray:
    """d L[i, :] / d angle_(i, j) for j < i, shape (i, m)."""
    m = L.shape[0]
    out = np.zeros((i, m))
    prod = 1.0
    for j in range(i):
        theta = angles[offset + j]
        s, c = np.sin(theta), np.cos(theta)
        out[j, j] = -prod * s
        # later entries carry sin(theta) as a factor
        out[j, j + 1:i + 1] = L[i, j + 1:i + 1] * c / s
        prod *= s
    return out


class ParamTransform:
    """Bijection u <-> natural vector (theta or vartheta) with analytic Jacobian."""

    def __init__(
        self,
        order: ModelOrder,
        lam_signs=None,
        lowrank: bool = False,
        margin: float = 1e-6,
    ):
        self.order = order
        self.lowrank = lowrank
        self.margin = float(margin)
        self.layout: ParamLayout = layout(order, lowrank=lowrank)
        signs = np.ones(order.r) if lam_signs is None else np.sign(np.asarray(lam_signs, dtype=float))
        signs[signs == 0] = 1.0
        self.lam_signs = signs
        self._rows, self._cols = vech_lower_indices(order.m)

    @property
    def size(self) -> int:
        return self.layout.size

    # -- forward ---------------------------------------------------------

    def to_natural(self, u: np.ndarray) -> np.ndarray:
        return self._forward(np.asarray(u, dtype=float), jacobian=False)[0]

    def jacobian(self, u: np.ndarray) -> np.ndarray:
        return self._forward(np.asarray(u, dtype=float), jacobian=True)[1]

    def to_natural_with_jacobian(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self._forward(np.asarray(u, dtype=float), jacobian=True)

    def _forward(self, u: np.ndarray, jacobian: bool):
        lay, eta = self.layout, self.margin
        x = u.copy()
        J = np.eye(lay.size) if jacobian else None

        mag, dmag = _bounded(u[lay.lam], eta, 1.0 - eta)
        gamma, dgamma = _bounded(u[lay.gamma], eta, 1.0 - eta)
        phi, dphi = _bounded(u[lay.phi], eta, np.pi - eta)
        x[lay.lam] = self.lam_signs * mag
        x[lay.gamma] = gamma
        x[lay.phi] = phi
        if J is not None:
            J[lay.lam, lay.lam] = np.diag(self.lam_signs * dmag)
            J[lay.gamma, lay.gamma] = np.diag(dgamma)
            J[lay.phi, lay.phi] = np.diag(dphi)

        ub = u[lay.beta]
        top = max(0.0, float(ub.max()))
        ex = np.exp(ub - top)
        denom = np.exp(-top) + ex.sum()
        scale = 1.0 - eta
        beta = scale * ex / denom
        x[lay.beta] = beta
        if J is not None:
            J[lay.beta, lay.beta] = np.diag(beta) - np.outer(beta, beta) / scale

        m = self.order.m
        if m > 1:
            ang, dang = _bounded(u[lay.rbar], eta, np.pi - eta)
            L = hyperspherical_cholesky(ang, m)
            R = L @ L.T
            x[lay.rbar] = R[self._rows, self._cols]
            if J is not None:
                J[lay.rbar, lay.rbar] = self._rbar_jacobian(ang, L) * dang[None, :]
        return x, J

    def _rbar_jacobian(self, angles: np.ndarray, L: np.ndarray) -> np.ndarray:
        m = self.order.m
        n_r = self.order.n_rbar
        position = {(int(i), int(j)): p for p, (i, j) in enumerate(zip(self._rows, self._cols))}
        out = np.zeros((n_r, n_r))
        offset = 0
        for i in range(1, m):
            dL = _cholesky_row_derivatives(angles, L, i, offset)
            for j in range(i):
                col = offset + j
                # R[i, b] = L[i] . L[b]; only row i of L moves
                for b in range(m):
                    if b == i:
                        continue
                    value = float(dL[j] @ L[b])
                    key = (i, b) if b < i else (b, i)
                    out[position[key], col] += value
            offset += i
        return out

    # -- inverse ---------------------------------------------------------

    def to_internal(self, x: np.ndarray) -> np.ndarray:
        lay, eta = self.layout, self.margin
        x = np.asarray(x, dtype=float)
        u = x.copy()
        u[lay.lam] = _bounded_inverse(np.abs(x[lay.lam]), eta, 1.0 - eta)
        u[lay.gamma] = _bounded_inverse(x[lay.gamma], eta, 1.0 - eta)
        u[lay.phi] = _bounded_inverse(x[lay.phi], eta, np.pi - eta)

        beta = np.maximum(x[lay.beta], 1e-10)
        slack = max((1.0 - eta) - beta.sum(), 1e-10)
        u[lay.beta] = np.log(beta / slack)

        m = self.order.m
        if m > 1:
            R = np.eye(m)
            R[self._rows, self._cols] = x[lay.rbar]
            R[self._cols, self._rows] = x[lay.rbar]
            angles = hyperspherical_angles(R)
            u[lay.rbar] = _bounded_inverse(angles, eta, np.pi - eta)
        return u
