"""Catalog of the five simulation designs (DGP1-DGP5).

Every design has beta = (0.1, 0.8), Rbar with 0.5 off the diagonal, and
omega_bar entries 1.45 (m = 2, 5) or 1.3 (m = 20). Coefficient matrices are
given as rank-one factors, so each entry also has a low-rank form.
"""
from typing import Optional

import numpy as np

from src.errors import UnknownName
from src.model.params import GeneralParams, LowRankParams, ModelOrder, theta_of_vartheta

DGP_NAMES = ("DGP1", "DGP2", "DGP3", "DGP4", "DGP5")
DEFAULT_DGP5_SEED = 0


def _rbar(m: int, rho: float = 0.5) -> np.ndarray:
    R = np.full((m, m), rho)
    np.fill_diagonal(R, 1.0)
    return R


def _build(m: int, omega: float, lam=(), gamma=(), phi=(), g0=None, g1=None, g2=None,
           k_window: Optional[int] = None) -> LowRankParams:
    r, s = len(lam), len(gamma)
    return LowRankParams(
        order=ModelOrder(m, r, s, k_window),
        omega_bar=np.full(m, omega),
        lam=np.array(lam, dtype=float),
        gamma=np.array(gamma, dtype=float),
        phi=np.array(phi, dtype=float),
        g0=np.zeros((0, 2, m)) if g0 is None else np.array(g0, dtype=float),
        g1=np.zeros((0, 4, m)) if g1 is None else np.array(g1, dtype=float),
        g2=np.zeros((0, 4, m)) if g2 is None else np.array(g2, dtype=float),
        beta1=0.1,
        beta2=0.8,
        Rbar=_rbar(m),
    )


def catalog_lowrank(
    name: str, seed: Optional[int] = None, k_window: Optional[int] = None
) -> LowRankParams:
    """Factor form of a catalog design; ``seed`` only affects DGP5."""
    key = name.upper()
    if key == "DGP1":
        return _build(2, 1.45, lam=[0.8], g0=[[[1.0, 1.0], [0.045, 0.045]]], k_window=k_window)
    if key == "DGP2":
        return _build(
            2,
            1.45,
            lam=[0.8, -0.8],
            g0=[[[1.0, 1.0], [0.045, 0.045]], [[1.0, -1.0], [0.045, -0.045]]],
            k_window=k_window,
        )
    if key == "DGP3":
        return _build(
            2,
            1.45,
            gamma=[0.8],
            phi=[0.7],
            g1=[[[0.8, 0.6], [0.064, 0.062], [-0.6, 0.8], [0.002, 0.016]]],
            g2=[[[0.8, 0.6], [0.002, 0.016], [0.6, -0.8], [0.064, 0.062]]],
            k_window=k_window,
        )
    if key == "DGP4":
        return _build(
            5,
            1.45,
            lam=[0.8],
            g0=[[[1.00, 0.96, 0.92, 0.88, 0.86], [0.025, 0.0255, 0.0265, 0.028, 0.03]]],
            k_window=k_window,
        )
    if key == "DGP5":
        rng = np.random.default_rng(DEFAULT_DGP5_SEED if seed is None else seed)
        left = rng.uniform(0.5, 0.6, 20)
        right = rng.uniform(0.03, 0.05, 20)
        return _build(20, 1.3, lam=[0.5], g0=[[left, right]], k_window=k_window)
    raise UnknownName(f"unknown DGP '{name}' (expected one of {', '.join(DGP_NAMES)})")


def dgp_catalog(
    name: str, seed: Optional[int] = None, k_window: Optional[int] = None
) -> GeneralParams:
    """Full-matrix parameters of a catalog design."""
    return theta_of_vartheta(catalog_lowrank(name, seed, k_window)).validate()
