"""Builders shared by several test modules."""
import numpy as np

from src.model.params import GeneralParams, LowRankParams, ModelOrder


def random_correlation(rng: np.random.Generator, m: int) -> np.ndarray:
    A = rng.normal(size=(m, m + 3))
    S = A @ A.T
    d = np.sqrt(np.diag(S))
    R = S / np.outer(d, d)
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 1.0)
    return R


def random_general(rng: np.random.Generator, m: int, r: int, s: int, k_window=None) -> GeneralParams:
    """A valid parameter point with small coefficients (r, s <= 2)."""
    lam = np.array([0.7, -0.5][:r]) + rng.uniform(-0.05, 0.05, r)
    gamma = np.array([0.75, 0.45][:s]) + rng.uniform(-0.05, 0.05, s)
    phi = rng.uniform(0.3, 2.8, s)
    return GeneralParams(
        order=ModelOrder(m, r, s, k_window),
        omega_bar=rng.normal(0.0, 0.3, m),
        lam=lam,
        gamma=gamma,
        phi=phi,
        G0=rng.normal(0.0, 0.05, (r, m, m)),
        G1=rng.normal(0.0, 0.05, (s, m, m)),
        G2=rng.normal(0.0, 0.05, (s, m, m)),
        beta1=0.1,
        beta2=0.8,
        Rbar=random_correlation(rng, m),
    ).validate()


def random_lowrank(rng: np.random.Generator, m: int, r: int, s: int) -> LowRankParams:
    general = random_general(rng, m, r, s)
    return LowRankParams(
        order=general.order,
        omega_bar=general.omega_bar,
        lam=general.lam,
        gamma=general.gamma,
        phi=general.phi,
        g0=rng.normal(0.0, 0.2, (r, 2, m)),
        g1=rng.normal(0.0, 0.2, (s, 4, m)),
        g2=rng.normal(0.0, 0.2, (s, 4, m)),
        beta1=general.beta1,
        beta2=general.beta2,
        Rbar=general.Rbar,
    ).validate()


def constant_model(m: int, omega: float = 0.0) -> GeneralParams:
    """r = 1 with G0 = 0 and beta = 0: H_t = exp(omega) I for every t."""
    return GeneralParams(
        order=ModelOrder(m, 1, 0),
        omega_bar=np.full(m, omega),
        lam=[0.5],
        gamma=[],
        phi=[],
        G0=np.zeros((1, m, m)),
        G1=np.zeros((0, m, m)),
        G2=np.zeros((0, m, m)),
        beta1=0.0,
        beta2=0.0,
        Rbar=np.eye(m),
    )
