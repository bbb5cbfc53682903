import numpy as np
import pytest

from src.model.params import ModelOrder, pack, unpack
from src.model.transforms import ParamTransform, hyperspherical_angles, hyperspherical_cholesky
from tests.helpers import random_correlation, random_general


class TestParamTransform:
    def test_internal_roundtrip(self, rng):
        params = random_general(rng, 3, 2, 0)
        transform = ParamTransform(params.order, np.sign(params.lam))
        x = pack(params)
        np.testing.assert_allclose(transform.to_natural(transform.to_internal(x)), x, atol=1e-8)

    @pytest.mark.parametrize("lowrank", [False, True])
    def test_jacobian_matches_differences(self, rng, lowrank):
        order = ModelOrder(3, 1, 1)
        transform = ParamTransform(order, [-1.0], lowrank=lowrank)
        u = rng.normal(0.0, 0.7, transform.size)
        x, J = transform.to_natural_with_jacobian(u)
        step = 1e-6
        numeric = np.zeros_like(J)
        for col in range(u.size):
            shift = np.zeros_like(u)
            shift[col] = step
            numeric[:, col] = (transform.to_natural(u + shift) - transform.to_natural(u - shift)) / (2 * step)
        np.testing.assert_allclose(J, numeric, atol=1e-7)

    def test_any_point_is_admissible(self, rng):
        order = ModelOrder(4, 1, 1)
        transform = ParamTransform(order, [1.0])
        for _ in range(20):
            u = rng.normal(0.0, 1.5, transform.size)
            params = unpack(transform.to_natural(u), order, validate=False)
            np.testing.assert_allclose(np.diag(params.Rbar), 1.0)
            assert np.linalg.eigvalsh(params.Rbar).min() > 0
            assert params.beta1 + params.beta2 <= 1.0 - transform.margin + 1e-15
            assert 0 < params.gamma[0] < 1
            assert 0 < params.phi[0] < np.pi

    def test_lambda_sign_is_fixed(self, rng):
        transform = ParamTransform(ModelOrder(2, 2, 0), [1.0, -1.0])
        for _ in range(10):
            x = transform.to_natural(rng.normal(0.0, 2.0, transform.size))
            lam = x[transform.layout.lam]
            assert lam[0] > 0 and lam[1] < 0


def test_hyperspherical_angles_invert_cholesky(rng):
    R = random_correlation(rng, 4)
    L = hyperspherical_cholesky(hyperspherical_angles(R), 4)
    np.testing.assert_allclose(L @ L.T, R, atol=1e-12)
