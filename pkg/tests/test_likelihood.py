import numpy as np
import pytest

from src.errors import DimensionMismatch, NonFiniteInput
from src.model.params import pack, pack_lowrank, unpack, unpack_lowrank
from src.services.likelihood import QuasiLikelihood, grad_neg_loglik, neg_loglik
from tests.helpers import constant_model, random_general, random_lowrank


def _numeric_gradient(lik, vector, rebuild, step=1e-6):
    grad = np.zeros_like(vector)
    for col in range(vector.size):
        shift = np.zeros_like(vector)
        shift[col] = step
        up = lik.value(rebuild(vector + shift))
        down = lik.value(rebuild(vector - shift))
        grad[col] = (up - down) / (2 * step)
    return grad


class TestValue:
    def test_identity_covariance(self, rng):
        y = rng.normal(size=(50, 2))
        params = constant_model(2)
        assert neg_loglik(params, y) == pytest.approx(0.5 * np.sum(y**2), rel=1e-12)

    def test_contributions_add_up(self, rng, dgp1, dgp1_panel):
        terms = QuasiLikelihood(dgp1_panel).evaluate(dgp1)
        assert terms.n_repaired == 0
        assert terms.value == pytest.approx(terms.contributions.sum())
        assert terms.contributions.shape == (dgp1_panel.shape[0],)

    def test_column_mismatch(self, dgp1, rng):
        with pytest.raises(DimensionMismatch):
            neg_loglik(dgp1, rng.normal(size=(50, 3)))

    def test_too_few_rows(self, dgp1, rng):
        with pytest.raises(DimensionMismatch):
            neg_loglik(dgp1, rng.normal(size=(2, 2)))

    def test_non_finite_panel(self, dgp1):
        panel = np.ones((10, 2))
        panel[3, 1] = np.inf
        with pytest.raises(NonFiniteInput):
            QuasiLikelihood(panel)


class TestGradient:
    @pytest.mark.parametrize("m,r,s", [(2, 1, 0), (2, 0, 1), (3, 1, 1)])
    def test_general_matches_differences(self, rng, m, r, s):
        params = random_general(rng, m, r, s)
        y = rng.normal(size=(60, m))
        lik = QuasiLikelihood(y)
        value, grad = lik.value_and_gradient(params)
        numeric = _numeric_gradient(
            lik, pack(params), lambda v: unpack(v, params.order, validate=False)
        )
        np.testing.assert_allclose(grad, numeric, atol=1e-4 * max(1.0, np.abs(grad).max()))
        assert value == pytest.approx(lik.value(params))

    def test_lowrank_matches_differences(self, rng):
        lr = random_lowrank(rng, 3, 1, 1)
        y = rng.normal(size=(60, 3))
        lik = QuasiLikelihood(y)
        _, grad = lik.value_and_gradient(lr)
        numeric = _numeric_gradient(
            lik, pack_lowrank(lr), lambda v: unpack_lowrank(v, lr.order, validate=False)
        )
        np.testing.assert_allclose(grad, numeric, atol=1e-4 * max(1.0, np.abs(grad).max()))

    def test_longer_window(self, rng):
        params = random_general(rng, 2, 1, 0, k_window=4)
        y = rng.normal(size=(40, 2))
        lik = QuasiLikelihood(y)
        _, grad = lik.value_and_gradient(params)
        numeric = _numeric_gradient(
            lik, pack(params), lambda v: unpack(v, params.order, validate=False)
        )
        np.testing.assert_allclose(grad, numeric, atol=1e-4 * max(1.0, np.abs(grad).max()))

    def test_small_chunks_give_same_scores(self, rng):
        params = random_general(rng, 3, 1, 1)
        y = rng.normal(size=(30, 3))
        full = QuasiLikelihood(y).scores(params)
        chunked = QuasiLikelihood(y, chunk_budget=1).scores(params)
        np.testing.assert_allclose(chunked, full, atol=1e-12)

    def test_scores_sum_to_gradient(self, rng):
        params = random_general(rng, 2, 1, 0)
        y = rng.normal(size=(40, 2))
        scores = QuasiLikelihood(y).scores(params)
        assert scores.shape == (40, params.order.dim)
        np.testing.assert_allclose(scores.sum(axis=0), grad_neg_loglik(params, y), atol=1e-10)
