from types import SimpleNamespace

import numpy as np
import pytest

from src.errors import ConstraintViolation, NoConvergence
from src.model.params import ModelOrder
from src.services.estimation import FitOptions
from src.services.selection import bic, candidate_orders, select_order


def _fake_fit(neg_loglik, converged=True, dim=10, n_obs=200):
    return SimpleNamespace(neg_loglik=neg_loglik, converged=converged, dim=dim, n_obs=n_obs)


def _estimator(values):
    """Fake estimator returning a preset neg log-likelihood per (r, s)."""

    def fit(panel, order: ModelOrder, opts):
        value = values[(order.r, order.s)]
        if value is None:
            raise NoConvergence("no start converged", report=None)
        return _fake_fit(value, dim=order.dim, n_obs=panel.shape[0])

    return fit


class TestCandidates:
    def test_order_of_cells(self):
        assert candidate_orders(2, 2) == [(1, 0), (2, 0), (0, 1)]
        assert candidate_orders(5, 3) == [(1, 0), (2, 0), (0, 1), (3, 0), (1, 1)]

    def test_capped_by_dimension(self):
        assert candidate_orders(1, 4) == [(1, 0)]

    def test_needs_positive_budget(self):
        with pytest.raises(ConstraintViolation):
            candidate_orders(3, 0)


def test_bic_formula():
    fit = _fake_fit(150.0, dim=10, n_obs=500)
    assert bic(fit) == pytest.approx(300.0 + 10 * np.log(500))


class TestSelectOrder:
    def test_picks_minimum(self, mocker, rng):
        y = rng.normal(size=(200, 2))
        # dims: (1,0) -> 10, (2,0) -> 15, (0,1) -> 15
        values = {(1, 0): 500.0, (2, 0): 470.0, (0, 1): 490.0}
        mocker.patch("src.services.selection.get_estimator", return_value=_estimator(values))
        result = select_order(y, 2, opts=FitOptions(seed=1))
        assert result.best == (2, 0)
        assert list(result.table["r"]) == [1, 2, 0]
        assert result.table["converged"].all()
        assert result.best_fit.neg_loglik == 470.0

    def test_tie_goes_to_fewer_complex_terms(self, mocker, rng):
        y = rng.normal(size=(200, 2))
        values = {(1, 0): 600.0, (2, 0): 480.0, (0, 1): 480.0}
        mocker.patch("src.services.selection.get_estimator", return_value=_estimator(values))
        assert select_order(y, 2, opts=FitOptions(seed=1)).best == (2, 0)

    def test_worse_nested_model_is_rejected(self, mocker, rng):
        y = rng.normal(size=(200, 2))
        # (2,0) nests (1,0) but reports a worse fit
        values = {(1, 0): 500.0, (2, 0): 501.0, (0, 1): 520.0}
        mocker.patch("src.services.selection.get_estimator", return_value=_estimator(values))
        result = select_order(y, 2, opts=FitOptions(seed=1))
        row = result.table.set_index(["r", "s"]).loc[(2, 0)]
        assert not row["converged"]
        assert "nested" in row["note"]
        assert result.best == (1, 0)

    def test_failed_cell_is_skipped(self, mocker, rng):
        y = rng.normal(size=(200, 2))
        values = {(1, 0): 500.0, (2, 0): None, (0, 1): 450.0}
        mocker.patch("src.services.selection.get_estimator", return_value=_estimator(values))
        result = select_order(y, 2, opts=FitOptions(seed=1))
        assert result.best == (0, 1)
        assert np.isnan(result.table.loc[1, "bic"])

    def test_nothing_converges(self, mocker, rng):
        y = rng.normal(size=(200, 2))
        values = {(1, 0): None, (2, 0): None, (0, 1): None}
        mocker.patch("src.services.selection.get_estimator", return_value=_estimator(values))
        with pytest.raises(NoConvergence):
            select_order(y, 2, opts=FitOptions(seed=1))
