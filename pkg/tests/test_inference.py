import numpy as np
import pytest

from src.errors import ConstraintViolation, IndexOutOfRange, SingularInformation
from src.filters.volfilter import phi_matrix
from src.model.catalog import catalog_lowrank
from src.model.params import lowrank_jacobian, param_labels
from src.services.estimation import FitReport
from src.services.inference import (
    CovReport,
    asymptotic_cov,
    estimate_sigma,
    spillover_matrix,
    spillover_test,
    standard_errors,
)
from src.services.stationarity import check_stationarity
from tests.helpers import random_general


def _spd(rng, d, scale=1.0):
    A = rng.normal(size=(d, d))
    return scale * (A @ A.T / d + np.eye(d))


def _cov(params, avar, n_obs=100) -> CovReport:
    d = params.order.dim
    return CovReport(
        mode="general",
        n_obs=n_obs,
        sigma=np.eye(d),
        sigma_star=np.eye(d),
        avar=avar,
        labels=param_labels(params.order),
    )


def _fit(params, mode="general", lowrank=None) -> FitReport:
    return FitReport(
        mode=mode,
        params=params,
        lowrank=lowrank,
        neg_loglik=0.0,
        converged=True,
        n_evals=1,
        n_iter=1,
        gradient_norm=0.0,
        stationarity=check_stationarity(params),
        pd_repair_count=0,
        n_obs=300,
    )


class TestSpillover:
    def test_estimate_is_phi1_entry(self, rng):
        params = random_general(rng, 3, 1, 1)
        cov = _cov(params, np.eye(params.order.dim))
        res = spillover_test(params, cov, 1, 2)
        assert res.estimate == phi_matrix(params, 1)[0, 1]
        assert res.se == pytest.approx(np.sqrt(2 / 100))
        assert res.z == pytest.approx(res.estimate / res.se)
        assert 0 <= res.p_value <= 1

    def test_indices_are_one_based(self, rng):
        params = random_general(rng, 2, 1, 0)
        cov = _cov(params, np.eye(params.order.dim))
        with pytest.raises(IndexOutOfRange):
            spillover_test(params, cov, 0, 1)
        with pytest.raises(IndexOutOfRange):
            spillover_test(params, cov, 1, 3)

    def test_own_lag_is_not_a_spillover(self, rng):
        params = random_general(rng, 3, 1, 1)
        cov = _cov(params, np.eye(params.order.dim))
        with pytest.raises(ConstraintViolation) as info:
            spillover_test(params, cov, 2, 2)
        assert info.value.constraint == "i != j"

    def test_matrix_covers_every_pair(self, rng):
        params = random_general(rng, 3, 1, 0)
        table = spillover_matrix(params, _cov(params, np.eye(params.order.dim)))
        assert len(table) == 9
        assert table["off_diagonal"].sum() == 6
        diagonal = table[~table["off_diagonal"]]
        assert (diagonal["i"] == diagonal["j"]).all()
        np.testing.assert_array_equal(table["estimate"].to_numpy(), table["phi1"].to_numpy())

    def test_zero_variance_gives_nan(self, rng):
        params = random_general(rng, 2, 1, 0)
        res = spillover_test(params, _cov(params, np.zeros((10, 10))), 2, 1)
        assert np.isnan(res.z) and np.isnan(res.p_value)


class TestStandardErrors:
    def test_table(self, dgp1):
        avar = np.diag(np.arange(1.0, 11.0))
        table = standard_errors(dgp1, _cov(dgp1, avar, n_obs=400))
        assert list(table.columns) == ["parameter", "estimate", "se", "z", "p_value"]
        assert len(table) == 10
        np.testing.assert_allclose(table["se"], np.sqrt(np.arange(1.0, 11.0) / 400))
        assert table.loc[0, "parameter"] == "omega_bar[1]"


class TestAsymptoticCov:
    def test_sandwich(self, mocker, rng, dgp1, dgp1_panel):
        S, Sstar = _spd(rng, 10), _spd(rng, 10, 2.0)
        mocker.patch("src.services.inference.estimate_sigma", return_value=S)
        mocker.patch("src.services.inference.estimate_sigma_star", return_value=Sstar)
        cov = asymptotic_cov(_fit(dgp1), dgp1_panel)
        inv = np.linalg.inv(Sstar)
        np.testing.assert_allclose(cov.avar, inv @ S @ inv, atol=1e-12)
        assert cov.n_obs == 300
        assert cov.min_eig_sigma_star == pytest.approx(np.linalg.eigvalsh(Sstar).min())

    def test_gaussian(self, mocker, rng, dgp1, dgp1_panel):
        Sstar = _spd(rng, 10)
        mocker.patch("src.services.inference.estimate_sigma", return_value=np.eye(10))
        mocker.patch("src.services.inference.estimate_sigma_star", return_value=Sstar)
        cov = asymptotic_cov(_fit(dgp1), dgp1_panel, gaussian=True)
        np.testing.assert_allclose(cov.avar, np.linalg.inv(Sstar), atol=1e-12)
        assert cov.gaussian

    def test_singular_information(self, mocker, dgp1, dgp1_panel):
        mocker.patch("src.services.inference.estimate_sigma", return_value=np.eye(10))
        mocker.patch("src.services.inference.estimate_sigma_star", return_value=np.zeros((10, 10)))
        with pytest.raises(SingularInformation):
            asymptotic_cov(_fit(dgp1), dgp1_panel)

    @pytest.mark.parametrize("gaussian", [False, True])
    def test_lowrank_lives_on_factor_tangent_space(self, mocker, rng, dgp1_panel, gaussian):
        lr = catalog_lowrank("DGP1")
        S, Sstar = _spd(rng, 10), _spd(rng, 10)
        mocker.patch("src.services.inference.estimate_sigma", return_value=S)
        mocker.patch("src.services.inference.estimate_sigma_star", return_value=Sstar)
        cov = asymptotic_cov(_fit(lr.to_general(), "lowrank", lr), dgp1_panel, gaussian=gaussian)
        delta = lowrank_jacobian(lr)
        outside = np.eye(10) - delta @ np.linalg.pinv(delta)
        np.testing.assert_allclose(outside @ cov.avar, 0.0, atol=1e-10)
        np.testing.assert_allclose(cov.avar, cov.avar.T)

    def test_lowrank_singular_information_falls_back(self, mocker, rng, dgp1_panel):
        lr = catalog_lowrank("DGP1")
        delta = lowrank_jacobian(lr)
        # information only along the factor directions
        Sstar = delta @ delta.T
        mocker.patch("src.services.inference.estimate_sigma", return_value=_spd(rng, 10))
        mocker.patch("src.services.inference.estimate_sigma_star", return_value=Sstar)
        cov = asymptotic_cov(_fit(lr.to_general(), "lowrank", lr), dgp1_panel)
        assert np.all(np.isfinite(cov.avar))

    def test_outer_product_of_scores(self, dgp1, dgp1_panel):
        sigma = estimate_sigma(dgp1, dgp1_panel)
        assert sigma.shape == (10, 10)
        np.testing.assert_allclose(sigma, sigma.T)
        assert np.linalg.eigvalsh(sigma).min() > -1e-10


def test_cov_report_roundtrip(dgp1):
    cov = _cov(dgp1, np.eye(10) * 2.0)
    loaded = CovReport.from_dict(cov.to_dict())
    np.testing.assert_array_equal(loaded.avar, cov.avar)
    assert loaded.labels == cov.labels
