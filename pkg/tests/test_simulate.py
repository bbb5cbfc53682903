import numpy as np
import pytest

from src.errors import ConstraintViolation, UnknownName
from src.filters.corrfilter import run_corr_filter
from src.filters.volfilter import log_sq_returns, run_filter
from src.model.catalog import catalog_lowrank, dgp_catalog
from src.services.riskcast import forecast_H
from src.services.simulate import default_burn, draw_innovations, simulate


class TestSimulate:
    def test_reproducible(self, dgp1):
        a = simulate(dgp1, 200, seed=42)
        b = simulate(dgp1, 200, seed=42)
        np.testing.assert_array_equal(a.panel, b.panel)
        assert not np.array_equal(a.panel, simulate(dgp1, 200, seed=43).panel)

    def test_burn_in(self, dgp1):
        sim = simulate(dgp1, 100, seed=1)
        assert sim.burn == 500 == default_burn(2)
        assert sim.panel.shape == (100, 2)
        assert sim.full_panel.shape == (600, 2)
        assert default_burn(200) == 1000

    def test_burn_shorter_than_window(self, dgp1):
        with pytest.raises(ConstraintViolation):
            simulate(dgp1, 100, burn=1)

    def test_nonstationary_design(self, dgp1):
        loud = dgp1.replace(G0=3 * dgp1.G0)
        with pytest.raises(ConstraintViolation):
            simulate(loud, 50, seed=1)
        sim = simulate(loud, 50, seed=1, allow_nonstationary=True)
        assert not sim.stationarity.satisfied

    def test_filters_recover_the_path(self, dgp1):
        sim = simulate(dgp1, 150, burn=20, seed=9)
        y = sim.full_panel
        path = run_filter(dgp1, log_sq_returns(y), y)
        np.testing.assert_allclose(path.log_h, sim.full_log_h, atol=1e-10)
        np.testing.assert_allclose(path.eps, sim.full_eps, atol=1e-10)
        R = run_corr_filter(dgp1, path.eps).R
        np.testing.assert_allclose(R, sim.full_R, atol=1e-10)

    def test_forecast_matches_simulated_covariance(self, dgp1):
        sim = simulate(dgp1, 60, burn=20, seed=5)
        for t in (20, 45, 79):
            H = forecast_H(dgp1, sim.full_panel[:t])
            d = np.exp(0.5 * sim.full_log_h[t])
            np.testing.assert_allclose(H, d[:, None] * sim.full_R[t] * d[None, :], atol=1e-10)

    def test_covariance_property(self, dgp1):
        sim = simulate(dgp1, 30, seed=2)
        np.testing.assert_allclose(np.diagonal(sim.H, axis1=1, axis2=2), np.exp(sim.log_h))

    def test_lowrank_input_matches_general(self):
        lr = catalog_lowrank("DGP3")
        a = simulate(lr, 80, seed=3)
        b = simulate(dgp_catalog("DGP3"), 80, seed=3)
        np.testing.assert_allclose(a.panel, b.panel, atol=1e-12)

    def test_diagnostics(self, dgp1):
        info = simulate(dgp1, 10, dist="t", df=6.0, seed=1).diagnostics
        assert info["dist"] == "t"
        assert info["df"] == 6.0
        assert info["n"] == 10
        assert info["n_repairs"] == 0
        assert "Cholesky" in info["sqrt_convention"]


class TestInnovations:
    def test_student_t_has_unit_variance(self):
        draws = draw_innovations(np.random.default_rng(0), (200_000,), "t", 5.0)
        assert draws.var() == pytest.approx(1.0, abs=0.05)

    def test_df_must_exceed_two(self):
        with pytest.raises(ConstraintViolation):
            draw_innovations(np.random.default_rng(0), (10,), "t", 2.0)

    def test_unknown_distribution(self):
        with pytest.raises(UnknownName):
            draw_innovations(np.random.default_rng(0), (10,), "laplace")


class TestCatalog:
    def test_dgp5_depends_on_seed(self):
        a = catalog_lowrank("DGP5")
        assert a == catalog_lowrank("DGP5", seed=0)
        assert not a == catalog_lowrank("DGP5", seed=1)
        assert a.order.m == 20
        assert np.all((a.g0[0, 0] >= 0.5) & (a.g0[0, 0] <= 0.6))

    def test_unknown_design(self):
        with pytest.raises(UnknownName):
            dgp_catalog("DGP9")

    def test_dgp3_matrices(self):
        params = dgp_catalog("DGP3")
        np.testing.assert_allclose(params.G1[0], [[0.05, 0.04], [0.04, 0.05]], atol=1e-15)
        np.testing.assert_allclose(params.G2[0], [[0.04, 0.05], [-0.05, -0.04]], atol=1e-15)


class TestZeroReturns:
    def test_exact_zero_matches_estimation_floor(self, dgp1, mocker):
        def with_zero(rng, shape, dist="normal", df=5.0):
            eta = draw_innovations(rng, shape, dist, df)
            eta[30, 0] = 0.0
            return eta

        mocker.patch("src.services.simulate.draw_innovations", side_effect=with_zero)
        sim = simulate(dgp1, 60, burn=20, seed=5)
        y = sim.full_panel
        assert y[30, 0] == 0.0
        path = run_filter(dgp1, log_sq_returns(y), y)
        np.testing.assert_allclose(path.log_h, sim.full_log_h, atol=1e-10)
