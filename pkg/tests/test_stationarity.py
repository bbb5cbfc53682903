import pytest

from src.errors import UnknownName
from src.model.catalog import DGP_NAMES, catalog_lowrank, dgp_catalog
from src.services.stationarity import StationarityReport, check_stationarity, norm_sum


class TestNormSum:
    @pytest.mark.parametrize("norm", ["one", "inf", "two"])
    def test_dgp1(self, dgp1, norm):
        assert norm_sum(dgp1, norm) == pytest.approx(0.45)

    @pytest.mark.parametrize("name", ["DGP2", "DGP3"])
    def test_two_term_designs(self, name):
        params = dgp_catalog(name)
        for norm in ("one", "inf", "two"):
            assert norm_sum(params, norm) == pytest.approx(0.9)

    def test_dgp4_row_norm(self):
        assert norm_sum(dgp_catalog("DGP4"), "inf") == pytest.approx(0.675)

    def test_lowrank_input(self):
        assert norm_sum(catalog_lowrank("DGP1"), "inf") == pytest.approx(0.45)

    def test_unknown_norm(self, dgp1):
        with pytest.raises(UnknownName):
            norm_sum(dgp1, "frobenius")


class TestCheck:
    @pytest.mark.parametrize("name", DGP_NAMES)
    def test_catalog_is_stationary(self, name):
        report = check_stationarity(dgp_catalog(name))
        assert report.satisfied
        assert report.margin > 0

    def test_min_picks_smallest_norm(self):
        report = check_stationarity(dgp_catalog("DGP4"))
        assert report.sum == min(report.by_norm.values())
        assert report.sum < 0.675

    def test_large_coefficients_not_verified(self, dgp1):
        loud = dgp1.replace(G0=3 * dgp1.G0)
        report = check_stationarity(loud, "inf")
        assert report.sum == pytest.approx(1.35)
        assert not report.satisfied
        assert report.message == "condition not verified (sufficient only)"

    def test_report_roundtrip(self, dgp1):
        report = check_stationarity(dgp1)
        assert StationarityReport.from_dict(report.to_dict()) == report
