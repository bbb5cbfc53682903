import json

import numpy as np
import pandas as pd
import pytest
from faker import Faker

from src.errors import EmptyPanel, ParseError, UnknownName
from src.model.params import params_to_json
from src.utils.panel_io import (
    load_backtest_csv,
    load_bic_table,
    load_panel,
    load_params,
    read_json,
    write_frame,
    write_json,
    write_manifest,
    write_panel,
)


def _write(tmp_path, text, name="returns.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadPanel:
    def test_drop_and_zero_fill(self, tmp_path):
        path = _write(tmp_path, "a,b\n0.1,0.2\n,\n0.3,\n")
        panel = load_panel(path)
        assert panel.n == 2 and panel.m == 2
        assert panel.n_dropped_rows == 1
        assert panel.n_zero_filled == 1
        np.testing.assert_array_equal(panel.values, [[0.1, 0.2], [0.3, 0.0]])
        assert panel.columns == ["a", "b"]

    def test_center_after_fill(self, tmp_path):
        path = _write(tmp_path, "a,b\n1.0,2.0\n3.0,\n")
        panel = load_panel(path, center=True)
        np.testing.assert_allclose(panel.values, [[-1.0, 1.0], [1.0, -1.0]])
        assert panel.centered

    def test_error_policy(self, tmp_path):
        path = _write(tmp_path, "a,b\n0.1,0.2\n0.3,NA\n")
        with pytest.raises(ParseError) as info:
            load_panel(path, missing="error")
        assert info.value.row == 3
        assert info.value.column == "b"

    def test_non_numeric_cell(self, tmp_path):
        path = _write(tmp_path, "a,b\n0.1,0.2\n0.3,abc\n")
        with pytest.raises(ParseError) as info:
            load_panel(path)
        assert (info.value.row, info.value.column) == (3, "b")

    def test_date_index(self, tmp_path):
        path = _write(tmp_path, "date,x,y\n2020-01-02,0.1,0.2\n2020-01-03,0.3,0.4\n")
        panel = load_panel(path)
        assert panel.columns == ["x", "y"]
        assert list(panel.index) == ["2020-01-02", "2020-01-03"]

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyPanel):
            load_panel(_write(tmp_path, ""))

    def test_only_missing_rows(self, tmp_path):
        with pytest.raises(EmptyPanel):
            load_panel(_write(tmp_path, "a,b\n,\nNA,nan\n"))

    def test_unknown_policy(self, tmp_path):
        with pytest.raises(UnknownName):
            load_panel(_write(tmp_path, "a\n1\n"), missing="interpolate")

    def test_written_panel_reads_back(self, tmp_path, rng):
        values = rng.normal(size=(15, 3))
        path = write_panel(tmp_path / "panel.csv", values)
        panel = load_panel(path)
        np.testing.assert_array_equal(panel.values, values)
        assert panel.columns == ["y1", "y2", "y3"]

    def test_series_names_survive(self, tmp_path, rng):
        fake = Faker()
        Faker.seed(3)
        names = ["X" + fake.unique.lexify("???").upper() for _ in range(4)]
        path = write_panel(tmp_path / "named.csv", rng.normal(size=(5, 4)), columns=names)
        assert load_panel(path).columns == names


class TestArtifacts:
    def test_json_handles_arrays(self, tmp_path):
        path = write_json(tmp_path / "out.json", {"H": np.eye(2), "n": np.int64(3)})
        assert read_json(path) == {"H": [[1.0, 0.0], [0.0, 1.0]], "n": 3}

    def test_manifest(self, tmp_path):
        path = write_manifest(tmp_path, "simulate", {"n": 10}, 7, 0.0, ["panel.csv"])
        data = json.loads(path.read_text())
        assert data["command"] == "simulate"
        assert data["seed"] == 7
        assert data["status"] == "ok"
        assert data["artifacts"] == ["panel.csv"]
        assert {"python", "numpy", "scipy", "pandas"} <= set(data["versions"])

    def test_load_params_from_fit_file(self, tmp_path, dgp1):
        fit = {"mode": "general", "params": params_to_json(dgp1), "lowrank": None}
        path = tmp_path / "fit.json"
        path.write_text(json.dumps(fit))
        assert load_params(path) == dgp1
        direct = tmp_path / "params.json"
        direct.write_text(json.dumps(params_to_json(dgp1)))
        assert load_params(direct) == dgp1

    def test_backtest_columns(self, tmp_path):
        path = _write(tmp_path, "index,z,sigma\n1,0.1,1.0\n", name="bt.csv")
        with pytest.raises(ParseError):
            load_backtest_csv(path)

    def test_bic_table_reads_back(self, tmp_path):
        table = pd.DataFrame({"r": [1, 2], "s": [0, 0], "bic": [12.5, 11.0], "converged": [True, True]})
        path = write_frame(tmp_path / "bic.csv", table)
        pd.testing.assert_frame_equal(load_bic_table(path), table)
