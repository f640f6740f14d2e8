import json

import numpy as np

from gcmport.estimators import ReturnPanel
from gcmport.io import read_matrix, read_panel, schema, write_json, write_matrix, write_panel, write_table


def test_panel_roundtrip_is_exact(tmp_path, rng):
    panel = ReturnPanel(rng.standard_normal((3, 7)), ["a", "b", "c"], [f"2024-01-0{k + 1}" for k in range(7)])
    write_panel(tmp_path / "p.csv", panel)
    back = read_panel(tmp_path / "p.csv")
    np.testing.assert_array_equal(back.values, panel.values)
    assert back.asset_ids == panel.asset_ids and back.timestamps == panel.timestamps


def test_matrix_roundtrip_and_label_column(tmp_path, rng):
    m = np.corrcoef(rng.standard_normal((3, 10)))
    write_matrix(tmp_path / "m.csv", m, ["x", "y", "z"])
    back, ids = read_matrix(tmp_path / "m.csv")
    np.testing.assert_array_equal(back, m)
    (tmp_path / "l.csv").write_text("asset,x,y\nx,1,0.5\ny,0.5,1\n")
    back, ids = read_matrix(tmp_path / "l.csv")
    assert ids == ["x", "y"] and back[0, 1] == 0.5


def test_json_schema_and_nan(tmp_path):
    write_json(tmp_path / "r.json", {"b": np.array([1.0, np.nan]), "a": np.int64(2)}, "thing")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc == {"schema": schema("thing"), "a": 2, "b": [1.0, None]}
    assert list(doc) == ["a", "b", "schema"]


def test_table(tmp_path):
    write_table(tmp_path / "t.csv", [{"k": 1, "v": 0.1}, {"k": 2, "v": float("nan")}])
    assert (tmp_path / "t.csv").read_text() == "k,v\n1,0.1\n2,nan\n"
