import csv
import json
import math

from sqglab.dyadic import BesovSpec
from sqglab.exporter import (
    LEDGER_COLUMNS,
    export_ledger_csv,
    export_report_json,
    export_table_csv,
    fmt_exponent,
    jsonable,
    norm_report,
)
from sqglab.ledger import LEDGER_PS, TimeSeriesLedger


def _ledger():
    ledger = TimeSeriesLedger()
    for i in range(3):
        lp = {p: 1.0 / (i + 1) for p in LEDGER_PS}
        blocks = {(q, p): 0.5 / (i + 1) for q in (-1, 0) for p in LEDGER_PS}
        ledger.record(0.1 * i, lp, blocks, 0.0)
    return ledger


class TestJson:
    def test_exponents(self):
        assert fmt_exponent(2.0) == "2"
        assert fmt_exponent(math.inf) == "inf"

    def test_jsonable_handles_keys_and_non_finite(self):
        spec = BesovSpec(0.5, math.inf, 1.0)
        out = jsonable({math.inf: [math.nan, 1.5], spec: (1, 2), (0, 2.0): True})
        assert out == {"inf": ["nan", 1.5], "B(0.5,inf,1,hom)": [1, 2], "0,2": True}
        json.dumps(out, allow_nan=False)

    def test_report_is_sorted_and_strict(self, tmp_path):
        path = export_report_json({"b": math.inf, "a": 1}, str(tmp_path / "r.json"))
        text = open(path, encoding="utf-8").read()
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": 1, "b": "inf"}

    def test_norm_report(self):
        rep = norm_report(BesovSpec(0.0, 2.0, 1.0, homogeneous=False), 3.0, 32, 2 * math.pi)
        assert rep["spec"] == "B(0,2,1,inhom)"
        assert rep["grid"]["n"] == 32
        assert rep["value"] == 3.0


class TestCsv:
    def test_ledger_rows(self, tmp_path):
        path = export_ledger_csv(_ledger(), name="demo", out_dir=str(tmp_path))
        assert path.endswith("demo_ledger.csv")
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        assert tuple(rows[0]) == LEDGER_COLUMNS
        # 3 times x 2 blocks x 3 exponents
        assert len(rows) == 18
        assert {r["p"] for r in rows} == {"1", "2", "inf"}
        assert rows[0]["time"] == "0.0"

    def test_table_floats_round_trip(self, tmp_path):
        value = 0.1 + 0.2
        path = export_table_csv([{"x": value, "y": math.inf}], ["x", "y"], str(tmp_path / "t.csv"))
        with open(path, newline="", encoding="utf-8") as f:
            row = next(csv.DictReader(f))
        assert float(row["x"]) == value
        assert row["y"] == "inf"
