"""Tests for report export."""

import json
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from app.models.report import EstimateReport, RefinementLevel, RefinementStudy
from app.verify.export import (
    dumps,
    format_float,
    render_summary,
    report_record,
    reports_frame,
    study_record,
    write_plot_data,
)


@pytest.fixture(name="report")
def report_fixture() -> EstimateReport:
    return EstimateReport(
        check="caccioppoli",
        params={"p": [2, 4], "eps": 0.05, "j": 1},
        lhs=0.1,
        rhs_core=0.0,
        constant=math.inf,
        passed=False,
        h=0.0625,
        terms={"cutoff_constant": 1.875},
    )


@pytest.fixture(name="study")
def study_fixture(report) -> RefinementStudy:
    levels = tuple(
        RefinementLevel(h=h, shape=(n, n), report=report.model_copy(update={"constant": c, "h": h}))
        for h, n, c in [(0.125, 9, 2.0), (0.0625, 17, 2.2)]
    )
    return RefinementStudy(check="caccioppoli", criterion="spread", tolerance=0.25, levels=levels, passed=True)


class TestDumps:
    """Tests for the deterministic JSON encoder."""

    def test_floats(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert format_float(2.0) == "2"
        assert format_float(-math.inf) == "-inf"
        assert format_float(math.nan) == "nan"

    def test_non_finite_become_strings(self):
        assert json.loads(dumps({"a": math.inf, "b": [math.nan]})) == {"a": "inf", "b": ["nan"]}

    def test_numpy_scalars(self):
        text = dumps({"flag": np.bool_(True), "n": np.int64(3), "x": np.float64(0.5), "path": Path("a/b")})
        assert json.loads(text) == {"flag": True, "n": 3, "x": 0.5, "path": "a/b"}

    def test_key_order_is_kept(self):
        assert list(json.loads(dumps({"z": 1, "a": 2}))) == ["z", "a"]

    def test_layout(self):
        assert dumps({"a": [1, 2], "b": {}}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": {}\n}\n'

    def test_rejects_unknown_types(self):
        with pytest.raises(TypeError):
            dumps({"a": object()})


class TestRecords:
    """Tests for report and study records."""

    def test_report_record(self, report):
        record = report_record(report)
        assert list(record) == ["check", "params", "lhs", "rhs_core", "constant", "pass", "h", "terms",
                                "violations"]
        assert list(record["params"]) == ["eps", "j", "p"]
        assert json.loads(dumps(record))["constant"] == "inf"

    def test_study_record(self, study):
        record = study_record(study)
        assert record["constants"] == [2.0, 2.2]
        assert record["ratios"] == pytest.approx([1.1])
        assert [level["shape"] for level in record["levels"]] == [[9, 9], [17, 17]]

    def test_reports_frame(self, report):
        frame = reports_frame([report, report])
        assert list(frame.columns) == ["check", "lhs", "rhs_core", "constant", "pass", "h", "params"]
        assert json.loads(frame["params"].iloc[0]) == {"eps": 0.05, "j": 1, "p": [2, 4]}

    def test_plot_data(self, study, tmp_path):
        path = write_plot_data(study, tmp_path)
        assert path.name == "plot_caccioppoli.csv"
        frame = pd.read_csv(path)
        assert list(frame["constant"]) == [2.0, 2.2]


class TestSummary:
    """Tests for the Markdown summary."""

    def test_reports(self, report):
        text = render_summary("Verification", reports=[report], facts={"p": "[2, 4]"})
        assert text.startswith("# Verification")
        assert "caccioppoli" in text
        assert "inf" in text

    def test_studies(self, study):
        text = render_summary("Refinement study", studies=[study])
        assert "0.0625" in text
        assert "2.2000000000000002" in text
