"""Tests for CSV ingestion, simulate files and result files."""

import json
from datetime import datetime, timezone

import numpy as np
import pytest
from pydantic import ValidationError

from costtest.errors import DataError, HarnessError
from costtest.schemas.options import ModelSpec
from costtest.schemas.report import DataProvenance, RunRecord, TestRunConfig, TestSummary
from costtest.services.datasets import (
    RESULT_COLUMNS,
    ResultsTable,
    append_run,
    load_beta,
    load_csv,
    load_simulate_file,
    read_report,
    write_residuals,
)

UTC = timezone.utc

CSV = "y,x1,x2\n1.0,0.5,2\n2.0,-1.5,3\n3.5,0.25,-4\n0,1e-3,5\n"


@pytest.fixture
def csv_path(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text(CSV)
    return path


class TestLoadCsv:
    def test_shapes(self, csv_path):
        table = load_csv(csv_path, "y")
        assert (table.dataset.n, table.dataset.q) == (4, 2)
        assert table.predictors == ["x1", "x2"]
        np.testing.assert_array_equal(table.dataset.responses, [1.0, 2.0, 3.5, 0.0])
        np.testing.assert_array_equal(table.dataset.predictors[:, 1], [2.0, 3.0, -4.0, 5.0])

    def test_response_by_index(self, csv_path):
        by_name = load_csv(csv_path, "x1")
        by_index = load_csv(csv_path, "1")
        assert by_index.response == "x1"
        np.testing.assert_array_equal(by_name.dataset.responses, by_index.dataset.responses)
        np.testing.assert_array_equal(by_index.dataset.predictors[:, 0], [1.0, 2.0, 3.5, 0.0])

    def test_blank_cell(self, tmp_path):
        path = tmp_path / "blank.csv"
        path.write_text("y,x1,x2\n1,2,3\n4,5,\n")
        with pytest.raises(DataError, match=r"data row 2 \(line 3\), column 'x2'"):
            load_csv(path, "y")

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "text.csv"
        path.write_text("y,x\n1,abc\n")
        with pytest.raises(DataError, match="'x'"):
            load_csv(path, "y")

    def test_unknown_response(self, csv_path):
        with pytest.raises(DataError, match="not found"):
            load_csv(csv_path, "z")

    def test_index_out_of_range(self, csv_path):
        with pytest.raises(DataError, match="out of range"):
            load_csv(csv_path, "3")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "absent.csv", "y")

    def test_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("y,x\n")
        with pytest.raises(DataError):
            load_csv(path, "y")


class TestLoadBeta:
    def test_comma_separated(self, tmp_path):
        path = tmp_path / "beta.txt"
        path.write_text("0.6,0.8\n")
        assert load_beta(path) == (0.6, 0.8)

    def test_one_per_line(self, tmp_path):
        path = tmp_path / "beta.txt"
        path.write_text("1\n2\n3\n")
        assert load_beta(path) == (1.0, 2.0, 3.0)

    def test_garbage(self, tmp_path):
        path = tmp_path / "beta.txt"
        path.write_text("one,two\n")
        with pytest.raises(DataError):
            load_beta(path)


class TestLoadSimulateFile:
    def test_scalar_and_list(self, tmp_path):
        path = tmp_path / "study.json"
        path.write_text(
            json.dumps(
                [
                    {"study": "H11", "n": 50, "q": 2, "reps": 5, "a": 0.25},
                    {"study": "H41", "n": 50, "q": 9, "p": 3, "reps": 5, "a": [0, 0.1]},
                ]
            )
        )
        configs = load_simulate_file(path)
        assert [(c.study, c.a) for c in configs] == [("H11", 0.25), ("H41", 0.0), ("H41", 0.1)]
        assert configs[1].p == 3

    def test_single_object(self, tmp_path):
        path = tmp_path / "study.json"
        path.write_text(json.dumps({"study": "H21", "n": 40, "q": 3, "a": [0.0]}))
        assert len(load_simulate_file(path)) == 1

    def test_unknown_study(self, tmp_path):
        path = tmp_path / "study.json"
        path.write_text(json.dumps({"study": "H77", "n": 40, "q": 3, "a": 0}))
        with pytest.raises(ValidationError, match="study"):
            load_simulate_file(path)

    def test_unknown_field(self, tmp_path):
        path = tmp_path / "study.json"
        path.write_text(json.dumps({"study": "H11", "n": 40, "q": 3, "a": 0, "colour": 1}))
        with pytest.raises(ValidationError, match="colour"):
            load_simulate_file(path)


class TestResultFiles:
    def test_results_table_header(self, tmp_path):
        path = tmp_path / "out" / "sim.csv"
        ResultsTable(path)
        assert path.read_text() == ",".join(RESULT_COLUMNS) + "\n"

    def test_results_table_rows(self, tmp_path):
        table = ResultsTable(tmp_path / "sim.csv")
        row = dict.fromkeys(RESULT_COLUMNS, 1)
        table.append(row)
        table.append(row)
        assert table.rows == 2
        assert len(table.path.read_text().splitlines()) == 3

    def test_results_table_rejects_nan(self, tmp_path):
        table = ResultsTable(tmp_path / "sim.csv")
        row = dict.fromkeys(RESULT_COLUMNS, 1)
        row["mc_se"] = float("nan")
        with pytest.raises(HarnessError):
            table.append(row)

    def test_write_residuals(self, tmp_path):
        path = write_residuals(tmp_path / "r.csv", np.array([1.0, 2.0]), np.array([0.5, -0.5]))
        assert path.read_text().splitlines() == ["fitted,residual", "1.0,0.5", "2.0,-0.5"]

    def test_append_run_accumulates(self, tmp_path):
        path = tmp_path / "report.json"
        assert read_report(path).runs == []
        record = _record()
        append_run(path, record)
        report = append_run(path, record)
        assert len(report.runs) == 2
        assert read_report(path).runs[1].result.statistic == 1.25

    def test_corrupt_report(self, tmp_path):
        path = tmp_path / "report.json"
        path.write_text("{not json")
        with pytest.raises(DataError):
            read_report(path)


def _record() -> RunRecord:
    return RunRecord(
        created_at=datetime(2024, 1, 1, tzinfo=UTC),
        model_label="linear(q=1)",
        config=TestRunConfig(data="d.csv", response="y", model=ModelSpec(family="linear", q=1)),
        data=DataProvenance(path="d.csv", n=8, q=1, response="y", predictors=["x"]),
        result=TestSummary(
            statistic=1.25,
            numerator=2.5,
            conditional_sd=2.0,
            p_value=0.21,
            p_value_two_sided=0.21,
            p_value_one_sided=0.105,
            n1=6,
            n2=2,
            split_mode="seeded_shuffle",
            split_seed=0,
            bandwidth=0.66,
            theta_hat_1=[1.0],
            theta_hat_2=[1.0],
            theta_hat_full=[1.0],
            fit_converged=[True, True, True],
        ),
        residuals_csv="residuals_001.csv",
        residual_count=8,
    )
