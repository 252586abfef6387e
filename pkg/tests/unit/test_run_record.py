"""
Unit tests for run records and report emission.
"""

import csv
import json
import re

import numpy as np
import pytest

from mtextremal.core.checks import CheckReport
from mtextremal.core.run_record import (
    CSV_HEADER,
    ReportError,
    RunRecord,
    emit_report,
    git_blob_digest,
    load_records,
    to_plain,
    write_record,
)


def _record(command: str, config_hash: str, failing: bool = False) -> RunRecord:
    report = CheckReport(command)
    report.add_close("energy", 1.0, 1.0 + 1e-12, 1.0, 1e-10)
    report.add_leq("bound", "beta=0.5", 2.0 if failing else 0.5, 1.0, 1e-8)
    report.notes.update({"trace": [3.0, 2.0, 1.5], "incenter": 0.91, "nested": {"levels": [0.0, 1.0]}})
    return RunRecord(command, config_hash, git_blob_digest(config_hash), report.rows, report.notes,
                     seed=7, started="2026-01-01T00:00:00+00:00", finished="2026-01-01T00:00:01+00:00")


class TestHelpers:
    """Test digests and JSON conversion."""

    def test_git_blob_digest(self):
        """Test the digest git prints for an empty blob."""
        assert git_blob_digest("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"

    def test_to_plain(self):
        """Test non-finite floats and numpy values."""
        plain = to_plain({"a": np.float64(float("nan")), "b": [np.int64(3), float("inf")], 1: np.array([0.5])})
        assert plain == {"a": "nan", "b": [3, "inf"], "1": [0.5]}


class TestRunRecord:
    """Test RunRecord."""

    def test_verdict(self):
        """Test pass and fail verdicts."""
        assert _record("moser", "a" * 64).verdict == "pass"
        failing = _record("moser", "a" * 64, failing=True)
        assert failing.verdict == "fail"
        assert [row.check for row in failing.failing] == ["bound"]

    def test_json_round_trip(self):
        """Test reading a record back from its JSON."""
        record = _record("iso-check", "b" * 64)
        restored = RunRecord.from_json(json.loads(json.dumps(record.to_json())))
        assert restored.rows == record.rows
        assert restored.seed == 7
        assert restored.content_digest() == record.content_digest()

    def test_timestamps_excluded(self):
        """Test that the content digest ignores timestamps."""
        first = _record("moser", "c" * 64)
        second = _record("moser", "c" * 64)
        second.finished = "2027-01-01T00:00:00+00:00"
        assert "started" not in first.to_json(timestamps=False)
        assert first.content_digest() == second.content_digest()

    def test_malformed(self):
        """Test that malformed records are rejected."""
        with pytest.raises(ReportError):
            RunRecord.from_json({"command": "moser"})

    def test_archive(self, tmp_path):
        """Test writing and loading archived records."""
        path = write_record(_record("moser", "d" * 64), tmp_path)
        assert path.name == f"run_moser_{'d' * 12}.json"
        records = load_records(tmp_path)
        assert len(records) == 1 and records[0].command == "moser"


class TestEmitReport:
    """Test report emission."""

    def test_csv(self, tmp_path):
        """Test the fixed header, LF endings and pass column."""
        records = [_record("moser", "f" * 64), _record("transplant", "0" * 64, failing=True)]
        path, = emit_report(records, "csv", tmp_path)
        raw = path.read_bytes()
        assert b"\r\n" not in raw
        rows = list(csv.reader(raw.decode("utf-8").splitlines()))
        assert rows[0] == CSV_HEADER
        # sorted by configuration hash
        assert rows[1][0] == "energy" and rows[2] == ["bound", "beta=0.5", "2", "1", "1", "1e-08", "false"]
        assert rows[-1][-1] == "true"

    def test_json_sorted_by_hash(self, tmp_path):
        """Test the JSON array order and the absent timestamps."""
        records = [_record("moser", "f" * 64), _record("green-verify", "1" * 64)]
        path, = emit_report(records, "json", tmp_path)
        data = json.loads(path.read_text(encoding="utf-8"))
        assert [entry["config_hash"] for entry in data] == ["1" * 64, "f" * 64]
        assert all("started" not in entry for entry in data)

    def test_json_float_digits(self, tmp_path):
        """Test that JSON floats keep at most 17 significant digits and parse back exactly."""
        values = (np.random.default_rng(0).random(50) * np.logspace(-20, 20, 50)).tolist() + [1.0 / 3.0, 0.1]
        record = _record("moser", "a" * 64)
        record.notes["values"] = values
        path, = emit_report([record], "json", tmp_path)
        text = path.read_text(encoding="utf-8")
        assert json.loads(text)[0]["notes"]["values"] == values
        for token in re.findall(r"-?\d+\.\d+(?:e[-+]?\d+)?", text):
            mantissa = token.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(mantissa) <= 17, token

    def test_byte_identical(self, tmp_path):
        """Test that re-emission gives identical bytes."""
        records = [_record("moser", "f" * 64), _record("green-verify", "1" * 64)]
        for fmt in ("csv", "json"):
            first = [p.read_bytes() for p in emit_report(records, fmt, tmp_path / "a")]
            second = [p.read_bytes() for p in emit_report(list(reversed(records)), fmt, tmp_path / "b")]
            assert first == second

    def test_plot_bundle(self, tmp_path):
        """Test series files and the plotting script."""
        written = emit_report([_record("moser", "e" * 64)], "plot", tmp_path)
        names = {p.name for p in written}
        stem = f"report_moser_{'e' * 12}"
        assert {f"{stem}_trace.csv", f"{stem}_nested_levels.csv", f"{stem}_residual.csv",
                "report_plot.py"} == names
        lines = (tmp_path / f"{stem}_trace.csv").read_text(encoding="utf-8").splitlines()
        assert lines == ["index,value", "0,3", "1,2", "2,1.5"]
        script = (tmp_path / "report_plot.py").read_text(encoding="utf-8")
        assert "matplotlib" in script and f"{stem}_trace.csv" in script

    def test_empty_and_unknown(self, tmp_path):
        """Test that empty record lists and unknown formats are rejected."""
        with pytest.raises(ReportError):
            emit_report([], "csv", tmp_path)
        with pytest.raises(ReportError):
            emit_report([_record("moser", "f" * 64)], "xml", tmp_path)
