"""
Unit tests for the command-line front end.
"""

import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from mtextremal.cli import EXIT_FAIL, EXIT_IO, EXIT_PASS, EXIT_USAGE, main, parse_tolerances
from mtextremal.core.checks import CheckReport
from mtextremal.core.experiments import UsageError
from mtextremal.core.run_record import CSV_HEADER, RunRecord

REPO_ROOT = Path(__file__).resolve().parents[2]


@pytest.fixture(autouse=True)
def isolated_home(tmp_path, monkeypatch):
    """Keep runner settings and logs inside the test directory."""
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "config"))
    monkeypatch.setenv("XDG_DATA_HOME", str(tmp_path / "data"))


class TestParseTolerances:
    """Test --tol parsing."""

    def test_valid(self):
        """Test several overrides."""
        assert parse_tolerances(["grid=0.05", "theorem = 1e-8"]) == {"grid": 0.05, "theorem": 1e-8}

    @pytest.mark.parametrize("item", ["grid", "nonsense=1", "grid=abc", "grid=0", "grid=-1"])
    def test_invalid(self, item):
        """Test malformed, unknown and non-positive overrides."""
        with pytest.raises(UsageError):
            parse_tolerances([item])


class TestMain:
    """Test exit codes and outputs of main."""

    def test_unknown_command(self, tmp_path, capsys):
        """Test the usage exit code for unknown commands."""
        assert main(["solve", "--out", str(tmp_path)]) == EXIT_USAGE
        assert "usage error" in capsys.readouterr().err

    def test_bad_tolerance(self, tmp_path):
        """Test the usage exit code for invalid tolerances."""
        assert main(["green-verify", "--out", str(tmp_path), "--tol", "grid=-1"]) == EXIT_USAGE

    def test_bad_config(self, tmp_path):
        """Test the usage exit code for invalid config files."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"n": 2, "unknown": 1}), encoding="utf-8")
        assert main(["moser", "--config", str(path), "--out", str(tmp_path)]) == EXIT_USAGE

    def test_unrepresentable_moser_index(self, tmp_path):
        """Test the usage exit code for a Moser index beyond the representable plateaus."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"command": "moser", "resolution": {"i_max": 12}}), encoding="utf-8")
        assert main(["moser", "--config", str(path), "--out", str(tmp_path)]) == EXIT_USAGE

    def test_green_verify(self, tmp_path, capsys):
        """Test a passing run with its CSV report and archived record."""
        out = tmp_path / "out"
        assert main(["green-verify", "--out", str(out)]) == EXIT_PASS
        assert "green-verify: pass" in capsys.readouterr().out
        with open(out / "report.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == CSV_HEADER
        assert all(row[-1] == "true" for row in rows[1:])
        assert len(list(out.glob("run_green-verify_*.json"))) == 1

    def test_config_file(self, tmp_path):
        """Test an isoperimetric run configured from a file."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"domain": {"kind": "shifted_ball", "offset": 0.3}, "betas": [0.0, 1.0]}),
                        encoding="utf-8")
        out = tmp_path / "out"
        assert main(["iso-check", "--config", str(path), "--out", str(out), "--format", "json"]) == EXIT_PASS
        data = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert data[0]["command"] == "iso-check"
        assert data[0]["verdict"] == "pass"

    def test_report_gathers_records(self, tmp_path):
        """Test re-emitting archived records."""
        out = tmp_path / "out"
        assert main(["green-verify", "--out", str(out)]) == EXIT_PASS
        (out / "report.csv").unlink()
        assert main(["report", "--out", str(out), "--format", "csv"]) == EXIT_PASS
        assert (out / "report.csv").exists()

    def test_report_without_records(self, tmp_path):
        """Test that an empty directory is a usage error."""
        assert main(["report", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_failing_check(self, tmp_path, mocker, capsys):
        """Test the failure exit code and the failure listing."""
        report = CheckReport("moser")
        report.add_close("moser_energy", "i=1", 1.5, 1.0, 1e-10)
        record = RunRecord("moser", "a" * 64, "b" * 40, report.rows)
        mocker.patch("mtextremal.cli.run", return_value=record)
        assert main(["moser", "--out", str(tmp_path)]) == EXIT_FAIL
        assert "FAIL moser moser_energy [i=1]" in capsys.readouterr().out

    def test_unwritable_output(self, tmp_path):
        """Test the IO exit code when the output path is a file."""
        blocker = tmp_path / "file"
        blocker.write_text("", encoding="utf-8")
        assert main(["green-verify", "--out", str(blocker)]) == EXIT_IO


@pytest.mark.integration
class TestModuleEntryPoint:
    """Test running the package as a module."""

    def test_python_m(self, tmp_path):
        """Test python -m mtextremal end to end."""
        env = dict(os.environ)
        env["PYTHONPATH"] = str(REPO_ROOT / "src")
        out = tmp_path / "out"
        result = subprocess.run([sys.executable, "-m", "mtextremal", "green-verify", "--out", str(out),
                                 "--log-level", "WARNING"],
                                cwd=REPO_ROOT, env=env, capture_output=True, text=True)
        assert result.returncode == EXIT_PASS, result.stderr
        assert (out / "report.csv").read_text(encoding="utf-8").startswith(",".join(CSV_HEADER))

    def test_usage_exit_code(self, tmp_path):
        """Test the usage exit code of the module."""
        env = dict(os.environ)
        env["PYTHONPATH"] = str(REPO_ROOT / "src")
        result = subprocess.run([sys.executable, "-m", "mtextremal", "nonsense", "--out", str(tmp_path)],
                                cwd=REPO_ROOT, env=env, capture_output=True, text=True)
        assert result.returncode == EXIT_USAGE
