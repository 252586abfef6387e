"""
Unit tests for check rows and reports.
"""

import math

from mtextremal.core.checks import CheckReport


class TestCheckReport:
    """Test CheckReport row helpers."""

    def test_add_close(self):
        """Test absolute and relative closeness rows."""
        report = CheckReport("demo")
        row = report.add_close("close", 0.5, 1.0 + 1e-12, 1.0, 1e-10)
        assert row.passed
        assert row.param == "0.5"
        assert not report.add_close("rel", "p", 110.0, 100.0, 0.05, relative=True).passed
        assert report.rows[1].residual == 0.1
        assert not report.passed
        assert [r.check for r in report.failing] == ["rel"]

    def test_add_leq_signed_residual(self):
        """Test that add_leq stores the signed excess."""
        report = CheckReport("demo")
        row = report.add_leq("leq", "p", 1.0, 2.0, 0.0)
        assert row.passed
        assert row.residual == -0.5
        assert not report.add_leq("leq", "q", 3.0, 2.0, 0.0, relative=False).passed

    def test_non_finite_fails(self):
        """Test that NaN residuals never pass."""
        report = CheckReport("demo")
        assert not report.add_close("nan", "p", float("nan"), 1.0, 1.0).passed

    def test_add_flag(self):
        """Test caller-decided rows."""
        report = CheckReport("demo")
        row = report.add_flag("flag", "p", 2.0, True)
        assert row.passed
        assert math.isnan(row.rhs)
        row = report.add_flag("flag", "p", 2.0, False, 1.5)
        assert row.residual == 0.5

    def test_extend_prefixes_notes(self):
        """Test that merged notes are prefixed with the report name."""
        outer = CheckReport("outer")
        inner = CheckReport("inner", notes={"gap": 1.0})
        inner.add_close("x", "p", 1.0, 1.0, 0.0)
        outer.extend(inner)
        assert len(outer.rows) == 1
        assert outer.notes == {"inner.gap": 1.0}

    def test_as_dict_schema(self):
        """Test the row dictionary uses the report column names."""
        report = CheckReport("demo")
        row = report.add_close("c", "p", 1.0, 1.0, 0.1)
        assert list(row.as_dict()) == ["check", "param", "lhs", "rhs", "residual", "tol", "pass"]
