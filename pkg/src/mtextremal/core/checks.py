"""
Check rows and reports shared by every verification routine.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class CheckRow:
    """One asserted or reported comparison."""
    check: str
    param: str
    lhs: float
    rhs: float
    residual: float
    tol: float
    passed: bool

    def as_dict(self) -> Dict[str, Any]:
        return {
            "check": self.check,
            "param": self.param,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "tol": self.tol,
            "pass": self.passed,
        }


@dataclass
class CheckReport:
    """A named collection of check rows plus free-form notes."""
    name: str
    rows: List[CheckRow] = field(default_factory=list)
    notes: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def failing(self) -> List[CheckRow]:
        return [row for row in self.rows if not row.passed]

    def extend(self, other: "CheckReport") -> None:
        self.rows.extend(other.rows)
        for key, value in other.notes.items():
            self.notes[f"{other.name}.{key}"] = value

    def add_close(self, check: str, param: Any, lhs: float, rhs: float, tol: float,
                  relative: bool = False) -> CheckRow:
        """Append a row asserting |lhs - rhs| <= tol (scaled by |rhs| when relative)."""
        residual = abs(lhs - rhs)
        if relative:
            residual = residual / max(abs(rhs), 1e-300)
        row = CheckRow(check, _param(param), float(lhs), float(rhs), float(residual), float(tol),
                       bool(math.isfinite(residual) and residual <= tol))
        self.rows.append(row)
        return row

    def add_leq(self, check: str, param: Any, lhs: float, rhs: float, tol: float,
                relative: bool = True) -> CheckRow:
        """
        Append a row asserting lhs <= rhs up to tolerance.

        The residual is the signed excess lhs - rhs, divided by |rhs| when relative;
        the row passes when it does not exceed tol.
        """
        residual = lhs - rhs
        if relative:
            residual = residual / max(abs(rhs), 1e-300)
        row = CheckRow(check, _param(param), float(lhs), float(rhs), float(residual), float(tol),
                       bool(math.isfinite(residual) and residual <= tol))
        self.rows.append(row)
        return row

    def add_flag(self, check: str, param: Any, value: float, passed: bool,
                 reference: Optional[float] = None, tol: float = 0.0) -> CheckRow:
        """Append a row whose verdict was decided by the caller."""
        rhs = float(reference) if reference is not None else float("nan")
        residual = float(value) - rhs if reference is not None else float("nan")
        row = CheckRow(check, _param(param), float(value), rhs, residual, float(tol), bool(passed))
        self.rows.append(row)
        return row


def _param(param: Any) -> str:
    if isinstance(param, float):
        return f"{param:.12g}"
    return str(param)
