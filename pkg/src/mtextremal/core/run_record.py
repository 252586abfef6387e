"""
Run records and report emission.

A ``RunRecord`` is the outcome of one command: its check rows, notes and verdict,
keyed by the hash of the configuration that produced it. Records are archived as
``run_<command>_<hash>.json`` and re-emitted as CSV, JSON or plot bundles.
Report files contain no timestamps and are byte-identical for identical inputs.

JSON floats are written in their shortest round-trip form: at most 17
significant digits, and exactly the digits needed to parse back to the same
double. CSV floats use 12 significant digits.
"""

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .checks import CheckRow
from ..utils.logging_setup import get_logger

logger = get_logger(__name__)

CSV_HEADER = ["check", "param", "lhs", "rhs", "residual", "tol", "pass"]
REPORT_FORMATS = ("csv", "json", "plot")
HASH_PREFIX = 12


class ReportError(Exception):
    """Raised when records cannot be emitted or read back."""
    pass


def git_blob_digest(content: str) -> str:
    """SHA-1 of ``content`` with the git blob header, as ``git hash-object`` prints it."""
    data = content.encode("utf-8")
    header = f"blob {len(data)}\0".encode("utf-8")
    return hashlib.sha1(header + data).hexdigest()


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def to_plain(value: Any) -> Any:
    """Convert numpy scalars and arrays, and non-finite floats, to JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if value is None or isinstance(value, str):
        return value
    return str(value)


def _csv_float(value: float) -> str:
    return f"{value:.12g}"


@dataclass
class RunRecord:
    """
    Outcome of one command.

    Attributes:
        command: Command name.
        config_hash: SHA-256 of the canonical configuration JSON.
        input_digest: Git-style blob digest of the same JSON.
        rows: Check rows, in pipeline order.
        notes: Reported quantities that are not asserted.
        seed: Seed of randomized suites, if any.
        started: UTC start time.
        finished: UTC finish time.
    """
    command: str
    config_hash: str
    input_digest: str
    rows: List[CheckRow] = field(default_factory=list)
    notes: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    started: str = ""
    finished: str = ""

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def failing(self) -> List[CheckRow]:
        return [row for row in self.rows if not row.passed]

    @property
    def short_hash(self) -> str:
        return self.config_hash[:HASH_PREFIX]

    def to_json(self, timestamps: bool = True) -> Dict[str, Any]:
        data = {
            "command": self.command,
            "config_hash": self.config_hash,
            "input_digest": self.input_digest,
            "seed": self.seed,
            "verdict": self.verdict,
            "rows": [row.as_dict() for row in self.rows],
            "notes": self.notes,
        }
        if timestamps:
            data["started"] = self.started
            data["finished"] = self.finished
        return to_plain(data)

    def content_digest(self) -> str:
        """Digest of the record without timestamps."""
        return hashlib.sha256(_dumps(self.to_json(timestamps=False)).encode("utf-8")).hexdigest()

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "RunRecord":
        try:
            rows = [
                CheckRow(r["check"], r["param"], _float(r["lhs"]), _float(r["rhs"]),
                         _float(r["residual"]), _float(r["tol"]), bool(r["pass"]))
                for r in data["rows"]
            ]
            return cls(
                command=data["command"],
                config_hash=data["config_hash"],
                input_digest=data["input_digest"],
                rows=rows,
                notes=data.get("notes", {}),
                seed=data.get("seed"),
                started=data.get("started", ""),
                finished=data.get("finished", ""),
            )
        except (KeyError, TypeError) as e:
            raise ReportError(f"Malformed run record: {e}")


def _float(value: Any) -> float:
    """Inverse of to_plain for floats; "nan" and "inf" strings parse directly."""
    return float(value)


def _dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def record_path(out_dir: Path, record: RunRecord) -> Path:
    return Path(out_dir) / f"run_{record.command}_{record.short_hash}.json"


def write_record(record: RunRecord, out_dir: Path) -> Path:
    """Archive a record (with timestamps) in the output directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = record_path(out_dir, record)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(_dumps(record.to_json()))
    logger.debug(f"Archived run record {path}")
    return path


def load_records(out_dir: Path) -> List[RunRecord]:
    """Read every archived record of an output directory."""
    records = []
    for path in sorted(Path(out_dir).glob("run_*.json")):
        with open(path, "r", encoding="utf-8") as f:
            try:
                records.append(RunRecord.from_json(json.load(f)))
            except json.JSONDecodeError as e:
                raise ReportError(f"{path.name} is not valid JSON: {e}")
    return records


def _sorted(records: Sequence[RunRecord]) -> List[RunRecord]:
    return sorted(records, key=lambda r: (r.config_hash, r.command))


def write_rows_csv(path: Path, rows: Sequence[CheckRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([row.check, row.param, _csv_float(row.lhs), _csv_float(row.rhs),
                             _csv_float(row.residual), _csv_float(row.tol),
                             "true" if row.passed else "false"])


def _series(notes: Dict[str, Any], prefix: str = "") -> Dict[str, List[float]]:
    """Numeric list-valued notes, flattened to dotted names."""
    found = {}
    for key in sorted(notes):
        value = notes[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            found.update(_series(value, f"{name}."))
        elif (isinstance(value, list) and len(value) > 1
              and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
            found[name] = [float(v) for v in value]
    return found


def _safe_name(name: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in name)


PLOT_SCRIPT_HEAD = '''"""Plot the series emitted next to this script."""

import csv
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
SERIES = [
'''

PLOT_SCRIPT_TAIL = ''']


def read(name):
    with open(HERE / name, newline="") as f:
        rows = list(csv.reader(f))[1:]
    return [float(r[0]) for r in rows], [float(r[1]) for r in rows]


for name, title in SERIES:
    x, y = read(name)
    fig, ax = plt.subplots()
    ax.plot(x, y, marker=".")
    ax.set_title(title)
    ax.set_xlabel("index")
    fig.savefig(HERE / (Path(name).stem + ".png"))
    plt.close(fig)
'''


def _emit_plot(records: List[RunRecord], out_dir: Path, stem: str) -> List[Path]:
    written = []
    entries = []
    for record in records:
        series = _series(to_plain(record.notes))
        series["residual"] = [row.residual for row in record.rows]
        for name, values in series.items():
            file_name = f"{stem}_{record.command}_{record.short_hash}_{_safe_name(name)}.csv"
            path = out_dir / file_name
            with open(path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(["index", "value"])
                for i, value in enumerate(values):
                    writer.writerow([i, _csv_float(value)])
            written.append(path)
            entries.append(f"    ({file_name!r}, {f'{record.command} {name}'!r}),\n")
    script = out_dir / f"{stem}_plot.py"
    with open(script, "w", encoding="utf-8", newline="\n") as f:
        f.write(PLOT_SCRIPT_HEAD + "".join(entries) + PLOT_SCRIPT_TAIL)
    written.append(script)
    return written


def emit_report(records: Sequence[RunRecord], fmt: str, out_dir: Path, stem: str = "report") -> List[Path]:
    """
    Write records in a report format.

    Args:
        records: Non-empty list of records.
        fmt: 'csv' (all rows, fixed header), 'json' (array sorted by config hash)
            or 'plot' (one CSV per numeric series plus a plotting script).
        out_dir: Output directory, created if missing.
        stem: File name stem.

    Returns:
        List[Path]: Files written.

    Raises:
        ReportError: If records is empty or fmt is unknown.
        OSError: If the directory is not writable.
    """
    if not records:
        raise ReportError("emit_report needs at least one record")
    if fmt not in REPORT_FORMATS:
        raise ReportError(f"Unknown report format '{fmt}'")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ordered = _sorted(records)

    if fmt == "csv":
        path = out_dir / f"{stem}.csv"
        write_rows_csv(path, [row for record in ordered for row in record.rows])
        written = [path]
    elif fmt == "json":
        path = out_dir / f"{stem}.json"
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(_dumps([record.to_json(timestamps=False) for record in ordered]))
        written = [path]
    else:
        written = _emit_plot(ordered, out_dir, stem)

    logger.info(f"Wrote {len(written)} {fmt} report file(s) to {out_dir}")
    return written
