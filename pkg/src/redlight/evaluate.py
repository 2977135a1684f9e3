"""Score a detection run against a ground-truth label file.

Label files carry one frame per line:

    <path>;<true|false>;<band_occlusion_int>

The label file defines the evaluation universe.  A frame counts as
detected when the record store holds a violation record whose frame path
matches the labeled path byte-for-byte.  Store paths missing from the
label file are an error surfaced to the caller, never silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .store import RecordStore


class LabelFormatError(ValueError):
    def __init__(self, line_no: int, line: str, reason: str):
        self.line_no = line_no
        self.line = line
        self.reason = reason
        super().__init__(f"label line {line_no}: {reason}: {line!r}")


@dataclass(frozen=True)
class LabeledPath:
    path: str
    truth_violation: bool
    truth_band_occlusion: int


def load_labels(label_path: str | Path) -> list[LabeledPath]:
    labels: list[LabeledPath] = []
    seen: set[str] = set()
    text = Path(label_path).read_text(encoding="utf-8")
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(";")
        if len(parts) != 3:
            raise LabelFormatError(line_no, raw, f"expected 3 ';' fields, got {len(parts)}")
        path, truth_s, occ_s = (p.strip() for p in parts)
        if not path:
            raise LabelFormatError(line_no, raw, "empty path")
        if path in seen:
            raise LabelFormatError(line_no, raw, f"duplicate path {path!r}")
        if truth_s not in ("true", "false"):
            raise LabelFormatError(line_no, raw, f"verdict must be true or false, got {truth_s!r}")
        try:
            occ = int(occ_s)
        except ValueError:
            raise LabelFormatError(line_no, raw, f"occlusion must be an integer, got {occ_s!r}") from None
        if occ < 0:
            raise LabelFormatError(line_no, raw, f"occlusion must be >= 0, got {occ}")
        seen.add(path)
        labels.append(LabeledPath(path=path, truth_violation=truth_s == "true", truth_band_occlusion=occ))
    return labels


@dataclass(frozen=True)
class EvalReport:
    total: int
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self) -> None:
        if self.tp + self.fn + self.fp + self.tn != self.total:
            raise ValueError("confusion cells must sum to total")

    @property
    def tp_rate(self) -> float:
        """Detected violations over labeled violations; 0.0 with none labeled."""
        pos = self.tp + self.fn
        return self.tp / pos if pos else 0.0

    @property
    def fp_rate(self) -> float:
        neg = self.fp + self.tn
        return self.fp / neg if neg else 0.0

    @property
    def overall_error(self) -> float:
        return (self.fp + self.fn) / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "tp": self.tp,
            "fn": self.fn,
            "fp": self.fp,
            "tn": self.tn,
            "tp_rate": self.tp_rate,
            "fp_rate": self.fp_rate,
            "overall_error": self.overall_error,
        }


class UnmatchedPathsError(ValueError):
    """The store holds violations for paths the label file does not know."""

    def __init__(self, paths: list[str]):
        self.paths = paths
        preview = ", ".join(paths[:5]) + ("..." if len(paths) > 5 else "")
        super().__init__(f"{len(paths)} violation path(s) not present in the label file: {preview}")


def evaluate(store: RecordStore, labels: list[LabeledPath]) -> EvalReport:
    detected = store.violated_paths()
    labeled_paths = {label.path for label in labels}
    unmatched = sorted(detected - labeled_paths)
    if unmatched:
        raise UnmatchedPathsError(unmatched)

    tp = fn = fp = tn = 0
    for label in labels:
        hit = label.path in detected
        if label.truth_violation:
            if hit:
                tp += 1
            else:
                fn += 1
        else:
            if hit:
                fp += 1
            else:
                tn += 1
    return EvalReport(total=len(labels), tp=tp, fn=fn, fp=fp, tn=tn)


def format_table(report: EvalReport) -> str:
    rows = [
        ("frames", str(report.total)),
        ("true positives", str(report.tp)),
        ("false negatives", str(report.fn)),
        ("false positives", str(report.fp)),
        ("true negatives", str(report.tn)),
        ("tp rate", f"{report.tp_rate:.4f}"),
        ("fp rate", f"{report.fp_rate:.4f}"),
        ("overall error", f"{report.overall_error:.4f}"),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)
