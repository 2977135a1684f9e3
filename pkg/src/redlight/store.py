"""Append-only record store.

One self-contained JSON object per line (UTF-8, LF, sorted keys), with an
in-memory index rebuilt on open.  Appends are atomic at record
granularity: each record is written with a single buffered write followed
by a flush.  Line kinds:

    {"kind": "frame", ...}         every processed frame (audit trail)
    {"kind": "violation", ...}     a detected stop-line violation (pending)
    {"kind": "review", ...}        operator verdict for one violation
    {"kind": "config_audit", ...}  configuration change trail

Review lines never rewrite violation lines; the index folds them into the
violation's current status, which keeps the file crash-safe and diffable.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .records import (
    STATUS_CONFIRMED,
    STATUS_DISMISSED,
    STATUS_PENDING,
    FrameRecord,
    ViolationRecord,
)


class StoreError(RuntimeError):
    pass


class UnknownRecordError(KeyError):
    pass


class DuplicateRecordError(ValueError):
    pass


@dataclass(frozen=True)
class FrameEventLine:
    """Per-frame audit entry."""

    frame: FrameRecord
    event: str  # seeded | background | no_violation | violation | error
    mean_diff: float | None = None
    mean_longest_run: float | None = None
    error: str | None = None

    @property
    def frame_id(self) -> str:
        return self.frame.frame_id

    def to_dict(self) -> dict:
        d = self.frame.to_dict()
        d.update(
            {
                "kind": "frame",
                "frame_id": self.frame.frame_id,
                "event": self.event,
                "mean_diff": self.mean_diff,
                "mean_longest_run": self.mean_longest_run,
                "error": self.error,
            }
        )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FrameEventLine":
        return cls(
            frame=FrameRecord.from_dict(d),
            event=d["event"],
            mean_diff=d.get("mean_diff"),
            mean_longest_run=d.get("mean_longest_run"),
            error=d.get("error"),
        )


@dataclass(frozen=True)
class ReviewLine:
    violation_id: str
    verdict: str  # confirm | dismiss
    operator: str
    reviewed_at: str
    slip_no: str | None


def _parse_ts(value: str) -> datetime:
    return datetime.fromisoformat(value)


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


class RecordStore:
    """Single-writer, many-reader persistent event log.

    All mutation goes through one internal lock; readers work on the
    in-memory index and always observe whole records.
    """

    def __init__(self, path: str | Path, create: bool = True):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._violations: dict[str, ViolationRecord] = {}
        self._reviews: dict[str, ReviewLine] = {}
        self._frames: dict[str, FrameEventLine] = {}
        self._frame_order: list[str] = []
        self._max_slip_seq = 0
        if self.path.exists():
            self._replay()
        elif not create:
            raise StoreError(f"record store {self.path} does not exist")
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()
        self._fh = open(self.path, "a", encoding="utf-8", newline="\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RecordStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- replay ---------------------------------------------------------------

    def _replay(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise StoreError(f"{self.path}:{line_no}: corrupt record ({exc})") from exc
                self._index(obj, line_no)

    def _index(self, obj: dict, line_no: int) -> None:
        kind = obj.get("kind")
        if kind == "violation":
            record = ViolationRecord.from_dict(obj)
            self._violations[record.violation_id] = record
        elif kind == "review":
            review = ReviewLine(
                violation_id=obj["violation_id"],
                verdict=obj["verdict"],
                operator=obj["operator"],
                reviewed_at=obj["reviewed_at"],
                slip_no=obj.get("slip_no"),
            )
            record = self._violations.get(review.violation_id)
            if record is None:
                raise StoreError(
                    f"{self.path}:{line_no}: review for unknown violation {review.violation_id}"
                )
            status = STATUS_CONFIRMED if review.verdict == "confirm" else STATUS_DISMISSED
            self._violations[review.violation_id] = record.with_status(status, review.slip_no)
            self._reviews[review.violation_id] = review
            if review.slip_no is not None:
                self._max_slip_seq = max(self._max_slip_seq, _slip_seq(review.slip_no))
        elif kind == "frame":
            entry = FrameEventLine.from_dict(obj)
            if entry.frame_id not in self._frames:
                self._frame_order.append(entry.frame_id)
            self._frames[entry.frame_id] = entry
        elif kind == "config_audit":
            pass  # audit lines are kept on disk only
        else:
            raise StoreError(f"{self.path}:{line_no}: unknown record kind {kind!r}")

    # -- appends ----------------------------------------------------------

    def _append_line(self, obj: dict) -> None:
        self._fh.write(_dumps(obj))
        self._fh.flush()

    def append_violation(self, record: ViolationRecord) -> str:
        record.check_invariants()
        if record.status != STATUS_PENDING:
            raise ValueError("only pending violations can be appended")
        with self._lock:
            if record.violation_id in self._violations:
                raise DuplicateRecordError(f"violation {record.violation_id} already stored")
            d = record.to_dict()
            d["kind"] = "violation"
            self._append_line(d)
            self._violations[record.violation_id] = record
        return record.violation_id

    def append_frame_event(self, entry: FrameEventLine) -> None:
        with self._lock:
            self._append_line(entry.to_dict())
            if entry.frame_id not in self._frames:
                self._frame_order.append(entry.frame_id)
            self._frames[entry.frame_id] = entry

    def append_review(self, violation_id: str, verdict: str, operator: str, reviewed_at: str) -> ViolationRecord:
        """Record an operator verdict; a confirm mints the next slip number.

        Raises UnknownRecordError / ValueError (already reviewed) without
        writing anything.
        """
        if verdict not in ("confirm", "dismiss"):
            raise ValueError(f"verdict must be 'confirm' or 'dismiss', got {verdict!r}")
        with self._lock:
            record = self._violations.get(violation_id)
            if record is None:
                raise UnknownRecordError(violation_id)
            if record.status != STATUS_PENDING:
                raise ValueError(f"violation {violation_id} already reviewed ({record.status})")
            slip_no = None
            if verdict == "confirm":
                slip_no = f"S-{self._max_slip_seq + 1:06d}"
            updated = record.with_status(
                STATUS_CONFIRMED if verdict == "confirm" else STATUS_DISMISSED, slip_no
            )
            self._append_line(
                {
                    "kind": "review",
                    "violation_id": violation_id,
                    "verdict": verdict,
                    "operator": operator,
                    "reviewed_at": reviewed_at,
                    "slip_no": slip_no,
                }
            )
            self._violations[violation_id] = updated
            self._reviews[violation_id] = ReviewLine(violation_id, verdict, operator, reviewed_at, slip_no)
            if slip_no is not None:
                self._max_slip_seq += 1
            return updated

    def append_config_audit(self, entry: dict) -> None:
        with self._lock:
            d = dict(entry)
            d["kind"] = "config_audit"
            self._append_line(d)

    # -- queries ----------------------------------------------------------

    def get_violation(self, violation_id: str) -> ViolationRecord:
        record = self._violations.get(violation_id)
        if record is None:
            raise UnknownRecordError(violation_id)
        return record

    def get_review(self, violation_id: str) -> ReviewLine | None:
        return self._reviews.get(violation_id)

    def violations(
        self,
        status: str | None = None,
        camera_id: str | None = None,
        time_from: str | None = None,
        time_to: str | None = None,
    ) -> list[ViolationRecord]:
        """Filtered violations ordered by (captured_at, violation_id)."""
        lo = _parse_ts(time_from) if time_from else None
        hi = _parse_ts(time_to) if time_to else None
        out = []
        for record in self._violations.values():
            if status is not None and record.status != status:
                continue
            if camera_id is not None and record.frame.camera_id != camera_id:
                continue
            ts = _parse_ts(record.frame.captured_at)
            if lo is not None and ts < lo:
                continue
            if hi is not None and ts > hi:
                continue
            out.append(record)
        out.sort(key=lambda r: (r.frame.captured_at, r.violation_id))
        return out

    def violation_count(self) -> int:
        return len(self._violations)

    def violated_paths(self) -> set[str]:
        return {r.frame.path for r in self._violations.values()}

    def get_frame(self, frame_id: str) -> FrameEventLine:
        entry = self._frames.get(frame_id)
        if entry is None:
            raise UnknownRecordError(frame_id)
        return entry

    def frames(
        self,
        camera_id: str | None = None,
        pan_index: int | None = None,
        event: str | None = None,
        time_from: str | None = None,
        time_to: str | None = None,
        limit: int | None = None,
    ) -> list[FrameEventLine]:
        """Frame audit entries in ingestion order; `limit` keeps the newest."""
        lo = _parse_ts(time_from) if time_from else None
        hi = _parse_ts(time_to) if time_to else None
        out = []
        for frame_id in self._frame_order:
            entry = self._frames[frame_id]
            if camera_id is not None and entry.frame.camera_id != camera_id:
                continue
            if pan_index is not None and entry.frame.pan_index != pan_index:
                continue
            if event is not None and entry.event != event:
                continue
            ts = _parse_ts(entry.frame.captured_at)
            if lo is not None and ts < lo:
                continue
            if hi is not None and ts > hi:
                continue
            out.append(entry)
        if limit is not None and len(out) > limit:
            out = out[-limit:]
        return out


def _slip_seq(slip_no: str) -> int:
    try:
        return int(slip_no.rsplit("-", 1)[-1])
    except ValueError:
        return 0
