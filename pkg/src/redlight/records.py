"""Record types shared by the pipeline, store, CLI and service.

Field names here are the single naming authority: the record store lines
and the service JSON payloads use exactly these names.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

STATUS_PENDING = "pending"
STATUS_CONFIRMED = "confirmed"
STATUS_DISMISSED = "dismissed"

_VALID_TRANSITIONS = {
    (STATUS_PENDING, STATUS_CONFIRMED),
    (STATUS_PENDING, STATUS_DISMISSED),
}


@dataclass(frozen=True)
class FrameRecord:
    """One captured frame as listed in a frame list file."""

    camera_id: str
    pan_index: int
    captured_at: str  # ISO-8601, second precision, as written in the list
    path: str  # verbatim from the list file; resolved against the list dir
    sequence_no: int  # strictly increasing per camera/pan stream

    @property
    def frame_id(self) -> str:
        return f"{self.camera_id}:{self.pan_index}:{self.sequence_no}"

    def to_dict(self) -> dict:
        return {
            "camera_id": self.camera_id,
            "pan_index": self.pan_index,
            "captured_at": self.captured_at,
            "path": self.path,
            "sequence_no": self.sequence_no,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrameRecord":
        return cls(
            camera_id=d["camera_id"],
            pan_index=int(d["pan_index"]),
            captured_at=d["captured_at"],
            path=d["path"],
            sequence_no=int(d["sequence_no"]),
        )


@dataclass(frozen=True)
class Thresholds:
    d_th: float
    l_th: float
    pixel_th: int

    def to_dict(self) -> dict:
        return {"d_th": self.d_th, "l_th": self.l_th, "pixel_th": self.pixel_th}

    @classmethod
    def from_dict(cls, d: dict) -> "Thresholds":
        return cls(d_th=float(d["d_th"]), l_th=float(d["l_th"]), pixel_th=int(d["pixel_th"]))


@dataclass(frozen=True)
class ViolationRecord:
    """A frame whose mean longest occlusion run exceeded l_th."""

    violation_id: str
    frame: FrameRecord
    mean_longest_run: float
    per_line_longest_run: tuple[int, ...]
    mean_diff: float
    thresholds_used: Thresholds
    status: str = STATUS_PENDING
    slip_no: str | None = None

    def check_invariants(self) -> None:
        if not self.mean_longest_run > self.thresholds_used.l_th:
            raise ValueError(
                f"violation record requires mean_longest_run > l_th "
                f"({self.mean_longest_run} <= {self.thresholds_used.l_th})"
            )
        if self.status not in (STATUS_PENDING, STATUS_CONFIRMED, STATUS_DISMISSED):
            raise ValueError(f"unknown status {self.status!r}")
        if self.slip_no is not None and self.status != STATUS_CONFIRMED:
            raise ValueError("only confirmed violations carry slip numbers")

    def with_status(self, new_status: str, slip_no: str | None = None) -> "ViolationRecord":
        if (self.status, new_status) not in _VALID_TRANSITIONS:
            raise ValueError(f"illegal status transition {self.status} -> {new_status}")
        return replace(self, status=new_status, slip_no=slip_no)

    def to_dict(self) -> dict:
        return {
            "violation_id": self.violation_id,
            "frame": self.frame.to_dict(),
            "mean_longest_run": self.mean_longest_run,
            "per_line_longest_run": list(self.per_line_longest_run),
            "mean_diff": self.mean_diff,
            "thresholds_used": self.thresholds_used.to_dict(),
            "status": self.status,
            "slip_no": self.slip_no,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ViolationRecord":
        return cls(
            violation_id=d["violation_id"],
            frame=FrameRecord.from_dict(d["frame"]),
            mean_longest_run=float(d["mean_longest_run"]),
            per_line_longest_run=tuple(int(v) for v in d["per_line_longest_run"]),
            mean_diff=float(d["mean_diff"]),
            thresholds_used=Thresholds.from_dict(d["thresholds_used"]),
            status=d.get("status", STATUS_PENDING),
            slip_no=d.get("slip_no"),
        )


# --- pipeline events ---------------------------------------------------------


@dataclass(frozen=True)
class BackgroundAccepted:
    frame: FrameRecord
    mean_diff: float | None = None  # None for bootstrap seed frames
    seeded: bool = False


@dataclass(frozen=True)
class NoViolation:
    frame: FrameRecord
    mean_longest_run: float
    per_line_longest_run: tuple[int, ...]
    mean_diff: float


@dataclass(frozen=True)
class Violation:
    record: ViolationRecord


@dataclass(frozen=True)
class FrameError:
    frame: FrameRecord | None
    reason: str


FrameEvent = BackgroundAccepted | NoViolation | Violation | FrameError


@dataclass
class PipelineStats:
    """Counters over one pipeline run.

    Invariant: frames_seen == backgrounds_accepted + foregrounds + errors.
    Bootstrap seed frames count as accepted backgrounds (they enter the ring).
    """

    frames_seen: int = 0
    backgrounds_accepted: int = 0
    foregrounds: int = 0
    violations: int = 0
    errors: int = 0

    def check_invariants(self) -> None:
        if self.frames_seen != self.backgrounds_accepted + self.foregrounds + self.errors:
            raise ValueError(f"inconsistent stats: {self}")
        if self.violations > self.foregrounds:
            raise ValueError(f"violations exceed foregrounds: {self}")

    def to_dict(self) -> dict:
        return {
            "frames_seen": self.frames_seen,
            "backgrounds_accepted": self.backgrounds_accepted,
            "foregrounds": self.foregrounds,
            "violations": self.violations,
            "errors": self.errors,
        }
