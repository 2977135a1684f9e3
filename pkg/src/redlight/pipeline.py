"""Batch pipeline: frame lists in, classified events and violations out.

Flow per frame: load image -> grayscale -> background gate (whole-image
mean difference) -> on foreground, score stop-line band occlusion ->
persist a violation record when the mean longest run exceeds l_th.

Frame lists are plain text, one frame per line::

    <camera_id>;<pan_index>;<ISO-8601 timestamp>;<path>

Relative paths are resolved against the directory containing the list
file; the verbatim path string is what gets stored, which keeps record
stores byte-identical across working directories.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from . import background as bgmod
from .config import CameraConfig
from .image_io import ImageFormatError, load_image
from .images import ColorImage, DimensionMismatchError, GrayImage, to_grayscale
from .records import (
    BackgroundAccepted,
    FrameError,
    FrameEvent,
    FrameRecord,
    NoViolation,
    PipelineStats,
    Thresholds,
    Violation,
    ViolationRecord,
)
from .stopline import BandBoundsError, ScanBand, occlusion_score, rasterize_band
from .store import FrameEventLine, RecordStore

SEED_COUNT = bgmod.RING_SIZE


@dataclass(frozen=True)
class IngestWarning:
    line_no: int
    line: str
    reason: str


@dataclass(frozen=True)
class IngestResult:
    records: list[FrameRecord]
    warnings: list[IngestWarning]
    base_dir: Path


def ingest_list(list_path: str | Path) -> IngestResult:
    """Parse a frame list file.

    Well-formed lines become FrameRecords in file order with sequence
    numbers assigned per camera/pan stream; malformed lines are collected
    as warnings with their line numbers and do not stop ingestion.
    """
    list_path = Path(list_path)
    try:
        text = list_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read frame list {list_path}: {exc}") from exc
    records: list[FrameRecord] = []
    warnings: list[IngestWarning] = []
    counters: dict[tuple[str, int], int] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(";")
        if len(parts) != 4:
            warnings.append(IngestWarning(line_no, raw, f"expected 4 ';'-separated fields, got {len(parts)}"))
            continue
        camera_id, pan_raw, ts_raw, path = (p.strip() for p in parts)
        if not camera_id or not path:
            warnings.append(IngestWarning(line_no, raw, "empty camera_id or path"))
            continue
        try:
            pan_index = int(pan_raw)
            if pan_index < 0:
                raise ValueError("negative")
        except ValueError:
            warnings.append(IngestWarning(line_no, raw, f"bad pan_index {pan_raw!r}"))
            continue
        try:
            datetime.fromisoformat(ts_raw)
        except ValueError:
            warnings.append(IngestWarning(line_no, raw, f"bad timestamp {ts_raw!r}"))
            continue
        key = (camera_id, pan_index)
        counters[key] = counters.get(key, 0) + 1
        records.append(
            FrameRecord(
                camera_id=camera_id,
                pan_index=pan_index,
                captured_at=ts_raw,
                path=path,
                sequence_no=counters[key],
            )
        )
    return IngestResult(records=records, warnings=warnings, base_dir=list_path.parent)


def resolve_frame_path(base_dir: str | Path, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else Path(base_dir) / p


class _StreamState:
    """Per camera/pan processing state (single logical writer)."""

    def __init__(self, camera: CameraConfig, pan_index: int):
        preset = camera.preset(pan_index)
        if preset is None:
            raise KeyError(f"camera {camera.camera_id} has no pan preset {pan_index}")
        self.camera = camera
        self.pan_index = pan_index
        self.band: ScanBand = rasterize_band(preset.geometry, camera.frame_width, camera.frame_height)
        self.model: bgmod.BackgroundModel | None = None
        self.seed_buffer: list[GrayImage] = []
        self.last_seq = 0


class Pipeline:
    """Drives per-stream background models and occlusion scoring.

    Distinct camera/pan streams are independent; within a stream, frames
    must arrive in sequence order.  When `seed_from_stream` is set (the
    default) the first five frames of an unseeded stream are taken
    verbatim as the initial background ring.
    """

    def __init__(
        self,
        cameras: dict[str, CameraConfig],
        store: RecordStore | None = None,
        base_dir: str | Path = ".",
        seed_from_stream: bool = True,
        checkpoint_dir: str | Path | None = None,
        checkpoint_every: int = 1,
    ):
        self.cameras = cameras
        self.store = store
        self.base_dir = Path(base_dir)
        self.seed_from_stream = seed_from_stream
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None
        self.checkpoint_every = max(1, checkpoint_every)
        self._streams: dict[tuple[str, int], _StreamState] = {}
        self._accept_counts: dict[tuple[str, int], int] = {}
        self.stats = PipelineStats()

    # -- stream management --------------------------------------------------

    def _stream(self, frame: FrameRecord) -> _StreamState:
        key = (frame.camera_id, frame.pan_index)
        state = self._streams.get(key)
        if state is None:
            camera = self.cameras.get(frame.camera_id)
            if camera is None:
                raise KeyError(f"unknown camera_id {frame.camera_id!r}")
            state = _StreamState(camera, frame.pan_index)
            if self.checkpoint_dir is not None:
                state.model, state.last_seq = self._try_resume(frame.camera_id, frame.pan_index, camera)
            self._streams[key] = state
        return state

    def _checkpoint_root(self, camera_id: str, pan_index: int) -> Path:
        assert self.checkpoint_dir is not None
        return self.checkpoint_dir / f"{camera_id}_p{pan_index}"

    def _try_resume(self, camera_id: str, pan_index: int, camera: CameraConfig):
        root = self._checkpoint_root(camera_id, pan_index)
        latest = latest_checkpoint(root)
        if latest is None:
            return None, 0
        model, seq = bgmod.load_checkpoint(latest)
        if model.shape != (camera.frame_height, camera.frame_width):
            raise DimensionMismatchError(
                f"checkpoint {latest} does not match configured frame size of {camera_id}"
            )
        return model, seq

    def _save_checkpoint(self, state: _StreamState, sequence_no: int) -> None:
        if self.checkpoint_dir is None or state.model is None:
            return
        key = (state.camera.camera_id, state.pan_index)
        count = self._accept_counts.get(key, 0)
        self._accept_counts[key] = count + 1
        if count % self.checkpoint_every != 0:
            return
        root = self._checkpoint_root(state.camera.camera_id, state.pan_index)
        root.mkdir(parents=True, exist_ok=True)
        bgmod.save_checkpoint(state.model, root / f"{sequence_no:08d}", sequence_no)

    # -- frame processing ----------------------------------------------------

    def _load_gray(self, frame: FrameRecord) -> GrayImage:
        path = resolve_frame_path(self.base_dir, frame.path)
        img = load_image(path)
        if isinstance(img, ColorImage):
            return to_grayscale(img)
        return img

    def process_frame(self, frame: FrameRecord) -> FrameEvent:
        """Classify one frame and emit its event (also logged to the store)."""
        event = self._process(frame)
        self._count(event)
        self._log(frame, event)
        return event

    def _count(self, event: FrameEvent) -> None:
        self.stats.frames_seen += 1
        if isinstance(event, BackgroundAccepted):
            self.stats.backgrounds_accepted += 1
        elif isinstance(event, (NoViolation, Violation)):
            self.stats.foregrounds += 1
            if isinstance(event, Violation):
                self.stats.violations += 1
        else:
            self.stats.errors += 1

    def _log(self, frame: FrameRecord, event: FrameEvent) -> None:
        if self.store is None:
            return
        if isinstance(event, BackgroundAccepted):
            entry = FrameEventLine(
                frame=frame,
                event="seeded" if event.seeded else "background",
                mean_diff=event.mean_diff,
            )
        elif isinstance(event, NoViolation):
            entry = FrameEventLine(
                frame=frame,
                event="no_violation",
                mean_diff=event.mean_diff,
                mean_longest_run=event.mean_longest_run,
            )
        elif isinstance(event, Violation):
            entry = FrameEventLine(
                frame=frame,
                event="violation",
                mean_diff=event.record.mean_diff,
                mean_longest_run=event.record.mean_longest_run,
            )
        else:
            entry = FrameEventLine(frame=frame, event="error", error=event.reason)
        self.store.append_frame_event(entry)

    def _process(self, frame: FrameRecord) -> FrameEvent:
        try:
            state = self._stream(frame)
        except (KeyError, BandBoundsError, DimensionMismatchError) as exc:
            return FrameError(frame=frame, reason=str(exc))

        if frame.sequence_no <= state.last_seq:
            return FrameError(
                frame=frame,
                reason=f"out-of-order frame: sequence_no {frame.sequence_no} <= {state.last_seq}",
            )

        try:
            gray = self._load_gray(frame)
        except (OSError, ImageFormatError, ValueError) as exc:
            return FrameError(frame=frame, reason=f"cannot load frame image: {exc}")

        camera = state.camera
        if gray.shape != (camera.frame_height, camera.frame_width):
            return FrameError(
                frame=frame,
                reason=(
                    f"frame is {gray.width}x{gray.height} but camera {camera.camera_id} "
                    f"is configured for {camera.frame_width}x{camera.frame_height}"
                ),
            )

        if state.model is None:
            if not self.seed_from_stream:
                return FrameError(frame=frame, reason="stream has no seeded background model")
            state.seed_buffer.append(gray)
            state.last_seq = frame.sequence_no
            if len(state.seed_buffer) == SEED_COUNT:
                state.model = bgmod.BackgroundModel(state.seed_buffer, d_th=camera.d_th)
                state.seed_buffer = []
                if self.checkpoint_dir is not None:
                    root = self._checkpoint_root(camera.camera_id, state.pan_index)
                    root.mkdir(parents=True, exist_ok=True)
                    bgmod.save_checkpoint(state.model, root / f"{frame.sequence_no:08d}", frame.sequence_no)
            return BackgroundAccepted(frame=frame, mean_diff=None, seeded=True)

        classified = state.model.classify_and_update(gray)
        state.last_seq = frame.sequence_no

        if isinstance(classified, bgmod.Background):
            self._save_checkpoint(state, frame.sequence_no)
            return BackgroundAccepted(frame=frame, mean_diff=classified.mean_diff, seeded=False)

        try:
            score = occlusion_score(classified.diff, state.band, camera.pixel_th)
        except BandBoundsError as exc:
            return FrameError(
                frame=frame,
                reason=f"calibration out of bounds for {camera.camera_id}/pan {state.pan_index}: {exc}",
            )
        score = score.decided(camera.l_th)
        if not score.violated:
            return NoViolation(
                frame=frame,
                mean_longest_run=score.mean_longest_run,
                per_line_longest_run=score.per_line_longest_run,
                mean_diff=classified.mean_diff,
            )
        record = ViolationRecord(
            violation_id=violation_id_for(frame),
            frame=frame,
            mean_longest_run=score.mean_longest_run,
            per_line_longest_run=score.per_line_longest_run,
            mean_diff=classified.mean_diff,
            thresholds_used=Thresholds(d_th=camera.d_th, l_th=camera.l_th, pixel_th=camera.pixel_th),
        )
        if self.store is not None:
            persist_violation(record, self.store)
        return Violation(record=record)

    def run(self, frames: list[FrameRecord]) -> PipelineStats:
        for frame in frames:
            self.process_frame(frame)
        self.stats.check_invariants()
        return self.stats


def violation_id_for(frame: FrameRecord) -> str:
    return f"viol-{frame.camera_id}-{frame.pan_index}-{frame.sequence_no:06d}"


def persist_violation(record: ViolationRecord, store: RecordStore) -> str:
    """Validate and append a violation record; returns its id."""
    return store.append_violation(record)


def run(
    cameras: dict[str, CameraConfig],
    frames: list[FrameRecord],
    store: RecordStore | None = None,
    base_dir: str | Path = ".",
    seed_from_stream: bool = True,
    checkpoint_dir: str | Path | None = None,
    checkpoint_every: int = 1,
) -> PipelineStats:
    """Process `frames` in order against `cameras`; returns run counters.

    Deterministic: the same inputs produce identical events, stats and
    store contents.
    """
    pipe = Pipeline(
        cameras,
        store=store,
        base_dir=base_dir,
        seed_from_stream=seed_from_stream,
        checkpoint_dir=checkpoint_dir,
        checkpoint_every=checkpoint_every,
    )
    return pipe.run(frames)


def latest_checkpoint(root: str | Path) -> Path | None:
    """Newest checkpoint directory under a stream's checkpoint root."""
    root = Path(root)
    if not root.is_dir():
        return None
    candidates = sorted(p for p in root.iterdir() if p.is_dir() and not p.name.endswith(".tmp"))
    return candidates[-1] if candidates else None


def checkpoint_before(root: str | Path, sequence_no: int) -> Path | None:
    """Checkpoint capturing the model state a given frame was scored against.

    That is the newest checkpoint whose sequence number is strictly below
    `sequence_no`.
    """
    root = Path(root)
    if not root.is_dir():
        return None
    best: Path | None = None
    for p in sorted(root.iterdir()):
        if not p.is_dir() or p.name.endswith(".tmp"):
            continue
        try:
            seq = int(p.name)
        except ValueError:
            continue
        if seq < sequence_no:
            best = p
    return best
