"""Adaptive background model.

The model keeps a FIFO ring of the five most recently accepted background
frames and their pixel-wise mean.  A new frame is compared against that
mean: if the mean gray value of the absolute difference stays at or below
the threshold ``d_th`` the frame is itself admitted as background (evicting
the oldest ring entry), otherwise it is reported as foreground together
with the difference image so downstream stages never recompute it.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .image_io import read_pgm, write_pgm
from .images import DimensionMismatchError, GrayImage, abs_diff, mean_gray, mean_of_images

RING_SIZE = 5
DEFAULT_D_TH = 70.0


@dataclass(frozen=True)
class Background:
    """Frame classified as background; it has been admitted to the ring."""

    mean_diff: float


@dataclass(frozen=True)
class Foreground:
    """Frame classified as non-background.

    Carries the difference image that produced the decision so occlusion
    scoring can reuse it directly.
    """

    diff: GrayImage
    mean_diff: float


FrameClass = Background | Foreground


class BackgroundModel:
    """Rolling five-frame background with whole-image mean-difference gating.

    Instances are a serialized state machine: ``classify_and_update`` calls
    for one camera/pan stream must be applied in ingestion order by a single
    logical writer.  ``current_background`` is safe to call concurrently;
    the returned image is an immutable snapshot.
    """

    def __init__(self, seed_images: list[GrayImage] | tuple[GrayImage, ...], d_th: float = DEFAULT_D_TH) -> None:
        if len(seed_images) != RING_SIZE:
            raise ValueError(
                f"background model needs exactly {RING_SIZE} seed images, got {len(seed_images)}"
            )
        if not d_th > 0:
            raise ValueError(f"d_th must be positive, got {d_th}")
        first = seed_images[0]
        for img in seed_images[1:]:
            if img.shape != first.shape:
                raise DimensionMismatchError("seed images must share dimensions")
        self._ring: list[GrayImage] = list(seed_images)
        self._mean: GrayImage = mean_of_images(self._ring)
        self.d_th = float(d_th)

    @property
    def ring(self) -> tuple[GrayImage, ...]:
        """Accepted backgrounds, oldest first."""
        return tuple(self._ring)

    @property
    def shape(self) -> tuple[int, int]:
        return self._mean.shape

    def current_background(self) -> GrayImage:
        """The current mean background (immutable snapshot)."""
        return self._mean

    def classify_and_update(self, frame: GrayImage) -> FrameClass:
        """Classify `frame` against the mean background as it exists now.

        Mean difference strictly greater than d_th means foreground and the
        model is left untouched; at or below d_th the frame replaces the
        oldest ring entry and the mean is recomputed.
        """
        if frame.shape != self._mean.shape:
            raise DimensionMismatchError(
                f"frame {frame.width}x{frame.height} does not match model "
                f"{self._mean.width}x{self._mean.height}"
            )
        diff = abs_diff(frame, self._mean)
        m = mean_gray(diff)
        if m > self.d_th:
            return Foreground(diff=diff, mean_diff=m)
        self._ring.pop(0)
        self._ring.append(frame)
        self._mean = mean_of_images(self._ring)
        return Background(mean_diff=m)


def seed(initial: list[GrayImage] | tuple[GrayImage, ...], d_th: float = DEFAULT_D_TH) -> BackgroundModel:
    """Build a model from five initial background images."""
    return BackgroundModel(initial, d_th)


# --- checkpointing ----------------------------------------------------------
#
# A checkpoint directory holds the five ring images (bg_0.pgm oldest ..
# bg_4.pgm newest), the current mean (mean.pgm) and meta.json carrying
# d_th plus the stream sequence number the state corresponds to.

_META_NAME = "meta.json"


def save_checkpoint(model: BackgroundModel, directory: str | Path, sequence_no: int) -> None:
    """Persist model state; the directory appears atomically via rename."""
    directory = Path(directory)
    tmp = directory.with_name(directory.name + ".tmp")
    if tmp.exists():
        for leftover in tmp.iterdir():
            leftover.unlink()
        tmp.rmdir()
    tmp.mkdir(parents=True)
    for i, img in enumerate(model.ring):
        write_pgm(img, tmp / f"bg_{i}.pgm")
    write_pgm(model.current_background(), tmp / "mean.pgm")
    meta = {"d_th": model.d_th, "sequence_no": int(sequence_no)}
    (tmp / _META_NAME).write_text(json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8")
    if directory.exists():
        for leftover in directory.iterdir():
            leftover.unlink()
        directory.rmdir()
    os.rename(tmp, directory)


def load_checkpoint(directory: str | Path) -> tuple[BackgroundModel, int]:
    """Load a checkpointed model; returns (model, sequence_no)."""
    directory = Path(directory)
    meta = json.loads((directory / _META_NAME).read_text(encoding="utf-8"))
    ring = [read_pgm(directory / f"bg_{i}.pgm") for i in range(RING_SIZE)]
    model = BackgroundModel(ring, d_th=float(meta["d_th"]))
    stored_mean = read_pgm(directory / "mean.pgm")
    if stored_mean != model.current_background():
        raise ValueError(f"checkpoint {directory} is inconsistent: stored mean != mean of ring")
    return model, int(meta["sequence_no"])
