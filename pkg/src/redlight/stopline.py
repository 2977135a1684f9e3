"""Stop-line scan band and the longest-run occlusion decision.

The painted stop line is observed at a per-camera skew angle.  A band of
parallel scan lines is rasterized along it; occlusion is measured as the
longest contiguous run of non-background samples per line, and the mean
of those runs is compared against a threshold.  Isolated noisy pixels
produce runs of length 1 and never trip the decision; a vehicle crossing
the line produces one long run on every line.

All functions here are pure and safe for unrestricted parallel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .images import GrayImage

DEFAULT_LINE_COUNT = 5
DEFAULT_GAP_PX = 3
DEFAULT_L_TH = 140.0
DEFAULT_PIXEL_TH = 25
MAX_ABS_SKEW_DEG = 85.0


class BandBoundsError(ValueError):
    """Scan band falls outside the frame; names the offending sample."""

    def __init__(self, line_index: int, coord: tuple[int, int], frame_width: int, frame_height: int):
        self.line_index = line_index
        self.coord = coord
        super().__init__(
            f"scan line {line_index} leaves the {frame_width}x{frame_height} frame "
            f"at ({coord[0]}, {coord[1]})"
        )


def round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero.

    Kept as the single rounding rule for all geometry so that client-side
    previews can reproduce server rasterization exactly.
    """
    if x >= 0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


@dataclass(frozen=True)
class StopLineGeometry:
    """Calibrated stop-line placement for one camera/pan view.

    anchor_x/anchor_y: left endpoint of the topmost scan line.
    length: horizontal extent of the band in pixels.
    skew_deg: angle against the image x-axis; positive means the line
        descends left-to-right (y grows downward).
    line_count/gap_px: how many parallel lines and their vertical spacing.
    """

    anchor_x: int
    anchor_y: int
    length: int
    skew_deg: float
    line_count: int = DEFAULT_LINE_COUNT
    gap_px: int = DEFAULT_GAP_PX

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")
        if self.line_count < 1:
            raise ValueError(f"line_count must be >= 1, got {self.line_count}")
        if self.gap_px < 0:
            raise ValueError(f"gap_px must be >= 0, got {self.gap_px}")
        if not abs(self.skew_deg) <= MAX_ABS_SKEW_DEG:
            raise ValueError(
                f"skew_deg must lie in [-{MAX_ABS_SKEW_DEG}, {MAX_ABS_SKEW_DEG}], got {self.skew_deg}"
            )


@dataclass(frozen=True)
class ScanBand:
    """Rasterized scan lines as pixel coordinate tuples, top line first.

    Line k is line 0 translated down by k*gap_px; each line has at least
    `length` samples (steep skews add extra samples on the dominant axis).
    """

    lines: tuple[tuple[tuple[int, int], ...], ...]

    def bounds(self) -> tuple[int, int, int, int]:
        """(min_x, min_y, max_x, max_y) over all samples."""
        xs = [x for line in self.lines for x, _ in line]
        ys = [y for line in self.lines for _, y in line]
        return min(xs), min(ys), max(xs), max(ys)


def _bresenham(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Classic integer Bresenham from (x0,y0) to (x1,y1), inclusive, 8-connected."""
    points: list[tuple[int, int]] = []
    dx = abs(x1 - x0)
    dy = abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx - dy
    x, y = x0, y0
    while True:
        points.append((x, y))
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 > -dy:
            err -= dy
            x += sx
        if e2 < dx:
            err += dx
            y += sy
    return points


def rasterize_band(geom: StopLineGeometry, frame_width: int, frame_height: int) -> ScanBand:
    """Rasterize the scan band and verify it fits inside the frame.

    Line 0 runs from the anchor, `length` pixels along x at slope
    tan(skew_deg); the endpoint y offset is rounded half-away-from-zero
    and everything in between is pure integer Bresenham, so repeated
    calls are coordinate-identical.
    """
    x_end = geom.anchor_x + geom.length - 1
    dy_total = round_half_away((geom.length - 1) * math.tan(math.radians(geom.skew_deg)))
    line0 = _bresenham(geom.anchor_x, geom.anchor_y, x_end, geom.anchor_y + dy_total)
    lines = []
    for k in range(geom.line_count):
        shift = k * geom.gap_px
        line = tuple((x, y + shift) for x, y in line0)
        for x, y in line:
            if not (0 <= x < frame_width and 0 <= y < frame_height):
                raise BandBoundsError(k, (x, y), frame_width, frame_height)
        lines.append(line)
    return ScanBand(lines=tuple(lines))


def longest_run(samples: Sequence[bool] | Iterable[bool]) -> int:
    """Length of the longest contiguous run of True values; 0 if none."""
    best = 0
    current = 0
    for s in samples:
        if s:
            current += 1
            if current > best:
                best = current
        else:
            current = 0
    return best


@dataclass(frozen=True)
class OcclusionResult:
    """Per-line longest runs, their mean, and (once decided) the verdict."""

    per_line_longest_run: tuple[int, ...]
    mean_longest_run: float
    violated: bool | None = None

    def decided(self, l_th: float) -> "OcclusionResult":
        return replace(self, violated=is_violation(self.mean_longest_run, l_th))


def occlusion_score(diff: GrayImage, band: ScanBand, pixel_th: int) -> OcclusionResult:
    """Measure occlusion of the band in a difference image.

    A sample counts as non-background iff the difference value at its
    coordinate is strictly greater than pixel_th.  The verdict field is
    left unset; apply `decided(l_th)` or `is_violation` separately.
    """
    runs = []
    for k, line in enumerate(band.lines):
        coords = np.asarray(line, dtype=np.intp)
        xs, ys = coords[:, 0], coords[:, 1]
        oob = (xs < 0) | (ys < 0) | (xs >= diff.width) | (ys >= diff.height)
        if oob.any():
            bad = int(np.argmax(oob))
            # stale calibration: the band no longer fits the frame
            raise BandBoundsError(k, (int(xs[bad]), int(ys[bad])), diff.width, diff.height)
        values = diff.pixels[ys, xs]
        runs.append(longest_run((values > pixel_th).tolist()))
    mean_run = sum(runs) / len(runs)
    return OcclusionResult(per_line_longest_run=tuple(runs), mean_longest_run=mean_run)


def is_violation(mean_longest_run: float, l_th: float) -> bool:
    """True iff the mean longest run strictly exceeds l_th."""
    if mean_longest_run < 0:
        raise ValueError(f"mean_longest_run must be >= 0, got {mean_longest_run}")
    if not l_th > 0:
        raise ValueError(f"l_th must be positive, got {l_th}")
    return mean_longest_run > l_th
