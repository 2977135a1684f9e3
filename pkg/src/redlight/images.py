"""8-bit image buffers and the pixel arithmetic the detection chain is built on.

All images are dense row-major buffers with the origin at the top-left
corner and y increasing downward.  Every operation here is pure: images
are immutable after construction, so results can be shared freely across
threads.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

# Broadcast luminance weights (ITU-R BT.601).
LUMA_R = 0.299
LUMA_G = 0.587
LUMA_B = 0.114


class DimensionMismatchError(ValueError):
    """Raised when two images that must share dimensions do not.

    Usually indicates frames from a misconfigured camera stream being
    mixed together.
    """


def _check_channel_range(arr: np.ndarray, what: str) -> None:
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise ValueError(f"{what} values must lie in [0, 255]")


def _as_uint8(data, expected_ndim: int, what: str) -> np.ndarray:
    arr = np.asarray(data)
    if arr.ndim != expected_ndim:
        raise ValueError(f"{what} expects a {expected_ndim}-D buffer, got ndim={arr.ndim}")
    if arr.dtype == np.uint8:
        arr = arr.copy()
    else:
        if arr.dtype.kind not in "iu":
            raise ValueError(f"{what} pixel values must be integers, got dtype {arr.dtype}")
        _check_channel_range(arr, what)
        arr = arr.astype(np.uint8)
    if arr.size == 0 or 0 in arr.shape:
        raise ValueError(f"{what} must have positive width and height")
    arr.setflags(write=False)
    return arr


class GrayImage:
    """Immutable 8-bit grayscale image (height x width)."""

    __slots__ = ("pixels",)

    def __init__(self, pixels) -> None:
        self.pixels: np.ndarray = _as_uint8(pixels, 2, "GrayImage")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        """(height, width), numpy order."""
        return self.pixels.shape

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"GrayImage({self.width}x{self.height})"


class ColorImage:
    """Immutable 24-bit RGB image (height x width x 3)."""

    __slots__ = ("pixels",)

    def __init__(self, pixels) -> None:
        arr = _as_uint8(pixels, 3, "ColorImage")
        if arr.shape[2] != 3:
            raise ValueError(f"ColorImage expects 3 channels, got {arr.shape[2]}")
        self.pixels: np.ndarray = arr

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ColorImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"ColorImage({self.width}x{self.height})"


def _require_same_shape(a: GrayImage, b: GrayImage) -> None:
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatchError(
            f"incompatible frames: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def to_grayscale(img: ColorImage) -> GrayImage:
    """Convert RGB to 8-bit gray: round(0.299*r + 0.587*g + 0.114*b).

    Rounding is half-away-from-zero; results are clamped to [0, 255].
    """
    r = img.pixels[:, :, 0].astype(np.float64)
    g = img.pixels[:, :, 1].astype(np.float64)
    b = img.pixels[:, :, 2].astype(np.float64)
    lum = LUMA_R * r + LUMA_G * g + LUMA_B * b
    out = np.floor(lum + 0.5)  # half-away-from-zero for non-negative values
    np.clip(out, 0.0, 255.0, out)
    return GrayImage(out.astype(np.uint8))


def abs_diff(a: GrayImage, b: GrayImage) -> GrayImage:
    """Per-pixel absolute difference |a - b|."""
    _require_same_shape(a, b)
    d = np.abs(a.pixels.astype(np.int16) - b.pixels.astype(np.int16))
    return GrayImage(d.astype(np.uint8))


def mean_gray(img: GrayImage) -> float:
    """Exact arithmetic mean of all pixel values.

    The sum is accumulated in 64-bit integers (the worst case for a
    704x576 frame, 704*576*255, already needs 27 bits) and divided once,
    so the result is the correctly rounded float64 mean.
    """
    total = int(np.sum(img.pixels, dtype=np.int64))
    return total / (img.width * img.height)


def mean_of_images(imgs: Sequence[GrayImage]) -> GrayImage:
    """Pixel-wise mean of exactly five same-sized images.

    Per pixel: round(sum / 5) with half-away-from-zero rounding, done in
    integer arithmetic ((2*sum + 5) // 10) so no float is involved.
    """
    if len(imgs) != 5:
        raise ValueError(f"mean_of_images expects exactly 5 images, got {len(imgs)}")
    first = imgs[0]
    for other in imgs[1:]:
        _require_same_shape(first, other)
    total = np.zeros(first.pixels.shape, dtype=np.int32)
    for img in imgs:
        total += img.pixels
    averaged = (2 * total + 5) // 10
    return GrayImage(averaged.astype(np.uint8))
