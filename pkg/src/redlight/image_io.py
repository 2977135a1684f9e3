"""Image file codecs.

Binary PGM (P5) and PPM (P6) are implemented here directly so fixtures
round-trip bit-exactly; the canonical encoding is ``P5\\n<w> <h>\\n255\\n``
followed by raw pixel bytes.  Compressed formats (PNG, BMP) are decoded
through Pillow for real-world frames; golden tests use only PGM/PPM.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .images import ColorImage, GrayImage


class ImageFormatError(ValueError):
    """Malformed or unsupported image file."""


def _read_pnm_tokens(data: bytes, count: int, offset: int) -> tuple[list[int], int]:
    """Read `count` whitespace-separated integer tokens, skipping # comments."""
    tokens: list[int] = []
    i = offset
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i] == ord("#"):
            while i < n and data[i] not in (ord("\n"), ord("\r")):
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise ImageFormatError("truncated PNM header")
        try:
            tokens.append(int(data[start:i]))
        except ValueError as exc:
            raise ImageFormatError(f"bad PNM header token {data[start:i]!r}") from exc
    if i >= n or not data[i : i + 1].isspace():
        raise ImageFormatError("PNM header not terminated by whitespace")
    return tokens, i + 1  # exactly one whitespace byte after the last token


def _decode_pnm(data: bytes) -> GrayImage | ColorImage:
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"not a binary PGM/PPM file (magic {magic!r})")
    (width, height, maxval), pixel_offset = _read_pnm_tokens(data, 3, 2)
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"bad PNM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise ImageFormatError(f"unsupported PNM maxval {maxval} (only 1..255)")
    channels = 1 if magic == b"P5" else 3
    expected = width * height * channels
    raster = data[pixel_offset : pixel_offset + expected]
    if len(raster) != expected:
        raise ImageFormatError(
            f"PNM raster truncated: expected {expected} bytes, got {len(raster)}"
        )
    arr = np.frombuffer(raster, dtype=np.uint8)
    if channels == 1:
        return GrayImage(arr.reshape(height, width))
    return ColorImage(arr.reshape(height, width, 3))


def read_pgm(path: str | Path) -> GrayImage:
    img = _decode_pnm(Path(path).read_bytes())
    if not isinstance(img, GrayImage):
        raise ImageFormatError(f"{path}: expected PGM (P5), found PPM")
    return img


def read_ppm(path: str | Path) -> ColorImage:
    img = _decode_pnm(Path(path).read_bytes())
    if not isinstance(img, ColorImage):
        raise ImageFormatError(f"{path}: expected PPM (P6), found PGM")
    return img


def encode_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def encode_ppm(img: ColorImage) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def write_pgm(img: GrayImage, path: str | Path) -> None:
    Path(path).write_bytes(encode_pgm(img))


def write_ppm(img: ColorImage, path: str | Path) -> None:
    Path(path).write_bytes(encode_ppm(img))


def load_image(path: str | Path) -> GrayImage | ColorImage:
    """Load a frame from disk, dispatching on content.

    PGM/PPM are decoded natively; anything else (PNG, BMP, ...) goes
    through Pillow.  Gray sources come back as GrayImage, everything
    else as ColorImage.
    """
    path = Path(path)
    data = path.read_bytes()
    if data[:2] in (b"P5", b"P6"):
        return _decode_pnm(data)
    try:
        with PILImage.open(io.BytesIO(data)) as pil:
            if pil.mode in ("L", "I;16", "I"):
                return GrayImage(np.asarray(pil.convert("L")))
            return ColorImage(np.asarray(pil.convert("RGB")))
    except (OSError, ValueError) as exc:
        raise ImageFormatError(f"{path}: cannot decode image ({exc})") from exc


def encode_png(img: GrayImage | ColorImage) -> bytes:
    """Encode as PNG (used by the HTTP service for browser display)."""
    mode = "L" if isinstance(img, GrayImage) else "RGB"
    buf = io.BytesIO()
    PILImage.fromarray(img.pixels, mode=mode).save(buf, format="PNG")
    return buf.getvalue()
