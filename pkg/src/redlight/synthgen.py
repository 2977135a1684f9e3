"""Deterministic synthetic scenes with geometric ground truth.

Stands in for a field capture set: textured road backgrounds, vehicle and
pedestrian occluders over the stop-line band, optional sensor noise and
illumination shifts.  Every output is a pure function of the generation
parameters including the seed.

Randomness comes from SplitMix64 (finalizer of Steele et al.), chosen so
any implementation can reproduce streams bit-exactly: the i-th raw value
of the stream seeded by s is scramble(s + (i+1) * 0x9E3779B97F4A7C15) with
all arithmetic mod 2**64.  Gaussian noise is Box-Muller over pairs of
stream values; uniform ints take the raw value modulo the range width.

Ground-truth occlusion is computed from rectangle/band geometry alone and
never by running the detector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import CameraConfig, PanPreset, dump_config
from .image_io import write_pgm
from .images import GrayImage
from .stopline import ScanBand, StopLineGeometry, rasterize_band

DEFAULT_DIMS = (704, 576)
JITTER_AMPLITUDE = 5  # max |pixel - gradient| in a generated background

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _scramble(z: np.ndarray) -> np.ndarray:
    # mod-2**64 wraparound is the point; silence numpy's overflow warnings
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _MIX1
        z = (z ^ (z >> _U64(27))) * _MIX2
        return z ^ (z >> _U64(31))


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First n raw values of the SplitMix64 stream seeded by `seed`."""
    idx = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _scramble(_U64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _GOLDEN)


def derive_seed(seed: int, tag: int) -> int:
    """Deterministic child seed: the tag-th raw value of the parent stream."""
    with np.errstate(over="ignore"):
        return int(_scramble(_U64(seed & 0xFFFFFFFFFFFFFFFF) + _U64(tag + 1) * _GOLDEN))


def gaussian_stream(seed: int, n: int) -> np.ndarray:
    """n standard normal deviates via Box-Muller over SplitMix64 uniforms."""
    pairs = (n + 1) // 2
    raw = splitmix64(seed, 2 * pairs)
    u1 = ((raw[0::2] >> _U64(11)).astype(np.float64) + 1.0) * 2.0**-53  # (0, 1]
    u2 = (raw[1::2] >> _U64(11)).astype(np.float64) * 2.0**-53  # [0, 1)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * math.pi * u2
    out = np.empty(2 * pairs, dtype=np.float64)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:n]


class _UniformInts:
    """Sequential uniform-int draws from one SplitMix64 stream."""

    def __init__(self, seed: int, capacity: int = 1024):
        self._values = splitmix64(seed, capacity)
        self._i = 0

    def draw(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] (modulo reduction; bias negligible)."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        v = int(self._values[self._i])
        self._i += 1
        return lo + v % (hi - lo + 1)


# --- scene model -------------------------------------------------------------

VEHICLE = "vehicle"
PEDESTRIAN = "pedestrian"
EMPTY = "empty"


@dataclass(frozen=True)
class OccluderSpec:
    """Axis-aligned rectangle drawn over the background at a flat gray."""

    kind: str  # vehicle | pedestrian
    x: int
    y: int
    w: int
    h: int
    gray: int

    def __post_init__(self) -> None:
        if self.w < 1 or self.h < 1:
            raise ValueError(f"occluder needs w,h >= 1, got {self.w}x{self.h}")
        if not 0 <= self.gray <= 255:
            raise ValueError(f"occluder gray must be in [0,255], got {self.gray}")

    def contains(self, px: int, py: int) -> bool:
        return self.x <= px < self.x + self.w and self.y <= py < self.y + self.h


def default_scene_geometry() -> StopLineGeometry:
    return StopLineGeometry(anchor_x=152, anchor_y=400, length=400, skew_deg=0.0)


@dataclass(frozen=True)
class SceneSpec:
    dims: tuple[int, int] = DEFAULT_DIMS  # (width, height)
    geometry: StopLineGeometry = field(default_factory=default_scene_geometry)
    occluders: tuple[OccluderSpec, ...] = ()
    noise_sigma: float = 0.0
    illumination_offset: int = 0
    rng_seed: int = 0
    l_th: float = 140.0

    def __post_init__(self) -> None:
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


@dataclass(frozen=True)
class LabeledFrame:
    image: GrayImage
    truth_violation: bool
    truth_band_occlusion: int  # widest contiguous band occlusion, in samples


def _gradient(width: int, height: int) -> np.ndarray:
    """Low-frequency base texture: 100..160 ramp across the frame."""
    xs = np.arange(width, dtype=np.float64) / max(width - 1, 1)
    ys = np.arange(height, dtype=np.float64) / max(height - 1, 1)
    plane = 100.0 + 40.0 * xs[None, :] + 20.0 * ys[:, None]
    return np.floor(plane + 0.5)


def gen_background(dims: tuple[int, int], rng_seed: int) -> GrayImage:
    """Textured background: gradient plus seeded per-pixel jitter in [-5, 5]."""
    width, height = dims
    if width < 1 or height < 1:
        raise ValueError(f"dims must be positive, got {dims}")
    base = _gradient(width, height)
    raw = splitmix64(rng_seed, width * height).reshape(height, width)
    jitter = (raw % _U64(2 * JITTER_AMPLITUDE + 1)).astype(np.int64) - JITTER_AMPLITUDE
    return GrayImage((base.astype(np.int64) + jitter).astype(np.uint8))


def band_coverage_runs(band: ScanBand, occluders: tuple[OccluderSpec, ...]) -> list[int]:
    """Per-line longest run of band samples covered by any occluder.

    Pure rectangle/coordinate geometry; intentionally independent of the
    image pipeline so it can serve as ground truth for it.
    """
    runs = []
    for line in band.lines:
        best = 0
        current = 0
        for x, y in line:
            if any(o.contains(x, y) for o in occluders):
                current += 1
                best = max(best, current)
            else:
                current = 0
        runs.append(best)
    return runs


def gen_frame(spec: SceneSpec) -> LabeledFrame:
    """Render a scene and label it from its geometry.

    Pixel model: background(seed) overwritten by occluder rectangles, plus
    Gaussian noise (child seed derive(rng_seed, 1)) and the global
    illumination offset, rounded half-away-from-zero and clamped to
    [0, 255].
    """
    width, height = spec.dims
    bg = gen_background(spec.dims, spec.rng_seed)
    canvas = bg.pixels.astype(np.float64)
    for occ in spec.occluders:
        if occ.x < 0 or occ.y < 0 or occ.x + occ.w > width or occ.y + occ.h > height:
            raise ValueError(
                f"occluder {occ.kind} at ({occ.x},{occ.y}) size {occ.w}x{occ.h} "
                f"leaves the {width}x{height} frame"
            )
        canvas[occ.y : occ.y + occ.h, occ.x : occ.x + occ.w] = float(occ.gray)
    if spec.noise_sigma > 0:
        noise = gaussian_stream(derive_seed(spec.rng_seed, 1), width * height)
        canvas += spec.noise_sigma * noise.reshape(height, width)
    if spec.illumination_offset:
        canvas += float(spec.illumination_offset)
    rendered = np.clip(np.floor(canvas + 0.5), 0.0, 255.0).astype(np.uint8)

    band = rasterize_band(spec.geometry, width, height)
    occlusion = max(band_coverage_runs(band, spec.occluders), default=0)
    return LabeledFrame(
        image=GrayImage(rendered),
        truth_violation=occlusion > spec.l_th,
        truth_band_occlusion=occlusion,
    )


# --- scene composition -------------------------------------------------------


def _compose_vehicle(dims: tuple[int, int], draws: _UniformInts) -> tuple[OccluderSpec, ...]:
    """One frame-dominant rectangle fully covering the scan band.

    Vehicles at the line fill most of the frame; the rectangle is kept
    large enough that the whole-image mean-difference gate fires at the
    default threshold even under noise and illumination shifts.
    """
    width, height = dims
    x0 = draws.draw(max(1, width // 35), max(1, width // 11))
    x1 = width - draws.draw(0, max(1, width // 35))
    y0 = draws.draw(max(1, height // 20), max(1, height // 10))
    y1 = height - draws.draw(0, max(1, height // 35))
    gray = draws.draw(0, 10)
    return (OccluderSpec(kind=VEHICLE, x=x0, y=y0, w=x1 - x0, h=y1 - y0, gray=gray),)


def _compose_pedestrians(
    dims: tuple[int, int], geometry: StopLineGeometry, draws: _UniformInts
) -> tuple[OccluderSpec, ...]:
    """1-3 narrow blobs (<= 40 px wide, >= 10 px apart) crossing the band."""
    _, height = dims
    band_top = geometry.anchor_y
    band_bottom = geometry.anchor_y + (geometry.line_count - 1) * geometry.gap_px
    count = draws.draw(1, 3)
    slot = geometry.length // 3
    blobs = []
    for k in range(count):
        bw = draws.draw(16, 40)
        bx = geometry.anchor_x + k * slot + draws.draw(0, max(0, slot - bw - 11))
        by = band_top - draws.draw(20, 39)
        bh = min(band_bottom - by + 1 + draws.draw(0, 59), height - by)
        gray = draws.draw(20, 60)
        blobs.append(OccluderSpec(kind=PEDESTRIAN, x=bx, y=by, w=bw, h=bh, gray=gray))
    return tuple(blobs)


def _mix_counts(n: int, mix: tuple[float, float, float]) -> dict[str, int]:
    """Largest-remainder apportionment of n frames over the three kinds."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if len(mix) != 3 or any(f < 0 for f in mix):
        raise ValueError(f"mix must be three non-negative fractions, got {mix}")
    if abs(sum(mix) - 1.0) > 1e-9:
        raise ValueError(f"mix fractions must sum to 1, got {sum(mix)}")
    kinds = (VEHICLE, PEDESTRIAN, EMPTY)
    exact = [n * f for f in mix]
    counts = [int(math.floor(e)) for e in exact]
    leftover = n - sum(counts)
    by_remainder = sorted(range(3), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in range(leftover):
        counts[by_remainder[i]] += 1
    return dict(zip(kinds, counts))


@dataclass(frozen=True)
class DatasetPaths:
    out_dir: Path
    frames_dir: Path
    list_file: Path
    label_file: Path
    config_file: Path
    counts: dict[str, int]


DATASET_CAMERA_ID = "SYN1"
_DATASET_T0 = "2024-01-01T06:00:00"
_CAPTURE_INTERVAL_S = 3  # recorded cadence of the synthetic capture


def _timestamps(n: int) -> list[str]:
    from datetime import datetime, timedelta

    t0 = datetime.fromisoformat(_DATASET_T0)
    return [(t0 + timedelta(seconds=_CAPTURE_INTERVAL_S * i)).isoformat(timespec="seconds") for i in range(n)]


def gen_dataset(
    out_dir: str | Path,
    n: int,
    mix: tuple[float, float, float],
    noise_sigma: float = 0.0,
    illumination: int = 0,
    rng_seed: int = 0,
    dims: tuple[int, int] = DEFAULT_DIMS,
    d_th: float = 70.0,
    l_th: float = 140.0,
    pixel_th: int = 25,
) -> DatasetPaths:
    """Write n labeled PGM frames plus the list, label and config files.

    mix is (vehicle, pedestrian, empty) fractions; counts use
    largest-remainder rounding.  Up to five empty frames are placed first
    so a pipeline bootstrapping its background ring from the head of the
    list seeds on clean road; the rest of the order is a seeded shuffle.
    Outputs only contain paths relative to out_dir, so two runs with the
    same parameters produce byte-identical trees anywhere.

    illumination=k applies a per-frame uniform offset in [-k, +k].
    """
    out_dir = Path(out_dir)
    frames_dir = out_dir / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)

    counts = _mix_counts(n, mix)
    geometry = default_scene_geometry()

    kinds: list[str] = []
    front_empties = min(5, counts[EMPTY])
    kinds.extend([EMPTY] * front_empties)
    rest = (
        [VEHICLE] * counts[VEHICLE]
        + [PEDESTRIAN] * counts[PEDESTRIAN]
        + [EMPTY] * (counts[EMPTY] - front_empties)
    )
    shuffle_draws = splitmix64(derive_seed(rng_seed, 0), max(1, len(rest)))
    for i in range(len(rest) - 1, 0, -1):
        j = int(shuffle_draws[len(rest) - 1 - i]) % (i + 1)
        rest[i], rest[j] = rest[j], rest[i]
    kinds.extend(rest)

    stamps = _timestamps(n)
    list_lines = []
    label_lines = []
    for i, kind in enumerate(kinds):
        frame_seed = derive_seed(rng_seed, i + 1)
        draws = _UniformInts(derive_seed(frame_seed, 2))
        if kind == VEHICLE:
            occluders = _compose_vehicle(dims, draws)
        elif kind == PEDESTRIAN:
            occluders = _compose_pedestrians(dims, geometry, draws)
        else:
            occluders = ()
        offset = draws.draw(-illumination, illumination) if illumination else 0
        spec = SceneSpec(
            dims=dims,
            geometry=geometry,
            occluders=occluders,
            noise_sigma=noise_sigma,
            illumination_offset=offset,
            rng_seed=frame_seed,
            l_th=l_th,
        )
        labeled = gen_frame(spec)
        rel_path = f"frames/frame_{i:05d}.pgm"
        write_pgm(labeled.image, out_dir / rel_path)
        list_lines.append(f"{DATASET_CAMERA_ID};0;{stamps[i]};{rel_path}")
        truth = "true" if labeled.truth_violation else "false"
        label_lines.append(f"{rel_path};{truth};{labeled.truth_band_occlusion}")

    list_file = out_dir / "frames.list"
    label_file = out_dir / "labels.txt"
    config_file = out_dir / "config.json"
    list_file.write_text("\n".join(list_lines) + ("\n" if list_lines else ""), encoding="utf-8")
    label_file.write_text("\n".join(label_lines) + ("\n" if label_lines else ""), encoding="utf-8")
    camera = CameraConfig(
        camera_id=DATASET_CAMERA_ID,
        kind="fixed",
        pan_presets=(PanPreset(pan_index=0, geometry=geometry),),
        d_th=d_th,
        l_th=l_th,
        pixel_th=pixel_th,
        location_label="synthetic benchmark crossing",
        frame_width=dims[0],
        frame_height=dims[1],
    )
    config_file.write_text(dump_config({camera.camera_id: camera}), encoding="utf-8")
    return DatasetPaths(
        out_dir=out_dir,
        frames_dir=frames_dir,
        list_file=list_file,
        label_file=label_file,
        config_file=config_file,
        counts=counts,
    )
