"""Deployment configuration: cameras, pan presets, thresholds, geometry.

The on-disk format is versioned JSON, one document per deployment::

    {
      "version": 1,
      "cameras": [
        {
          "camera_id": "CAM1",
          "kind": "fixed",                  # "fixed" | "ptz"
          "location_label": "NS crossing, lane 2",
          "frame_width": 704,
          "frame_height": 576,
          "d_th": 70.0,
          "l_th": 140.0,
          "pixel_th": 25,
          "pan_presets": [
            {"pan_index": 0,
             "geometry": {"anchor_x": 152, "anchor_y": 400, "length": 400,
                          "skew_deg": 0.0, "line_count": 5, "gap_px": 3}}
          ]
        }
      ]
    }

Skew angles are stored with 2-decimal precision.  Geometry is validated
against the camera's frame dimensions at load/patch time, so a stale
calibration is rejected before any frame is processed.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path

from .stopline import BandBoundsError, StopLineGeometry, rasterize_band

CONFIG_VERSION = 1
DEFAULT_FRAME_WIDTH = 704
DEFAULT_FRAME_HEIGHT = 576
PTZ_DEFAULT_PAN_COUNT = 6

_CAMERA_ID_RE = re.compile(r"^[A-Za-z0-9_]+$")


class ConfigError(ValueError):
    """Invalid configuration; `key` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class PanPreset:
    pan_index: int
    geometry: StopLineGeometry


@dataclass(frozen=True)
class CameraConfig:
    camera_id: str
    kind: str  # "fixed" | "ptz"
    pan_presets: tuple[PanPreset, ...]
    d_th: float = 70.0
    l_th: float = 140.0
    pixel_th: int = 25
    location_label: str = ""
    frame_width: int = DEFAULT_FRAME_WIDTH
    frame_height: int = DEFAULT_FRAME_HEIGHT

    def validate(self, key: str = "camera") -> None:
        if not _CAMERA_ID_RE.match(self.camera_id):
            raise ConfigError(f"{key}.camera_id", f"must match [A-Za-z0-9_]+, got {self.camera_id!r}")
        if self.kind not in ("fixed", "ptz"):
            raise ConfigError(f"{key}.kind", f"must be 'fixed' or 'ptz', got {self.kind!r}")
        if self.kind == "fixed" and len(self.pan_presets) != 1:
            raise ConfigError(f"{key}.pan_presets", "fixed cameras take exactly 1 pan preset")
        if not self.pan_presets:
            raise ConfigError(f"{key}.pan_presets", "at least one pan preset is required")
        for name, value in (("d_th", self.d_th), ("l_th", self.l_th), ("pixel_th", self.pixel_th)):
            if not value > 0:
                raise ConfigError(f"{key}.{name}", f"must be positive, got {value}")
        if self.frame_width < 1 or self.frame_height < 1:
            raise ConfigError(f"{key}.frame_width/frame_height", "must be positive")
        seen: set[int] = set()
        for i, preset in enumerate(self.pan_presets):
            pkey = f"{key}.pan_presets[{i}]"
            if preset.pan_index < 0:
                raise ConfigError(f"{pkey}.pan_index", "must be >= 0")
            if preset.pan_index in seen:
                raise ConfigError(f"{pkey}.pan_index", f"duplicate pan_index {preset.pan_index}")
            seen.add(preset.pan_index)
            try:
                rasterize_band(preset.geometry, self.frame_width, self.frame_height)
            except BandBoundsError as exc:
                raise ConfigError(f"{pkey}.geometry", str(exc)) from exc

    def preset(self, pan_index: int) -> PanPreset | None:
        for p in self.pan_presets:
            if p.pan_index == pan_index:
                return p
        return None


def default_ptz_presets(geometry: StopLineGeometry, count: int = PTZ_DEFAULT_PAN_COUNT) -> tuple[PanPreset, ...]:
    """Build `count` pan presets sharing one geometry (calibrate each later)."""
    return tuple(PanPreset(pan_index=i, geometry=geometry) for i in range(count))


# --- (de)serialization -------------------------------------------------------


def _require(obj: dict, key_path: str, name: str, types) -> object:
    if name not in obj:
        raise ConfigError(f"{key_path}.{name}", "missing required key")
    value = obj[name]
    if not isinstance(value, types) or isinstance(value, bool):
        raise ConfigError(f"{key_path}.{name}", f"unexpected type {type(value).__name__}")
    return value


def geometry_from_dict(d: dict, key_path: str = "geometry") -> StopLineGeometry:
    if not isinstance(d, dict):
        raise ConfigError(key_path, "must be an object")
    try:
        return StopLineGeometry(
            anchor_x=int(_require(d, key_path, "anchor_x", (int,))),
            anchor_y=int(_require(d, key_path, "anchor_y", (int,))),
            length=int(_require(d, key_path, "length", (int,))),
            skew_deg=float(_require(d, key_path, "skew_deg", (int, float))),
            line_count=int(d.get("line_count", 5)),
            gap_px=int(d.get("gap_px", 3)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(key_path, str(exc)) from exc


def geometry_to_dict(g: StopLineGeometry) -> dict:
    return {
        "anchor_x": g.anchor_x,
        "anchor_y": g.anchor_y,
        "length": g.length,
        "skew_deg": round(g.skew_deg, 2),
        "line_count": g.line_count,
        "gap_px": g.gap_px,
    }


def camera_from_dict(d: dict, key_path: str) -> CameraConfig:
    presets_raw = _require(d, key_path, "pan_presets", (list,))
    presets = []
    for i, p in enumerate(presets_raw):
        pkey = f"{key_path}.pan_presets[{i}]"
        if not isinstance(p, dict):
            raise ConfigError(pkey, "must be an object")
        presets.append(
            PanPreset(
                pan_index=int(_require(p, pkey, "pan_index", (int,))),
                geometry=geometry_from_dict(p.get("geometry"), f"{pkey}.geometry"),
            )
        )
    cam = CameraConfig(
        camera_id=str(_require(d, key_path, "camera_id", (str,))),
        kind=str(_require(d, key_path, "kind", (str,))),
        pan_presets=tuple(presets),
        d_th=float(d.get("d_th", 70.0)),
        l_th=float(d.get("l_th", 140.0)),
        pixel_th=int(d.get("pixel_th", 25)),
        location_label=str(d.get("location_label", "")),
        frame_width=int(d.get("frame_width", DEFAULT_FRAME_WIDTH)),
        frame_height=int(d.get("frame_height", DEFAULT_FRAME_HEIGHT)),
    )
    cam.validate(key_path)
    return cam


def camera_to_dict(c: CameraConfig) -> dict:
    return {
        "camera_id": c.camera_id,
        "kind": c.kind,
        "location_label": c.location_label,
        "frame_width": c.frame_width,
        "frame_height": c.frame_height,
        "d_th": c.d_th,
        "l_th": c.l_th,
        "pixel_th": c.pixel_th,
        "pan_presets": [
            {"pan_index": p.pan_index, "geometry": geometry_to_dict(p.geometry)}
            for p in c.pan_presets
        ],
    }


def parse_config(text: str) -> dict[str, CameraConfig]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("document", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("document", "top level must be an object")
    version = doc.get("version")
    if version != CONFIG_VERSION:
        raise ConfigError("version", f"expected {CONFIG_VERSION}, got {version!r}")
    cameras_raw = _require(doc, "document", "cameras", (list,))
    cameras: dict[str, CameraConfig] = {}
    for i, cam_raw in enumerate(cameras_raw):
        key = f"cameras[{i}]"
        if not isinstance(cam_raw, dict):
            raise ConfigError(key, "must be an object")
        cam = camera_from_dict(cam_raw, key)
        if cam.camera_id in cameras:
            raise ConfigError(f"{key}.camera_id", f"duplicate camera_id {cam.camera_id!r}")
        cameras[cam.camera_id] = cam
    return cameras


def dump_config(cameras: dict[str, CameraConfig]) -> str:
    doc = {
        "version": CONFIG_VERSION,
        "cameras": [camera_to_dict(c) for c in cameras.values()],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_config(path: str | Path) -> dict[str, CameraConfig]:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def save_config(cameras: dict[str, CameraConfig], path: str | Path) -> None:
    """Write atomically (temp file + rename) so readers never see a torn file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dump_config(cameras), encoding="utf-8")
    os.replace(tmp, path)


def patch_camera(
    cam: CameraConfig,
    pan_index: int,
    *,
    d_th: float | None = None,
    l_th: float | None = None,
    pixel_th: int | None = None,
    geometry: StopLineGeometry | None = None,
) -> CameraConfig:
    """Apply a threshold/geometry patch and re-validate; all-or-nothing."""
    preset = cam.preset(pan_index)
    if preset is None:
        raise ConfigError(
            f"camera[{cam.camera_id}].pan_presets", f"no pan preset {pan_index} to patch"
        )
    updates: dict = {}
    if d_th is not None:
        updates["d_th"] = float(d_th)
    if l_th is not None:
        updates["l_th"] = float(l_th)
    if pixel_th is not None:
        updates["pixel_th"] = int(pixel_th)
    if geometry is not None:
        new_presets = tuple(
            replace(p, geometry=geometry) if p.pan_index == pan_index else p
            for p in cam.pan_presets
        )
        updates["pan_presets"] = new_presets
    patched = replace(cam, **updates)
    patched.validate(f"camera[{cam.camera_id}]")
    return patched
