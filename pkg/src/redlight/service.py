"""HTTP review service for operators.

Read endpoints serve camera setup, violation lists, frame images and
current backgrounds; write endpoints record review verdicts and patch
per-camera tuning.  All mutation goes through one process-wide lock so
the record store and config file stay consistent under concurrent
clients.

Errors use one body shape everywhere::

    {"code": "<machine_slug>", "message": "<human text>", "details": {...}}

with 400 for malformed requests, 401 for a missing or wrong operator
token, 404 for unknown resources and 409 for valid requests that conflict
with current state (double review, missing checkpoint).
"""

from __future__ import annotations

import base64
import hmac
import html
import threading
from dataclasses import dataclass, field as dc_field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse, Response
from pydantic import BaseModel, Field

from . import background as bgmod
from .config import (
    CameraConfig,
    ConfigError,
    camera_to_dict,
    geometry_from_dict,
    geometry_to_dict,
    patch_camera,
    save_config,
)
from .image_io import ImageFormatError, encode_png, load_image
from .images import ColorImage, abs_diff, mean_gray, to_grayscale
from .pipeline import checkpoint_before, latest_checkpoint, resolve_frame_path, violation_id_for
from .records import Thresholds, ViolationRecord
from .stopline import BandBoundsError, StopLineGeometry, occlusion_score, rasterize_band
from .store import DuplicateRecordError, RecordStore, UnknownRecordError

SLIP_STATUSES = ("pending", "confirmed", "dismissed")


@dataclass
class Deployment:
    """Everything one service process operates on."""

    cameras: dict[str, CameraConfig]
    store: RecordStore
    frames_root: Path = Path(".")
    config_path: Path | None = None
    checkpoint_dir: Path | None = None
    operator_token: str | None = None
    lock: threading.Lock = dc_field(default_factory=threading.Lock)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details: dict | None = None):
        self.status = status
        self.code = code
        self.message = message
        self.details = details or {}
        super().__init__(message)


def _not_found(message: str, **details: Any) -> ApiError:
    return ApiError(404, "not_found", message, details)


def _conflict(code: str, message: str, **details: Any) -> ApiError:
    return ApiError(409, code, message, details)


def _bad_request(message: str, **details: Any) -> ApiError:
    return ApiError(400, "validation", message, details)


# --- request bodies ----------------------------------------------------------


class GeometryBody(BaseModel):
    anchor_x: int
    anchor_y: int
    length: int
    skew_deg: float
    line_count: int = 5
    gap_px: int = 3


class ConfigPatchBody(BaseModel):
    d_th: float | None = None
    l_th: float | None = None
    pixel_th: int | None = None
    geometry: GeometryBody | None = None


class ReviewBody(BaseModel):
    verdict: str
    operator: str = Field(min_length=1)
    reviewed_at: str | None = None  # ISO-8601; defaults to the server clock


class ThresholdOverrides(BaseModel):
    d_th: float | None = None
    l_th: float | None = None
    pixel_th: int | None = None


class RedetectBody(BaseModel):
    """Select frames by explicit ids or by capture-time range, never both."""

    frame_ids: list[str] | None = None
    time_from: str | None = Field(default=None, alias="from")
    time_to: str | None = Field(default=None, alias="to")
    camera: str | None = None
    override_thresholds: ThresholdOverrides | None = None
    persist: bool = False
    limit: int = Field(default=200, ge=1, le=2000)


class DryRunBody(BaseModel):
    geometry: GeometryBody
    frame_width: int
    frame_height: int


def _geometry_from_body(body: GeometryBody) -> StopLineGeometry:
    try:
        return geometry_from_dict(body.model_dump(), "geometry")
    except ConfigError as exc:
        raise _bad_request(str(exc)) from exc


# --- app factory -------------------------------------------------------------


def create_app(deployment: Deployment, console_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="stop-line review service", docs_url=None, redoc_url=None)
    dep = deployment

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={
                "code": "validation",
                "message": "request body or parameters failed validation",
                "details": {"errors": [
                    {"loc": [str(p) for p in err["loc"]], "msg": err["msg"]} for err in exc.errors()
                ]},
            },
        )

    def require_token(x_operator_token: str | None) -> None:
        if dep.operator_token is None:
            return
        if x_operator_token is None or not hmac.compare_digest(x_operator_token, dep.operator_token):
            raise ApiError(401, "unauthorized", "missing or invalid X-Operator-Token header")

    def camera_or_404(camera_id: str) -> CameraConfig:
        camera = dep.cameras.get(camera_id)
        if camera is None:
            raise _not_found(f"unknown camera {camera_id!r}", camera_id=camera_id)
        return camera

    def preset_or_404(camera: CameraConfig, pan_index: int):
        preset = camera.preset(pan_index)
        if preset is None:
            raise _not_found(
                f"camera {camera.camera_id!r} has no pan preset {pan_index}",
                camera_id=camera.camera_id,
                pan_index=pan_index,
            )
        return preset

    def load_frame_gray(path_str: str):
        path = resolve_frame_path(dep.frames_root, path_str)
        try:
            img = load_image(path)
        except FileNotFoundError:
            raise _conflict("frame_image_missing", f"frame image {path_str!r} is not on disk", path=path_str)
        except (OSError, ImageFormatError, ValueError) as exc:
            raise _conflict("frame_image_unreadable", f"cannot load {path_str!r}: {exc}", path=path_str)
        return to_grayscale(img) if isinstance(img, ColorImage) else img

    # --- read endpoints ------------------------------------------------------

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "cameras": len(dep.cameras), "violations": dep.store.violation_count()}

    @app.get("/cameras")
    def list_cameras() -> dict:
        return {"cameras": [camera_to_dict(c) for _, c in sorted(dep.cameras.items())]}

    @app.get("/cameras/{camera_id}")
    def get_camera(camera_id: str) -> dict:
        return camera_to_dict(camera_or_404(camera_id))

    @app.get("/cameras/{camera_id}/pans/{pan_index}/background")
    def get_background(camera_id: str, pan_index: int) -> Response:
        camera = camera_or_404(camera_id)
        preset_or_404(camera, pan_index)
        if dep.checkpoint_dir is None:
            raise _conflict("checkpoints_disabled", "service is running without a checkpoint directory")
        root = dep.checkpoint_dir / f"{camera_id}_p{pan_index}"
        latest = latest_checkpoint(root)
        if latest is None:
            raise _not_found(
                f"no background checkpoint yet for {camera_id}/pan {pan_index}",
                camera_id=camera_id,
                pan_index=pan_index,
            )
        model, seq = bgmod.load_checkpoint(latest)
        return Response(
            content=encode_png(model.current_background()),
            media_type="image/png",
            headers={"X-Background-Sequence": str(seq)},
        )

    @app.get("/violations")
    def list_violations(
        status: str | None = None,
        camera: str | None = None,
        time_from: str | None = Query(default=None, alias="from"),
        time_to: str | None = Query(default=None, alias="to"),
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=20, ge=1, le=200),
    ) -> dict:
        if status is not None and status not in SLIP_STATUSES:
            raise _bad_request(f"status must be one of {SLIP_STATUSES}, got {status!r}")
        for name, value in (("from", time_from), ("to", time_to)):
            if value is not None:
                try:
                    datetime.fromisoformat(value)
                except ValueError:
                    raise _bad_request(f"{name!r} must be an ISO-8601 timestamp, got {value!r}")
        records = dep.store.violations(
            status=status, camera_id=camera, time_from=time_from, time_to=time_to
        )
        start = (page - 1) * page_size
        items = records[start : start + page_size]
        return {
            "items": [r.to_dict() for r in items],
            "page": page,
            "page_size": page_size,
            "total": len(records),
            "pages": (len(records) + page_size - 1) // page_size,
        }

    @app.get("/violations/{violation_id}")
    def get_violation(violation_id: str) -> dict:
        try:
            record = dep.store.get_violation(violation_id)
        except UnknownRecordError:
            raise _not_found(f"unknown violation {violation_id!r}", violation_id=violation_id)
        out = record.to_dict()
        review = dep.store.get_review(violation_id)
        if review is not None:
            out["review"] = {
                "verdict": review.verdict,
                "operator": review.operator,
                "reviewed_at": review.reviewed_at,
            }
        return out

    @app.get("/frames")
    def list_frames(
        camera: str | None = None,
        pan: int | None = None,
        event: str | None = None,
        time_from: str | None = Query(default=None, alias="from"),
        time_to: str | None = Query(default=None, alias="to"),
        limit: int = Query(default=100, ge=1, le=2000),
    ) -> dict:
        entries = dep.store.frames(
            camera_id=camera, pan_index=pan, event=event, time_from=time_from, time_to=time_to, limit=limit
        )
        return {"items": [e.to_dict() for e in entries], "count": len(entries)}

    @app.get("/frames/{frame_id}/image")
    def get_frame_image(frame_id: str) -> Response:
        try:
            entry = dep.store.get_frame(frame_id)
        except UnknownRecordError:
            raise _not_found(f"unknown frame {frame_id!r}", frame_id=frame_id)
        gray = load_frame_gray(entry.frame.path)
        return Response(content=encode_png(gray), media_type="image/png")

    @app.get("/violations/{violation_id}/slip", response_class=HTMLResponse)
    def get_slip(violation_id: str) -> HTMLResponse:
        try:
            record = dep.store.get_violation(violation_id)
        except UnknownRecordError:
            raise _not_found(f"unknown violation {violation_id!r}", violation_id=violation_id)
        if record.status != "confirmed" or record.slip_no is None:
            raise _conflict(
                "not_confirmed",
                f"violation {violation_id} has no slip (status {record.status})",
                status=record.status,
            )
        review = dep.store.get_review(violation_id)
        camera = dep.cameras.get(record.frame.camera_id)
        location = camera.location_label if camera else ""
        gray = load_frame_gray(record.frame.path)
        img_b64 = base64.b64encode(encode_png(gray)).decode("ascii")
        e = html.escape
        runs = ", ".join(str(r) for r in record.per_line_longest_run)
        reviewer = e(review.operator) if review else ""
        reviewed_at = e(review.reviewed_at) if review else ""
        body = f"""<!doctype html>
<html><head><meta charset="utf-8"><title>Slip {e(record.slip_no)}</title>
<style>
body {{ font-family: sans-serif; margin: 2rem; max-width: 48rem; }}
table {{ border-collapse: collapse; margin: 1rem 0; }}
td, th {{ border: 1px solid #999; padding: 0.3rem 0.6rem; text-align: left; }}
img {{ max-width: 100%; border: 1px solid #333; }}
@media print {{ body {{ margin: 0; }} }}
</style></head>
<body>
<h1>Violation slip {e(record.slip_no)}</h1>
<table>
<tr><th>Violation</th><td>{e(record.violation_id)}</td></tr>
<tr><th>Camera</th><td>{e(record.frame.camera_id)} (pan {record.frame.pan_index})</td></tr>
<tr><th>Location</th><td>{e(location)}</td></tr>
<tr><th>Captured at</th><td>{e(record.frame.captured_at)}</td></tr>
<tr><th>Source frame</th><td>{e(record.frame.path)}</td></tr>
<tr><th>Mean longest run</th><td>{record.mean_longest_run:.1f} samples (per line: {e(runs)})</td></tr>
<tr><th>Thresholds</th><td>d_th={record.thresholds_used.d_th}, l_th={record.thresholds_used.l_th}, pixel_th={record.thresholds_used.pixel_th}</td></tr>
<tr><th>Confirmed by</th><td>{reviewer} at {reviewed_at}</td></tr>
</table>
<img alt="violation frame" src="data:image/png;base64,{img_b64}">
</body></html>
"""
        return HTMLResponse(content=body)

    # --- write endpoints ------------------------------------------------------

    @app.patch("/cameras/{camera_id}/pans/{pan_index}/config")
    def patch_config(
        camera_id: str,
        pan_index: int,
        body: ConfigPatchBody,
        x_operator_token: str | None = Header(default=None),
    ) -> dict:
        require_token(x_operator_token)
        if body.d_th is None and body.l_th is None and body.pixel_th is None and body.geometry is None:
            raise _bad_request("patch must set at least one of d_th, l_th, pixel_th, geometry")
        geometry = _geometry_from_body(body.geometry) if body.geometry is not None else None
        with dep.lock:
            camera = camera_or_404(camera_id)
            preset_or_404(camera, pan_index)
            try:
                updated = patch_camera(
                    camera,
                    pan_index,
                    d_th=body.d_th,
                    l_th=body.l_th,
                    pixel_th=body.pixel_th,
                    geometry=geometry,
                )
            except ConfigError as exc:
                raise _bad_request(str(exc))
            dep.cameras[camera_id] = updated
            if dep.config_path is not None:
                save_config(dep.cameras, dep.config_path)
            dep.store.append_config_audit(
                {
                    "camera_id": camera_id,
                    "pan_index": pan_index,
                    "changes": {
                        k: v
                        for k, v in (
                            ("d_th", body.d_th),
                            ("l_th", body.l_th),
                            ("pixel_th", body.pixel_th),
                            ("geometry", geometry_to_dict(geometry) if geometry else None),
                        )
                        if v is not None
                    },
                    "at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                }
            )
            return camera_to_dict(updated)

    @app.post("/violations/{violation_id}/review")
    def review_violation(
        violation_id: str,
        body: ReviewBody,
        x_operator_token: str | None = Header(default=None),
    ) -> dict:
        require_token(x_operator_token)
        if body.verdict not in ("confirm", "dismiss"):
            raise _bad_request(f"verdict must be 'confirm' or 'dismiss', got {body.verdict!r}")
        reviewed_at = body.reviewed_at or datetime.now(timezone.utc).isoformat(timespec="seconds")
        try:
            datetime.fromisoformat(reviewed_at)
        except ValueError:
            raise _bad_request(f"reviewed_at must be ISO-8601, got {reviewed_at!r}")
        try:
            updated = dep.store.append_review(violation_id, body.verdict, body.operator, reviewed_at)
        except UnknownRecordError:
            raise _not_found(f"unknown violation {violation_id!r}", violation_id=violation_id)
        except ValueError as exc:
            raise _conflict("already_reviewed", str(exc), violation_id=violation_id)
        return updated.to_dict()

    def _error_entry(frame_id: str, code: str, message: str) -> dict:
        return {"frame_id": frame_id, "ok": False, "error": {"code": code, "message": message}}

    def redetect_one(frame_id: str, overrides: ThresholdOverrides | None, persist: bool) -> dict:
        """Re-score one frame from the nearest prior checkpoint.

        Never raises: any precondition failure becomes an error entry so
        the batch can continue past it.
        """
        try:
            entry = dep.store.get_frame(frame_id)
        except UnknownRecordError:
            return _error_entry(frame_id, "unknown_frame", f"unknown frame {frame_id!r}")
        frame = entry.frame
        camera = dep.cameras.get(frame.camera_id)
        if camera is None:
            return _error_entry(frame_id, "unknown_camera", f"no camera {frame.camera_id!r} configured")
        preset = camera.preset(frame.pan_index)
        if preset is None:
            return _error_entry(
                frame_id, "unknown_pan", f"camera {frame.camera_id!r} has no pan preset {frame.pan_index}"
            )
        root = dep.checkpoint_dir / f"{frame.camera_id}_p{frame.pan_index}"
        source = checkpoint_before(root, frame.sequence_no)
        if source is None:
            return _error_entry(frame_id, "no_checkpoint", f"no background checkpoint precedes {frame_id}")
        model, checkpoint_seq = bgmod.load_checkpoint(source)
        try:
            gray = load_frame_gray(frame.path)
        except ApiError as exc:
            return _error_entry(frame_id, exc.code, exc.message)
        if gray.shape != model.shape:
            return _error_entry(
                frame_id,
                "shape_mismatch",
                f"frame is {gray.width}x{gray.height} but the checkpointed background is "
                f"{model.shape[1]}x{model.shape[0]}",
            )
        ov = overrides or ThresholdOverrides()
        d_th = ov.d_th if ov.d_th is not None else camera.d_th
        l_th = ov.l_th if ov.l_th is not None else camera.l_th
        pixel_th = ov.pixel_th if ov.pixel_th is not None else camera.pixel_th

        diff = abs_diff(gray, model.current_background())
        mean_diff = mean_gray(diff)
        foreground = mean_diff > d_th
        result: dict[str, Any] = {
            "frame_id": frame_id,
            "ok": True,
            "error": None,
            "checkpoint_sequence_no": checkpoint_seq,
            "mean_diff": mean_diff,
            "foreground": foreground,
            "thresholds": {"d_th": d_th, "l_th": l_th, "pixel_th": pixel_th},
            "per_line_longest_run": None,
            "mean_longest_run": None,
            "violated": False,
            "persisted": False,
            "violation_id": None,
        }
        if foreground:
            band = rasterize_band(preset.geometry, camera.frame_width, camera.frame_height)
            try:
                score = occlusion_score(diff, band, pixel_th).decided(l_th)
            except BandBoundsError as exc:
                return _error_entry(frame_id, "band_out_of_bounds", str(exc))
            result["per_line_longest_run"] = list(score.per_line_longest_run)
            result["mean_longest_run"] = score.mean_longest_run
            result["violated"] = bool(score.violated)
        if persist and result["violated"]:
            record = ViolationRecord(
                violation_id=violation_id_for(frame),
                frame=frame,
                mean_longest_run=result["mean_longest_run"],
                per_line_longest_run=tuple(result["per_line_longest_run"]),
                mean_diff=mean_diff,
                thresholds_used=Thresholds(d_th=d_th, l_th=l_th, pixel_th=pixel_th),
            )
            try:
                dep.store.append_violation(record)
            except DuplicateRecordError:
                result["persist_error"] = "already_recorded"
            else:
                result["persisted"] = True
                result["violation_id"] = record.violation_id
        return result

    @app.post("/redetect")
    def redetect(body: RedetectBody, x_operator_token: str | None = Header(default=None)) -> dict:
        require_token(x_operator_token)
        if dep.checkpoint_dir is None:
            raise _conflict("checkpoints_disabled", "service is running without a checkpoint directory")
        has_range = body.time_from is not None or body.time_to is not None
        if body.frame_ids is not None and has_range:
            raise _bad_request("give either frame_ids or a from/to time range, not both")
        if body.frame_ids is not None:
            if not body.frame_ids:
                raise _bad_request("frame_ids must not be empty")
            selected = list(body.frame_ids)
        elif has_range:
            for name, value in (("from", body.time_from), ("to", body.time_to)):
                if value is not None:
                    try:
                        datetime.fromisoformat(value)
                    except ValueError:
                        raise _bad_request(f"{name!r} must be an ISO-8601 timestamp, got {value!r}")
            entries = dep.store.frames(
                camera_id=body.camera,
                time_from=body.time_from,
                time_to=body.time_to,
                limit=body.limit,
            )
            entries.sort(key=lambda e: (e.frame.captured_at, e.frame_id))
            selected = [e.frame_id for e in entries]
        else:
            raise _bad_request("give frame_ids or a from/to time range")
        results = [redetect_one(fid, body.override_thresholds, body.persist) for fid in selected]
        return {"results": results, "count": len(results)}

    @app.post("/calibration/dryrun")
    def calibration_dryrun(body: DryRunBody) -> dict:
        if body.frame_width < 1 or body.frame_height < 1:
            raise _bad_request("frame dimensions must be positive")
        geometry = _geometry_from_body(body.geometry)
        try:
            band = rasterize_band(geometry, body.frame_width, body.frame_height)
        except BandBoundsError as exc:
            raise ApiError(
                400,
                "band_out_of_bounds",
                str(exc),
                {"line_index": exc.line_index, "coord": list(exc.coord)},
            )
        x_min, y_min, x_max, y_max = band.bounds()
        return {
            "geometry": geometry_to_dict(geometry),
            "lines": [[[x, y] for x, y in line] for line in band.lines],
            "bounds": {"x_min": x_min, "y_min": y_min, "x_max": x_max, "y_max": y_max},
        }

    if console_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=console_dir, html=True), name="console")

    return app
