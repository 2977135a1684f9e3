"""Red-light stop-line violation detection.

Camera frames are gated by an adaptive background model (whole-image mean
absolute difference against the mean of the last five accepted
backgrounds); foreground frames are scored by the longest contiguous
occluded run along a five-line scan band over the stop line, and frames
whose mean run exceeds the line threshold become violation records that
operators review into printable slips.
"""

from .background import BackgroundModel, Background, Foreground, seed
from .config import CameraConfig, ConfigError, PanPreset, load_config, parse_config, save_config
from .evaluate import EvalReport, evaluate, load_labels
from .images import ColorImage, DimensionMismatchError, GrayImage, abs_diff, mean_gray, mean_of_images, to_grayscale
from .pipeline import Pipeline, ingest_list, run
from .records import FrameRecord, PipelineStats, Thresholds, ViolationRecord
from .stopline import (
    BandBoundsError,
    OcclusionResult,
    ScanBand,
    StopLineGeometry,
    is_violation,
    longest_run,
    occlusion_score,
    rasterize_band,
    round_half_away,
)
from .store import DuplicateRecordError, RecordStore, StoreError, UnknownRecordError

__version__ = "0.1.0"

__all__ = [
    "Background",
    "BackgroundModel",
    "BandBoundsError",
    "CameraConfig",
    "ColorImage",
    "ConfigError",
    "DimensionMismatchError",
    "DuplicateRecordError",
    "EvalReport",
    "Foreground",
    "FrameRecord",
    "GrayImage",
    "OcclusionResult",
    "PanPreset",
    "Pipeline",
    "PipelineStats",
    "RecordStore",
    "ScanBand",
    "StopLineGeometry",
    "StoreError",
    "Thresholds",
    "UnknownRecordError",
    "ViolationRecord",
    "abs_diff",
    "evaluate",
    "ingest_list",
    "is_violation",
    "load_config",
    "load_labels",
    "longest_run",
    "mean_gray",
    "mean_of_images",
    "occlusion_score",
    "parse_config",
    "rasterize_band",
    "round_half_away",
    "run",
    "save_config",
    "seed",
    "to_grayscale",
]
