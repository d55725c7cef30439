"""Streaming patient-monitoring analytics.

Post-detection inference for 1 fps hospital-room video: dense optical flow
motion estimation, safety-zone geometry, role attribution, smoothed logical
states (patient alone, supervised by staff), hourly trends, and the
evaluation protocol that scores all of it against frame labels and
observation logs.
"""

from .model import (
    ANALYSIS_DIMS,
    DETECTOR_DIMS,
    FLOW_DIMS,
    BoundingBox,
    DetectionRecord,
    FlowParams,
    Frame,
    PipelineConfig,
    RoleDistribution,
    SessionMeta,
    validate_record,
    validate_stream,
)
from .flow import FlowField, MotionRecord, farneback_flow, roi_motion, to_grayscale_downsampled
from .geometry import CrossingEvent, Polygon, RoiMask, anchor_point, detect_crossings, expand_polygon, rasterize
from .logic import LogicalState, SmoothingWindow, attribute_roles, derive_state, update_window
from .trends import HourlyTrend, ObservationLog, aggregate_hourly, assisted_trends, cohort_average, log_to_states
from .evaluation import (
    EvalReport,
    FrameLabel,
    evaluate_frames,
    eval_patient_alone,
    fit_logistic,
    manual_accuracy,
    match_boxes,
    prf1,
    trend_accuracy,
)
from .camera_meta import BedPlacementStat, bed_stats, placement_distribution
from .simulator import NoiseModel, OccupantTrack, ScenarioSpec, ScheduleInterval, generate
from .pipeline import DetectorPort, ReplayDetector, SyntheticDetector, ingest_external, preprocess, run_pipeline
from .store import Store

__version__ = "0.1.0"
