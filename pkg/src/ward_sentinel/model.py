"""Shared domain vocabulary: frames, detections, roles, sessions, configuration.

All types here are immutable after construction and safe to share across
threads. Timestamps are whole seconds UTC (the capture cadence is 1 fps, so
sub-second precision carries no information).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Optional

import numpy as np

from .errors import MalformedRecord, NonMonotonicTimestamp

CLASSES = ("person", "bed", "chair")
ROLES = ("patient", "staff", "other")
MODES = ("RGB", "NIR")

# Fixed working resolutions of the processing chain (width, height).
ANALYSIS_DIMS = (1088, 612)
DETECTOR_DIMS = (608, 608)
FLOW_DIMS = (480, 270)

ROLE_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Frame:
    """One captured image at a whole-second timestamp.

    pixels is (height, width, channels) uint8, 3 channels for RGB and 1 for
    NIR. The buffer is marked read-only on construction.
    """

    session_id: str
    ts: int
    width: int
    height: int
    mode: str
    pixels: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown frame mode {self.mode!r}")
        if self.width < 1 or self.height < 1:
            raise ValueError("frame dimensions must be >= 1")
        channels = 3 if self.mode == "RGB" else 1
        expected = (self.height, self.width, channels)
        if self.pixels.shape != expected:
            raise ValueError(f"pixel buffer shape {self.pixels.shape} != {expected}")
        if self.pixels.dtype != np.uint8:
            raise ValueError("pixel buffer must be uint8")
        self.pixels.setflags(write=False)

    @property
    def channels(self) -> int:
        return 3 if self.mode == "RGB" else 1


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned detection box, top-left origin, pixel units.

    x/y may be negative before validation; validate_record clamps boxes to
    frame bounds. Width, height and confidence are checked on construction.
    """

    cls: str
    x: float
    y: float
    w: float
    h: float
    confidence: float

    def __post_init__(self):
        if self.cls not in CLASSES:
            raise ValueError(f"unknown box class {self.cls!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError("box width/height must be positive")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def clamped(self, frame_w: float, frame_h: float) -> "BoundingBox":
        """Intersect with the frame rectangle, preserving the far edges."""
        left = min(max(self.x, 0.0), frame_w)
        top = min(max(self.y, 0.0), frame_h)
        right = min(max(self.x2, 0.0), frame_w)
        bottom = min(max(self.y2, 0.0), frame_h)
        if right - left <= 0 or bottom - top <= 0:
            raise MalformedRecord(
                f"box {self.cls} ({self.x},{self.y},{self.w},{self.h}) "
                f"lies outside a {frame_w}x{frame_h} frame"
            )
        return replace(self, x=left, y=top, w=right - left, h=bottom - top)


@dataclass(frozen=True)
class RoleDistribution:
    """Per-person scores over {patient, staff, other}, summing to one.

    Ties in argmax break in the fixed order patient > staff > other: the
    downstream safety logic prefers assuming a patient is present.
    """

    scores: Mapping[str, float]
    fallback_uniform: bool = field(default=False, compare=False)

    def __post_init__(self):
        if set(self.scores) != set(ROLES):
            raise ValueError(f"role scores must cover exactly {ROLES}")
        for role, s in self.scores.items():
            if not 0.0 <= s <= 1.0:
                raise ValueError(f"score for {role} out of [0, 1]: {s}")
        total = sum(self.scores[r] for r in ROLES)
        if abs(total - 1.0) > ROLE_SUM_TOL:
            raise ValueError(f"role scores sum to {total}, expected 1")
        object.__setattr__(self, "scores", dict(self.scores))

    def primary(self) -> str:
        return max(ROLES, key=lambda r: (self.scores[r], -ROLES.index(r)))

    @staticmethod
    def uniform(fallback: bool = False) -> "RoleDistribution":
        return RoleDistribution({r: 1.0 / 3.0 for r in ROLES}, fallback_uniform=fallback)


@dataclass(frozen=True)
class DetectionRecord:
    """All detections for one session-second.

    roles is parallel to boxes: a RoleDistribution exactly where the box is a
    person, None elsewhere.
    """

    session_id: str
    ts: int
    boxes: tuple[BoundingBox, ...]
    roles: tuple[Optional[RoleDistribution], ...]

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        object.__setattr__(self, "roles", tuple(self.roles))

    def person_indices(self) -> list[int]:
        return [i for i, b in enumerate(self.boxes) if b.cls == "person"]

    def person_count(self) -> int:
        return sum(1 for b in self.boxes if b.cls == "person")

    def has_primary_role(self, role: str) -> bool:
        return any(
            r is not None and r.primary() == role
            for b, r in zip(self.boxes, self.roles)
            if b.cls == "person"
        )


MIN_SESSION_DURATION_S = 2 * 24 * 3600  # public-dataset ingest filter


@dataclass(frozen=True)
class SessionMeta:
    session_id: str
    hospital_id: str
    hospital_size_bucket: str
    age_bucket: str
    gender: str
    start_ts: int
    end_ts: int

    def __post_init__(self):
        if self.end_ts <= self.start_ts:
            raise ValueError("end_ts must be greater than start_ts")

    def meets_minimum_duration(self) -> bool:
        return self.end_ts - self.start_ts >= MIN_SESSION_DURATION_S


@dataclass(frozen=True)
class FlowParams:
    """Dense optical flow parameters (fixed in production deployments)."""

    pyr_scale: float = 0.5
    levels: int = 3
    winsize: int = 15
    iterations: int = 3
    poly_n: int = 5
    poly_sigma: float = 1.2

    def __post_init__(self):
        if not 0.0 < self.pyr_scale < 1.0:
            raise ValueError("pyr_scale must be in (0, 1)")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.winsize < 1 or self.winsize % 2 == 0:
            raise ValueError("winsize must be odd and positive")
        if self.poly_n < 3 or self.poly_n % 2 == 0:
            raise ValueError("poly_n must be odd and >= 3")
        if self.poly_sigma <= 0:
            raise ValueError("poly_sigma must be positive")


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable knobs of the analytics chain.

    moving_threshold is a mean flow magnitude in px/frame at the flow
    analysis resolution. Day runs [day_start_hour, night_start_hour) and
    night wraps around midnight.
    """

    smoothing_window_s: int = 5
    moving_threshold: float = 0.5
    iou_threshold: float = 0.5
    day_start_hour: int = 6
    night_start_hour: int = 21
    safety_zone_expansion: float = 0.10
    motion_aggregation: str = "mean_magnitude"  # or "magnitude_of_mean"
    flow: FlowParams = field(default_factory=FlowParams)
    # Safety-zone polygons per session (analysis-resolution vertex pairs);
    # the "default" key applies to sessions without their own entry.
    zones: Mapping[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.smoothing_window_s < 1:
            raise ValueError("smoothing_window_s must be >= 1")
        if not 0.0 < self.iou_threshold < 1.0:
            raise ValueError("iou_threshold must be in (0, 1)")
        if self.safety_zone_expansion < 0.0:
            raise ValueError("safety_zone_expansion must be >= 0")
        if self.motion_aggregation not in ("mean_magnitude", "magnitude_of_mean"):
            raise ValueError(f"unknown motion_aggregation {self.motion_aggregation!r}")
        object.__setattr__(
            self,
            "zones",
            {
                sid: tuple((float(x), float(y)) for x, y in verts)
                for sid, verts in dict(self.zones).items()
            },
        )

    def zone_for(self, session_id: str):
        verts = self.zones.get(session_id, self.zones.get("default"))
        return verts

    @staticmethod
    def from_dict(raw: Mapping) -> "PipelineConfig":
        raw = dict(raw)
        flow = FlowParams(**raw.pop("flow", {}))
        return PipelineConfig(flow=flow, **raw)


def validate_record(rec: DetectionRecord, frame_dims: tuple[float, float]) -> DetectionRecord:
    """Clamp boxes to the frame and enforce the record invariants.

    Non-person roles are realigned (dropped to None); a person box without a
    role distribution rejects the whole record, as does any box that falls
    entirely outside the frame.
    """
    frame_w, frame_h = frame_dims
    if len(rec.roles) != len(rec.boxes):
        raise MalformedRecord(
            f"record {rec.session_id}@{rec.ts}: {len(rec.roles)} roles "
            f"for {len(rec.boxes)} boxes"
        )
    boxes = []
    roles = []
    for i, (box, role) in enumerate(zip(rec.boxes, rec.roles)):
        if box.cls == "person" and role is None:
            raise MalformedRecord(
                f"record {rec.session_id}@{rec.ts}: person box {i} has no role distribution"
            )
        try:
            boxes.append(box.clamped(frame_w, frame_h))
        except MalformedRecord as e:
            raise MalformedRecord(f"record {rec.session_id}@{rec.ts}: {e}") from None
        roles.append(role if box.cls == "person" else None)
    return replace(rec, boxes=tuple(boxes), roles=tuple(roles))


def validate_stream(
    records: Iterable[DetectionRecord], frame_dims: tuple[float, float]
) -> Iterator[DetectionRecord]:
    """Validate records one by one, enforcing strictly increasing ts per session."""
    last_ts: dict[str, int] = {}
    for rec in records:
        prev = last_ts.get(rec.session_id)
        if prev is not None and rec.ts <= prev:
            raise NonMonotonicTimestamp(
                f"session {rec.session_id}: ts {rec.ts} after {prev}"
            )
        last_ts[rec.session_id] = rec.ts
        yield validate_record(rec, frame_dims)
