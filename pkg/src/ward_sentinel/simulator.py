"""Synthetic monitoring sessions with known ground truth.

A scenario is a seeded schedule of room occupancy (counts by role, optional
scripted walking tracks) with a per-interval scene-motion level and a
detection noise model. Ground truth is derived from the schedule before
noise and before smoothing, so end-to-end comparisons measure the pipeline
rather than the generator. Camera frames are synthesized lazily as a
translating textured background whose shift rate realizes the scheduled
motion level exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy import ndimage

from .errors import InvalidSchedule
from .flow import MotionRecord
from .geometry import CrossingEvent, Polygon, RoiMask, expand_polygon, rasterize
from .logic import LogicalState
from .model import (
    ANALYSIS_DIMS,
    BoundingBox,
    DetectionRecord,
    Frame,
    PipelineConfig,
    ROLES,
    RoleDistribution,
)

DEFAULT_START_TS = 1709251200  # 2024-03-01T00:00:00Z
PERSON_CONFIDENCE = 0.8
BED_CONFIDENCE = 0.92
SPURIOUS_CONFIDENCE = 0.5
PRIMARY_ROLE_CONFIDENCE = 0.9


@dataclass(frozen=True)
class ScheduleInterval:
    """Occupancy and scene motion over [start_s, end_s)."""

    start_s: int
    end_s: int
    patients: int = 0
    staff: int = 0
    others: int = 0
    motion: float = 0.0

    def counts(self) -> dict[str, int]:
        return {"patient": self.patients, "staff": self.staff, "other": self.others}


@dataclass(frozen=True)
class OccupantTrack:
    """A scripted walker: position is piecewise-linear between waypoints.

    Waypoints are (t_s, x, y) with the anchor (foot position) in analysis
    coordinates; the occupant exists from the first to the last waypoint.
    """

    role: str
    waypoints: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        wps = tuple((int(t), float(x), float(y)) for t, x, y in self.waypoints)
        object.__setattr__(self, "waypoints", wps)
        if len(wps) < 2:
            raise ValueError("a track needs at least two waypoints")
        for a, b in zip(wps, wps[1:]):
            if b[0] <= a[0]:
                raise ValueError("waypoint times must be strictly increasing")

    def active(self, t: int) -> bool:
        return self.waypoints[0][0] <= t <= self.waypoints[-1][0]

    def position(self, t: int) -> tuple[float, float]:
        wps = self.waypoints
        for a, b in zip(wps, wps[1:]):
            if a[0] <= t <= b[0]:
                f = (t - a[0]) / (b[0] - a[0])
                return (a[1] + f * (b[1] - a[1]), a[2] + f * (b[2] - a[2]))
        raise ValueError(f"track not active at t={t}")


@dataclass(frozen=True)
class NoiseModel:
    p_miss: float = 0.0
    p_spur: float = 0.0
    p_role: float = 0.0

    def __post_init__(self):
        for name in ("p_miss", "p_spur", "p_role"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int
    duration_s: int
    schedule: tuple[ScheduleInterval, ...]
    tracks: tuple[OccupantTrack, ...] = ()
    noise: NoiseModel = field(default_factory=NoiseModel)
    session_id: str = "sim"
    start_ts: int = DEFAULT_START_TS
    frame_dims: tuple[int, int] = ANALYSIS_DIMS
    raw_frame_dims: tuple[int, int] = (960, 540)
    zone: Optional[tuple[tuple[float, float], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "schedule", tuple(self.schedule))
        object.__setattr__(self, "tracks", tuple(self.tracks))
        if self.duration_s < 1:
            raise InvalidSchedule("duration must be >= 1 second")
        if not self.schedule:
            raise InvalidSchedule("schedule is empty")
        cursor = 0
        for iv in self.schedule:
            if iv.start_s != cursor or iv.end_s <= iv.start_s:
                raise InvalidSchedule(
                    f"intervals must tile [0, {self.duration_s}) without gaps or "
                    f"overlap; got [{iv.start_s}, {iv.end_s}) at cursor {cursor}"
                )
            cursor = iv.end_s
        if cursor != self.duration_s:
            raise InvalidSchedule(f"schedule ends at {cursor}, expected {self.duration_s}")
        for tr in self.tracks:
            if tr.waypoints[0][0] < 0 or tr.waypoints[-1][0] >= self.duration_s:
                raise InvalidSchedule("track waypoints must lie within the scenario")

    def interval_at(self, t: int) -> ScheduleInterval:
        for iv in self.schedule:
            if iv.start_s <= t < iv.end_s:
                return iv
        raise InvalidSchedule(f"no interval at t={t}")

    def zone_polygon(self) -> Optional[Polygon]:
        return Polygon(self.zone) if self.zone else None


@dataclass(frozen=True)
class SimulationResult:
    spec: ScenarioSpec
    records: tuple[DetectionRecord, ...]
    motions: dict[int, MotionRecord]  # ts -> record, absent for the first second
    gt_states: tuple[LogicalState, ...]
    observation_log_intervals: tuple[tuple[int, int], ...]
    gt_crossings: tuple[CrossingEvent, ...]

    def frames(self) -> Iterator[Frame]:
        return _frame_stream(self.spec)

    def detections_by_ts(self) -> dict[int, DetectionRecord]:
        return {r.ts: r for r in self.records}


def _person_box(spec: ScenarioSpec, anchor_x: float, anchor_y: float) -> BoundingBox:
    """Person box whose bottom-center sits at the given anchor, clamped inside."""
    fw, fh = spec.frame_dims
    w = 0.07 * fw
    h = 0.22 * fh
    x = min(max(anchor_x - w / 2.0, 0.0), fw - w)
    y = min(max(anchor_y - h, 0.0), fh - h)
    return BoundingBox("person", x, y, w, h, PERSON_CONFIDENCE)


def _bed_box(spec: ScenarioSpec) -> BoundingBox:
    fw, fh = spec.frame_dims
    return BoundingBox("bed", 0.30 * fw, 0.45 * fh, 0.35 * fw, 0.40 * fh, BED_CONFIDENCE)


def _static_anchor(spec: ScenarioSpec, role: str, index: int) -> tuple[float, float]:
    """Deterministic resting spot per occupant: patients on the bed, staff and
    visitors along the near wall."""
    fw, fh = spec.frame_dims
    if role == "patient":
        return (0.475 * fw + index * 0.04 * fw, 0.70 * fh)
    if role == "staff":
        return (0.15 * fw + index * 0.08 * fw, 0.40 * fh)
    return (0.80 * fw + index * 0.06 * fw, 0.40 * fh)


def _true_occupants(spec: ScenarioSpec, t: int) -> list[tuple[str, str, float, float]]:
    """(identity, role, anchor_x, anchor_y) for every occupant present at t."""
    iv = spec.interval_at(t)
    out = []
    for role, count in iv.counts().items():
        for k in range(count):
            x, y = _static_anchor(spec, role, k)
            out.append((f"{role}-{k}", role, x, y))
    for i, tr in enumerate(spec.tracks):
        if tr.active(t):
            x, y = tr.position(t)
            out.append((f"track-{i}", tr.role, x, y))
    return out


def _role_distribution(primary: str) -> RoleDistribution:
    rest = (1.0 - PRIMARY_ROLE_CONFIDENCE) / 2.0
    return RoleDistribution(
        {r: (PRIMARY_ROLE_CONFIDENCE if r == primary else rest) for r in ROLES}
    )


def generate(spec: ScenarioSpec, cfg: PipelineConfig = PipelineConfig()) -> SimulationResult:
    """Produce the detection stream, ground truth, and observation log.

    Same seed, same outputs: all randomness flows from one generator in a
    fixed per-second draw order. Noise touches only the emitted detections.
    """
    rng = np.random.default_rng(spec.seed)
    fw, fh = spec.frame_dims

    zone_mask: Optional[RoiMask] = None
    zone = spec.zone_polygon()
    if zone is not None:
        zone_mask = rasterize(
            expand_polygon(zone, cfg.safety_zone_expansion), fw, fh, kind="safety_zone"
        )

    records = []
    motions: dict[int, MotionRecord] = {}
    gt_states = []
    gt_crossings: list[CrossingEvent] = []
    alone_runs: list[tuple[int, int]] = []
    run_start: Optional[int] = None
    prev_occupants: dict[str, tuple[str, float, float]] = {}

    for t in range(spec.duration_s):
        ts = spec.start_ts + t
        iv = spec.interval_at(t)
        occupants = _true_occupants(spec, t)

        # ground truth (pre-noise, pre-smoothing)
        count = len(occupants)
        any_patient = any(role == "patient" for _, role, _, _ in occupants)
        any_staff = any(role == "staff" for _, role, _, _ in occupants)
        patient_alone = count < 2 and any_patient
        gt_states.append(
            LogicalState(
                session_id=spec.session_id,
                ts=ts,
                person_alone=count < 2,
                patient_alone=patient_alone,
                supervised_by_staff=count >= 2 and any_staff,
                moving=iv.motion > cfg.moving_threshold,
                smoothed_person_count=float(count),
            )
        )
        if patient_alone and run_start is None:
            run_start = ts
        elif not patient_alone and run_start is not None:
            alone_runs.append((run_start, ts))
            run_start = None

        # schedule-implied crossings of the expanded zone, by identity
        cur_map = {ident: (role, x, y) for ident, role, x, y in occupants}
        if zone_mask is not None:
            for ident, (role, x, y) in cur_map.items():
                if ident in prev_occupants:
                    _, px, py = prev_occupants[ident]
                    was = zone_mask.contains(px, py)
                    now = zone_mask.contains(x, y)
                    if was != now:
                        direction = "exit" if was else "entry"
                        gt_crossings.append(
                            CrossingEvent(spec.session_id, ts, direction, -1)
                        )
        prev_occupants = cur_map

        # noisy detection record
        boxes: list[BoundingBox] = [_bed_box(spec)]
        roles: list[Optional[RoleDistribution]] = [None]
        for ident, role, x, y in occupants:
            if rng.uniform() < spec.noise.p_miss:
                continue
            reported = role
            if spec.noise.p_role > 0 and rng.uniform() < spec.noise.p_role:
                reported = str(rng.choice([r for r in ROLES if r != role]))
            boxes.append(_person_box(spec, x, y))
            roles.append(_role_distribution(reported))
        if spec.noise.p_spur > 0 and rng.uniform() < spec.noise.p_spur:
            sx = float(rng.uniform(0.05 * fw, 0.95 * fw))
            sy = float(rng.uniform(0.25 * fh, 0.95 * fh))
            box = _person_box(spec, sx, sy)
            boxes.append(
                BoundingBox("person", box.x, box.y, box.w, box.h, SPURIOUS_CONFIDENCE)
            )
            roles.append(_role_distribution(str(rng.choice(ROLES))))
        records.append(DetectionRecord(spec.session_id, ts, tuple(boxes), tuple(roles)))

        if t >= 1:
            motions[ts] = MotionRecord(
                spec.session_id, ts, {"scene": float(iv.motion)}
            )

    if run_start is not None:
        alone_runs.append((run_start, spec.start_ts + spec.duration_s))

    return SimulationResult(
        spec=spec,
        records=tuple(records),
        motions=motions,
        gt_states=tuple(gt_states),
        observation_log_intervals=tuple(alone_runs),
        gt_crossings=tuple(gt_crossings),
    )


def _base_texture(spec: ScenarioSpec) -> np.ndarray:
    rng = np.random.default_rng([spec.seed, 0xF1])
    rw, rh = spec.raw_frame_dims
    t = rng.uniform(0.0, 1.0, size=(rh, rw))
    t = ndimage.gaussian_filter(t, 3.0, mode="wrap")
    t -= t.min()
    t *= 190.0 / max(t.max(), 1e-9)
    return (t + 30.0).astype(np.uint8)


def _frame_stream(spec: ScenarioSpec) -> Iterator[Frame]:
    """Textured frames translating horizontally at the scheduled motion rate.

    The shift is applied at raw resolution scaled so the displacement at the
    flow analysis resolution equals the interval's motion level.
    """
    from .model import FLOW_DIMS

    base = _base_texture(spec)
    rw, rh = spec.raw_frame_dims
    scale = rw / FLOW_DIMS[0]
    offset = 0
    for t in range(spec.duration_s):
        if t > 0:
            offset += int(round(spec.interval_at(t).motion * scale))
        pixels = np.roll(base, offset, axis=1)[:, :, None]
        yield Frame(
            session_id=spec.session_id,
            ts=spec.start_ts + t,
            width=rw,
            height=rh,
            mode="NIR",
            pixels=pixels,
        )


def spec_from_dict(raw: dict) -> ScenarioSpec:
    """Build a ScenarioSpec from a plain-JSON mapping (the --spec file)."""
    schedule = tuple(
        ScheduleInterval(
            start_s=int(iv["start_s"]),
            end_s=int(iv["end_s"]),
            patients=int(iv.get("patients", 0)),
            staff=int(iv.get("staff", 0)),
            others=int(iv.get("others", 0)),
            motion=float(iv.get("motion", 0.0)),
        )
        for iv in raw["schedule"]
    )
    tracks = tuple(
        OccupantTrack(
            role=tr["role"],
            waypoints=tuple((wp[0], wp[1], wp[2]) for wp in tr["waypoints"]),
        )
        for tr in raw.get("tracks", [])
    )
    noise = NoiseModel(**raw.get("noise", {}))
    return ScenarioSpec(
        seed=int(raw["seed"]),
        duration_s=int(raw["duration_s"]),
        schedule=schedule,
        tracks=tracks,
        noise=noise,
        session_id=raw.get("session_id", "sim"),
        start_ts=int(raw.get("start_ts", DEFAULT_START_TS)),
        frame_dims=tuple(raw.get("frame_dims", ANALYSIS_DIMS)),
        raw_frame_dims=tuple(raw.get("raw_frame_dims", (960, 540))),
        zone=tuple(tuple(v) for v in raw["zone"]) if raw.get("zone") else None,
    )
