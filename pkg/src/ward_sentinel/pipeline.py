"""Streaming runtime: preprocessing, the detector port, per-second inference,
persistence, and external ingest.

Per-session state is one previous flow frame plus the smoothing window, so
memory stays bounded regardless of session length. Sessions are independent;
within a session the stages are strictly sequential (flow needs the previous
frame, the window needs order).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Optional

import numpy as np

from .errors import AdapterError, SchemaMismatch, TooSmallInput, UnknownAdapter, ValidationError
from .flow import MotionRecord, farneback_flow, roi_motion
from .geometry import Polygon, RoiMask, bed_roi_from_detection, detect_crossings, expand_polygon, rasterize
from .imageops import resize_bilinear, resize_bicubic, to_grayscale, to_uint8
from .logic import SmoothingWindow, attribute_roles, derive_state
from .model import (
    ANALYSIS_DIMS,
    DETECTOR_DIMS,
    FLOW_DIMS,
    BoundingBox,
    DetectionRecord,
    Frame,
    PipelineConfig,
    RoleDistribution,
    validate_record,
)
from .schema import CanonicalRow
from .simulator import SimulationResult
from .store import Store

MIN_INPUT_DIM = 64


@dataclass(frozen=True)
class PreprocessedFrame:
    """The three working resolutions derived from one captured frame."""

    analysis: np.ndarray  # 1088x612, uint8, original channel count
    detector: np.ndarray  # 608x608, uint8 (bicubic, Catmull-Rom)
    flow_gray: np.ndarray  # 480x270, float64 luma


def preprocess(frame: Frame) -> PreprocessedFrame:
    """Resize a captured frame to the fixed working resolutions.

    Bicubic resampling feeds the detector; everything else is bilinear.
    Aspect ratios are not letterboxed (fixed output resolutions).
    """
    if min(frame.width, frame.height) < MIN_INPUT_DIM:
        raise TooSmallInput(
            f"frame {frame.width}x{frame.height} below minimum {MIN_INPUT_DIM}px"
        )
    analysis = resize_bilinear(frame.pixels, *ANALYSIS_DIMS)
    detector = resize_bicubic(analysis, *DETECTOR_DIMS)
    flow_gray = resize_bilinear(to_grayscale(analysis), *FLOW_DIMS)
    return PreprocessedFrame(
        analysis=to_uint8(analysis),
        detector=to_uint8(detector),
        flow_gray=flow_gray,
    )


@dataclass(frozen=True)
class DetectorOutput:
    """Raw detector port result for one frame.

    Either role_confidences (per-role detector scores, run through
    attribute_roles) or ready-made roles may be supplied per person box.
    """

    boxes: tuple[BoundingBox, ...]
    role_confidences: Optional[tuple[Optional[Mapping[str, float]], ...]] = None
    roles: Optional[tuple[Optional[RoleDistribution], ...]] = None


class DetectorPort:
    """Boundary to the object detector; the model itself lives elsewhere."""

    def detect(
        self, session_id: str, ts: int, frame: Optional[PreprocessedFrame]
    ) -> DetectorOutput:
        raise NotImplementedError


class ReplayDetector(DetectorPort):
    """Replays recorded detections keyed by (session_id, ts)."""

    def __init__(self, records: Iterable[DetectionRecord]):
        self._by_key = {(r.session_id, r.ts): r for r in records}

    def detect(self, session_id, ts, frame=None) -> DetectorOutput:
        rec = self._by_key.get((session_id, ts))
        if rec is None:
            raise AdapterError("no recorded detections", session_id, ts)
        return DetectorOutput(boxes=rec.boxes, roles=rec.roles)


class SyntheticDetector(DetectorPort):
    """Serves a simulation's detections as raw per-role confidences."""

    def __init__(self, sim: SimulationResult):
        self._by_ts = sim.detections_by_ts()
        self._session_id = sim.spec.session_id

    def detect(self, session_id, ts, frame=None) -> DetectorOutput:
        if session_id != self._session_id or ts not in self._by_ts:
            raise AdapterError("no synthetic detections", session_id, ts)
        rec = self._by_ts[ts]
        confidences = tuple(
            None if r is None else {r.primary(): r.scores[r.primary()]}
            for r in rec.roles
        )
        return DetectorOutput(boxes=rec.boxes, role_confidences=confidences)


@dataclass(frozen=True)
class SourceItem:
    """One second of input: a frame, prerecorded detections/motion, or both."""

    session_id: str
    ts: int
    frame: Optional[Frame] = None
    detections: Optional[DetectorOutput] = None
    motion: Optional[MotionRecord] = None


def frame_source(frames: Iterable[Frame]) -> Iterator[SourceItem]:
    for f in frames:
        yield SourceItem(session_id=f.session_id, ts=f.ts, frame=f)


def rows_source(rows: Iterable[CanonicalRow]) -> Iterator[SourceItem]:
    """Replay canonical rows (detections plus any recorded motion)."""
    for row in rows:
        rec = row.record
        yield SourceItem(
            session_id=rec.session_id,
            ts=rec.ts,
            detections=DetectorOutput(boxes=rec.boxes, roles=rec.roles),
            motion=row.motion,
        )


def _scale_record(rec: DetectionRecord, sx: float, sy: float) -> DetectionRecord:
    boxes = tuple(
        replace(b, x=b.x * sx, y=b.y * sy, w=b.w * sx, h=b.h * sy) for b in rec.boxes
    )
    return replace(rec, boxes=boxes)


def _scale_polygon(p: Polygon, sx: float, sy: float) -> Polygon:
    return Polygon(tuple((x * sx, y * sy) for x, y in p.vertices))


class _SessionState:
    def __init__(self, cfg: PipelineConfig, session_id: str, store: Store):
        self.window = SmoothingWindow(cfg.smoothing_window_s)
        self.prev_gray: Optional[np.ndarray] = None
        self.prev_record: Optional[DetectionRecord] = None
        self.prev_ts: Optional[int] = None
        self.writer = store.writer(session_id)
        self.zone_analysis: Optional[RoiMask] = None
        self.zone_flow: Optional[RoiMask] = None
        verts = cfg.zone_for(session_id)
        if verts:
            zone = expand_polygon(Polygon(verts), cfg.safety_zone_expansion)
            self.zone_analysis = rasterize(zone, *ANALYSIS_DIMS, kind="safety_zone")
            fx = FLOW_DIMS[0] / ANALYSIS_DIMS[0]
            fy = FLOW_DIMS[1] / ANALYSIS_DIMS[1]
            self.zone_flow = rasterize(
                _scale_polygon(zone, fx, fy), *FLOW_DIMS, kind="safety_zone"
            )


@dataclass
class PipelineStats:
    sessions: int = 0
    rows: int = 0
    crossings: int = 0
    elapsed_s: float = 0.0
    sealed_segments: list[str] = field(default_factory=list)


def run_pipeline(
    source: Iterable[SourceItem],
    cfg: PipelineConfig,
    store: Store,
    detector: Optional[DetectorPort] = None,
) -> PipelineStats:
    """Drive the per-second chain and persist canonical rows.

    For each item: preprocess -> detector port -> validate -> optical flow
    against the previous frame -> per-ROI motion -> window update -> logical
    state -> append. A source gap longer than one second drops the previous
    flow frame (motion restarts), and the smoothing window applies its own
    gap rule.
    """
    t0 = time.perf_counter()
    stats = PipelineStats()
    states: dict[str, _SessionState] = {}
    scene_mask = RoiMask.scene(*FLOW_DIMS)
    fx = FLOW_DIMS[0] / ANALYSIS_DIMS[0]
    fy = FLOW_DIMS[1] / ANALYSIS_DIMS[1]

    for item in source:
        st = states.get(item.session_id)
        if st is None:
            st = states[item.session_id] = _SessionState(cfg, item.session_id, store)
            stats.sessions += 1
        if st.prev_ts is not None and item.ts != st.prev_ts + 1:
            st.prev_gray = None
            st.prev_record = None

        pre: Optional[PreprocessedFrame] = None
        if item.frame is not None:
            pre = preprocess(item.frame)

        det = item.detections
        if det is None:
            if detector is None:
                raise AdapterError(
                    "source item has no detections and no detector port is configured",
                    item.session_id,
                    item.ts,
                )
            try:
                det = detector.detect(item.session_id, item.ts, pre)
            except AdapterError:
                raise
            except Exception as e:
                raise AdapterError(str(e), item.session_id, item.ts) from e

        if det.roles is not None:
            roles = det.roles
        else:
            confs = det.role_confidences or tuple(
                {} if b.cls == "person" else None for b in det.boxes
            )
            person_confs = [c or {} for b, c in zip(det.boxes, confs) if b.cls == "person"]
            attributed = iter(attribute_roles(person_confs))
            roles = tuple(
                next(attributed) if b.cls == "person" else None for b in det.boxes
            )
        rec = validate_record(
            DetectionRecord(item.session_id, item.ts, tuple(det.boxes), roles),
            ANALYSIS_DIMS,
        )

        motion = item.motion
        if motion is None and pre is not None and st.prev_gray is not None:
            flow = farneback_flow(st.prev_gray, pre.flow_gray, cfg.flow)
            mags = {"scene": roi_motion(flow, scene_mask, cfg.motion_aggregation)}
            bed_mask = bed_roi_from_detection(_scale_record(rec, fx, fy), *FLOW_DIMS)
            if bed_mask is not None and bed_mask.count():
                mags["bed"] = roi_motion(flow, bed_mask, cfg.motion_aggregation)
            if st.zone_flow is not None and st.zone_flow.count():
                mags["safety_zone"] = roi_motion(flow, st.zone_flow, cfg.motion_aggregation)
            motion = MotionRecord(item.session_id, item.ts, mags)
        if pre is not None:
            st.prev_gray = pre.flow_gray

        if st.zone_analysis is not None and st.prev_record is not None:
            for event in detect_crossings(st.prev_record, rec, st.zone_analysis):
                st.writer.append_crossing(event)
                stats.crossings += 1
        st.prev_record = rec
        st.prev_ts = item.ts

        st.window.push(rec, motion)
        logical = derive_state(st.window, cfg)
        st.writer.append(CanonicalRow(record=rec, motion=motion, logical=logical))
        stats.rows += 1

    for st in states.values():
        stats.sealed_segments.extend(st.writer.seal())
    stats.elapsed_s = time.perf_counter() - t0
    return stats


@dataclass(frozen=True)
class IngestReport:
    rows_ok: int
    rows_rejected: int
    errors: tuple[tuple[int, str], ...]  # (line number, message)
    sealed_segments: tuple[str, ...]

    def summary(self) -> str:
        lines = [f"ingested {self.rows_ok} rows, rejected {self.rows_rejected}"]
        lines += [f"  line {n}: {msg}" for n, msg in self.errors]
        return "\n".join(lines)


ADAPTERS = ("canonical", "flat-csv")


def _read_flat_csv(path) -> Iterator[tuple[int, CanonicalRow]]:
    """Adapter for a flat per-box CSV export.

    Columns: session_id,ts,cls,x,y,w,h,conf,patient,staff,other (role columns
    empty for non-person rows). Boxes sharing session_id+ts form one record.
    """
    groups: dict[tuple[str, int], list[tuple[int, dict]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"session_id", "ts", "cls", "x", "y", "w", "h", "conf"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise SchemaMismatch(
                f"flat-csv needs columns {sorted(required)}, got {reader.fieldnames}"
            )
        for lineno, raw in enumerate(reader, start=2):
            groups.setdefault((raw["session_id"], int(raw["ts"])), []).append(
                (lineno, raw)
            )
    for (sid, ts), members in sorted(groups.items()):
        lineno = members[0][0]
        boxes = []
        roles = []
        for _, raw in members:
            boxes.append(
                BoundingBox(
                    raw["cls"],
                    float(raw["x"]),
                    float(raw["y"]),
                    float(raw["w"]),
                    float(raw["h"]),
                    float(raw["conf"]),
                )
            )
            if raw["cls"] == "person":
                roles.append(
                    RoleDistribution(
                        {
                            "patient": float(raw["patient"]),
                            "staff": float(raw["staff"]),
                            "other": float(raw["other"]),
                        }
                    )
                )
            else:
                roles.append(None)
        yield lineno, CanonicalRow(DetectionRecord(sid, ts, tuple(boxes), tuple(roles)))


def ingest_external(path, adapter: str, store: Store) -> IngestReport:
    """Map an external export into the canonical store.

    Rows that fail validation are rejected with a line-numbered diagnostic;
    the rest are ingested. Re-ingesting the same file leaves the store
    byte-identical.
    """
    if adapter not in ADAPTERS:
        raise UnknownAdapter(f"unknown adapter {adapter!r}; available: {ADAPTERS}")

    numbered: list[tuple[int, CanonicalRow]] = []
    errors: list[tuple[int, str]] = []
    if adapter == "canonical":
        from .schema import loads_row

        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    numbered.append((lineno, loads_row(line)))
                except (SchemaMismatch, ValidationError) as e:
                    errors.append((lineno, str(e)))
    else:
        numbered = []
        for lineno, row in _read_flat_csv(path):
            numbered.append((lineno, row))

    by_session: dict[str, list[tuple[int, CanonicalRow]]] = {}
    for lineno, row in numbered:
        try:
            validated = validate_record(row.record, ANALYSIS_DIMS)
        except ValidationError as e:
            errors.append((lineno, str(e)))
            continue
        by_session.setdefault(row.record.session_id, []).append(
            (lineno, CanonicalRow(validated, row.motion, row.logical))
        )

    sealed: list[str] = []
    ok = 0
    for sid in sorted(by_session):
        rows = sorted(by_session[sid], key=lambda pair: pair[1].record.ts)
        writer = store.writer(sid)
        last_ts = None
        for lineno, row in rows:
            if last_ts is not None and row.record.ts == last_ts:
                errors.append((lineno, f"duplicate ts {row.record.ts} for session {sid}"))
                continue
            writer.append(row)
            last_ts = row.record.ts
            ok += 1
        sealed.extend(writer.seal())
    return IngestReport(
        rows_ok=ok,
        rows_rejected=len(errors),
        errors=tuple(sorted(errors)),
        sealed_segments=tuple(sealed),
    )
