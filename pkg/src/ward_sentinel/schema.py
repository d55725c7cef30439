"""Canonical JSONL record schema and frame-label parsing.

One object per monitored second:

    {"session_id": ..., "ts": ..., "boxes": [{"cls","x","y","w","h","conf"}],
     "roles": [null | {"patient","staff","other"}],
     "motion": {"scene","bed","safety_zone"},      # optional, keys per ROI
     "logical": {"person_alone","patient_alone","supervised_by_staff",
                 "moving","smoothed_person_count"}} # optional

motion/logical are absent on ingest and filled by the pipeline. Rows are
serialized with sorted keys and no whitespace so identical content is
byte-identical. Floats survive the round trip exactly (repr-based JSON).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .errors import SchemaMismatch
from .evaluation import FrameLabel
from .flow import MotionRecord
from .logic import LogicalState
from .model import BoundingBox, DetectionRecord, RoleDistribution

SCHEMA_VERSION = 1
_MOTION_KEYS = ("scene", "bed", "safety_zone")
_LOGICAL_FLAGS = ("person_alone", "patient_alone", "supervised_by_staff", "moving")


@dataclass(frozen=True)
class CanonicalRow:
    record: DetectionRecord
    motion: Optional[MotionRecord] = None
    logical: Optional[LogicalState] = None


def row_to_obj(row: CanonicalRow) -> dict:
    rec = row.record
    obj = {
        "session_id": rec.session_id,
        "ts": rec.ts,
        "boxes": [
            {"cls": b.cls, "x": b.x, "y": b.y, "w": b.w, "h": b.h, "conf": b.confidence}
            for b in rec.boxes
        ],
        "roles": [None if r is None else dict(r.scores) for r in rec.roles],
    }
    if row.motion is not None:
        obj["motion"] = dict(row.motion.magnitudes)
    if row.logical is not None:
        s = row.logical
        obj["logical"] = {
            "person_alone": s.person_alone,
            "patient_alone": s.patient_alone,
            "supervised_by_staff": s.supervised_by_staff,
            "moving": s.moving,
            "smoothed_person_count": s.smoothed_person_count,
        }
    return obj


def dumps_row(row: CanonicalRow) -> str:
    return json.dumps(row_to_obj(row), sort_keys=True, separators=(",", ":"))


def obj_to_row(obj: dict) -> CanonicalRow:
    try:
        session_id = obj["session_id"]
        ts = int(obj["ts"])
        boxes = tuple(
            BoundingBox(b["cls"], b["x"], b["y"], b["w"], b["h"], b["conf"])
            for b in obj["boxes"]
        )
        roles = tuple(
            None if r is None else RoleDistribution(r) for r in obj["roles"]
        )
        record = DetectionRecord(session_id, ts, boxes, roles)
        motion = None
        if obj.get("motion") is not None:
            unknown = set(obj["motion"]) - set(_MOTION_KEYS)
            if unknown:
                raise SchemaMismatch(f"unknown motion keys {sorted(unknown)}")
            motion = MotionRecord(session_id, ts, obj["motion"])
        logical = None
        if obj.get("logical") is not None:
            lg = obj["logical"]
            logical = LogicalState(
                session_id=session_id,
                ts=ts,
                smoothed_person_count=float(lg["smoothed_person_count"]),
                **{k: bool(lg[k]) for k in _LOGICAL_FLAGS},
            )
        return CanonicalRow(record, motion, logical)
    except SchemaMismatch:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaMismatch(f"bad canonical row: {e}") from None


def loads_row(line: str) -> CanonicalRow:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise SchemaMismatch(f"invalid JSON: {e}") from None
    if not isinstance(obj, dict):
        raise SchemaMismatch("canonical row must be a JSON object")
    return obj_to_row(obj)


def label_to_obj(label: FrameLabel) -> dict:
    return {
        "session_id": label.session_id,
        "ts": label.ts,
        "boxes": [
            {
                "cls": b.cls,
                "x": b.x,
                "y": b.y,
                "w": b.w,
                "h": b.h,
                "conf": b.confidence,
                "role": r,
            }
            for b, r in zip(label.boxes, label.roles)
        ],
        "in_bed": label.in_bed,
        "exceptions": list(label.exceptions),
    }


def obj_to_label(obj: dict) -> FrameLabel:
    try:
        boxes = []
        roles = []
        for b in obj["boxes"]:
            boxes.append(
                BoundingBox(
                    b["cls"], b["x"], b["y"], b["w"], b["h"], b.get("conf", 1.0)
                )
            )
            roles.append(b.get("role"))
        return FrameLabel(
            session_id=obj["session_id"],
            ts=int(obj["ts"]),
            boxes=tuple(boxes),
            roles=tuple(roles),
            in_bed=obj.get("in_bed"),
            exceptions=tuple(obj.get("exceptions", ())),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaMismatch(f"bad frame label: {e}") from None


def read_labels_jsonl(path) -> list[FrameLabel]:
    labels = []
    with open(path) as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                labels.append(obj_to_label(json.loads(line)))
            except (json.JSONDecodeError, SchemaMismatch) as e:
                raise SchemaMismatch(f"{path}:{i}: {e}") from None
    return labels


def read_rows_jsonl(path) -> list[CanonicalRow]:
    rows = []
    with open(path) as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(loads_row(line))
            except SchemaMismatch as e:
                raise SchemaMismatch(f"{path}:{i}: {e}") from None
    return rows


def write_rows_jsonl(rows, path) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(dumps_row(row) + "\n")
