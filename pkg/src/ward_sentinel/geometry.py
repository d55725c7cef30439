"""Polygonal regions of interest: safety-zone expansion, rasterization,
containment, and boundary-crossing detection.

The safety zone arrives as a polygon drawn by the virtual monitor. Its pixel
mask is produced by uniformly scaling the polygon about its area centroid
(scaling by 1+f multiplies the perimeter by exactly 1+f) and rasterizing with
the even-odd rule at pixel centers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegeneratePolygon, WrongClass, ZoneDimensionMismatch
from .model import BoundingBox, DetectionRecord

AREA_EPS = 1e-12
# Cross-frame anchor matching gate, as a fraction of the frame diagonal.
MATCH_GATE_DIAG_FRACTION = 0.15

ROI_KINDS = ("scene", "bed", "safety_zone")


@dataclass(frozen=True)
class Polygon:
    """Simple polygon, implicitly closed, real pixel coordinates."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise DegeneratePolygon("polygon needs at least 3 vertices")
        if abs(self.signed_area()) <= AREA_EPS:
            raise DegeneratePolygon("polygon has zero area")
        if self._self_intersects():
            raise DegeneratePolygon("polygon is self-intersecting")

    def signed_area(self) -> float:
        v = np.asarray(self.vertices)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def area(self) -> float:
        return abs(self.signed_area())

    def perimeter(self) -> float:
        v = np.asarray(self.vertices)
        return float(np.sum(np.hypot(*(np.roll(v, -1, axis=0) - v).T)))

    def centroid(self) -> tuple[float, float]:
        """Area centroid (not the vertex mean)."""
        v = np.asarray(self.vertices)
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = 0.5 * np.sum(cross)
        cx = float(np.sum((x + xn) * cross) / (6.0 * a))
        cy = float(np.sum((y + yn) * cross) / (6.0 * a))
        return cx, cy

    def is_convex(self) -> bool:
        v = np.asarray(self.vertices)
        d = np.roll(v, -1, axis=0) - v
        dn = np.roll(d, -1, axis=0)
        cross = d[:, 0] * dn[:, 1] - d[:, 1] * dn[:, 0]
        signs = cross[np.abs(cross) > AREA_EPS]
        return signs.size == 0 or bool(np.all(signs > 0) or np.all(signs < 0))

    def _self_intersects(self) -> bool:
        verts = self.vertices
        n = len(verts)
        edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue  # adjacent edges share a vertex by construction
                if _segments_cross(*edges[i], *edges[j]):
                    return True
        return False


def _segments_cross(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


@dataclass(frozen=True)
class RoiMask:
    """Per-pixel membership bits for one region of interest."""

    kind: str
    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        if self.kind not in ROI_KINDS:
            raise ValueError(f"unknown ROI kind {self.kind!r}")
        if self.bits.shape != (self.height, self.width):
            raise ValueError("mask bits shape must be (height, width)")
        bits = self.bits.astype(bool)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @staticmethod
    def scene(width: int, height: int) -> "RoiMask":
        return RoiMask("scene", width, height, np.ones((height, width), dtype=bool))

    def count(self) -> int:
        return int(self.bits.sum())

    def contains(self, x: float, y: float) -> bool:
        """Membership of the pixel under a continuous point, clamped to frame."""
        px = min(max(int(np.floor(x)), 0), self.width - 1)
        py = min(max(int(np.floor(y)), 0), self.height - 1)
        return bool(self.bits[py, px])


@dataclass(frozen=True)
class CrossingEvent:
    session_id: str
    ts: int
    direction: str  # "exit" | "entry"
    person_index: int

    def __post_init__(self):
        if self.direction not in ("exit", "entry"):
            raise ValueError(f"unknown crossing direction {self.direction!r}")


def expand_polygon(p: Polygon, factor: float) -> Polygon:
    """Scale p uniformly about its area centroid by (1 + factor)."""
    if factor < 0:
        raise ValueError("expansion factor must be >= 0")
    cx, cy = p.centroid()
    scale = 1.0 + factor
    verts = tuple(
        (cx + scale * (x - cx), cy + scale * (y - cy)) for x, y in p.vertices
    )
    return Polygon(verts)


def rasterize(p: Polygon, width: int, height: int, kind: str = "safety_zone") -> RoiMask:
    """Even-odd rasterization: pixel (i, j) is set iff its center lies inside p.

    Pixels outside the frame simply do not exist, which clips the polygon to
    the frame for free.
    """
    if width < 1 or height < 1:
        raise ValueError("mask dimensions must be >= 1")
    yc = np.arange(height, dtype=np.float64) + 0.5
    xc = np.arange(width, dtype=np.float64) + 0.5
    crossings = np.zeros((height, width), dtype=np.int32)
    verts = p.vertices
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        if y1 == y2:
            continue  # horizontal edge never crosses a scanline interior
        rows = (y1 > yc) != (y2 > yc)
        if not rows.any():
            continue
        xi = x1 + (yc[rows] - y1) * (x2 - x1) / (y2 - y1)
        # count edges strictly to the right of each pixel center
        crossings[rows] += xi[:, None] > xc[None, :]
    return RoiMask(kind, width, height, crossings % 2 == 1)


def bed_roi_from_detection(
    rec: DetectionRecord, width: int, height: int
) -> Optional[RoiMask]:
    """Rectangle mask of the highest-confidence bed box, or None if no bed."""
    beds = [b for b in rec.boxes if b.cls == "bed"]
    if not beds:
        return None
    best = max(beds, key=lambda b: b.confidence)
    bits = np.zeros((height, width), dtype=bool)
    x1 = min(max(int(np.floor(best.x)), 0), width)
    y1 = min(max(int(np.floor(best.y)), 0), height)
    x2 = min(max(int(np.ceil(best.x2)), 0), width)
    y2 = min(max(int(np.ceil(best.y2)), 0), height)
    bits[y1:y2, x1:x2] = True
    return RoiMask("bed", width, height, bits)


def anchor_point(b: BoundingBox) -> tuple[float, float]:
    """Bottom-center of a person box: the foot-position proxy."""
    if b.cls != "person":
        raise WrongClass(f"anchor_point expects a person box, got {b.cls!r}")
    return (b.x + b.w / 2.0, b.y + b.h)


def _match_anchors(
    prev_anchors: Sequence[tuple[float, float]],
    cur_anchors: Sequence[tuple[float, float]],
    gate: float,
) -> list[tuple[int, int]]:
    """Greedy globally-nearest pairing under a distance gate."""
    pairs = []
    for i, pa in enumerate(prev_anchors):
        for j, ca in enumerate(cur_anchors):
            d = float(np.hypot(pa[0] - ca[0], pa[1] - ca[1]))
            if d <= gate:
                pairs.append((d, i, j))
    pairs.sort()
    used_prev: set[int] = set()
    used_cur: set[int] = set()
    matches = []
    for d, i, j in pairs:
        if i in used_prev or j in used_cur:
            continue
        used_prev.add(i)
        used_cur.add(j)
        matches.append((i, j))
    return matches


def detect_crossings(
    prev: DetectionRecord, cur: DetectionRecord, zone: RoiMask
) -> list[CrossingEvent]:
    """Zone boundary crossings between two consecutive seconds.

    Person anchors are matched greedily by distance under a gate of 15% of
    the frame diagonal; a matched anchor moving inside->outside emits an exit
    and outside->inside an entry. Unmatched persons emit nothing.
    """
    if cur.ts != prev.ts + 1 or cur.session_id != prev.session_id:
        raise ValueError("detect_crossings expects consecutive seconds of one session")
    for rec in (prev, cur):
        for b in rec.boxes:
            if b.x2 > zone.width or b.y2 > zone.height:
                raise ZoneDimensionMismatch(
                    f"box ({b.x},{b.y},{b.w},{b.h}) exceeds zone dims "
                    f"{zone.width}x{zone.height}; detections and zone mask must "
                    "share a coordinate space"
                )
    prev_idx = prev.person_indices()
    cur_idx = cur.person_indices()
    prev_anchors = [anchor_point(prev.boxes[i]) for i in prev_idx]
    cur_anchors = [anchor_point(cur.boxes[i]) for i in cur_idx]
    gate = MATCH_GATE_DIAG_FRACTION * float(np.hypot(zone.width, zone.height))
    events = []
    for pi, ci in _match_anchors(prev_anchors, cur_anchors, gate):
        was_inside = zone.contains(*prev_anchors[pi])
        is_inside = zone.contains(*cur_anchors[ci])
        if was_inside and not is_inside:
            events.append(CrossingEvent(cur.session_id, cur.ts, "exit", cur_idx[ci]))
        elif not was_inside and is_inside:
            events.append(CrossingEvent(cur.session_id, cur.ts, "entry", cur_idx[ci]))
    return events
