"""Frame-level detection metrics and trend accuracy against observation logs.

Detection matching is greedy in descending prediction confidence at a fixed
IoU threshold (the standard detection protocol); role and alone metrics are
binary classification counts on top of that. Trend accuracy compares the
per-second alone stream with logged ground truth per patient-day and period,
using a single-feature logistic regression where both classes are present
and the plain agreement fraction where they are not.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.special import expit

from .errors import (
    EmptyPeriod,
    MisalignedFrames,
    NoOverlap,
    NonConvergence,
    SingleClassTarget,
)
from .logic import LogicalState
from .model import BoundingBox, CLASSES, DetectionRecord, PipelineConfig
from .trends import ObservationLog, log_to_states, _utc

RIDGE = 1e-6
GRAD_TOL = 1e-8
MAX_NEWTON_ITER = 50
PERIODS = ("day", "night", "full")


@dataclass(frozen=True)
class FrameLabel:
    """Manual annotation of one frame: gt boxes, person roles, scene tags."""

    session_id: str
    ts: int
    boxes: tuple[BoundingBox, ...]
    roles: tuple[Optional[str], ...]
    in_bed: Optional[bool] = None
    exceptions: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        object.__setattr__(self, "roles", tuple(self.roles))
        object.__setattr__(self, "exceptions", tuple(self.exceptions))
        if len(self.roles) != len(self.boxes):
            raise ValueError("roles must be parallel to boxes")
        for b, r in zip(self.boxes, self.roles):
            if (b.cls == "person") != (r is not None):
                raise ValueError("exactly person boxes carry a role label")

    @property
    def frame_id(self) -> str:
        return f"{self.session_id}:{self.ts}"

    def alone_flag(self) -> bool:
        persons = [r for b, r in zip(self.boxes, self.roles) if b.cls == "person"]
        return len(persons) < 2 and any(r == "patient" for r in persons)


@dataclass(frozen=True)
class ClassMetrics:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @staticmethod
    def from_counts(tp: int, fp: int, fn: int) -> "ClassMetrics":
        p, r, f1 = prf1(tp, fp, fn)
        return ClassMetrics(tp, fp, fn, p, r, f1)

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass(frozen=True)
class EvalReport:
    per_class: dict[str, ClassMetrics]
    macro_f1: float
    patient_role: ClassMetrics
    patient_alone: Optional[ClassMetrics]
    frames_evaluated: int
    frames_excluded: int

    def to_dict(self) -> dict:
        return {
            "per_class": {c: m.to_dict() for c, m in self.per_class.items()},
            "macro_f1": self.macro_f1,
            "patient_role": self.patient_role.to_dict(),
            "patient_alone": None
            if self.patient_alone is None
            else self.patient_alone.to_dict(),
            "frames_evaluated": self.frames_evaluated,
            "frames_excluded": self.frames_excluded,
        }


@dataclass(frozen=True)
class TrendAccuracyRow:
    session_id: str
    date: date
    period: str
    method: str  # "logistic" | "manual"
    accuracy: float
    seconds: int


@dataclass(frozen=True)
class TrendAccuracyReport:
    rows: tuple[TrendAccuracyRow, ...]
    summary: dict[str, dict]  # period -> {mean, std, n}

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "session_id": r.session_id,
                    "date": r.date.isoformat(),
                    "period": r.period,
                    "method": r.method,
                    "accuracy": r.accuracy,
                    "seconds": r.seconds,
                }
                for r in self.rows
            ],
            "summary": self.summary,
        }


def iou(a: BoundingBox, b: BoundingBox) -> float:
    ix = min(a.x2, b.x2) - max(a.x, b.x)
    iy = min(a.y2, b.y2) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.w * a.h + b.w * b.h - inter
    return inter / union


def match_boxes(
    preds: Sequence[BoundingBox],
    gts: Sequence[BoundingBox],
    iou_threshold: float,
) -> tuple[int, int, int, list[tuple[int, int]]]:
    """Greedy confidence-ordered matching within one frame and class.

    Each prediction, in descending confidence order, claims the unmatched
    ground-truth box with the highest IoU at or above the threshold.
    Returns (TP, FP, FN, matches) with matches as (pred_idx, gt_idx) pairs.
    """
    order = sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, i))
    taken = [False] * len(gts)
    matches = []
    for pi in order:
        best_j = -1
        best_iou = -1.0
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            v = iou(preds[pi], gt)
            if v >= iou_threshold and v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0:
            taken[best_j] = True
            matches.append((pi, best_j))
    tp = len(matches)
    return tp, len(preds) - tp, len(gts) - tp, matches


def prf1(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall, F1 with the zero-denominator convention of 0."""
    if tp < 0 or fp < 0 or fn < 0:
        raise ValueError("counts must be non-negative")
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def eval_patient_alone(
    preds: Sequence[bool], labels: Sequence[bool]
) -> ClassMetrics:
    """Binary classification metrics with alone as the positive class."""
    if len(preds) != len(labels):
        raise MisalignedFrames(f"{len(preds)} predictions vs {len(labels)} labels")
    tp = sum(1 for p, y in zip(preds, labels) if p and y)
    fp = sum(1 for p, y in zip(preds, labels) if p and not y)
    fn = sum(1 for p, y in zip(preds, labels) if not p and y)
    return ClassMetrics.from_counts(tp, fp, fn)


def evaluate_frames(
    labels: Sequence[FrameLabel],
    preds: Sequence[DetectionRecord],
    iou_threshold: float = 0.5,
    pred_alone: Optional[Mapping[str, bool]] = None,
    exclude_exceptions: bool = True,
) -> EvalReport:
    """Full frame-level report over aligned label/prediction frame sets.

    pred_alone optionally maps frame ids to the pipeline's smoothed
    patient_alone; without it the flag is derived instantaneously from the
    prediction record. Exception-tagged frames are dropped from all metrics
    when exclude_exceptions is set.
    """
    by_key = {(p.session_id, p.ts): p for p in preds}
    label_keys = {(l.session_id, l.ts) for l in labels}
    if label_keys != set(by_key):
        missing = sorted(label_keys ^ set(by_key))[:3]
        raise MisalignedFrames(f"label/prediction frame sets differ, e.g. {missing}")

    counts = {c: [0, 0, 0] for c in CLASSES}  # tp, fp, fn
    role_counts = [0, 0, 0]
    alone_preds: list[bool] = []
    alone_labels: list[bool] = []
    excluded = 0
    for label in labels:
        if exclude_exceptions and label.exceptions:
            excluded += 1
            continue
        rec = by_key[(label.session_id, label.ts)]
        for cls in CLASSES:
            p_idx = [i for i, b in enumerate(rec.boxes) if b.cls == cls]
            g_idx = [i for i, b in enumerate(label.boxes) if b.cls == cls]
            tp, fp, fn, matches = match_boxes(
                [rec.boxes[i] for i in p_idx],
                [label.boxes[i] for i in g_idx],
                iou_threshold,
            )
            counts[cls][0] += tp
            counts[cls][1] += fp
            counts[cls][2] += fn
            if cls == "person":
                matched_p = set()
                matched_g = set()
                for mi, mj in matches:
                    pi, gi = p_idx[mi], g_idx[mj]
                    matched_p.add(pi)
                    matched_g.add(gi)
                    pred_patient = (
                        rec.roles[pi] is not None and rec.roles[pi].primary() == "patient"
                    )
                    gt_patient = label.roles[gi] == "patient"
                    role_counts[0] += pred_patient and gt_patient
                    role_counts[1] += pred_patient and not gt_patient
                    role_counts[2] += gt_patient and not pred_patient
                for i in p_idx:  # unmatched predicted patients are false positives
                    if i not in matched_p and rec.roles[i] is not None:
                        role_counts[1] += rec.roles[i].primary() == "patient"
                for i in g_idx:  # unmatched labeled patients are misses
                    if i not in matched_g:
                        role_counts[2] += label.roles[i] == "patient"
        if pred_alone is not None:
            alone_preds.append(bool(pred_alone[f"{label.session_id}:{label.ts}"]))
        else:
            alone_preds.append(
                rec.person_count() < 2 and rec.has_primary_role("patient")
            )
        alone_labels.append(label.alone_flag())

    per_class = {c: ClassMetrics.from_counts(*counts[c]) for c in CLASSES}
    macro_f1 = sum(m.f1 for m in per_class.values()) / len(CLASSES)
    return EvalReport(
        per_class=per_class,
        macro_f1=macro_f1,
        patient_role=ClassMetrics.from_counts(*role_counts),
        patient_alone=eval_patient_alone(alone_preds, alone_labels),
        frames_evaluated=len(labels) - excluded,
        frames_excluded=excluded,
    )


def fit_logistic(
    x: Sequence[float], y: Sequence[float]
) -> tuple[np.ndarray, float]:
    """Intercept-plus-one-feature logistic regression by Newton-Raphson.

    A tiny L2 ridge keeps the optimum finite on separable data; iteration
    stops when the penalized gradient norm drops below GRAD_TOL. Returns the
    weights (intercept, slope) and the in-sample accuracy at threshold 0.5.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise ValueError("x and y must be equal-length non-empty vectors")
    classes = np.unique(y)
    if classes.size < 2:
        raise SingleClassTarget(
            "target has a single class; use manual_accuracy instead"
        )

    X = np.column_stack([np.ones_like(x), x])
    w = np.zeros(2)

    def penalized_loglik(wv):
        eta = X @ wv
        return float(np.sum(y * eta - np.logaddexp(0.0, eta)) - 0.5 * RIDGE * wv @ wv)

    ll = penalized_loglik(w)
    for _ in range(MAX_NEWTON_ITER):
        eta = X @ w
        p = expit(eta)
        grad = X.T @ (y - p) - RIDGE * w
        if np.linalg.norm(grad) <= GRAD_TOL:
            break
        weights = p * (1.0 - p)
        hess = X.T @ (weights[:, None] * X) + RIDGE * np.eye(2)
        step = np.linalg.solve(hess, grad)
        # damped Newton: halve until the penalized objective improves
        t = 1.0
        for _ in range(40):
            cand = w + t * step
            cand_ll = penalized_loglik(cand)
            if cand_ll >= ll - 1e-12:
                w, ll = cand, cand_ll
                break
            t *= 0.5
        else:
            raise NonConvergence("step halving failed to improve the objective")
    else:
        raise NonConvergence(
            f"gradient norm above {GRAD_TOL} after {MAX_NEWTON_ITER} iterations"
        )
    accuracy = float(np.mean((expit(X @ w) >= 0.5) == (y > 0.5)))
    return w, accuracy


def manual_accuracy(x: Sequence[float], y: Sequence[float]) -> float:
    """Proportion of positions where prediction and ground truth agree."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError("x and y must have equal length")
    if x.size == 0:
        raise EmptyPeriod("cannot score an empty period")
    return float(np.mean(x == y))


def _period_of(ts: int, cfg: PipelineConfig) -> str:
    hour = _utc(ts).hour
    return "day" if cfg.day_start_hour <= hour < cfg.night_start_hour else "night"


def trend_accuracy(
    states: Sequence[LogicalState],
    log: ObservationLog,
    cfg: PipelineConfig = PipelineConfig(),
) -> TrendAccuracyReport:
    """Per patient-day and period accuracy of the alone stream vs the log.

    Analysis runs at the per-second level. Periods with both classes in the
    ground truth are scored by logistic-regression accuracy, single-class
    periods by the agreement fraction. The summary reports the mean and the
    population standard deviation across patient-days.
    """
    if not states:
        raise NoOverlap("no states to evaluate")
    grid = [s.ts for s in states]
    truth = log_to_states(log, grid)
    by_day: dict[date, list[tuple[int, bool, bool]]] = {}
    for s, y in zip(states, truth):
        by_day.setdefault(_utc(s.ts).date(), []).append((s.ts, s.patient_alone, y))

    rows = []
    for day, entries in sorted(by_day.items()):
        for period in PERIODS:
            if period == "full":
                selected = entries
            else:
                selected = [e for e in entries if _period_of(e[0], cfg) == period]
            if not selected:
                continue
            x = np.array([float(e[1]) for e in selected])
            y = np.array([float(e[2]) for e in selected])
            try:
                _, acc = fit_logistic(x, y)
                method = "logistic"
            except SingleClassTarget:
                acc = manual_accuracy(x, y)
                method = "manual"
            rows.append(
                TrendAccuracyRow(
                    session_id=states[0].session_id,
                    date=day,
                    period=period,
                    method=method,
                    accuracy=acc,
                    seconds=len(selected),
                )
            )
    if not rows:
        raise NoOverlap("states and observation log share no scored seconds")

    summary = {}
    for period in PERIODS:
        accs = [r.accuracy for r in rows if r.period == period]
        if accs:
            summary[period] = {
                "mean": float(np.mean(accs)),
                "std": float(np.std(accs)),
                "n": len(accs),
            }
    return TrendAccuracyReport(rows=tuple(rows), summary=summary)
