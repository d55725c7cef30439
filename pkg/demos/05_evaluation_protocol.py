#!/usr/bin/env python3
"""The evaluation protocol on constructed data.

Frame-level: greedy IoU matching, per-class precision/recall/F1 and the
patient-role and patient-alone classification scores. Trend-level: per-second
alignment against an observation log, scored per patient-day and period with
logistic-regression accuracy (or the agreement fraction when only one class
is present).
"""

import numpy as np

from ward_sentinel import FrameLabel, evaluate_frames, manual_accuracy, prf1, trend_accuracy
from ward_sentinel.logic import LogicalState
from ward_sentinel.model import BoundingBox, DetectionRecord, PipelineConfig, RoleDistribution
from ward_sentinel.trends import ObservationLog

print("precision/recall/F1 from raw counts:")
for counts in ((92, 8, 8), (9, 1, 1), (0, 0, 5)):
    print(f"  tp,fp,fn={counts} -> p,r,f1 = {tuple(round(v, 4) for v in prf1(*counts))}")


def dist(primary):
    return RoleDistribution({r: (0.9 if r == primary else 0.05) for r in ("patient", "staff", "other")})


# a tiny labeled corpus: 3 clean frames, one detector miss, one exception frame
person = BoundingBox("person", 100, 100, 40, 90, 1.0)
pred_person = BoundingBox("person", 102, 101, 40, 90, 0.85)
labels, preds = [], []
for ts in range(3):
    labels.append(FrameLabel("cam", ts, (person,), ("patient",)))
    preds.append(DetectionRecord("cam", ts, (pred_person,), (dist("patient"),)))
labels.append(FrameLabel("cam", 3, (person,), ("patient",)))
preds.append(DetectionRecord("cam", 3, (), ()))  # miss
labels.append(FrameLabel("cam", 4, (person,), ("staff",), exceptions=("hard to see",)))
preds.append(DetectionRecord("cam", 4, (), ()))

report = evaluate_frames(labels, preds)
pm = report.per_class["person"]
print(f"\nframe-level: person f1={pm.f1:.3f} (tp={pm.tp} fp={pm.fp} fn={pm.fn}), "
      f"macro f1={report.macro_f1:.3f}, excluded frames={report.frames_excluded}")
print(f"patient-role f1={report.patient_role.f1:.3f}, patient-alone f1={report.patient_alone.f1:.3f}")

# trend accuracy: a 24h session where the AI disagrees 4% of the time
rng = np.random.default_rng(11)
MIDNIGHT = 1709251200
truth = np.array([(i // 3600) % 24 not in (8, 14) for i in range(86400)])
ai = np.where(rng.uniform(size=86400) < 0.96, truth, ~truth)
states = [
    LogicalState("cam", MIDNIGHT + i, True, bool(ai[i]), False, False, 1.0)
    for i in range(86400)
]
intervals = []
run_start = None
for i, flag in enumerate(truth):
    if flag and run_start is None:
        run_start = MIDNIGHT + i
    if not flag and run_start is not None:
        intervals.append((run_start, MIDNIGHT + i))
        run_start = None
if run_start is not None:
    intervals.append((run_start, MIDNIGHT + 86400))

acc = trend_accuracy(states, ObservationLog("cam", tuple(intervals)), PipelineConfig())
print("\ntrend accuracy per period:")
for row in acc.rows:
    print(f"  {row.period:5s} [{row.method:8s}] accuracy={row.accuracy:.4f} over {row.seconds} s")

print("\nmanual accuracy (single-class fallback):",
      manual_accuracy([1, 1, 0, 1], [1, 0, 0, 1]))
