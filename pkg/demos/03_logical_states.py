#!/usr/bin/env python3
"""Role attribution and smoothed logical states.

Shows the confidence-splitting rule for person roles, then walks a 5-second
smoothing window through a detection stream with a one-second glitch to show
why the published states are computed over a trailing average.
"""

from ward_sentinel import SmoothingWindow, attribute_roles, derive_state
from ward_sentinel.model import BoundingBox, DetectionRecord, PipelineConfig

cfg = PipelineConfig()

print("role attribution (primary keeps its confidence, the rest split the residual):")
for confs in ({"patient": 0.9}, {"staff": 0.4}, {"patient": 0.5, "staff": 0.5}):
    (dist,) = attribute_roles([confs])
    scores = {k: round(v, 3) for k, v in dist.scores.items()}
    print(f"  detector said {confs}  ->  {scores}")


def record(ts, n_persons):
    boxes, roles = [], []
    for i in range(n_persons):
        boxes.append(BoundingBox("person", 100 + 60 * i, 200, 40, 90, 0.8))
        roles.append(attribute_roles([{"patient" if i == 0 else "other": 0.85}])[0])
    return DetectionRecord("demo", ts, tuple(boxes), tuple(roles))


# stable single-patient room with a 1-second spike of 5 detections at t=8
counts = [1, 1, 1, 1, 1, 1, 1, 1, 5, 1, 1, 1, 1]
window = SmoothingWindow(cfg.smoothing_window_s)
print("\nts  persons  window-avg  person_alone  patient_alone")
for t, n in enumerate(counts):
    window.push(record(1000 + t, n))
    s = derive_state(window, cfg)
    print(f"{t:2d}  {n:7d}  {s.smoothed_person_count:10.2f}  {str(s.person_alone):12s}  {s.patient_alone}")
print("\nthe spike never drives the 5-second average to 2, so the alone state holds")
