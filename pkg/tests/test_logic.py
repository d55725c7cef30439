import numpy as np
import pytest

from ward_sentinel.errors import EmptyWindow, OutOfOrderRecord
from ward_sentinel.flow import MotionRecord
from ward_sentinel.logic import (
    LogicalState,
    SmoothingWindow,
    attribute_roles,
    derive_state,
    update_window,
)
from ward_sentinel.model import PipelineConfig

from conftest import make_record, random_stream


def brute_force_state(records_by_ts, motions_by_ts, ts, cfg):
    """Oracle: re-read the raw records for one second from scratch.

    Window content is exactly the records with timestamp in
    (ts - window, ts], scanned in ascending order.
    """
    window = [
        records_by_ts[t]
        for t in range(ts - cfg.smoothing_window_s + 1, ts + 1)
        if t in records_by_ts
    ]
    counts = [r.person_count() for r in window]
    avg = sum(counts) / len(counts)
    any_patient = any(r.has_primary_role("patient") for r in window)
    any_staff = any(r.has_primary_role("staff") for r in window)
    scene = [
        motions_by_ts[r.ts].magnitudes["scene"]
        for r in window
        if r.ts in motions_by_ts
    ]
    moving = bool(scene) and sum(scene) / len(scene) > cfg.moving_threshold
    return LogicalState(
        session_id=window[-1].session_id,
        ts=ts,
        person_alone=avg < 2.0,
        patient_alone=avg < 2.0 and any_patient,
        supervised_by_staff=avg >= 2.0 and any_staff,
        moving=moving,
        smoothed_person_count=avg,
    )


class TestAttributeRoles:
    def test_patient_high_confidence(self):
        (dist,) = attribute_roles([{"patient": 0.9}])
        assert dist.scores == pytest.approx({"patient": 0.9, "staff": 0.05, "other": 0.05})
        assert dist.primary() == "patient"

    def test_staff_low_confidence(self):
        (dist,) = attribute_roles([{"staff": 0.4}])
        assert dist.scores == pytest.approx({"staff": 0.4, "patient": 0.3, "other": 0.3})

    def test_tie_breaks_to_patient(self):
        (dist,) = attribute_roles([{"patient": 0.5, "staff": 0.5}])
        assert dist.primary() == "patient"
        assert dist.scores == {"patient": 0.5, "staff": 0.25, "other": 0.25}

    def test_multiple_confidences_argmax_wins(self):
        (dist,) = attribute_roles([{"patient": 0.2, "staff": 0.7, "other": 0.1}])
        assert dist.scores == pytest.approx({"staff": 0.7, "patient": 0.15, "other": 0.15})

    def test_no_signal_yields_flagged_uniform(self):
        (dist,) = attribute_roles([{}])
        assert dist.fallback_uniform
        assert dist.scores == pytest.approx({r: 1 / 3 for r in ("patient", "staff", "other")})


class TestSmoothingWindow:
    def test_eviction_keeps_last_five(self):
        w = SmoothingWindow(5)
        for ts in range(100, 106):
            w.push(make_record("s", ts))
        assert len(w) == 5
        assert [r.ts for r in w.records()] == [101, 102, 103, 104, 105]

    def test_long_gap_resets(self):
        w = SmoothingWindow(5)
        w.push(make_record("s", 100))
        w.push(make_record("s", 110))
        assert len(w) == 1
        assert w.last_ts == 110

    def test_short_gap_keeps_recent(self):
        w = SmoothingWindow(5)
        w.push(make_record("s", 100))
        w.push(make_record("s", 103))
        assert [r.ts for r in w.records()] == [100, 103]

    def test_duplicate_ts_rejected(self):
        w = SmoothingWindow(5)
        w.push(make_record("s", 100))
        with pytest.raises(OutOfOrderRecord):
            w.push(make_record("s", 100))
        with pytest.raises(OutOfOrderRecord):
            update_window(w, make_record("s", 99))


class TestDeriveState:
    cfg = PipelineConfig()

    def _run(self, counts_roles, motions=None):
        w = SmoothingWindow(self.cfg.smoothing_window_s)
        for i, primaries in enumerate(counts_roles):
            ts = 1000 + i
            motion = None
            if motions is not None and motions[i] is not None:
                motion = MotionRecord("s", ts, {"scene": motions[i]})
            w.push(make_record("s", ts, primaries), motion)
        return derive_state(w, self.cfg)

    def test_patient_alone_quiet_room(self):
        state = self._run([["patient"]] * 5, motions=[0.0] * 5)
        assert state.person_alone and state.patient_alone
        assert not state.supervised_by_staff and not state.moving
        assert state.smoothed_person_count == 1.0

    def test_average_below_two_is_alone(self):
        counts = [1, 1, 1, 3, 3]
        state = self._run([["patient"] * c for c in counts])
        assert state.smoothed_person_count == pytest.approx(1.8)
        assert state.person_alone

    def test_two_with_staff_is_supervised(self):
        state = self._run([["patient", "staff"]] * 5)
        assert state.supervised_by_staff and not state.person_alone

    def test_two_without_staff_not_supervised(self):
        state = self._run([["patient", "other"]] * 5)
        assert not state.supervised_by_staff and not state.person_alone

    def test_moving_thresholds_window_mean(self):
        state = self._run([["patient"]] * 5, motions=[0.0, 0.0, 2.0, 2.0, 2.0])
        assert state.moving  # mean 1.2 > 0.5
        state = self._run([["patient"]] * 5, motions=[0.0, 0.0, 0.0, 0.0, 2.0])
        assert not state.moving  # mean 0.4 < 0.5

    def test_no_motion_data_means_not_moving(self):
        state = self._run([["patient"]] * 3, motions=[None, None, None])
        assert not state.moving

    def test_empty_window_raises(self):
        with pytest.raises(EmptyWindow):
            derive_state(SmoothingWindow(5), self.cfg)


class TestOracleEquivalence:
    def test_streaming_equals_brute_force(self):
        cfg = PipelineConfig()
        for seed in range(3):
            rng = np.random.default_rng(seed)
            records, motions = random_stream(rng, f"s{seed}", 2000)
            by_ts = {r.ts: r for r in records}
            w = SmoothingWindow(cfg.smoothing_window_s)
            for rec in records:
                w.push(rec, motions.get(rec.ts))
                got = derive_state(w, cfg)
                expected = brute_force_state(by_ts, motions, rec.ts, cfg)
                assert got == expected  # exact, including the float average

    def test_patient_alone_implies_person_alone(self):
        cfg = PipelineConfig()
        rng = np.random.default_rng(99)
        records, motions = random_stream(rng, "s", 3000)
        w = SmoothingWindow(cfg.smoothing_window_s)
        for rec in records:
            w.push(rec, motions.get(rec.ts))
            state = derive_state(w, cfg)
            assert state.person_alone or not state.patient_alone
            assert not (state.supervised_by_staff and state.person_alone)


class TestGlitchRobustness:
    def test_single_second_spike_never_flips_alone(self):
        cfg = PipelineConfig()
        for spike in (2, 3, 4, 5):
            for pos in range(4, 26):
                w = SmoothingWindow(cfg.smoothing_window_s)
                flipped = False
                for i in range(30):
                    count = spike if i == pos else 1
                    w.push(make_record("s", 500 + i, ["patient"] * count))
                    if i >= 4:  # past warm-up
                        flipped |= not derive_state(w, cfg).person_alone
                assert not flipped, f"spike {spike} at {pos} flipped person_alone"
