import numpy as np
import pytest

from ward_sentinel.errors import MalformedRecord, NonMonotonicTimestamp
from ward_sentinel.model import (
    BoundingBox,
    DetectionRecord,
    Frame,
    PipelineConfig,
    RoleDistribution,
    SessionMeta,
    validate_record,
    validate_stream,
)
from ward_sentinel.schema import CanonicalRow, dumps_row, loads_row

from conftest import make_record, person_box, role_dist


def test_clamp_negative_origin():
    rec = DetectionRecord(
        "s", 10, (BoundingBox("person", -3, 0, 50, 50, 0.9),), (role_dist("patient"),)
    )
    out = validate_record(rec, (100, 100))
    box = out.boxes[0]
    assert (box.x, box.y, box.w, box.h) == (0, 0, 47, 50)


def test_clamp_overhanging_edge():
    rec = DetectionRecord("s", 10, (BoundingBox("bed", 80, 90, 50, 50, 0.9),), (None,))
    out = validate_record(rec, (100, 100))
    box = out.boxes[0]
    assert (box.x, box.y, box.w, box.h) == (80, 90, 20, 10)


def test_person_without_role_rejected():
    rec = DetectionRecord("s", 10, (person_box(),), (None,))
    with pytest.raises(MalformedRecord):
        validate_record(rec, (1088, 612))


def test_role_count_mismatch_rejected():
    rec = DetectionRecord("s", 10, (person_box(),), (role_dist("patient"), None))
    with pytest.raises(MalformedRecord):
        validate_record(rec, (1088, 612))


def test_box_fully_outside_rejected():
    rec = DetectionRecord(
        "s", 10, (BoundingBox("person", 200, 200, 30, 30, 0.5),), (role_dist("staff"),)
    )
    with pytest.raises(MalformedRecord):
        validate_record(rec, (100, 100))


def test_non_person_role_realigned_to_none():
    rec = DetectionRecord(
        "s", 10, (BoundingBox("bed", 10, 10, 30, 30, 0.9),), (role_dist("patient"),)
    )
    out = validate_record(rec, (100, 100))
    assert out.roles == (None,)


def test_stream_rejects_non_monotonic_ts():
    records = [make_record("s", 10), make_record("s", 11), make_record("s", 11)]
    stream = validate_stream(records, (1088, 612))
    next(stream)
    next(stream)
    with pytest.raises(NonMonotonicTimestamp):
        next(stream)


def test_stream_sessions_independent():
    records = [make_record("a", 10), make_record("b", 10), make_record("a", 11)]
    assert len(list(validate_stream(records, (1088, 612)))) == 3


def test_role_distribution_sum_enforced():
    with pytest.raises(ValueError):
        RoleDistribution({"patient": 0.5, "staff": 0.5, "other": 0.1})
    with pytest.raises(ValueError):
        RoleDistribution({"patient": 1.0, "staff": 0.0})


def test_role_distribution_tie_breaks_patient_first():
    d = RoleDistribution({"patient": 0.4, "staff": 0.4, "other": 0.2})
    assert d.primary() == "patient"
    d = RoleDistribution({"patient": 0.1, "staff": 0.45, "other": 0.45})
    assert d.primary() == "staff"


def test_frame_buffer_validation():
    with pytest.raises(ValueError):
        Frame("s", 0, 10, 10, "RGB", np.zeros((10, 10, 1), dtype=np.uint8))
    f = Frame("s", 0, 10, 8, "NIR", np.zeros((8, 10, 1), dtype=np.uint8))
    assert f.channels == 1
    with pytest.raises(ValueError):
        f.pixels[0, 0, 0] = 1  # read-only after construction


def test_session_meta_duration_filter():
    meta = SessionMeta("s", "h1", "small", "60-70", "F", 0, 3 * 24 * 3600)
    assert meta.meets_minimum_duration()
    short = SessionMeta("s", "h1", "small", "60-70", "F", 0, 3600)
    assert not short.meets_minimum_duration()
    with pytest.raises(ValueError):
        SessionMeta("s", "h1", "small", "60-70", "F", 10, 10)


def test_config_defaults_match_published_values():
    cfg = PipelineConfig()
    assert cfg.smoothing_window_s == 5
    assert cfg.safety_zone_expansion == 0.10
    assert (cfg.day_start_hour, cfg.night_start_hour) == (6, 21)
    assert (cfg.flow.pyr_scale, cfg.flow.levels, cfg.flow.winsize) == (0.5, 3, 15)
    assert (cfg.flow.iterations, cfg.flow.poly_n, cfg.flow.poly_sigma) == (3, 5, 1.2)


def test_config_rejects_bad_values():
    with pytest.raises(ValueError):
        PipelineConfig(smoothing_window_s=0)
    with pytest.raises(ValueError):
        PipelineConfig(iou_threshold=1.0)
    with pytest.raises(ValueError):
        PipelineConfig(motion_aggregation="median")


def test_validated_record_roundtrips_bit_exact(rng):
    for _ in range(50):
        n = int(rng.integers(0, 4))
        primaries = [str(rng.choice(("patient", "staff", "other"))) for _ in range(n)]
        rec = make_record("sess-7", int(rng.integers(0, 2**31)), primaries)
        rec = validate_record(rec, (1088, 612))
        row = CanonicalRow(rec)
        parsed = loads_row(dumps_row(row))
        assert parsed.record == rec
        assert dumps_row(parsed) == dumps_row(row)


def test_roundtrip_preserves_awkward_floats():
    box = BoundingBox("person", 0.1 + 0.2, 5.1e-17, 1e-3, 612.0, 1 / 3)
    rec = DetectionRecord("s", 1, (box,), (role_dist("other", conf=1 / 7),))
    parsed = loads_row(dumps_row(CanonicalRow(rec)))
    assert parsed.record == rec
