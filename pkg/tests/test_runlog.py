from __future__ import annotations

import json

import pytest

from fairride.errors import LogVersionError, OrderingError, TruncatedRecordError
from fairride.runlog import (Dropoff, Matched, Pickup, Position, RequestArrived,
                             RunHeader, RunLog, RunLogWriter, event_from_obj,
                             event_to_obj, file_digest, iter_runlog, read_runlog,
                             sort_key, write_runlog)


def make_header(**overrides) -> RunHeader:
    config = {"horizon_epochs": 10, "epoch_length_s": 60, "n_taxis": 2,
              "placement": "uniform", "movement_mode": "continuous",
              "constraints": {"capacity": 4, "max_pickup_delay_s": 300,
                              "max_detour_delay_s": 600, "epoch_length_s": 60}}
    fields = {"config": config, "network_digest": "aa", "zones_digest": "bb",
              "policy": "rpd", "seed": 1}
    fields.update(overrides)
    return RunHeader(**fields)


SAMPLE_EVENTS = [
    Position(0, 0, 1, 0, 0),
    Position(1, 0, 2, 0, 0),
    RequestArrived(1, 1, 3, 0, 10.5, 180),
    Matched(1, 0, 0),
    Pickup(1, 0, 0),
    Dropoff(1, 0, 180),
]


class TestRoundTrip:
    def test_write_then_read_identical(self, tmp_path):
        path = tmp_path / "run.fairlog"
        log = RunLog(make_header(), SAMPLE_EVENTS)
        write_runlog(path, log)
        back = read_runlog(path)
        assert back.header == log.header
        assert back.events == log.events

    def test_reserialization_is_byte_identical(self, tmp_path):
        first = tmp_path / "a.fairlog"
        second = tmp_path / "b.fairlog"
        write_runlog(first, RunLog(make_header(), SAMPLE_EVENTS))
        write_runlog(second, read_runlog(first))
        assert first.read_bytes() == second.read_bytes()

    def test_streaming_equals_whole_file(self, tmp_path):
        path = tmp_path / "run.fairlog"
        write_runlog(path, RunLog(make_header(), SAMPLE_EVENTS))
        assert list(iter_runlog(path)) == read_runlog(path).events

    def test_event_obj_round_trip(self):
        for event in SAMPLE_EVENTS:
            assert event_from_obj(event_to_obj(event)) == event


class TestOrdering:
    def test_out_of_order_append_rejected(self, tmp_path):
        writer = RunLogWriter(tmp_path / "x.fairlog", make_header())
        writer.append(Dropoff(1, 0, 180))
        with pytest.raises(OrderingError):
            writer.append(Pickup(1, 0, 0))
        writer.close()

    def test_append_block_canonicalizes(self, tmp_path):
        path = tmp_path / "x.fairlog"
        with RunLogWriter(path, make_header()) as writer:
            writer.append_block(reversed(SAMPLE_EVENTS))
        assert read_runlog(path).events == SAMPLE_EVENTS

    def test_equal_second_dropoff_sorts_before_pickup(self):
        # same taxi dropping one rider and picking another in the same second
        drop = Dropoff(1, 0, 120)
        pick = Pickup(2, 0, 120)
        assert sort_key(drop, 60) < sort_key(pick, 60)

    def test_request_lifecycle_precedence_at_equal_times(self):
        arr = RequestArrived(5, 1, 3, 2, 1.0, 180)
        mat = Matched(5, 0, 2)
        pick = Pickup(5, 0, 120)
        assert sort_key(arr, 60) < sort_key(mat, 60) < sort_key(pick, 60)


class TestReadErrors:
    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "bad.fairlog"
        obj = make_header().to_obj()
        obj["format"] = "fairride-log/99"
        path.write_text(json.dumps(obj) + "\n")
        with pytest.raises(LogVersionError, match="99"):
            read_runlog(path)

    def test_truncated_final_line_reports_offset(self, tmp_path):
        path = tmp_path / "trunc.fairlog"
        write_runlog(path, RunLog(make_header(), SAMPLE_EVENTS))
        data = path.read_bytes()
        cut = data[:-10]
        path.write_bytes(cut)
        events = []
        with pytest.raises(TruncatedRecordError) as err:
            for event in iter_runlog(path):
                events.append(event)
        # earlier events recoverable, offset names the broken line's start
        assert len(events) == len(SAMPLE_EVENTS) - 1
        assert err.value.byte_offset == len(cut) - len(cut.rsplit(b"\n", 1)[-1])

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.fairlog"
        path.write_bytes(b"")
        with pytest.raises(TruncatedRecordError):
            read_runlog(path)


def test_file_digest_is_sha256(tmp_path):
    path = tmp_path / "f"
    path.write_bytes(b"abc")
    assert file_digest(path) == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")


def test_append_is_syntactic_validation_is_semantic(tmp_path):
    # a pickup for a never-arrived request appends fine; the replay flags it
    from fairride.simulator import validate_runlog

    path = tmp_path / "x.fairlog"
    with RunLogWriter(path, make_header()) as writer:
        writer.append(Pickup(999, 0, 30))
    log = read_runlog(path)
    report = validate_runlog(log)
    assert any(v.kind == "pickup-without-match" for v in report.violations)
