from __future__ import annotations

import json

import pytest

from spot_eval.model import TimelinessConfig
from spot_eval.replay import (
    ProtocolError,
    RecordingAdapter,
    Script,
    ScriptRule,
    ScriptedAdapter,
    SimulatedClock,
    TranscriptAdapter,
    build_schedule,
    clock_mode,
    dead_time_intervals,
    dump_transcript,
    echo_script,
    load_transcript,
    perfect_oracle_script,
    run_session,
    spammer_script,
)

from conftest import make_video, parse_one


def respond_rule(trigger, text, **kw):
    return ScriptRule(trigger, {"kind": "respond", "text": text, **kw})


def test_schedule_interleaves_time_ordered_with_query_before_frame() -> None:
    ann = parse_one(make_video(duration=5.0, turns=[
        {"query_id": "q0", "ask_time_s": 0.0, "query_text": "ctx", "slots": [
            {"slot_id": "s0", "keyframe_s": 1.0, "gold_text": "x"}]},
        {"query_id": "q3", "ask_time_s": 3.0, "query_text": "q", "slots": [
            {"slot_id": "s1", "keyframe_s": 4.0, "gold_text": "x"}]},
    ]))
    events = build_schedule(ann)
    kinds_and_times = [(e.kind, e.t) for e in events]
    assert kinds_and_times == [
        ("query", 0.0),
        ("frame", 1.0),
        ("frame", 2.0),
        ("query", 3.0),  # tie with frame 3 resolves query-first
        ("frame", 3.0),
        ("frame", 4.0),
        ("frame", 5.0),
    ]
    times = [e.t for e in events]
    assert times == sorted(times)


def test_schedule_respects_fps_grid() -> None:
    ann = parse_one(make_video(duration=2.0, turns=[]))
    assert [e.t for e in build_schedule(ann, fps=2.0)] == [0.5, 1.0, 1.5, 2.0]


def test_session_with_no_turns_sends_only_frames_and_keeps_unprompted_responses() -> None:
    ann = parse_one(make_video(duration=4.0, turns=[]))
    silent = ScriptedAdapter(Script(()))
    log = run_session(ann, silent)
    assert log.predictions == []
    assert log.silence_count == 0

    chatty = ScriptedAdapter(spammer_script("hello"))
    log = run_session(ann, chatty)
    assert [p.t for p in log.predictions] == [1.0, 2.0, 3.0, 4.0]
    assert all(p.query_tag is None for p in log.predictions)


def test_responses_after_later_frames_carry_the_trigger_query_tag() -> None:
    # query at t=3; adapter answers after frames 5 and 8
    ann = parse_one(make_video(duration=10.0, turns=[
        {"query_id": "q3", "ask_time_s": 3.0, "query_text": "when?", "slots": [
            {"slot_id": "s", "keyframe_s": 6.0, "gold_text": "now"}]},
    ]))
    script = Script((
        respond_rule({"kind": "frame", "t": 5.0}, "r5", query_id="q3"),
        respond_rule({"kind": "frame", "t": 8.0}, "r8", query_id="q3"),
    ))
    log = run_session(ann, ScriptedAdapter(script))
    assert [(p.t, p.text, p.query_tag) for p in log.predictions] == [
        (5.0, "r5", "[Q1]"),
        (8.0, "r8", "[Q1]"),
    ]


def test_silence_responses_are_counted_but_not_logged() -> None:
    ann = parse_one(make_video(duration=6.0, turns=[]))
    silence_everywhere = Script((ScriptRule({"kind": "always"}, {"kind": "silence"}),))
    log = run_session(ann, ScriptedAdapter(silence_everywhere))
    assert log.predictions == []
    assert log.silence_count == 6


def test_delayed_responses_follow_the_event_counter() -> None:
    ann = parse_one(make_video(duration=8.0, turns=[
        {"query_id": "q", "ask_time_s": 2.0, "query_text": "?", "slots": [
            {"slot_id": "s", "keyframe_s": 4.0, "gold_text": "x"}]},
    ]))
    script = Script((respond_rule({"kind": "query"}, "late", delay_events=3, query_id="q"),))
    log = run_session(ann, ScriptedAdapter(script))
    # query fires at t=2 (before frame 2); three events later is frame 4
    assert [(p.t, p.text) for p in log.predictions] == [(4.0, "late")]


def test_echo_script_answers_queries_only() -> None:
    ann = parse_one(make_video(duration=4.0, turns=[
        {"query_id": "q", "ask_time_s": 1.5, "query_text": "ping", "slots": [
            {"slot_id": "s", "keyframe_s": 3.0, "gold_text": "pong"}]},
    ]))
    log = run_session(ann, ScriptedAdapter(echo_script()))
    assert [(p.t, p.text, p.query_id) for p in log.predictions] == [(1.5, "ping", "q")]
    assert log.silence_count == 4


def test_logical_clock_sessions_are_byte_identical() -> None:
    ann = parse_one(make_video())
    logs = [
        run_session(ann, ScriptedAdapter(perfect_oracle_script(ann))).to_json_bytes()
        for _ in range(3)
    ]
    assert logs[0] == logs[1] == logs[2]


def test_causality_holds_on_every_logged_prediction() -> None:
    ann = parse_one(make_video())
    log = run_session(ann, ScriptedAdapter(spammer_script()))
    ask_times = {q.query_id: q.ask_time for q in log.queries}
    for p in log.predictions:
        if p.query_id is not None:
            assert p.t >= ask_times[p.query_id]


def test_adapter_crash_marks_session_failed_and_keeps_partial_log() -> None:
    ann = parse_one(make_video(duration=10.0, turns=[]))

    class CrashAfterThree:
        def __init__(self):
            self.inner = ScriptedAdapter(spammer_script("hello"))
            self.seen = 0

        def exchange(self, record):
            self.seen += 1
            if self.seen > 4:  # hello + three frames
                from spot_eval.replay import AdapterFailure

                raise AdapterFailure("adapter closed its stream")
            return self.inner.exchange(record)

        def drain(self, record):
            return []

        def close(self):
            pass

    log = run_session(ann, CrashAfterThree())
    assert log.failed
    assert "closed its stream" in (log.error or "")
    assert [p.t for p in log.predictions] == [1.0, 2.0, 3.0]


def test_response_for_unknown_query_is_a_protocol_violation() -> None:
    ann = parse_one(make_video(duration=4.0, turns=[]))
    script = Script((respond_rule({"kind": "always"}, "x", query_id="ghost"),))
    with pytest.raises(ProtocolError, match="unknown or future query"):
        run_session(ann, ScriptedAdapter(script))


def test_realtime_mode_drops_exactly_the_missed_frame() -> None:
    ann = parse_one(make_video(duration=5.0, turns=[]))
    clock = SimulatedClock()
    # 1.5 s on the first frame at 1 fps: frame 2 is already past due when it comes up
    adapter = ScriptedAdapter(
        Script(()), clock=clock,
        latency_fn=lambda rec: 1.5 if rec.get("type") == "frame" and rec["t"] == 1.0 else 0.0,
    )
    log = run_session(ann, adapter, clock_cfg=clock_mode("realtime"), clock=clock)
    assert log.dropped_frames == 1


def test_realtime_mode_without_latency_drops_nothing() -> None:
    ann = parse_one(make_video(duration=5.0, turns=[]))
    clock = SimulatedClock()
    log = run_session(
        ann, ScriptedAdapter(Script(()), clock=clock),
        clock_cfg=clock_mode("realtime"), clock=clock,
    )
    assert log.dropped_frames == 0


def test_logical_mode_never_paces() -> None:
    ann = parse_one(make_video(duration=100.0, turns=[]))
    clock = SimulatedClock()
    run_session(ann, ScriptedAdapter(Script(()), clock=clock), clock=clock)
    assert clock.now() == 0.0


def test_context_prompt_queries_never_expire() -> None:
    ann = parse_one(make_video(task="SPG", duration=400.0, turns=[
        {"query_id": "q0", "ask_time_s": 0.0, "query_text": "steps", "slots": [
            {"slot_id": "s", "keyframe_s": 300.0, "gold_text": "next"}]},
    ]))
    script = Script((respond_rule({"kind": "frame", "t": 300.0}, "next", query_id="q0"),))
    log = run_session(ann, ScriptedAdapter(script))
    assert [q.status for q in log.queries] == ["closed"]
    assert log.predictions[0].query_tag == "[Q1]"


def test_regular_queries_expire_after_the_configured_window() -> None:
    ann = parse_one(make_video(duration=200.0, turns=[
        {"query_id": "q", "ask_time_s": 10.0, "query_text": "?", "slots": [
            {"slot_id": "s", "keyframe_s": 20.0, "gold_text": "x"}]},
    ]))
    log = run_session(ann, ScriptedAdapter(Script(())))
    assert [q.status for q in log.queries] == ["expired"]


def test_transcript_record_and_replay_round_trip() -> None:
    ann = parse_one(make_video())
    recorder = RecordingAdapter(ScriptedAdapter(perfect_oracle_script(ann)))
    live = run_session(ann, recorder)

    replayed = run_session(ann, TranscriptAdapter(recorder.transcript))
    assert replayed.to_json_bytes() == live.to_json_bytes()

    # serialization round trip
    parsed = load_transcript(dump_transcript(recorder.transcript))
    assert parsed == recorder.transcript


def test_transcript_replay_rejects_divergent_harness_input() -> None:
    ann = parse_one(make_video())
    recorder = RecordingAdapter(ScriptedAdapter(perfect_oracle_script(ann)))
    run_session(ann, recorder)

    other = parse_one(make_video(video_id="other"))
    with pytest.raises(ProtocolError, match="transcript mismatch"):
        run_session(other, TranscriptAdapter(recorder.transcript))


def test_dead_time_single_query_fraction() -> None:
    ann = parse_one(make_video(duration=100.0, turns=[
        {"query_id": "q", "ask_time_s": 10.0, "query_text": "?", "slots": [
            {"slot_id": "s", "keyframe_s": 20.0, "gold_text": "x"}]},
    ]))
    dt = dead_time_intervals(ann)
    assert dt.intervals == ((0.0, 10.0),)
    assert dt.fraction == pytest.approx(0.10, abs=1e-12)


def test_dead_time_zero_for_context_prompt() -> None:
    ann = parse_one(make_video(task="SI", duration=50.0, turns=[
        {"query_id": "q0", "ask_time_s": 0.0, "query_text": "ctx", "slots": [
            {"slot_id": "s", "keyframe_s": 30.0, "gold_text": "x"}]},
    ]))
    dt = dead_time_intervals(ann)
    assert dt.fraction == 0.0
    assert dt.intervals == ()


def test_dead_time_is_total_without_queries() -> None:
    ann = parse_one(make_video(duration=80.0, turns=[]))
    dt = dead_time_intervals(ann)
    assert dt.fraction == 1.0
    assert dt.intervals == ((0.0, 80.0),)


def test_dead_time_merges_overlapping_query_windows() -> None:
    ann = parse_one(make_video(duration=300.0, turns=[
        {"query_id": "a", "ask_time_s": 10.0, "query_text": "?", "slots": [
            {"slot_id": "s1", "keyframe_s": 20.0, "gold_text": "x"}]},
        {"query_id": "b", "ask_time_s": 50.0, "query_text": "?", "slots": [
            {"slot_id": "s2", "keyframe_s": 60.0, "gold_text": "x"}]},
    ]))
    dt = dead_time_intervals(ann)
    # active [10, 130) u [50, 170) = [10, 170); dead 10 + 130 of 300
    assert dt.intervals == ((0.0, 10.0), (170.0, 300.0))
    assert dt.fraction == pytest.approx(140.0 / 300.0, abs=1e-12)


def test_session_log_records_dead_time_and_latencies() -> None:
    ann = parse_one(make_video())
    log = run_session(ann, ScriptedAdapter(Script(())))
    assert log.dead_time is not None
    assert log.dead_time.intervals == ((0.0, 2.0),)
    kinds = [kind for kind, _, _ in log.event_latencies]
    assert kinds[0] == "hello"
    assert kinds.count("frame") == 30
    assert kinds.count("query") == 1
