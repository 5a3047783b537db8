"""Causal replay of an annotated video to an external model adapter.

The harness turns an annotation into a time-ordered stream of frame and query
events, feeds them to an adapter over a line-oriented JSON protocol, and stamps
every adapter response with the stream clock of the last delivered event. The
result is a session log whose predictions feed the matcher.

Wire protocol (one JSON record per line, UTF-8, over stdio of a spawned
subprocess or any byte stream):

  harness -> adapter:  {"type":"hello","video_id","task","fps"}
                       {"type":"frame","t","frame_ref","embedding"?}
                       {"type":"query","t","query_id","text"}
                       {"type":"eos"}
  adapter -> harness:  {"type":"response","text","query_id"?}*  then {"type":"ack"}
                       {"type":"bye"} after eos
"""

from __future__ import annotations

import json
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Protocol, Sequence

from .model import (
    PredictionEvent,
    SpotEvalError,
    TimelinessConfig,
    VideoAnnotation,
    is_silence,
)


class ProtocolError(SpotEvalError):
    """The adapter broke the wire protocol (out-of-order or unknown records)."""


class AdapterFailure(SpotEvalError):
    """The adapter process died or closed its stream mid-session."""


# --- clocks ---------------------------------------------------------------


class Clock(Protocol):
    def now(self) -> float: ...
    def sleep(self, seconds: float) -> None: ...


class SystemClock:
    def now(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class SimulatedClock:
    """Deterministic clock for tests: sleeping just advances time."""

    def __init__(self, start: float = 0.0):
        self._now = start

    def now(self) -> float:
        return self._now

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self._now += seconds

    def advance(self, seconds: float) -> None:
        self._now += seconds


@dataclass(frozen=True)
class ClockSpec:
    kind: str  # "logical" | "realtime"
    deadline_ms: float = 0.0


def clock_mode(mode: str, deadline_ms: float = 0.0) -> ClockSpec:
    """Harness pacing configuration.

    ``logical`` advances the stream clock instantly per event (deterministic CI
    runs). ``realtime`` paces frames at wall-clock fps; a frame whose due time
    has already passed by more than ``deadline_ms`` is dropped and counted.
    """
    if mode not in ("logical", "realtime"):
        raise ValueError(f"unknown clock mode {mode!r}")
    return ClockSpec(mode, deadline_ms)


# --- events ---------------------------------------------------------------


@dataclass(frozen=True)
class StreamEvent:
    kind: str  # "frame" | "query" | "eos"
    t: float
    frame_ref: str | None = None
    embedding: tuple[float, ...] | None = None
    query_id: str | None = None
    text: str | None = None

    def to_record(self) -> dict[str, Any]:
        if self.kind == "frame":
            rec: dict[str, Any] = {"type": "frame", "t": self.t, "frame_ref": self.frame_ref}
            if self.embedding is not None:
                rec["embedding"] = list(self.embedding)
            return rec
        if self.kind == "query":
            return {"type": "query", "t": self.t, "query_id": self.query_id, "text": self.text}
        if self.kind == "eos":
            return {"type": "eos"}
        raise ValueError(f"unknown event kind {self.kind!r}")


def hello_record(ann: VideoAnnotation, fps: float) -> dict[str, Any]:
    return {"type": "hello", "video_id": ann.video_id, "task": ann.task.value, "fps": fps}


def build_schedule(
    ann: VideoAnnotation,
    fps: float | None = None,
    embeddings: Callable[[int, float], Sequence[float]] | None = None,
) -> list[StreamEvent]:
    """Frames on the fps grid interleaved with queries at their ask times.

    Ties resolve query-before-frame: a query posed at a frame instant is
    visible when that frame is processed.
    """
    fps = fps if fps is not None else ann.fps
    events: list[tuple[float, int, StreamEvent]] = []
    for turn in ann.turns:
        events.append(
            (
                turn.ask_time,
                0,
                StreamEvent("query", turn.ask_time, query_id=turn.query_id, text=turn.query_text),
            )
        )
    n_frames = int(ann.duration * fps + 1e-9)
    for k in range(1, n_frames + 1):
        t = k / fps
        emb = tuple(embeddings(k, t)) if embeddings is not None else None
        events.append(
            (t, 1, StreamEvent("frame", t, frame_ref=f"{ann.video_id}:{k}", embedding=emb))
        )
    events.sort(key=lambda item: (item[0], item[1]))
    return [e for _, _, e in events]


# --- query bookkeeping ------------------------------------------------------


@dataclass
class QueryState:
    query_id: str
    ask_time: float
    tag: str
    expiry_t: float
    status: str = "active"  # active | expired | closed


# --- adapters ---------------------------------------------------------------


class AdapterConnection(Protocol):
    """One session's connection: single reader, single writer."""

    def exchange(self, record: Mapping[str, Any]) -> list[dict[str, Any]]:
        """Send one record, return the adapter's responses up to its yield."""
        ...

    def drain(self, record: Mapping[str, Any]) -> list[dict[str, Any]]:
        """Send the end-of-stream record, read through 'bye', return leftovers."""
        ...

    def close(self) -> None: ...


class SubprocessAdapter:
    """Adapter spawned as a subprocess speaking the wire protocol on stdio."""

    def __init__(self, cmd: list[str] | str):
        if isinstance(cmd, str):
            cmd = shlex.split(cmd)
        try:
            self._proc = subprocess.Popen(
                cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise AdapterFailure(f"could not spawn adapter: {exc}") from exc

    def _send(self, record: Mapping[str, Any]) -> None:
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(record, ensure_ascii=False) + "\n")
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise AdapterFailure(f"adapter stream closed: {exc}") from exc

    def _read(self) -> dict[str, Any]:
        assert self._proc.stdout is not None
        line = self._proc.stdout.readline()
        if not line:
            raise AdapterFailure("adapter closed its stream")
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"adapter sent a malformed record: {line!r}") from exc
        if not isinstance(rec, dict) or "type" not in rec:
            raise ProtocolError(f"adapter record missing 'type': {rec!r}")
        return rec

    def exchange(self, record: Mapping[str, Any]) -> list[dict[str, Any]]:
        self._send(record)
        responses: list[dict[str, Any]] = []
        while True:
            rec = self._read()
            if rec["type"] == "ack":
                return responses
            if rec["type"] == "response":
                responses.append(rec)
                continue
            raise ProtocolError(f"unsolicited control message {rec['type']!r}")

    def drain(self, record: Mapping[str, Any]) -> list[dict[str, Any]]:
        self._send(record)
        leftovers: list[dict[str, Any]] = []
        while True:
            rec = self._read()
            if rec["type"] == "bye":
                return leftovers
            leftovers.append(rec)

    def close(self) -> None:
        if self._proc.stdin is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self._proc.kill()


# --- scripted adapter (bundled reference behavior, used by tests and demos) --


@dataclass(frozen=True)
class ScriptRule:
    trigger: Mapping[str, Any]
    action: Mapping[str, Any]


@dataclass(frozen=True)
class Script:
    """Deterministic rule table: the first matching rule fires per event.

    Triggers: {"kind":"always"} | {"kind":"frame","t":<s>} |
    {"kind":"query","query_id"?}. Actions: {"kind":"respond","text",
    "delay_events"?,"query_id"?} | {"kind":"silence"}.
    """

    rules: tuple[ScriptRule, ...]
    silence_text: str = "no"

    @classmethod
    def from_obj(cls, obj: Mapping[str, Any]) -> "Script":
        rules = tuple(ScriptRule(r["trigger"], r["action"]) for r in obj.get("rules", []))
        return cls(rules, obj.get("silence_text", "no"))

    def to_obj(self) -> dict[str, Any]:
        return {
            "silence_text": self.silence_text,
            "rules": [{"trigger": dict(r.trigger), "action": dict(r.action)} for r in self.rules],
        }


def _trigger_matches(trigger: Mapping[str, Any], event: Mapping[str, Any]) -> bool:
    kind = trigger.get("kind")
    if kind == "always":
        return event["type"] in ("frame", "query")
    if kind == "frame":
        return event["type"] == "frame" and abs(event["t"] - trigger["t"]) < 1e-9
    if kind == "query":
        if event["type"] != "query":
            return False
        wanted = trigger.get("query_id")
        return wanted is None or event["query_id"] == wanted
    return False


class ScriptedAdapter:
    """In-process adapter driven by a :class:`Script`; hermetic and deterministic.

    ``latency_fn`` models per-event processing time by advancing the provided
    clock, which is how realtime pacing is exercised without wall time.
    """

    def __init__(
        self,
        script: Script,
        clock: Clock | None = None,
        latency_fn: Callable[[Mapping[str, Any]], float] | None = None,
    ):
        self.script = script
        self._clock = clock
        self._latency_fn = latency_fn
        self._pending: list[dict[str, Any]] = []  # {"remaining", "text", "query_id"}

    def _responses_for(self, event: Mapping[str, Any]) -> list[dict[str, Any]]:
        out: list[dict[str, Any]] = []
        for item in self._pending:
            item["remaining"] -= 1
        due = [item for item in self._pending if item["remaining"] <= 0]
        self._pending = [item for item in self._pending if item["remaining"] > 0]
        for item in due:
            rec: dict[str, Any] = {"type": "response", "text": item["text"]}
            if item["query_id"] is not None:
                rec["query_id"] = item["query_id"]
            out.append(rec)
        for rule in self.script.rules:
            if not _trigger_matches(rule.trigger, event):
                continue
            action = rule.action
            if action.get("kind") == "silence":
                out.append({"type": "response", "text": self.script.silence_text})
            elif action.get("kind") == "echo":
                rec = {"type": "response", "text": str(event.get("text", ""))}
                if event.get("query_id") is not None:
                    rec["query_id"] = event["query_id"]
                out.append(rec)
            elif action.get("kind") == "respond":
                delay = int(action.get("delay_events", 0))
                if delay <= 0:
                    rec = {"type": "response", "text": action["text"]}
                    if action.get("query_id") is not None:
                        rec["query_id"] = action["query_id"]
                    out.append(rec)
                else:
                    self._pending.append(
                        {
                            "remaining": delay,
                            "text": action["text"],
                            "query_id": action.get("query_id"),
                        }
                    )
            break
        return out

    def exchange(self, record: Mapping[str, Any]) -> list[dict[str, Any]]:
        if self._latency_fn is not None and self._clock is not None:
            self._clock.sleep(self._latency_fn(record))
        if record.get("type") == "hello":
            return []
        return self._responses_for(record)

    def drain(self, record: Mapping[str, Any]) -> list[dict[str, Any]]:
        self._pending.clear()
        return []

    def close(self) -> None:
        pass


# --- transcript recording / replay -------------------------------------------


class RecordingAdapter:
    """Wraps a connection and captures the full wire exchange as a transcript.

    The transcript is a list of {"dir": "tx"|"rx", "record": ...} entries in
    canonical order, including the implicit ack/bye control records, so it can
    drive both hermetic replays and cross-language conformance checks.
    """

    def __init__(self, inner: AdapterConnection):
        self._inner = inner
        self.transcript: list[dict[str, Any]] = []

    def exchange(self, record: Mapping[str, Any]) -> list[dict[str, Any]]:
        self.transcript.append({"dir": "tx", "record": dict(record)})
        responses = self._inner.exchange(record)
        for rec in responses:
            self.transcript.append({"dir": "rx", "record": dict(rec)})
        self.transcript.append({"dir": "rx", "record": {"type": "ack"}})
        return responses

    def drain(self, record: Mapping[str, Any]) -> list[dict[str, Any]]:
        self.transcript.append({"dir": "tx", "record": dict(record)})
        leftovers = self._inner.drain(record)
        for rec in leftovers:
            self.transcript.append({"dir": "rx", "record": dict(rec)})
        self.transcript.append({"dir": "rx", "record": {"type": "bye"}})
        return leftovers

    def close(self) -> None:
        self._inner.close()


class TranscriptAdapter:
    """Replays a recorded transcript, verifying the harness sends what it sent
    before. Lets golden sessions re-run with no live adapter at all."""

    def __init__(self, transcript: Sequence[Mapping[str, Any]]):
        self._entries = list(transcript)
        self._pos = 0

    def _next_tx(self, record: Mapping[str, Any]) -> None:
        if self._pos >= len(self._entries):
            raise ProtocolError("transcript exhausted")
        entry = self._entries[self._pos]
        if entry["dir"] != "tx" or entry["record"] != dict(record):
            raise ProtocolError(
                f"transcript mismatch: expected {entry!r}, harness sent {dict(record)!r}"
            )
        self._pos += 1

    def _read_rx_until(self, terminator: str) -> list[dict[str, Any]]:
        out: list[dict[str, Any]] = []
        while True:
            if self._pos >= len(self._entries):
                raise ProtocolError("transcript exhausted before terminator")
            entry = self._entries[self._pos]
            if entry["dir"] != "rx":
                raise ProtocolError(f"transcript expected rx, found {entry!r}")
            self._pos += 1
            rec = entry["record"]
            if rec.get("type") == terminator:
                return out
            out.append(dict(rec))

    def exchange(self, record: Mapping[str, Any]) -> list[dict[str, Any]]:
        self._next_tx(record)
        return self._read_rx_until("ack")

    def drain(self, record: Mapping[str, Any]) -> list[dict[str, Any]]:
        self._next_tx(record)
        return self._read_rx_until("bye")

    def close(self) -> None:
        pass


def load_transcript(data: bytes | str) -> list[dict[str, Any]]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return [json.loads(line) for line in data.splitlines() if line.strip()]


def dump_transcript(transcript: Iterable[Mapping[str, Any]]) -> bytes:
    lines = [json.dumps(entry, ensure_ascii=False) for entry in transcript]
    return ("\n".join(lines) + "\n").encode("utf-8")


# --- dead time ----------------------------------------------------------------


@dataclass(frozen=True)
class DeadTime:
    intervals: tuple[tuple[float, float], ...]
    fraction: float
    total_dead: float
    duration: float


def dead_time_intervals(ann: VideoAnnotation, cfg: TimelinessConfig | None = None) -> DeadTime:
    """Maximal stream intervals with no active query, and their total fraction.

    A query is active on [ask_time, min(ask_time + expiry, duration)); a
    context prompt (ask_time == 0) stays active for the whole video.
    """
    cfg = cfg or TimelinessConfig()
    duration = ann.duration
    if duration <= 0.0:
        return DeadTime((), 0.0, 0.0, duration)
    expiry = cfg.expiry_for(ann.task)
    active: list[tuple[float, float]] = []
    for turn in ann.turns:
        start = turn.ask_time
        end = duration if turn.ask_time == 0.0 else min(turn.ask_time + expiry, duration)
        if end > start:
            active.append((start, end))
    active.sort()
    merged: list[tuple[float, float]] = []
    for start, end in active:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return _complement(merged, duration)


def _complement(merged: list[tuple[float, float]], duration: float) -> DeadTime:
    dead: list[tuple[float, float]] = []
    cursor = 0.0
    for start, end in merged:
        if start > cursor:
            dead.append((cursor, start))
        cursor = max(cursor, end)
    if cursor < duration:
        dead.append((cursor, duration))
    total = sum(e - s for s, e in dead)
    return DeadTime(tuple(dead), total / duration, total, duration)


# --- session log ----------------------------------------------------------------


@dataclass(frozen=True)
class LoggedPrediction:
    t: float
    text: str
    query_id: str | None
    query_tag: str | None


@dataclass
class SessionLog:
    video_id: str
    task: str
    fps: float
    clock_kind: str
    predictions: list[LoggedPrediction] = field(default_factory=list)
    silence_count: int = 0
    event_latencies: list[tuple[str, float, float]] = field(default_factory=list)
    dropped_frames: int = 0
    dead_time: DeadTime | None = None
    queries: list[QueryState] = field(default_factory=list)
    failed: bool = False
    error: str | None = None

    def prediction_events(self) -> list[PredictionEvent]:
        return [
            PredictionEvent(t=p.t, text=p.text, video_id=self.video_id, query_tag=p.query_tag)
            for p in self.predictions
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "video_id": self.video_id,
            "task": self.task,
            "fps": self.fps,
            "clock": self.clock_kind,
            "predictions": [
                {"t": p.t, "text": p.text, "query_id": p.query_id, "query_tag": p.query_tag}
                for p in self.predictions
            ],
            "silence_count": self.silence_count,
            "event_latencies": [list(item) for item in self.event_latencies],
            "dropped_frames": self.dropped_frames,
            "dead_time": {
                "intervals": [list(iv) for iv in self.dead_time.intervals],
                "fraction": self.dead_time.fraction,
            }
            if self.dead_time is not None
            else None,
            "queries": [
                {
                    "query_id": q.query_id,
                    "ask_time": q.ask_time,
                    "tag": q.tag,
                    "status": q.status,
                }
                for q in self.queries
            ],
            "failed": self.failed,
            "error": self.error,
        }

    def to_json_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True).encode("utf-8")


# --- the session loop ------------------------------------------------------------


def run_session(
    ann: VideoAnnotation,
    adapter: AdapterConnection,
    *,
    fps: float | None = None,
    cfg: TimelinessConfig | None = None,
    clock_cfg: ClockSpec | None = None,
    clock: Clock | None = None,
    embeddings: Callable[[int, float], Sequence[float]] | None = None,
) -> SessionLog:
    """Replay one annotation to an adapter and log its timestamped responses.

    Responses are stamped with the stream clock of the last delivered event.
    Silence-token responses are logged only as a count. An adapter crash marks
    the session failed and keeps the partial log; protocol violations raise.
    """
    cfg = cfg or TimelinessConfig()
    clock_cfg = clock_cfg or clock_mode("logical")
    fps = fps if fps is not None else ann.fps
    if clock is None:
        clock = SimulatedClock() if clock_cfg.kind == "logical" else SystemClock()

    log = SessionLog(
        video_id=ann.video_id,
        task=ann.task.value,
        fps=fps,
        clock_kind=clock_cfg.kind,
        dead_time=dead_time_intervals(ann, cfg),
    )
    registry: dict[str, QueryState] = {}
    tag_count = 0
    expiry = cfg.expiry_for(ann.task)
    grace = clock_cfg.deadline_ms / 1000.0

    def refresh_status(now_t: float) -> None:
        for q in registry.values():
            if q.status == "active" and now_t >= q.expiry_t:
                q.status = "expired"

    def log_responses(responses: list[dict[str, Any]], stamp: float) -> None:
        for rec in responses:
            text = str(rec.get("text", ""))
            query_id = rec.get("query_id")
            tag = None
            if query_id is not None:
                state = registry.get(query_id)
                if state is None:
                    raise ProtocolError(
                        f"response references unknown or future query {query_id!r}"
                    )
                if stamp < state.ask_time:
                    raise ProtocolError(
                        f"response at {stamp} precedes ask time {state.ask_time} of {query_id!r}"
                    )
                tag = state.tag
            if is_silence(text, cfg):
                log.silence_count += 1
                continue
            log.predictions.append(LoggedPrediction(stamp, text, query_id, tag))

    schedule = build_schedule(ann, fps, embeddings)
    try:
        t0 = clock.now()
        responses = adapter.exchange(hello_record(ann, fps))
        log.event_latencies.append(("hello", 0.0, clock.now() - t0))
        log_responses(responses, 0.0)

        wall0 = clock.now()
        for event in schedule:
            if clock_cfg.kind == "realtime":
                due = wall0 + event.t
                now = clock.now()
                if event.kind == "frame" and now > due + grace + 1e-12:
                    log.dropped_frames += 1
                    continue
                if now < due:
                    clock.sleep(due - now)
            if event.kind == "query":
                tag_count += 1
                expiry_t = float("inf") if event.t == 0.0 else event.t + expiry
                registry[event.query_id or ""] = QueryState(
                    query_id=event.query_id or "",
                    ask_time=event.t,
                    tag=f"[Q{tag_count}]",
                    expiry_t=expiry_t,
                )
            refresh_status(event.t)
            t0 = clock.now()
            responses = adapter.exchange(event.to_record())
            log.event_latencies.append((event.kind, event.t, clock.now() - t0))
            log_responses(responses, event.t)

        leftovers = adapter.drain({"type": "eos"})
        if leftovers:
            raise ProtocolError("adapter sent records after end of stream")
        for q in registry.values():
            if q.status == "active":
                q.status = "closed"
    except AdapterFailure as exc:
        log.failed = True
        log.error = str(exc)
    finally:
        log.queries = list(registry.values())
    return log


# --- canned scripts ---------------------------------------------------------------


def perfect_oracle_script(ann: VideoAnnotation, fps: float | None = None) -> Script:
    """Respond with each slot's gold text exactly at its keyframe's frame.

    Keyframes must sit on the fps grid, otherwise the response cannot land on a
    frame instant and the script would not be a perfect oracle.
    """
    fps = fps if fps is not None else ann.fps
    rules = []
    for turn in ann.turns:
        for slot in turn.slots:
            k = slot.keyframe_t * fps
            if abs(k - round(k)) > 1e-9 or round(k) < 1:
                raise ValueError(
                    f"keyframe {slot.keyframe_t} is not on the {fps} fps frame grid"
                )
            rules.append(
                ScriptRule(
                    {"kind": "frame", "t": slot.keyframe_t},
                    {"kind": "respond", "text": slot.gold_text, "query_id": turn.query_id},
                )
            )
    return Script(tuple(rules))


def spammer_script(text: str = "start") -> Script:
    """Respond with the same token at every event: floods the stream with FPs."""
    return Script((ScriptRule({"kind": "always"}, {"kind": "respond", "text": text}),))


def echo_script() -> Script:
    """Respond to every query by echoing its text; silent otherwise."""
    return Script(
        (
            ScriptRule({"kind": "query"}, {"kind": "echo"}),
            ScriptRule({"kind": "always"}, {"kind": "silence"}),
        )
    )
