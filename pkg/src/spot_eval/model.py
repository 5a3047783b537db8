"""Domain types and file formats shared by every other module.

Annotations describe what a streaming assistant *should* have said and when;
prediction logs describe what it actually said. Both formats are line/JSON
based and documented in the README. All types here are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping


class TaskKind(str, Enum):
    """The six streaming task families."""

    ABD = "ABD"
    PNR = "PNR"
    SQA = "SQA"
    SPG = "SPG"
    SI = "SI"
    UI = "UI"


# Human-calibrated acceptable-response half-widths, in seconds.
DEFAULT_HALF_WIDTH: dict[TaskKind, float] = {
    TaskKind.SQA: 2.5,
    TaskKind.SPG: 1.5,
    TaskKind.SI: 1.0,
    TaskKind.ABD: 1.0,
    TaskKind.UI: 0.5,
    TaskKind.PNR: 0.5,
}

DEFAULT_OCCUPANCY_K = 5
DEFAULT_SILENCE_TOKEN = "no"
DEFAULT_QUERY_EXPIRY_S = 120.0
DEFAULT_FPS = 1.0


class SpotEvalError(Exception):
    """Base class for all engine errors."""


class AnnotationError(SpotEvalError):
    """Raised when an annotation document is malformed or violates an invariant."""

    def __init__(self, message: str, video_id: str | None = None, path: str | None = None):
        self.video_id = video_id
        self.path = path
        prefix = ""
        if video_id is not None:
            prefix += f"video {video_id!r}: "
        if path is not None:
            prefix += f"at {path}: "
        super().__init__(prefix + message)


class PredictionLogError(SpotEvalError):
    """Raised when a prediction log line cannot be parsed."""

    def __init__(self, message: str, line_no: int):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


@dataclass(frozen=True)
class TimelinessConfig:
    """Every tunable of the timeliness score and the greedy matcher.

    ``sigma_early`` must dominate ``sigma_late`` for every task: early
    responses decay slower than late ones. The defaults tie both decay
    scales to the per-task half-width (2x for early, 1x for late).
    ``epsilon`` defines the practical zero of the score's Gaussian tails.
    """

    half_width: Mapping[TaskKind, float] = field(
        default_factory=lambda: dict(DEFAULT_HALF_WIDTH)
    )
    sigma_early: Mapping[TaskKind, float] | None = None
    sigma_late: Mapping[TaskKind, float] | None = None
    occupancy_k: int = DEFAULT_OCCUPANCY_K
    silence_token: str = DEFAULT_SILENCE_TOKEN
    query_expiry_s: float = DEFAULT_QUERY_EXPIRY_S
    query_expiry_overrides: Mapping[TaskKind, float] = field(default_factory=dict)
    epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if self.sigma_early is None:
            object.__setattr__(
                self, "sigma_early", {t: 2.0 * w for t, w in self.half_width.items()}
            )
        if self.sigma_late is None:
            object.__setattr__(
                self, "sigma_late", {t: 1.0 * w for t, w in self.half_width.items()}
            )
        for task in self.half_width:
            early = self.sigma_early[task]
            late = self.sigma_late[task]
            if not early > late > 0.0:
                raise ValueError(
                    f"sigma_early must exceed sigma_late (> 0) for {task.value}: "
                    f"got {early} vs {late}"
                )
        if self.occupancy_k < 1:
            raise ValueError("occupancy_k must be >= 1")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")

    def expiry_for(self, task: TaskKind) -> float:
        return self.query_expiry_overrides.get(task, self.query_expiry_s)


@dataclass(frozen=True)
class GoldSlot:
    """One acceptable-response interval ``[t_s, t_e]`` around a keyframe."""

    slot_id: str
    keyframe_t: float
    t_s: float
    t_e: float
    gold_text: str
    extra: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Turn:
    """A query plus its (possibly multi-element) set of gold slots.

    A turn with ``ask_time == 0`` is a context prompt: it frames the whole
    video rather than asking about a specific moment, and it never expires.
    """

    query_id: str
    ask_time: float
    query_text: str
    slots: tuple[GoldSlot, ...]
    referential: str | None = None
    extra: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class VideoAnnotation:
    """Ground truth for one video: ordered turns over a stream of known duration."""

    video_id: str
    task: TaskKind
    duration: float
    fps: float = DEFAULT_FPS
    turns: tuple[Turn, ...] = ()
    extra: Mapping[str, Any] = field(default_factory=dict)

    def all_slots(self) -> list[GoldSlot]:
        return [slot for turn in self.turns for slot in turn.slots]

    def slot_questions(self) -> list[str]:
        """Question text aligned with :meth:`all_slots`, for judge-based matching."""
        return [turn.query_text for turn in self.turns for _ in turn.slots]


@dataclass(frozen=True)
class PredictionEvent:
    """One timestamped model response on a video's stream clock."""

    t: float
    text: str
    video_id: str
    query_tag: str | None = None


@dataclass(frozen=True)
class PredictionLog:
    """Parsed prediction stream: silence already filtered out and counted."""

    events: tuple[PredictionEvent, ...]
    silence_count: int

    def for_video(self, video_id: str) -> list[PredictionEvent]:
        return [e for e in self.events if e.video_id == video_id]


def derive_slot(keyframe_t: float, task: TaskKind, cfg: TimelinessConfig) -> tuple[float, float]:
    """Gold interval around a keyframe: +-half_width(task), clamped below at 0."""
    if keyframe_t < 0.0:
        raise ValueError("keyframe_t must be >= 0")
    hw = cfg.half_width[task]
    return max(0.0, keyframe_t - hw), keyframe_t + hw


def is_silence(text: str, cfg: TimelinessConfig) -> bool:
    return text.strip() == cfg.silence_token


# --- annotation document ------------------------------------------------------
#
# One document per corpus: a top-level JSON list of video objects.
#   {video_id, task, duration_s, fps, turns: [{query_id, ask_time_s, query_text,
#    referential, slots: [{slot_id, keyframe_s, t_s, t_e, gold_text}]}]}
# Slots may carry explicit (t_s, t_e) or only keyframe_s; explicit intervals win,
# keyframe-only slots get derived intervals. Unknown fields round-trip losslessly.

_VIDEO_KEYS = {"video_id", "task", "duration_s", "fps", "turns"}
_TURN_KEYS = {"query_id", "ask_time_s", "query_text", "referential", "slots"}
_SLOT_KEYS = {"slot_id", "keyframe_s", "t_s", "t_e", "gold_text"}


def _require(obj: Mapping[str, Any], key: str, video_id: str | None, path: str) -> Any:
    if key not in obj:
        raise AnnotationError(f"missing field {key!r}", video_id, path)
    return obj[key]


def _number(value: Any, video_id: str | None, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise AnnotationError(f"expected a number, got {value!r}", video_id, path)
    return float(value)


def _parse_slot(
    raw: Mapping[str, Any],
    task: TaskKind,
    ask_time: float,
    cfg: TimelinessConfig,
    video_id: str,
    path: str,
) -> GoldSlot:
    if not isinstance(raw, Mapping):
        raise AnnotationError("slot must be an object", video_id, path)
    slot_id = str(_require(raw, "slot_id", video_id, path))
    keyframe = _number(_require(raw, "keyframe_s", video_id, path), video_id, f"{path}.keyframe_s")
    if "t_s" in raw and "t_e" in raw:
        t_s = _number(raw["t_s"], video_id, f"{path}.t_s")
        t_e = _number(raw["t_e"], video_id, f"{path}.t_e")
    else:
        t_s, t_e = derive_slot(keyframe, task, cfg)
    gold_text = str(_require(raw, "gold_text", video_id, path))
    if not t_s <= keyframe <= t_e:
        raise AnnotationError(
            f"keyframe {keyframe} outside its interval [{t_s}, {t_e}]", video_id, path
        )
    if t_s < ask_time:
        raise AnnotationError(
            f"slot precedes ask_time ({t_s} < {ask_time})", video_id, path
        )
    extra = {k: v for k, v in raw.items() if k not in _SLOT_KEYS}
    return GoldSlot(slot_id, keyframe, t_s, t_e, gold_text, extra)


def _parse_turn(
    raw: Mapping[str, Any],
    task: TaskKind,
    cfg: TimelinessConfig,
    video_id: str,
    path: str,
) -> Turn:
    if not isinstance(raw, Mapping):
        raise AnnotationError("turn must be an object", video_id, path)
    query_id = str(_require(raw, "query_id", video_id, path))
    ask_time = _number(_require(raw, "ask_time_s", video_id, path), video_id, f"{path}.ask_time_s")
    if ask_time < 0.0:
        raise AnnotationError("ask_time_s must be >= 0", video_id, f"{path}.ask_time_s")
    query_text = str(raw.get("query_text", ""))
    referential = raw.get("referential")
    raw_slots = _require(raw, "slots", video_id, path)
    if not isinstance(raw_slots, list) or not raw_slots:
        raise AnnotationError("turn must carry at least one slot", video_id, f"{path}.slots")
    slots = [
        _parse_slot(s, task, ask_time, cfg, video_id, f"{path}.slots[{i}]")
        for i, s in enumerate(raw_slots)
    ]
    slots.sort(key=lambda s: s.keyframe_t)
    extra = {k: v for k, v in raw.items() if k not in _TURN_KEYS}
    return Turn(query_id, ask_time, query_text, tuple(slots), referential, extra)


def _parse_video(raw: Mapping[str, Any], cfg: TimelinessConfig, path: str) -> VideoAnnotation:
    if not isinstance(raw, Mapping):
        raise AnnotationError("video entry must be an object", path=path)
    video_id = str(_require(raw, "video_id", None, path))
    task_name = str(_require(raw, "task", video_id, f"{path}.task"))
    try:
        task = TaskKind(task_name)
    except ValueError:
        raise AnnotationError(f"unknown task {task_name!r}", video_id, f"{path}.task") from None
    duration = _number(_require(raw, "duration_s", video_id, path), video_id, f"{path}.duration_s")
    if duration < 0.0:
        raise AnnotationError("duration_s must be >= 0", video_id, f"{path}.duration_s")
    fps = _number(raw.get("fps", DEFAULT_FPS), video_id, f"{path}.fps")
    if fps <= 0.0:
        raise AnnotationError("fps must be > 0", video_id, f"{path}.fps")
    raw_turns = raw.get("turns", [])
    if not isinstance(raw_turns, list):
        raise AnnotationError("turns must be a list", video_id, f"{path}.turns")
    turns = [
        _parse_turn(t, task, cfg, video_id, f"{path}.turns[{i}]")
        for i, t in enumerate(raw_turns)
    ]
    turns.sort(key=lambda t: t.ask_time)
    for a, b in zip(turns, turns[1:]):
        if not a.ask_time < b.ask_time:
            raise AnnotationError(
                f"ask_times must be strictly increasing ({a.query_id!r} vs {b.query_id!r})",
                video_id,
                f"{path}.turns",
            )
    seen: set[str] = set()
    for i, turn in enumerate(turns):
        if turn.query_id in seen:
            raise AnnotationError(
                f"duplicate query_id {turn.query_id!r}", video_id, f"{path}.turns[{i}]"
            )
        seen.add(turn.query_id)
        for j, slot in enumerate(turn.slots):
            if not 0.0 <= slot.keyframe_t <= duration:
                raise AnnotationError(
                    f"keyframe {slot.keyframe_t} outside [0, {duration}]",
                    video_id,
                    f"{path}.turns[{i}].slots[{j}].keyframe_s",
                )
    extra = {k: v for k, v in raw.items() if k not in _VIDEO_KEYS}
    return VideoAnnotation(video_id, task, duration, fps, tuple(turns), extra)


def parse_annotations(
    data: bytes | str, cfg: TimelinessConfig | None = None
) -> list[VideoAnnotation]:
    """Parse an annotation document, validating every invariant.

    Raises :class:`AnnotationError` with the offending video id and field path.
    """
    cfg = cfg or TimelinessConfig()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"malformed document: {exc}") from exc
    if not isinstance(doc, list):
        raise AnnotationError("top level must be a list of video objects")
    return [_parse_video(v, cfg, f"videos[{i}]") for i, v in enumerate(doc)]


def annotations_to_obj(annotations: Iterable[VideoAnnotation]) -> list[dict[str, Any]]:
    out = []
    for ann in annotations:
        turns = []
        for turn in ann.turns:
            slots = []
            for slot in turn.slots:
                rec: dict[str, Any] = {
                    "slot_id": slot.slot_id,
                    "keyframe_s": slot.keyframe_t,
                    "t_s": slot.t_s,
                    "t_e": slot.t_e,
                    "gold_text": slot.gold_text,
                }
                rec.update(slot.extra)
                slots.append(rec)
            trec: dict[str, Any] = {
                "query_id": turn.query_id,
                "ask_time_s": turn.ask_time,
                "query_text": turn.query_text,
                "referential": turn.referential,
                "slots": slots,
            }
            trec.update(turn.extra)
            turns.append(trec)
        vrec: dict[str, Any] = {
            "video_id": ann.video_id,
            "task": ann.task.value,
            "duration_s": ann.duration,
            "fps": ann.fps,
            "turns": turns,
        }
        vrec.update(ann.extra)
        out.append(vrec)
    return out


def serialize_annotations(annotations: Iterable[VideoAnnotation]) -> bytes:
    """Inverse of :func:`parse_annotations` up to field order."""
    return json.dumps(annotations_to_obj(annotations), ensure_ascii=False, indent=2).encode(
        "utf-8"
    )


# --- prediction log -----------------------------------------------------------
#
# One JSON record per line: {video_id, t_s (number), text, query_tag (optional)}.
# Here t_s is the stream-clock timestamp of the response (not a slot bound).


def parse_predictions(data: bytes | str, cfg: TimelinessConfig | None = None) -> PredictionLog:
    """Parse a prediction log: drop silence (counted), sort per video by time.

    Ties keep input order, making the result deterministic.
    """
    cfg = cfg or TimelinessConfig()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    by_video: dict[str, list[PredictionEvent]] = {}
    silence = 0
    for line_no, line in enumerate(data.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PredictionLogError(f"malformed record: {exc}", line_no) from exc
        if not isinstance(rec, Mapping):
            raise PredictionLogError("record must be an object", line_no)
        for key in ("video_id", "t_s", "text"):
            if key not in rec:
                raise PredictionLogError(f"missing field {key!r}", line_no)
        t = rec["t_s"]
        if isinstance(t, bool) or not isinstance(t, (int, float)):
            raise PredictionLogError(f"t_s must be a number, got {t!r}", line_no)
        if t < 0.0:
            raise PredictionLogError(f"negative timestamp {t}", line_no)
        text = str(rec["text"])
        if is_silence(text, cfg):
            silence += 1
            continue
        event = PredictionEvent(
            t=float(t),
            text=text,
            video_id=str(rec["video_id"]),
            query_tag=rec.get("query_tag"),
        )
        by_video.setdefault(event.video_id, []).append(event)
    events: list[PredictionEvent] = []
    for vid_events in by_video.values():
        vid_events.sort(key=lambda e: e.t)  # stable: ties keep input order
        events.extend(vid_events)
    return PredictionLog(tuple(events), silence)


def predictions_to_jsonl(events: Iterable[PredictionEvent]) -> bytes:
    lines = []
    for e in events:
        rec: dict[str, Any] = {"video_id": e.video_id, "t_s": e.t, "text": e.text}
        if e.query_tag is not None:
            rec["query_tag"] = e.query_tag
        lines.append(json.dumps(rec, ensure_ascii=False))
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
