"""Discrete-time simulation of the long/short-term memory manager with
dead-time compute scheduling.

The simulator works over abstract unit-norm frame embeddings: no model, no
tensors. It validates the bounded-memory contract (short window of N_S frames,
long store of at most N_L frames), cosine top-k retrieval, similarity-driven
compression, episodic summaries produced only during dead-time, and the
assembled context layout with its fixed segment order.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .model import SpotEvalError

SINK_SEGMENT = "sink"


class SimulationError(SpotEvalError):
    """Invalid event fed to the memory simulator."""


@dataclass(frozen=True)
class MemoryConfig:
    """Capacity and scheduling knobs, defaulting to the reference constants."""

    short_term_capacity: int = 16  # N_S
    long_term_capacity: int = 256  # N_L
    retrieval_k: int = 4
    similarity_threshold: float = 0.95
    max_summaries: int = 5  # S
    summary_window_s: float = 16.0
    query_expiry_s: float = 120.0
    embedding_dim: int = 16
    fps: float = 1.0

    def __post_init__(self) -> None:
        if self.short_term_capacity < 1 or self.long_term_capacity < 1:
            raise ValueError("capacities must be >= 1")
        if not 0.0 < self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must lie in (0, 1]")


@dataclass(frozen=True)
class FrameRecord:
    t: float
    embedding: np.ndarray
    frame_ref: str = ""

    def __post_init__(self) -> None:
        emb = np.asarray(self.embedding, dtype=np.float64)
        object.__setattr__(self, "embedding", emb)
        norm = float(np.linalg.norm(emb))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"embedding must be unit-norm, got ||.|| = {norm}")


def unit(vector: Sequence[float]) -> np.ndarray:
    v = np.asarray(vector, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b))


@dataclass(frozen=True)
class Summary:
    created_t: float
    window_start: float
    window_end: float
    token: Any


@dataclass
class ActiveQuery:
    tag: str
    query_id: str
    ask_t: float
    expiry_t: float
    embedding: np.ndarray | None = None


@dataclass
class MemoryState:
    """The simulator's world; mutated in place by the operations below."""

    config: MemoryConfig = field(default_factory=MemoryConfig)
    short_term: deque[FrameRecord] = field(default_factory=deque)
    long_term: list[FrameRecord] = field(default_factory=list)
    summaries: list[Summary] = field(default_factory=list)
    answer_memory: dict[str, tuple[float, str]] = field(default_factory=dict)
    active_queries: list[ActiveQuery] = field(default_factory=list)
    next_query_number: int = 1
    summary_cursor: float = 0.0
    forced_removals: int = 0
    gated_removals: int = 0
    last_frame_t: float = float("-inf")

    def sizes(self) -> tuple[int, int, int]:
        return len(self.short_term), len(self.long_term), len(self.summaries)


def ingest_frame(state: MemoryState, frame: FrameRecord) -> MemoryState:
    """Append a frame to the short-term window, cascading evictions.

    The oldest short-term frame moves to the long-term store on overflow; a
    full long-term store forces one compression removal before insertion so
    neither bound ever breaks.
    """
    if frame.t <= state.last_frame_t:
        raise SimulationError(
            f"non-monotone frame timestamp {frame.t} (last was {state.last_frame_t})"
        )
    state.last_frame_t = frame.t
    state.short_term.append(frame)
    if len(state.short_term) > state.config.short_term_capacity:
        evicted = state.short_term.popleft()
        if len(state.long_term) >= state.config.long_term_capacity:
            _, removed = compress_once(state, state.config.similarity_threshold, forced=True)
            if removed is None:
                raise SimulationError("forced compression failed to free a slot")
        state.long_term.append(evicted)
    return state


def _adjacent_similarities(store: Sequence[FrameRecord]) -> np.ndarray:
    stacked = np.stack([f.embedding for f in store])
    return np.einsum("ij,ij->i", stacked[:-1], stacked[1:])


def compress_once(
    state: MemoryState, threshold: float | None = None, forced: bool = False
) -> tuple[MemoryState, FrameRecord | None]:
    """Remove the older member of the most similar consecutive long-term pair.

    A threshold-gated call is a no-op when the best similarity falls short; a
    forced call (long-term overflow) always removes. At most one removal per
    call. Ties go to the earliest qualifying pair.
    """
    threshold = state.config.similarity_threshold if threshold is None else threshold
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    if len(state.long_term) < 2:
        return state, None
    sims = _adjacent_similarities(state.long_term)
    best = int(np.argmax(sims))
    if not forced and sims[best] < threshold:
        return state, None
    removed = state.long_term.pop(best)
    if forced:
        state.forced_removals += 1
    else:
        state.gated_removals += 1
    return state, removed


def retrieve_topk(state: MemoryState, query_embedding: np.ndarray, k: int) -> list[FrameRecord]:
    """The k long-term frames most cosine-similar to the query, in time order.

    Similarity ties break toward the more recent frame.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    store = state.long_term
    if not store:
        return []
    q = np.asarray(query_embedding, dtype=np.float64)
    sims = [cosine(f.embedding, q) for f in store]
    ranked = sorted(range(len(store)), key=lambda i: (-sims[i], -store[i].t))
    chosen = sorted(ranked[:k], key=lambda i: store[i].t)
    return [store[i] for i in chosen]


def default_summarizer(frames: Sequence[FrameRecord], window: tuple[float, float]) -> str:
    """Centroid-of-embeddings digest with a window label; stand-in for a model."""
    centroid = np.mean(np.stack([f.embedding for f in frames]), axis=0)
    return f"w[{window[0]:g},{window[1]:g})n={len(frames)}|c={float(np.linalg.norm(centroid)):.4f}"


def summarize_tick(
    state: MemoryState,
    now: float,
    summarizer: Callable[[Sequence[FrameRecord], tuple[float, float]], Any] | None = None,
) -> MemoryState:
    """Summarize the most recent completed, not-yet-summarized window.

    Caller gates this to dead-time. Windows are non-overlapping
    ``summary_window_s`` spans from t=0; at most one summary per call; the
    oldest summary is evicted past capacity.
    """
    summarizer = summarizer or default_summarizer
    window = state.config.summary_window_s
    completed = math.floor(now / window + 1e-9)
    if completed < 1:
        return state
    latest_start = (completed - 1) * window
    if latest_start < state.summary_cursor:
        return state
    lo, hi = latest_start, latest_start + window
    frames = [f for f in list(state.long_term) + list(state.short_term) if lo <= f.t < hi]
    state.summary_cursor = hi
    if not frames:
        return state
    state.summaries.append(Summary(now, lo, hi, summarizer(frames, (lo, hi))))
    if len(state.summaries) > state.config.max_summaries:
        state.summaries.pop(0)
    return state


def on_query(
    state: MemoryState, query_id: str, t: float, embedding: np.ndarray | None = None
) -> MemoryState:
    """Register a query: unique monotonically numbered tag, FIFO order."""
    if any(q.query_id == query_id for q in state.active_queries):
        raise SimulationError(f"duplicate query id {query_id!r}")
    tag = f"[Q{state.next_query_number}]"
    state.next_query_number += 1
    state.active_queries.append(
        ActiveQuery(
            tag=tag,
            query_id=query_id,
            ask_t=t,
            expiry_t=t + state.config.query_expiry_s,
            embedding=None if embedding is None else np.asarray(embedding, dtype=np.float64),
        )
    )
    return state


def on_response(state: MemoryState, tag: str, t: float, text: str) -> MemoryState:
    """Record the latest tagged response so the model sees its own answer."""
    if not any(q.tag == tag for q in state.active_queries):
        raise SimulationError(f"response for unknown or expired tag {tag!r}")
    state.answer_memory[tag] = (t, text)
    return state


def expire_queries(state: MemoryState, now: float) -> list[ActiveQuery]:
    """Drop queries past their expiry along with their answer-memory entries."""
    expired = [q for q in state.active_queries if now >= q.expiry_t]
    if expired:
        state.active_queries = [q for q in state.active_queries if now < q.expiry_t]
        for q in expired:
            state.answer_memory.pop(q.tag, None)
    return expired


def dead_time_active(state: MemoryState) -> bool:
    """True when no query is active: asynchronous work may run."""
    return not state.active_queries


@dataclass(frozen=True)
class SegmentWeights:
    frame: float = 1.0
    summary: float = 1.0
    answer: float = 1.0
    tag: float = 1.0


@dataclass(frozen=True)
class ContextLayout:
    """The decode-time context in its mandated segment order."""

    sink: str
    summaries: tuple[Summary, ...]
    retrieved: tuple[tuple[str, tuple[FrameRecord, ...]], ...]
    answers: tuple[tuple[str, float, str], ...]
    short_term: tuple[FrameRecord, ...]
    query_tags: tuple[tuple[str, float], ...]

    def segment_names(self) -> tuple[str, ...]:
        names = [SINK_SEGMENT]
        if self.summaries:
            names.append("summaries")
        names.extend("retrieved" for _ in self.retrieved)
        if self.answers:
            names.append("answers")
        if self.short_term:
            names.append("short_term")
        if self.query_tags:
            names.append("query_tags")
        return tuple(names)

    def total_tokens(self, weights: SegmentWeights = SegmentWeights()) -> float:
        frames = len(self.short_term) + sum(len(seg) for _, seg in self.retrieved)
        return (
            weights.frame * frames
            + weights.summary * len(self.summaries)
            + weights.answer * len(self.answers)
            + weights.tag * len(self.query_tags)
        )


def assemble_context(state: MemoryState, now: float) -> ContextLayout:
    """Emit segments in order: sink, summaries, retrieved KV per active query,
    answer memory, short-term frames, active query tags.

    Retrieved segments are recomputed from the current long-term store, each in
    ascending time order; queries appear in FIFO order throughout.
    """
    expire_queries(state, now)
    retrieved = []
    for q in state.active_queries:
        if q.embedding is None:
            frames: tuple[FrameRecord, ...] = ()
        else:
            frames = tuple(retrieve_topk(state, q.embedding, state.config.retrieval_k))
        retrieved.append((q.tag, frames))
    answers = tuple(
        (q.tag, state.answer_memory[q.tag][0], state.answer_memory[q.tag][1])
        for q in state.active_queries
        if q.tag in state.answer_memory
    )
    return ContextLayout(
        sink=SINK_SEGMENT,
        summaries=tuple(state.summaries),
        retrieved=tuple(retrieved),
        answers=answers,
        short_term=tuple(state.short_term),
        query_tags=tuple((q.tag, q.ask_t) for q in state.active_queries),
    )


# --- event-driven driver ----------------------------------------------------


def simulate(
    events: Iterable[Mapping[str, Any]],
    cfg: MemoryConfig | None = None,
    summarizer: Callable[[Sequence[FrameRecord], tuple[float, float]], Any] | None = None,
) -> tuple[MemoryState, list[dict[str, Any]]]:
    """Drive the memory manager over a stream of frame/query/response events.

    Events mirror the adapter protocol plus embedding vectors. Dead-time work
    (one summarization, one threshold-gated compression) is budgeted per
    simulated second and runs only while no query is active; forced
    compressions from long-term overflow are exempt from the budget.
    """
    cfg = cfg or MemoryConfig()
    state = MemoryState(config=cfg)
    trace: list[dict[str, Any]] = []
    last_summary_second: int | None = None
    last_compress_second: int | None = None

    def snap(kind: str, t: float, **detail: Any) -> None:
        short, long, summaries = state.sizes()
        trace.append(
            {
                "event": kind,
                "t": t,
                "short": short,
                "long": long,
                "summaries": summaries,
                "active_queries": len(state.active_queries),
                **detail,
            }
        )

    for event in events:
        etype = event.get("type")
        t = float(event.get("t", 0.0))
        for gone in expire_queries(state, t):
            snap("expire", t, tag=gone.tag)
        if etype == "frame":
            if "embedding" not in event:
                raise SimulationError("frame event needs an embedding")
            frame = FrameRecord(t, unit(event["embedding"]), str(event.get("frame_ref", "")))
            forced_before = state.forced_removals
            ingest_frame(state, frame)
            snap("ingest", t, forced_removal=state.forced_removals > forced_before)
            if dead_time_active(state):
                second = int(t)
                if second != last_summary_second:
                    last_summary_second = second
                    n_before = len(state.summaries)
                    cursor_before = state.summary_cursor
                    summarize_tick(state, t, summarizer)
                    if len(state.summaries) != n_before or state.summary_cursor != cursor_before:
                        snap("summarize", t, cursor=state.summary_cursor)
                if second != last_compress_second:
                    last_compress_second = second
                    _, removed = compress_once(state)
                    if removed is not None:
                        snap("compress", t, removed_t=removed.t)
        elif etype == "query":
            embedding = unit(event["embedding"]) if "embedding" in event else None
            on_query(state, str(event["query_id"]), t, embedding)
            snap("query", t, query_id=event["query_id"], tag=state.active_queries[-1].tag)
        elif etype == "response":
            query_id = str(event.get("query_id", ""))
            match = next((q for q in state.active_queries if q.query_id == query_id), None)
            if match is None:
                raise SimulationError(f"response for unknown or expired query {query_id!r}")
            on_response(state, match.tag, t, str(event.get("text", "")))
            snap("response", t, tag=match.tag)
        elif etype in ("hello", "eos"):
            continue
        else:
            raise SimulationError(f"unknown event type {etype!r}")
    return state, trace


def trace_to_jsonl(trace: Iterable[Mapping[str, Any]]) -> bytes:
    lines = [json.dumps(rec, ensure_ascii=False) for rec in trace]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
