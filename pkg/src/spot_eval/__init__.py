"""spot-eval: deterministic evaluation engine for proactive streaming video
assistants.

Replays annotated videos as causal event streams to external model adapters,
scores timestamped predictions with timeliness-weighted F1, and simulates a
bounded long/short-term memory manager with dead-time compute scheduling.
"""

__version__ = "0.1.0"

from .model import (
    AnnotationError,
    GoldSlot,
    PredictionEvent,
    PredictionLog,
    PredictionLogError,
    SpotEvalError,
    TaskKind,
    TimelinessConfig,
    Turn,
    VideoAnnotation,
    derive_slot,
    parse_annotations,
    parse_predictions,
    predictions_to_jsonl,
    serialize_annotations,
)
from .timeliness import is_temporally_valid, timeliness_score
from .matching import (
    MatchLedger,
    Metrics,
    SlotState,
    aggregate,
    compute_metrics,
    match_video,
    tscore_at_k,
)
from .semantics import (
    EditDistanceMatcher,
    ExactMatcher,
    JudgeCache,
    JudgeClient,
    JudgeError,
    JudgeMatcher,
    JudgeVerdict,
    edit_distance_match,
    exact_match,
    levenshtein,
    make_matcher,
)
from .replay import (
    AdapterFailure,
    ProtocolError,
    Script,
    ScriptedAdapter,
    SessionLog,
    SimulatedClock,
    SubprocessAdapter,
    TranscriptAdapter,
    clock_mode,
    dead_time_intervals,
    run_session,
)
from .memory import (
    ContextLayout,
    FrameRecord,
    MemoryConfig,
    MemoryState,
    assemble_context,
    compress_once,
    ingest_frame,
    on_query,
    on_response,
    retrieve_topk,
    simulate,
    summarize_tick,
)
from .report import Report, RunConfig, corpus_statistics, score_corpus

__all__ = [
    "AnnotationError",
    "GoldSlot",
    "PredictionEvent",
    "PredictionLog",
    "PredictionLogError",
    "SpotEvalError",
    "TaskKind",
    "TimelinessConfig",
    "Turn",
    "VideoAnnotation",
    "derive_slot",
    "parse_annotations",
    "parse_predictions",
    "predictions_to_jsonl",
    "serialize_annotations",
    "is_temporally_valid",
    "timeliness_score",
    "MatchLedger",
    "Metrics",
    "SlotState",
    "aggregate",
    "compute_metrics",
    "match_video",
    "tscore_at_k",
    "EditDistanceMatcher",
    "ExactMatcher",
    "JudgeCache",
    "JudgeClient",
    "JudgeError",
    "JudgeMatcher",
    "JudgeVerdict",
    "edit_distance_match",
    "exact_match",
    "levenshtein",
    "make_matcher",
    "AdapterFailure",
    "ProtocolError",
    "Script",
    "ScriptedAdapter",
    "SessionLog",
    "SimulatedClock",
    "SubprocessAdapter",
    "TranscriptAdapter",
    "clock_mode",
    "dead_time_intervals",
    "run_session",
    "ContextLayout",
    "FrameRecord",
    "MemoryConfig",
    "MemoryState",
    "assemble_context",
    "compress_once",
    "ingest_frame",
    "on_query",
    "on_response",
    "retrieve_topk",
    "simulate",
    "summarize_tick",
    "Report",
    "RunConfig",
    "corpus_statistics",
    "score_corpus",
]
