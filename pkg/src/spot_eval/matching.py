"""Greedy slot matching with an occupancy budget, and the timeliness-weighted
precision/recall/F1 computed from the resulting ledger.

Predictions are walked chronologically; each one is offered to every still-open
slot. A slot collects up to K temporally-valid, semantically-correct
predictions, keeps its best timeliness score, and closes at K. A prediction
that credits no slot at all is a false positive; an untouched slot is a false
negative.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .model import GoldSlot, PredictionEvent, TaskKind, TimelinessConfig
from .semantics import SemanticMatcher
from .timeliness import is_temporally_valid, score_for_slot


@dataclass
class SlotState:
    """Per-slot match count and best timeliness score."""

    slot: GoldSlot
    match_count: int = 0
    best_t: float = 0.0
    closed: bool = False


@dataclass(frozen=True)
class PredictionVerdict:
    t: float
    text: str
    credited_slots: tuple[str, ...]
    false_positive: bool


@dataclass
class MatchLedger:
    xtp: float
    tp: int
    fp: int
    fn: int
    per_slot: list[SlotState] = field(default_factory=list)
    per_prediction: list[PredictionVerdict] = field(default_factory=list)


@dataclass(frozen=True)
class Metrics:
    """Fractions in [0, 1]; reports scale them to percentages."""

    precision: float
    recall: float
    t_f1: float


def match_video(
    preds: Sequence[PredictionEvent],
    slots: Sequence[GoldSlot],
    *,
    task: TaskKind,
    k: int,
    matcher: SemanticMatcher,
    cfg: TimelinessConfig,
    questions: Sequence[str] | None = None,
) -> MatchLedger:
    """Run the greedy occupancy-K matching pass over one video.

    ``questions`` optionally aligns a query text with each slot for
    judge-based matching. Inputs are sorted defensively; prediction ties keep
    input order so the ledger is deterministic.
    """
    if k < 1:
        raise ValueError("occupancy budget k must be >= 1")
    if questions is not None and len(questions) != len(slots):
        raise ValueError("questions must align one-to-one with slots")

    order = sorted(range(len(slots)), key=lambda j: slots[j].t_s)
    states = [SlotState(slots[j]) for j in order]
    slot_questions = [questions[j] if questions is not None else "" for j in order]

    ledger = MatchLedger(xtp=0.0, tp=0, fp=0, fn=0, per_slot=states)
    for pred in sorted(preds, key=lambda p: p.t):
        matched = False
        credited: list[str] = []
        for state, question in zip(states, slot_questions):
            if state.closed:
                continue
            t_score = score_for_slot(pred.t, state.slot, task, cfg)
            if not is_temporally_valid(t_score, cfg.epsilon):
                continue
            if not matcher.matches(pred.text, state.slot.gold_text, question, task):
                continue
            state.match_count += 1
            state.best_t = max(state.best_t, t_score)
            if state.match_count == k:
                state.closed = True
            matched = True
            credited.append(state.slot.slot_id)
        if not matched:
            ledger.fp += 1
        ledger.per_prediction.append(
            PredictionVerdict(pred.t, pred.text, tuple(credited), not matched)
        )

    ledger.tp = sum(1 for s in states if s.match_count > 0)
    ledger.fn = sum(1 for s in states if s.match_count == 0)
    ledger.xtp = sum(s.best_t for s in states if s.match_count > 0)
    return ledger


def compute_metrics(ledger: MatchLedger) -> Metrics:
    """Precision/recall from the weighted true-positive mass; 0/0 counts as 0."""
    precision = ledger.xtp / (ledger.tp + ledger.fp) if ledger.tp + ledger.fp else 0.0
    recall = ledger.xtp / (ledger.tp + ledger.fn) if ledger.tp + ledger.fn else 0.0
    t_f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(precision, recall, t_f1)


def tscore_at_k(ledger: MatchLedger) -> float:
    """Mean best timeliness per gold slot, as a percentage; ignores FPs."""
    total_slots = ledger.tp + ledger.fn
    if total_slots == 0:
        return 0.0
    return 100.0 * ledger.xtp / total_slots


@dataclass(frozen=True)
class TaskSummary:
    n_videos: int
    micro: Metrics
    macro: Metrics
    tscore: float
    counts: dict


@dataclass(frozen=True)
class AggregateResult:
    per_task: dict[TaskKind, TaskSummary]
    overall_micro: Metrics
    overall_macro: Metrics
    overall_tscore: float


def _mean_metrics(items: Sequence[Metrics]) -> Metrics:
    if not items:
        return Metrics(0.0, 0.0, 0.0)
    n = len(items)
    return Metrics(
        sum(m.precision for m in items) / n,
        sum(m.recall for m in items) / n,
        sum(m.t_f1 for m in items) / n,
    )


def aggregate(
    ledgers: Sequence[tuple[str, TaskKind, MatchLedger]],
) -> AggregateResult:
    """Pool per-video ledgers into per-task and overall metrics.

    Micro pools the raw xTP/TP/FP/FN counts per task before computing metrics;
    macro averages per-video metrics. The overall row is the unweighted mean
    of the per-task values, over tasks actually present. Degenerate videos
    (no slots and no predictions) add nothing to micro pooling and are
    skipped in macro averaging.
    """
    if not ledgers:
        raise ValueError("aggregate needs at least one ledger")
    per_task: dict[TaskKind, TaskSummary] = {}
    for task in TaskKind:
        rows = [(vid, lg) for vid, t, lg in ledgers if t == task]
        if not rows:
            continue
        pooled = MatchLedger(
            xtp=sum(lg.xtp for _, lg in rows),
            tp=sum(lg.tp for _, lg in rows),
            fp=sum(lg.fp for _, lg in rows),
            fn=sum(lg.fn for _, lg in rows),
        )
        macro_items = [
            compute_metrics(lg)
            for _, lg in rows
            if lg.tp + lg.fn + lg.fp > 0 or lg.per_prediction
        ]
        per_task[task] = TaskSummary(
            n_videos=len(rows),
            micro=compute_metrics(pooled),
            macro=_mean_metrics(macro_items),
            tscore=tscore_at_k(pooled),
            counts={
                "xtp": pooled.xtp,
                "tp": pooled.tp,
                "fp": pooled.fp,
                "fn": pooled.fn,
            },
        )
    summaries = list(per_task.values())
    return AggregateResult(
        per_task=per_task,
        overall_micro=_mean_metrics([s.micro for s in summaries]),
        overall_macro=_mean_metrics([s.macro for s in summaries]),
        overall_tscore=sum(s.tscore for s in summaries) / len(summaries),
    )


def ledger_to_jsonl(video_id: str, task: TaskKind, ledger: MatchLedger) -> str:
    """Line-oriented audit dump: one record per slot, per prediction, plus totals."""
    lines = []
    for state in ledger.per_slot:
        lines.append(
            json.dumps(
                {
                    "kind": "slot",
                    "video_id": video_id,
                    "task": task.value,
                    "slot_id": state.slot.slot_id,
                    "t_s": state.slot.t_s,
                    "t_e": state.slot.t_e,
                    "match_count": state.match_count,
                    "best_t": state.best_t,
                    "closed": state.closed,
                }
            )
        )
    for verdict in ledger.per_prediction:
        lines.append(
            json.dumps(
                {
                    "kind": "prediction",
                    "video_id": video_id,
                    "t": verdict.t,
                    "text": verdict.text,
                    "credited_slots": list(verdict.credited_slots),
                    "false_positive": verdict.false_positive,
                }
            )
        )
    lines.append(
        json.dumps(
            {
                "kind": "totals",
                "video_id": video_id,
                "xtp": ledger.xtp,
                "tp": ledger.tp,
                "fp": ledger.fp,
                "fn": ledger.fn,
            }
        )
    )
    return "\n".join(lines) + "\n"


def flatten_slots(turns: Iterable) -> tuple[list[GoldSlot], list[str]]:
    """All slots of a video in turn order, with each slot's query text."""
    slots: list[GoldSlot] = []
    questions: list[str] = []
    for turn in turns:
        for slot in turn.slots:
            slots.append(slot)
            questions.append(turn.query_text)
    return slots, questions
