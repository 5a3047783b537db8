"""Run configuration, corpus statistics, and report generation.

A report is a pure function of (annotations, predictions, config): rerunning
with the same inputs and judge cache produces byte-identical output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from . import __version__
from .matching import (
    AggregateResult,
    MatchLedger,
    Metrics,
    aggregate,
    compute_metrics,
    flatten_slots,
    match_video,
    tscore_at_k,
)
from .model import (
    PredictionLog,
    TaskKind,
    TimelinessConfig,
    VideoAnnotation,
)
from .replay import dead_time_intervals
from .semantics import SemanticMatcher


@dataclass(frozen=True)
class RunConfig:
    """Everything a scoring run depends on; embedded verbatim in the report."""

    annotations_path: str = ""
    predictions_path: str = ""
    report_path: str = ""
    judge_cache_path: str = ""
    matcher: str = "exact"
    matcher_by_task: Mapping[str, str] = field(default_factory=dict)
    edit_threshold: float = 0.8
    k: int = 5
    half_width_overrides: Mapping[str, float] = field(default_factory=dict)
    sigma_early_overrides: Mapping[str, float] = field(default_factory=dict)
    sigma_late_overrides: Mapping[str, float] = field(default_factory=dict)
    query_expiry_s: float = 120.0
    epsilon: float = 1e-6
    seed: int = 0

    def matcher_for(self, task: TaskKind) -> str:
        return self.matcher_by_task.get(task.value, self.matcher)

    def timeliness_config(self) -> TimelinessConfig:
        half_width = dict(TimelinessConfig().half_width)
        for name, value in self.half_width_overrides.items():
            half_width[TaskKind(name)] = float(value)
        sigma_early = {t: 2.0 * w for t, w in half_width.items()}
        sigma_late = {t: 1.0 * w for t, w in half_width.items()}
        for name, value in self.sigma_early_overrides.items():
            sigma_early[TaskKind(name)] = float(value)
        for name, value in self.sigma_late_overrides.items():
            sigma_late[TaskKind(name)] = float(value)
        return TimelinessConfig(
            half_width=half_width,
            sigma_early=sigma_early,
            sigma_late=sigma_late,
            occupancy_k=self.k,
            query_expiry_s=self.query_expiry_s,
            epsilon=self.epsilon,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "annotations_path": self.annotations_path,
            "predictions_path": self.predictions_path,
            "report_path": self.report_path,
            "judge_cache_path": self.judge_cache_path,
            "matcher": self.matcher,
            "matcher_by_task": dict(self.matcher_by_task),
            "edit_threshold": self.edit_threshold,
            "k": self.k,
            "half_width_overrides": dict(self.half_width_overrides),
            "sigma_early_overrides": dict(self.sigma_early_overrides),
            "sigma_late_overrides": dict(self.sigma_late_overrides),
            "query_expiry_s": self.query_expiry_s,
            "epsilon": self.epsilon,
            "seed": self.seed,
        }


def corpus_statistics(annotations: Sequence[VideoAnnotation]) -> dict[str, Any]:
    """Per-task corpus shape: video counts, turn/response densities, ask-to-
    response gaps, durations.

    The ask-to-response gap averages keyframe minus ask time over slots whose
    turn has a non-empty query text; tasks with only implicit prompts report
    null, mirroring how unsolicited tasks have no ask at all.
    """
    stats: dict[str, Any] = {}
    for task in TaskKind:
        videos = [a for a in annotations if a.task == task]
        if not videos:
            continue
        n_turns = sum(len(a.turns) for a in videos)
        n_slots = sum(len(t.slots) for a in videos for t in a.turns)
        gaps = [
            slot.keyframe_t - turn.ask_time
            for a in videos
            for turn in a.turns
            if turn.query_text.strip()
            for slot in turn.slots
        ]
        stats[task.value] = {
            "videos": len(videos),
            "mean_turns_per_video": n_turns / len(videos),
            "mean_responses_per_turn": (n_slots / n_turns) if n_turns else 0.0,
            "mean_ask_to_response_s": (sum(gaps) / len(gaps)) if gaps else None,
            "mean_duration_s": sum(a.duration for a in videos) / len(videos),
        }
    return stats


@dataclass(frozen=True)
class VideoScore:
    video_id: str
    task: TaskKind
    ledger: MatchLedger
    metrics: Metrics
    tscore: float


@dataclass(frozen=True)
class Report:
    config: RunConfig
    aggregate: AggregateResult
    per_video: tuple[VideoScore, ...]
    silence_count: int
    dead_time_fraction: float
    dead_time_by_video: Mapping[str, float]
    corpus_stats: Mapping[str, Any]
    tool_version: str = __version__

    def to_dict(self) -> dict[str, Any]:
        def metrics_pct(m: Metrics) -> dict[str, float]:
            return {
                "precision_pct": 100.0 * m.precision,
                "recall_pct": 100.0 * m.recall,
                "t_f1_pct": 100.0 * m.t_f1,
            }

        per_task = {}
        for task, summary in self.aggregate.per_task.items():
            per_task[task.value] = {
                "videos": summary.n_videos,
                "tscore_pct": summary.tscore,
                "micro": metrics_pct(summary.micro),
                "macro": metrics_pct(summary.macro),
                "counts": summary.counts,
            }
        return {
            "tool_version": self.tool_version,
            "config": self.config.to_dict(),
            "per_task": per_task,
            "overall": {
                "tscore_pct": self.aggregate.overall_tscore,
                "micro": metrics_pct(self.aggregate.overall_micro),
                "macro": metrics_pct(self.aggregate.overall_macro),
            },
            "per_video": [
                {
                    "video_id": v.video_id,
                    "task": v.task.value,
                    "tscore_pct": v.tscore,
                    **metrics_pct(v.metrics),
                    "xtp": v.ledger.xtp,
                    "tp": v.ledger.tp,
                    "fp": v.ledger.fp,
                    "fn": v.ledger.fn,
                }
                for v in self.per_video
            ],
            "silence_count": self.silence_count,
            "false_positives": sum(v.ledger.fp for v in self.per_video),
            "false_negatives": sum(v.ledger.fn for v in self.per_video),
            "dead_time_fraction": self.dead_time_fraction,
            "dead_time_by_video": dict(self.dead_time_by_video),
            "corpus_stats": dict(self.corpus_stats),
        }

    def to_json_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, indent=2).encode(
            "utf-8"
        )

    def render_table(self) -> str:
        """Aligned per-task table with percentages to one decimal."""
        header = (
            f"{'Task':<8}{'Videos':>7}{'T-score@K':>11}{'T-F1@K':>9}"
            f"{'P':>8}{'R':>8}{'FP':>6}{'FN':>6}"
        )
        rows = [header, "-" * len(header)]
        for task, s in self.aggregate.per_task.items():
            rows.append(
                f"{task.value:<8}{s.n_videos:>7}{s.tscore:>11.1f}"
                f"{100.0 * s.micro.t_f1:>9.1f}{100.0 * s.micro.precision:>8.1f}"
                f"{100.0 * s.micro.recall:>8.1f}{s.counts['fp']:>6}{s.counts['fn']:>6}"
            )
        rows.append("-" * len(header))
        agg = self.aggregate
        rows.append(
            f"{'Overall':<8}{len(self.per_video):>7}{agg.overall_tscore:>11.1f}"
            f"{100.0 * agg.overall_micro.t_f1:>9.1f}{100.0 * agg.overall_micro.precision:>8.1f}"
            f"{100.0 * agg.overall_micro.recall:>8.1f}{'':>6}{'':>6}"
        )
        rows.append(f"dead-time fraction: {self.dead_time_fraction:.3f}")
        rows.append(f"silence responses:  {self.silence_count}")
        return "\n".join(rows)


def score_corpus(
    annotations: Sequence[VideoAnnotation],
    predictions: PredictionLog,
    config: RunConfig,
    matchers: Mapping[str, SemanticMatcher],
) -> Report:
    """Match every video with its task's semantic matcher and aggregate.

    ``matchers`` maps matcher kind names ("exact", "edit", "judge") to live
    matcher instances; the config decides which kind each task uses.
    """
    cfg = config.timeliness_config()
    scored: list[VideoScore] = []
    ledgers: list[tuple[str, TaskKind, MatchLedger]] = []
    dead_by_video: dict[str, float] = {}
    dead_fractions: list[float] = []
    for ann in annotations:
        slots, questions = flatten_slots(ann.turns)
        matcher = matchers[config.matcher_for(ann.task)]
        ledger = match_video(
            predictions.for_video(ann.video_id),
            slots,
            task=ann.task,
            k=config.k,
            matcher=matcher,
            cfg=cfg,
            questions=questions,
        )
        scored.append(
            VideoScore(ann.video_id, ann.task, ledger, compute_metrics(ledger), tscore_at_k(ledger))
        )
        ledgers.append((ann.video_id, ann.task, ledger))
        dt = dead_time_intervals(ann, cfg)
        dead_by_video[ann.video_id] = dt.fraction
        if ann.duration > 0.0:
            dead_fractions.append(dt.fraction)
    agg = aggregate(ledgers)
    return Report(
        config=config,
        aggregate=agg,
        per_video=tuple(scored),
        silence_count=predictions.silence_count,
        dead_time_fraction=(sum(dead_fractions) / len(dead_fractions)) if dead_fractions else 0.0,
        dead_time_by_video=dead_by_video,
        corpus_stats=corpus_statistics(annotations),
    )
