"""The ``spot-eval`` command line: replay, score, deadtime, simulate-memory.

Exit codes: 0 success, 1 usage error, 2 data error, 3 adapter failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Sequence

from .matching import ledger_to_jsonl
from .memory import MemoryConfig, SimulationError, simulate, trace_to_jsonl
from .model import (
    AnnotationError,
    PredictionLogError,
    parse_annotations,
    parse_predictions,
    predictions_to_jsonl,
)
from .replay import (
    AdapterFailure,
    ProtocolError,
    SubprocessAdapter,
    clock_mode,
    dead_time_intervals,
    run_session,
)
from .report import RunConfig, score_corpus
from .semantics import JudgeError, make_matcher

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ADAPTER = 3

JUDGE_ENV_VAR = "SPOT_EVAL_JUDGE_CMD"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="spot-eval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    replay = sub.add_parser("replay", help="stream annotations to an adapter process")
    replay.add_argument("--annotations", required=True)
    replay.add_argument("--adapter-cmd", required=True, help="command spawning the adapter")
    replay.add_argument("--fps", type=float, default=None)
    replay.add_argument("--clock", choices=["logical", "realtime"], default="logical")
    replay.add_argument("--deadline-ms", type=float, default=0.0)
    replay.add_argument("--out", required=True, help="prediction log to write (jsonl)")
    replay.add_argument("--session-log", default=None, help="optional session log (json)")

    score = sub.add_parser("score", help="score a prediction log against annotations")
    score.add_argument("--annotations", required=True)
    score.add_argument("--predictions", required=True)
    score.add_argument("--k", type=int, default=5)
    score.add_argument("--matcher", choices=["exact", "edit", "judge"], default="exact")
    score.add_argument("--edit-threshold", type=float, default=0.8)
    score.add_argument("--judge-cmd", default=None, help=f"judge command (or ${JUDGE_ENV_VAR})")
    score.add_argument("--judge-cache", default=None)
    score.add_argument("--report", required=True, help="structured report to write (json)")
    score.add_argument("--ledger-dump", default=None, help="per-slot/prediction audit (jsonl)")
    score.add_argument("--config", default=None, help="json file with RunConfig overrides")

    deadtime = sub.add_parser("deadtime", help="report dead-time per video and corpus-wide")
    deadtime.add_argument("--annotations", required=True)

    sim = sub.add_parser("simulate-memory", help="drive the memory manager over an event file")
    sim.add_argument("--events", required=True)
    sim.add_argument("--ns", type=int, default=16, help="short-term capacity")
    sim.add_argument("--nl", type=int, default=256, help="long-term capacity")
    sim.add_argument("--topk", type=int, default=4)
    sim.add_argument("--threshold", type=float, default=0.95)
    sim.add_argument("--dim", type=int, default=16)
    sim.add_argument("--window", type=float, default=16.0)
    sim.add_argument("--trace", required=True, help="trace file to write (jsonl)")
    return parser


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _cmd_replay(args: argparse.Namespace) -> int:
    annotations = parse_annotations(_read(args.annotations))
    pacing = clock_mode(args.clock, args.deadline_ms)
    all_events = []
    session_dicts = []
    failed = False
    for ann in annotations:
        adapter = SubprocessAdapter(args.adapter_cmd)
        try:
            log = run_session(ann, adapter, fps=args.fps, clock_cfg=pacing)
        finally:
            adapter.close()
        failed = failed or log.failed
        all_events.extend(log.prediction_events())
        session_dicts.append(log.to_dict())
    with open(args.out, "wb") as fh:
        fh.write(predictions_to_jsonl(all_events))
    if args.session_log:
        with open(args.session_log, "w", encoding="utf-8") as fh:
            json.dump(session_dicts, fh, ensure_ascii=False, sort_keys=True, indent=2)
    print(f"wrote {len(all_events)} predictions from {len(annotations)} sessions to {args.out}")
    return EXIT_ADAPTER if failed else EXIT_OK


def _cmd_score(args: argparse.Namespace) -> int:
    overrides: dict[str, Any] = {}
    if args.config:
        overrides = json.loads(_read(args.config))
    judge_cmd = args.judge_cmd or os.environ.get(JUDGE_ENV_VAR)
    config = RunConfig(
        annotations_path=args.annotations,
        predictions_path=args.predictions,
        report_path=args.report,
        judge_cache_path=args.judge_cache or "",
        matcher=overrides.get("matcher", args.matcher),
        matcher_by_task=overrides.get("matcher_by_task", {}),
        edit_threshold=overrides.get("edit_threshold", args.edit_threshold),
        k=overrides.get("k", args.k),
        half_width_overrides=overrides.get("half_width_overrides", {}),
        sigma_early_overrides=overrides.get("sigma_early_overrides", {}),
        sigma_late_overrides=overrides.get("sigma_late_overrides", {}),
        query_expiry_s=overrides.get("query_expiry_s", 120.0),
        epsilon=overrides.get("epsilon", 1e-6),
        seed=overrides.get("seed", 0),
    )
    cfg = config.timeliness_config()
    annotations = parse_annotations(_read(args.annotations), cfg)
    predictions = parse_predictions(_read(args.predictions), cfg)

    kinds = {config.matcher} | set(config.matcher_by_task.values())
    matchers = {}
    for kind in kinds:
        matchers[kind] = make_matcher(
            kind,
            threshold=config.edit_threshold,
            judge_cmd=judge_cmd,
            cache_path=config.judge_cache_path or None,
        )
    report = score_corpus(annotations, predictions, config, matchers)
    with open(args.report, "wb") as fh:
        fh.write(report.to_json_bytes())
    if args.ledger_dump:
        with open(args.ledger_dump, "w", encoding="utf-8") as fh:
            for video in report.per_video:
                fh.write(ledger_to_jsonl(video.video_id, video.task, video.ledger))
    print(report.render_table())
    return EXIT_OK


def _cmd_deadtime(args: argparse.Namespace) -> int:
    annotations = parse_annotations(_read(args.annotations))
    fractions = []
    for ann in annotations:
        dt = dead_time_intervals(ann)
        if ann.duration > 0.0:
            fractions.append(dt.fraction)
        print(f"{ann.video_id}\t{ann.task.value}\t{dt.fraction:.6f}\t{dt.total_dead:.3f}s")
    if fractions:
        print(f"corpus mean dead-time fraction: {sum(fractions) / len(fractions):.6f}")
    return EXIT_OK


def _cmd_simulate_memory(args: argparse.Namespace) -> int:
    cfg = MemoryConfig(
        short_term_capacity=args.ns,
        long_term_capacity=args.nl,
        retrieval_k=args.topk,
        similarity_threshold=args.threshold,
        embedding_dim=args.dim,
        summary_window_s=args.window,
    )
    events = []
    for line_no, line in enumerate(_read(args.events).decode("utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            events.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise SimulationError(f"events line {line_no}: {exc}") from exc
    state, trace = simulate(events, cfg)
    with open(args.trace, "wb") as fh:
        fh.write(trace_to_jsonl(trace))
    short, long, summaries = state.sizes()
    print(
        f"final sizes: short={short} long={long} summaries={summaries} "
        f"forced_removals={state.forced_removals} gated_removals={state.gated_removals}"
    )
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "replay":
            return _cmd_replay(args)
        if args.command == "score":
            return _cmd_score(args)
        if args.command == "deadtime":
            return _cmd_deadtime(args)
        if args.command == "simulate-memory":
            return _cmd_simulate_memory(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AnnotationError, PredictionLogError, SimulationError, FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (AdapterFailure, ProtocolError, JudgeError) as exc:
        print(f"adapter error: {exc}", file=sys.stderr)
        return EXIT_ADAPTER


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
