"""Replay an annotated video to a scripted in-process adapter and score it.

The harness streams frames at 1 fps with queries interleaved at their ask
times; every adapter response is stamped with the stream clock of the event it
followed. Run: python3 demos/03_replay_session.py
"""

import json

from spot_eval import (
    Script,
    ScriptedAdapter,
    TimelinessConfig,
    compute_metrics,
    match_video,
    parse_annotations,
    run_session,
)
from spot_eval.replay import ScriptRule, perfect_oracle_script
from spot_eval.semantics import ExactMatcher

ANNOTATION = [{
    "video_id": "kitchen",
    "task": "ABD",
    "duration_s": 25.0,
    "fps": 1.0,
    "turns": [{
        "query_id": "q1",
        "ask_time_s": 3.0,
        "query_text": "when does the stirring start and end?",
        "slots": [
            {"slot_id": "s1", "keyframe_s": 8.0, "gold_text": "start"},
            {"slot_id": "s2", "keyframe_s": 17.0, "gold_text": "end"},
        ],
    }],
}]

ann = parse_annotations(json.dumps(ANNOTATION).encode())[0]
cfg = TimelinessConfig()

print("perfect oracle adapter:")
log = run_session(ann, ScriptedAdapter(perfect_oracle_script(ann)), cfg=cfg)
for p in log.predictions:
    print(f"  t={p.t:>5}  {p.text!r}  tag={p.query_tag}")
ledger = match_video(log.prediction_events(), ann.all_slots(), task=ann.task, k=5,
                     matcher=ExactMatcher(), cfg=cfg)
print(f"  -> T-F1@5 = {100 * compute_metrics(ledger).t_f1:.1f}\n")

print("a sloppier adapter (one early guess, one late, one off-topic):")
sloppy = Script((
    ScriptRule({"kind": "frame", "t": 7.0}, {"kind": "respond", "text": "start", "query_id": "q1"}),
    ScriptRule({"kind": "frame", "t": 19.0}, {"kind": "respond", "text": "end", "query_id": "q1"}),
    ScriptRule({"kind": "frame", "t": 22.0}, {"kind": "respond", "text": "pasta!"}),
))
log = run_session(ann, ScriptedAdapter(sloppy), cfg=cfg)
ledger = match_video(log.prediction_events(), ann.all_slots(), task=ann.task, k=5,
                     matcher=ExactMatcher(), cfg=cfg)
metrics = compute_metrics(ledger)
print(f"  xTP={ledger.xtp:.4f} TP={ledger.tp} FP={ledger.fp} FN={ledger.fn}"
      f"  -> T-F1@5 = {100 * metrics.t_f1:.1f}")
print(f"  dead-time fraction of this video: {log.dead_time.fraction:.3f}")
