"""Profile dead-time: stream intervals where no query is active.

No active query means spare compute: the memory manager schedules its
summarization and compression there. Context prompts (ask time 0) keep the
whole video active; sparse mid-video queries leave most of it dead.
Run: python3 demos/05_dead_time.py
"""

import json

from spot_eval import dead_time_intervals, parse_annotations

CORPUS = [
    {
        "video_id": "sparse_queries", "task": "ABD", "duration_s": 300.0, "fps": 1.0,
        "turns": [
            {"query_id": "a", "ask_time_s": 10.0, "query_text": "?", "slots": [
                {"slot_id": "s1", "keyframe_s": 30.0, "gold_text": "start"}]},
            {"query_id": "b", "ask_time_s": 200.0, "query_text": "?", "slots": [
                {"slot_id": "s2", "keyframe_s": 240.0, "gold_text": "end"}]},
        ],
    },
    {
        "video_id": "context_prompt", "task": "SPG", "duration_s": 400.0, "fps": 1.0,
        "turns": [
            {"query_id": "q0", "ask_time_s": 0.0, "query_text": "guide me", "slots": [
                {"slot_id": "s1", "keyframe_s": 120.0, "gold_text": "next step"}]},
        ],
    },
    {
        "video_id": "no_queries", "task": "PNR", "duration_s": 90.0, "fps": 1.0,
        "turns": [],
    },
]

annotations = parse_annotations(json.dumps(CORPUS).encode())
fractions = []
for ann in annotations:
    dt = dead_time_intervals(ann)
    fractions.append(dt.fraction)
    spans = ", ".join(f"[{s:g}, {e:g})" for s, e in dt.intervals) or "none"
    print(f"{ann.video_id:<16} duration={ann.duration:>5g}s  dead={dt.fraction:>6.1%}  spans: {spans}")

print(f"\ncorpus mean dead-time fraction: {sum(fractions) / len(fractions):.1%}")
print("(a query holds its video active for 120 s; ask time 0 never expires)")
