"""Regenerate the golden fixtures under tests/data/.

The transcripts come straight from the harness's own serializer: a recorded
session between the harness and the in-process scripted adapter. Rerunning
this script must be byte-stable; the fixtures are committed.
"""

from __future__ import annotations

import json
from pathlib import Path

from spot_eval.model import parse_annotations, serialize_annotations
from spot_eval.replay import (
    RecordingAdapter,
    ScriptedAdapter,
    dump_transcript,
    perfect_oracle_script,
    run_session,
    spammer_script,
)

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

BENCH = [
    {
        "video_id": "v_abd",
        "task": "ABD",
        "duration_s": 30.0,
        "fps": 1.0,
        "turns": [
            {
                "query_id": "t1",
                "ask_time_s": 2.0,
                "query_text": "when does the wipe start and end?",
                "slots": [
                    {"slot_id": "s1", "keyframe_s": 10.0, "gold_text": "start"},
                    {"slot_id": "s2", "keyframe_s": 20.0, "gold_text": "end"},
                ],
            },
            {
                "query_id": "t2",
                "ask_time_s": 21.0,
                "query_text": "and the same for the rinse?",
                "referential": "t1",
                "slots": [{"slot_id": "s3", "keyframe_s": 26.0, "gold_text": "end"}],
            },
        ],
    },
    {
        "video_id": "v_pnr",
        "task": "PNR",
        "duration_s": 20.0,
        "fps": 1.0,
        "turns": [
            {
                "query_id": "t1",
                "ask_time_s": 1.0,
                "query_text": "point of no return for the pour?",
                "slots": [{"slot_id": "s1", "keyframe_s": 5.0, "gold_text": "now"}],
            },
            {
                "query_id": "t2",
                "ask_time_s": 8.0,
                "query_text": "and for the cut?",
                "slots": [{"slot_id": "s2", "keyframe_s": 12.0, "gold_text": "now"}],
            },
        ],
    },
    {
        "video_id": "v_sqa",
        "task": "SQA",
        "duration_s": 40.0,
        "fps": 1.0,
        "turns": [
            {
                "query_id": "t1",
                "ask_time_s": 3.0,
                "query_text": "what colour is the approaching car?",
                "slots": [{"slot_id": "s1", "keyframe_s": 9.0, "gold_text": "a red car"}],
            }
        ],
    },
]

JUDGE_TABLE = [
    {"pred": "the car is red", "gold": "a red car", "pred_verdict": "yes", "score": 4},
    {"pred": "a blue bus", "gold": "a red car", "pred_verdict": "no", "score": 1},
]


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    annotations = parse_annotations(json.dumps(BENCH).encode())
    (DATA / "bench.json").write_bytes(serialize_annotations(annotations))
    (DATA / "judge_table.json").write_text(json.dumps(JUDGE_TABLE, indent=2) + "\n")

    for ann in annotations:
        script = perfect_oracle_script(ann)
        (DATA / f"oracle_script_{ann.video_id}.json").write_text(
            json.dumps(script.to_obj(), indent=2) + "\n"
        )
        recorder = RecordingAdapter(ScriptedAdapter(script))
        run_session(ann, recorder)
        (DATA / f"oracle_transcript_{ann.video_id}.jsonl").write_bytes(
            dump_transcript(recorder.transcript)
        )

    spam = spammer_script("start")
    (DATA / "spammer_script.json").write_text(json.dumps(spam.to_obj(), indent=2) + "\n")
    abd = annotations[0]
    recorder = RecordingAdapter(ScriptedAdapter(spam))
    run_session(abd, recorder)
    (DATA / "spammer_transcript_v_abd.jsonl").write_bytes(dump_transcript(recorder.transcript))
    print(f"wrote fixtures to {DATA}")


if __name__ == "__main__":
    main()
