from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spot_eval.model import TimelinessConfig, parse_annotations

DATA_DIR = Path(__file__).parent / "data"


def make_video(
    video_id="v1",
    task="ABD",
    duration=30.0,
    fps=1.0,
    turns=None,
):
    """Raw annotation dict for one video; turns default to a single 2-slot turn."""
    if turns is None:
        turns = [
            {
                "query_id": "t1",
                "ask_time_s": 2.0,
                "query_text": "when does it start and end?",
                "slots": [
                    {"slot_id": "s1", "keyframe_s": 10.0, "gold_text": "start"},
                    {"slot_id": "s2", "keyframe_s": 20.0, "gold_text": "end"},
                ],
            }
        ]
    return {
        "video_id": video_id,
        "task": task,
        "duration_s": duration,
        "fps": fps,
        "turns": turns,
    }


def parse_one(video_dict, cfg=None):
    return parse_annotations(json.dumps([video_dict]).encode(), cfg or TimelinessConfig())[0]


@pytest.fixture
def cfg():
    return TimelinessConfig()


@pytest.fixture
def abd_video():
    return parse_one(make_video())


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion, printed after the run."""
    try:
        import test_acceptance
    except ImportError:
        return
    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in test_acceptance.RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}")
