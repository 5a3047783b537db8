from __future__ import annotations

import json
import random

import pytest

from spot_eval.matching import (
    MatchLedger,
    aggregate,
    compute_metrics,
    ledger_to_jsonl,
    match_video,
    tscore_at_k,
)
from spot_eval.model import GoldSlot, PredictionEvent, TaskKind, TimelinessConfig
from spot_eval.semantics import ExactMatcher

from oracle import random_instance, ref_greedy_match


def slot(slot_id, t_s, t_e, gold, keyframe=None):
    keyframe = keyframe if keyframe is not None else (t_s + t_e) / 2.0
    return GoldSlot(slot_id, keyframe, t_s, t_e, gold)


def pred(t, text, video_id="v"):
    return PredictionEvent(t=t, text=text, video_id=video_id)


def run(preds, slots, k=5, task=TaskKind.ABD, cfg=None):
    return match_video(
        preds, slots, task=task, k=k, matcher=ExactMatcher(), cfg=cfg or TimelinessConfig()
    )


def test_single_perfect_match() -> None:
    ledger = run([pred(10.0, "start")], [slot("s1", 9.0, 11.0, "start")])
    assert (ledger.xtp, ledger.tp, ledger.fp, ledger.fn) == (1.0, 1, 0, 0)


def test_wrong_everywhere_prediction_becomes_fp_and_slot_stays_fn() -> None:
    slots = [slot("s1", 9.0, 11.0, "start"), slot("s2", 19.0, 21.0, "end")]
    preds = [pred(10.0, "start"), pred(10.5, "banana")]
    ledger = run(preds, slots)
    assert (ledger.xtp, ledger.tp, ledger.fp, ledger.fn) == (1.0, 1, 1, 1)
    metrics = compute_metrics(ledger)
    assert (metrics.precision, metrics.recall, metrics.t_f1) == (0.5, 0.5, 0.5)


def test_budget_k1_closes_slot_and_k2_absorbs_the_second_prediction() -> None:
    slots = [slot("s1", 9.0, 11.0, "start")]
    preds = [pred(9.5, "start"), pred(10.5, "start")]
    at_k1 = run(preds, slots, k=1)
    assert (at_k1.tp, at_k1.fp) == (1, 1)
    assert at_k1.per_slot[0].closed

    at_k2 = run(preds, slots, k=2)
    assert (at_k2.tp, at_k2.fp) == (1, 0)
    assert at_k2.per_slot[0].match_count == 2
    assert at_k2.per_slot[0].closed


def test_one_prediction_can_credit_multiple_overlapping_slots() -> None:
    slots = [slot("a", 9.0, 11.0, "start"), slot("b", 10.0, 12.0, "start")]
    ledger = run([pred(10.5, "start")], slots)
    assert ledger.tp == 2
    assert ledger.fn == 0
    assert ledger.fp == 0
    assert ledger.tp + ledger.fn == len(slots)
    assert ledger.per_prediction[0].credited_slots == ("a", "b")


def test_semantically_wrong_but_timely_prediction_is_fp() -> None:
    ledger = run([pred(10.0, "end")], [slot("s1", 9.0, 11.0, "start")])
    assert ledger.fp == 1
    assert ledger.fn == 1
    assert ledger.per_prediction[0].false_positive


def test_out_of_window_prediction_is_gated_before_semantics() -> None:
    calls = []

    class SpyMatcher:
        def matches(self, p, g, question="", task=None):
            calls.append((p, g))
            return True

    cfg = TimelinessConfig()
    ledger = match_video(
        [pred(200.0, "start")],
        [slot("s1", 9.0, 11.0, "start")],
        task=TaskKind.ABD,
        k=5,
        matcher=SpyMatcher(),
        cfg=cfg,
    )
    assert calls == []
    assert ledger.fp == 1


def test_k_must_be_positive() -> None:
    with pytest.raises(ValueError):
        run([], [], k=0)


def test_input_order_of_distinct_timestamps_does_not_matter() -> None:
    slots = [slot("s1", 9.0, 11.0, "start"), slot("s2", 19.0, 21.0, "end")]
    preds = [pred(10.0, "start"), pred(20.0, "end"), pred(15.0, "start")]
    forward = run(preds, slots)
    backward = run(list(reversed(preds)), slots)
    assert (forward.xtp, forward.tp, forward.fp, forward.fn) == (
        backward.xtp,
        backward.tp,
        backward.fp,
        backward.fn,
    )


@pytest.mark.parametrize("seed", range(25))
def test_matcher_agrees_with_reference_transcription(seed) -> None:
    rng = random.Random(seed)
    cfg = TimelinessConfig()
    task_name, hw, raw_slots, raw_preds = random_instance(rng)
    task = TaskKind(task_name)
    slots = [slot(f"s{i}", s, e, g) for i, (s, e, g) in enumerate(raw_slots)]
    preds = [pred(t, text) for t, text in raw_preds]
    for k in (1, 2, 5):
        mine = run(preds, slots, k=k, task=task, cfg=cfg)
        ref = ref_greedy_match(
            raw_preds, raw_slots, k, lambda a, b: a == b, 2.0 * hw, 1.0 * hw, cfg.epsilon
        )
        assert (mine.xtp, mine.tp, mine.fp, mine.fn) == (
            ref["xtp"],
            ref["tp"],
            ref["fp"],
            ref["fn"],
        )


def test_compute_metrics_examples() -> None:
    half = compute_metrics(MatchLedger(xtp=1.0, tp=1, fp=1, fn=1))
    assert (half.precision, half.recall, half.t_f1) == (0.5, 0.5, 0.5)
    zero = compute_metrics(MatchLedger(xtp=0.0, tp=0, fp=0, fn=3))
    assert (zero.precision, zero.recall, zero.t_f1) == (0.0, 0.0, 0.0)
    metrics = compute_metrics(MatchLedger(xtp=0.9, tp=1, fp=0, fn=0))
    assert metrics.precision == pytest.approx(0.9)
    assert metrics.recall == pytest.approx(0.9)
    assert metrics.t_f1 == pytest.approx(0.9)


def test_metrics_never_exceed_one() -> None:
    rng = random.Random(3)
    cfg = TimelinessConfig()
    for _ in range(100):
        task_name, _, raw_slots, raw_preds = random_instance(rng)
        slots = [slot(f"s{i}", s, e, g) for i, (s, e, g) in enumerate(raw_slots)]
        preds = [pred(t, text) for t, text in raw_preds]
        ledger = run(preds, slots, task=TaskKind(task_name), cfg=cfg)
        assert ledger.xtp <= ledger.tp + 1e-12
        metrics = compute_metrics(ledger)
        assert 0.0 <= metrics.precision <= 1.0
        assert 0.0 <= metrics.recall <= 1.0
        assert 0.0 <= metrics.t_f1 <= 1.0


def test_tscore_at_k_examples() -> None:
    full = run(
        [pred(10.0, "start"), pred(20.0, "end")],
        [slot("s1", 9.0, 11.0, "start"), slot("s2", 19.0, 21.0, "end")],
    )
    assert tscore_at_k(full) == 100.0
    assert tscore_at_k(MatchLedger(xtp=1.5, tp=2, fp=0, fn=1)) == pytest.approx(50.0)
    assert tscore_at_k(MatchLedger(xtp=0.0, tp=0, fp=0, fn=0)) == 0.0
    assert tscore_at_k(MatchLedger(xtp=0.0, tp=0, fp=4, fn=2)) == 0.0


def test_aggregate_micro_pooling_is_idempotent_on_identical_videos() -> None:
    ledger = MatchLedger(xtp=1.5, tp=2, fp=1, fn=0)
    single = compute_metrics(ledger)
    agg = aggregate(
        [("v1", TaskKind.ABD, ledger), ("v2", TaskKind.ABD, ledger)]
    )
    assert agg.per_task[TaskKind.ABD].micro == single


def test_aggregate_overall_is_unweighted_mean_of_task_scores() -> None:
    # one task at t_f1=0.1, the other at 0.3 -> overall 0.2
    a = MatchLedger(xtp=0.1, tp=1, fp=0, fn=0)
    b = MatchLedger(xtp=0.3, tp=1, fp=0, fn=0)
    agg = aggregate([("v1", TaskKind.ABD, a), ("v2", TaskKind.PNR, b)])
    assert agg.overall_micro.t_f1 == pytest.approx(0.2)
    assert agg.overall_tscore == pytest.approx((10.0 + 30.0) / 2.0)


def test_aggregate_micro_and_macro_differ_on_unequal_videos() -> None:
    heavy = MatchLedger(xtp=4.0, tp=4, fp=0, fn=0)
    light = MatchLedger(xtp=0.0, tp=0, fp=0, fn=1)
    agg = aggregate([("v1", TaskKind.ABD, heavy), ("v2", TaskKind.ABD, light)])
    micro = agg.per_task[TaskKind.ABD].micro
    macro = agg.per_task[TaskKind.ABD].macro
    assert micro.recall == pytest.approx(4.0 / 5.0)
    assert macro.recall == pytest.approx(0.5)
    assert micro != macro


def test_aggregate_skips_degenerate_videos_in_macro() -> None:
    real = MatchLedger(xtp=1.0, tp=1, fp=0, fn=0)
    empty = MatchLedger(xtp=0.0, tp=0, fp=0, fn=0)
    agg = aggregate([("v1", TaskKind.ABD, real), ("v2", TaskKind.ABD, empty)])
    assert agg.per_task[TaskKind.ABD].macro.t_f1 == pytest.approx(1.0)
    assert agg.per_task[TaskKind.ABD].micro.t_f1 == pytest.approx(1.0)


def test_aggregate_rejects_empty_input() -> None:
    with pytest.raises(ValueError):
        aggregate([])


def test_ledger_dump_is_line_oriented_json() -> None:
    ledger = run(
        [pred(10.0, "start"), pred(25.0, "oops")],
        [slot("s1", 9.0, 11.0, "start")],
    )
    dump = ledger_to_jsonl("v1", TaskKind.ABD, ledger)
    records = [json.loads(line) for line in dump.strip().splitlines()]
    kinds = [r["kind"] for r in records]
    assert kinds == ["slot", "prediction", "prediction", "totals"]
    assert records[0]["slot_id"] == "s1"
    assert records[0]["match_count"] == 1
    assert records[2]["false_positive"] is True
    assert records[-1]["tp"] == 1
