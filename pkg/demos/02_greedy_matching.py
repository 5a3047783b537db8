"""Score a handful of timestamped predictions against gold slots.

Shows the occupancy budget at work: extra correct responses inside a slot are
absorbed up to K, then start counting as false positives.
Run: python3 demos/02_greedy_matching.py
"""

from spot_eval import (
    GoldSlot,
    PredictionEvent,
    TaskKind,
    TimelinessConfig,
    compute_metrics,
    match_video,
    tscore_at_k,
)
from spot_eval.semantics import ExactMatcher

cfg = TimelinessConfig()
slots = [
    GoldSlot("boil", 10.0, 9.0, 11.0, "start"),
    GoldSlot("pour", 20.0, 19.0, 21.0, "end"),
]
preds = [
    PredictionEvent(t=9.4, text="start", video_id="demo"),
    PredictionEvent(t=10.1, text="start", video_id="demo"),  # absorbed while K allows
    PredictionEvent(t=12.0, text="banana", video_id="demo"),  # timely but wrong -> FP
    PredictionEvent(t=22.3, text="end", video_id="demo"),  # late: fractional credit
]

for k in (1, 5):
    ledger = match_video(preds, slots, task=TaskKind.ABD, k=k, matcher=ExactMatcher(), cfg=cfg)
    metrics = compute_metrics(ledger)
    print(f"K={k}:  xTP={ledger.xtp:.4f}  TP={ledger.tp}  FP={ledger.fp}  FN={ledger.fn}")
    print(f"      P={metrics.precision:.4f}  R={metrics.recall:.4f}  T-F1={metrics.t_f1:.4f}"
          f"  T-score@{k}={tscore_at_k(ledger):.2f}")
    for state in ledger.per_slot:
        print(f"      slot {state.slot.slot_id}: collected {state.match_count}, "
              f"best score {state.best_t:.4f}, closed={state.closed}")
    print()
