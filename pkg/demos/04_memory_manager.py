"""Stream 300 frames through the bounded memory manager and watch it work.

Short-term holds the newest 16 frames; evictions cascade into a 256-frame
long-term store; overflow forces similarity-driven compression so the bounds
never break. Queries pull the top-4 most similar frames back into context.
Run: python3 demos/04_memory_manager.py
"""

import numpy as np

from spot_eval import FrameRecord, MemoryConfig, MemoryState, assemble_context
from spot_eval.memory import ingest_frame, on_query, on_response, retrieve_topk, summarize_tick, unit

rng = np.random.default_rng(2024)
cfg = MemoryConfig(embedding_dim=16)
state = MemoryState(config=cfg)

checkpoints = {50, 150, 272, 300}
for k in range(1, 301):
    ingest_frame(state, FrameRecord(float(k), unit(rng.normal(size=16)), f"frame:{k}"))
    if not state.active_queries:
        summarize_tick(state, float(k))
    if k in checkpoints:
        short, long, summaries = state.sizes()
        print(f"t={k:>3}  short={short:>2}  long={long:>3}  summaries={summaries}"
              f"  forced_removals={state.forced_removals}")

print("\nposing a query and retrieving supporting frames:")
anchor = state.long_term[100]  # ask about something seen long ago
on_query(state, "q1", 300.5, anchor.embedding)
hits = retrieve_topk(state, anchor.embedding, cfg.retrieval_k)
print(f"  query embedding taken from {anchor.frame_ref}")
print(f"  top-{cfg.retrieval_k} frames by cosine similarity: {[f.frame_ref for f in hits]}")

on_response(state, "[Q1]", 301.0, "it happened around t=117")
layout = assemble_context(state, 301.0)
print(f"  context segments in order: {layout.segment_names()}")
print(f"  context size (unit weights): {layout.total_tokens():.0f} tokens")
print(f"  answer memory: {dict(state.answer_memory)}")
