"""Corpus basics: JSONL round-trip, entity-pair index, sampling.

Run: python demos/01_corpus_and_index.py
"""

import tempfile
from pathlib import Path

from snowball_re import (
    SyntheticSpec,
    generate_synthetic,
    load_jsonl,
    sample_negative_batch,
    sample_rsn_pairs,
    save_jsonl,
)

# A small ground-truth world: 4 relations, each with cue tokens, entities
# and some entity pairs mentioned repeatedly.
labeled, unlabeled, gold = generate_synthetic(
    SyntheticSpec(n_relations=4, instances_per_relation=12, entity_pool=20,
                  pair_reuse_rate=0.5, noise_rate=0.0, seed=7)
)
print(f"{len(labeled)} instances over relations {sorted(labeled.relations)}")

x = labeled.instances[0]
print("\nfirst instance:")
print("  id      ", x.id)
print("  tokens  ", " ".join(x.tokens))
print("  head    ", x.tokens[x.head.start:x.head.end], "=", x.head.entity_id)
print("  tail    ", x.tokens[x.tail.start:x.tail.end], "=", x.tail.entity_id)
print("  relation", x.relation)

# JSONL round-trip preserves instances and their order exactly.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "corpus.jsonl"
    save_jsonl(labeled, path)
    again = load_jsonl(path, kind="labeled")
    assert list(again.instances) == list(labeled.instances)
    print(f"\nround-trip through {path.name}: identical")

# The pair index drives phase-1 candidate retrieval: all mentions of an
# entity pair, in one lookup.
busiest = max(unlabeled.pair_index.items(), key=lambda kv: len(kv[1]))
print(f"\nbusiest entity pair {busiest[0]} has {len(busiest[1])} mentions:")
for xid in busiest[1]:
    print("   ", xid, "->", gold[xid])

# Sampling utilities behind metric pre-training and negative sampling.
pairs = sample_rsn_pairs(labeled, n=6, positive_fraction=0.5, seed=3)
print("\nsampled same/different-relation pairs:")
for a, b, same in pairs:
    print(f"   {a.id} vs {b.id}: same={same}")

batch = sample_negative_batch(labeled, bs=5, seed=3)
print("\nnegative batch:", [b.id for b in batch])
