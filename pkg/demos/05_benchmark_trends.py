"""Mini benchmark: bootstrap vs plain fine-tuning at 5 and 15 seeds, plus
precision-at-N of the siamese ranker. A 2-corpus slice of the acceptance
benchmark (tests/test_acceptance.py runs the full 10-trial version).

Run: python demos/05_benchmark_trends.py (about a minute)
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
import benchmark as bm

from snowball_re import LabeledCorpus, SeedSet, precision_at_n
from snowball_re.evaluation import format_metrics_table

t0 = time.time()
rows = []
f1 = {("fine-tuning", 5): [], ("fine-tuning", 15): [],
      ("bootstrap", 5): [], ("bootstrap", 15): []}
trial = 0
for corpus_seed in (0, 1):
    world = bm.build_world(corpus_seed, episode_seed=100 + corpus_seed)
    for relation in bm.NEW_RELATIONS:
        trial += 1
        for k in (5, 15):
            ep = bm.episode(world, relation, k, episode_seed=100 + corpus_seed)
            res = bm.run_trial(world, ep, trial_seed=trial * 31)
            f1[("fine-tuning", k)].append(res.finetune_f1)
            f1[("bootstrap", k)].append(res.snowball_f1)

for (model, k), vals in f1.items():
    # the table formatter wants P/R/F1; the demo aggregates F1 only
    rows.append({"model": model, "seeds": k, "precision": float("nan"),
                 "recall": float("nan"), "f1": float(np.mean(vals))})
print("mean F1 over 4 trials (2 corpora x 2 new relations):")
print(format_metrics_table(rows))

print("\nprecision at N of the siamese ranker (noise-free, 5 seeds):")
world = bm.build_world(0, noise_rate=0.0, pretrain_classifier=False)
pick = np.random.default_rng(1000)
for relation in bm.NEW_RELATIONS:
    ids = list(world.labeled.by_relation[relation])
    chosen = pick.choice(len(ids), size=5, replace=False)
    seeds = SeedSet(relation, tuple(world.labeled.by_id[ids[i]] for i in chosen))
    pool = LabeledCorpus.from_instances(
        [x for x in world.labeled.instances if x.id not in seeds.ids]
    )
    pn = precision_at_n(world.rsn, seeds, pool, [5, 10, 20, 50])
    print(f"  {relation}: " + "  ".join(f"P@{n}={v:.2f}" for n, v in pn.items()))

print(f"\ntotal {time.time() - t0:.0f}s")
