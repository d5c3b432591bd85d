"""A full bootstrap run: start from 5 seed instances of a never-seen
relation and watch the selected set grow over phase-1 (shared entity
pairs) and phase-2 (classifier discoveries) rounds.

Run: python demos/04_snowball_run.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
import benchmark as bm  # frozen desk-scale experiment configuration

corpus_seed = 0
world = bm.build_world(corpus_seed, episode_seed=100)
new_relation = "rel08"
ep = bm.episode(world, new_relation, k_seeds=5, episode_seed=100)

print(f"new relation: {new_relation}")
print(f"seeds: {sorted(ep.seeds.ids)}")
print(f"unlabeled harvest corpus: {len(ep.harvest)} instances "
      f"({sum(1 for x in ep.harvest.instances if world.gold[x.id] == new_relation)}"
      f" of them truly express the relation)")

result = bm.run_trial(world, ep, trial_seed=31)
state = result.state

print("\nper-iteration log:")
for rec in state.iteration_log:
    p1 = [(a.instance_id, round(a.score, 2)) for a in rec.phase1_added]
    p2 = [(a.instance_id, round(a.score, 2)) for a in rec.phase2_added]
    print(f"  round {rec.iteration}: phase1 kept {len(p1)}/{rec.phase1_candidates}"
          f" candidates {p1}")
    print(f"           phase2 kept {len(p2)}/{rec.phase2_candidates}"
          f" candidates {p2}")
    print(f"           classifier loss {rec.classifier_loss:.3f}")

harvested = state.harvested_ids
correct = sum(world.gold[i] == new_relation for i in harvested)
print(f"\nharvested {len(harvested)} instances, {correct} truly {new_relation}"
      f" (precision {correct / len(harvested):.2f})")
print(f"query F1: fine-tuning baseline {result.finetune_f1:.3f}"
      f" vs bootstrap {result.snowball_f1:.3f}")
