"""The two neural modules: the relational siamese metric and the binary
classifier with negative-sampling fine-tuning.

Run: python demos/03_metric_and_classifier.py
"""

import numpy as np

from snowball_re import (
    ClassifierHead,
    ConvEncoder,
    FinetuneConfig,
    PretrainConfig,
    RsnModel,
    RsnTrainConfig,
    SeedSet,
    SyntheticSpec,
    build_vocab,
    generate_synthetic,
    pretrain_encoder,
    pretrain_rsn,
    sample_rsn_pairs,
)
from snowball_re.classifier import finetune, predict

labeled, _, gold = generate_synthetic(
    SyntheticSpec(n_relations=4, instances_per_relation=30, vocab_size=40,
                  pattern_tokens_per_relation=3, entity_pool=30,
                  pair_reuse_rate=0.3, noise_rate=0.0, seed=11)
)
vocab = build_vocab(labeled.instances)

# --- siamese metric: probability two instances share a relation ----------
rsn_enc = ConvEncoder.init_random(vocab, d_w=12, d_p=3, window=3,
                                  n_filters=16, max_len=20, seed=2)
rsn = RsnModel.init(rsn_enc)
pairs = sample_rsn_pairs(labeled, 600, positive_fraction=0.5, seed=4)
_, losses = pretrain_rsn(rsn, pairs, RsnTrainConfig(epochs=5, seed=5))
print(f"metric pre-training loss: {losses[0]:.3f} -> {losses[-1]:.3f}")

same_rel = [x for x in labeled.instances if x.relation == "rel00"][:2]
other = next(x for x in labeled.instances if x.relation == "rel02")
print(f"s(same relation)      = {rsn.similarity(*same_rel):.3f}")
print(f"s(different relation) = {rsn.similarity(same_rel[0], other):.3f}")
print(f"score vs a set        = "
      f"{rsn.score_against_set(other, same_rel):.3f} (mean over refs)")

# --- classifier: N-way pre-trained encoder + per-relation head ------------
clf_enc = ConvEncoder.init_random(vocab, d_w=12, d_p=3, window=3,
                                  n_filters=16, max_len=20, seed=3)
train = labeled.subset(["rel00", "rel01", "rel02"])  # rel03 stays unseen
_, clf_losses = pretrain_encoder(
    clf_enc, train, PretrainConfig(epochs=10, learning_rate=5e-3, seed=6))
print(f"\nencoder pre-training loss: {clf_losses[0]:.3f} -> {clf_losses[-1]:.3f}")

new_rel = "rel03"
ids = labeled.by_relation[new_rel]
seeds = SeedSet(new_rel, tuple(labeled.by_id[i] for i in ids[:5]))
head, ft_losses = finetune(
    ClassifierHead.zeros(clf_enc.dim), clf_enc, seeds, train,
    FinetuneConfig(seed=7),
)
print(f"fine-tune loss: {ft_losses[0]:.3f} -> {ft_losses[-1]:.3f}")

held_out_pos = [labeled.by_id[i] for i in ids[5:10]]
held_out_neg = [x for x in train.instances[:5]]
print("g(x) on held-out true instances: ",
      [round(predict(head, clf_enc, x), 3) for x in held_out_pos])
print("g(x) on old-relation instances:  ",
      [round(predict(head, clf_enc, x), 3) for x in held_out_neg])
