"""Binary head: prediction, Algorithm-1 fine-tuning, N-way pre-training."""

import numpy as np
import numpy.testing as npt
import pytest

from snowball_re import (
    ClassifierHead,
    ConvEncoder,
    FinetuneConfig,
    LabeledCorpus,
    PretrainConfig,
    SeedSet,
    SyntheticSpec,
    build_vocab,
    generate_synthetic,
)
from snowball_re.classifier import (
    finetune,
    finetune_loss_and_grads,
    nway_accuracy,
    predict,
    pretrain_encoder,
    train_nway_layer,
)
from snowball_re.corpus import split_labeled

from conftest import inst, store_encoder
from oracles import fd_gradients, max_rel_error


# -- prediction ----------------------------------------------------------------


def test_zero_head_predicts_half():
    store = store_encoder({"a": [3.0, -1.0], "b": [0.0, 9.0]})
    head = ClassifierHead.zeros(2)
    assert predict(head, store, inst("a")) == 0.5
    assert predict(head, store, inst("b")) == 0.5


def test_hand_arithmetic_prediction():
    store = store_encoder({"a": [1.0, 2.0]})
    head = ClassifierHead(np.array([1.0, -1.0]), 1.0)
    assert predict(head, store, inst("a")) == pytest.approx(0.5)


def test_sigmoid_saturation():
    store = store_encoder({"a": [0.4, 0.4]})
    head = ClassifierHead(np.zeros(2), 30.0)
    assert predict(head, store, inst("a")) > 0.999999


def test_dimension_mismatch_rejected():
    store = store_encoder({"a": [1.0, 2.0, 3.0]})
    with pytest.raises(ValueError, match="dim"):
        predict(ClassifierHead.zeros(2), store, inst("a"))


# -- fine-tune loss and gradients ----------------------------------------------


def test_loss_decomposes_into_positive_and_negative_parts():
    rng = np.random.default_rng(2)
    w, b = rng.normal(size=3), 0.2
    pos, neg = rng.normal(size=(4, 3)), rng.normal(size=(6, 3))
    mu = 0.35
    total, *_ = finetune_loss_and_grads(w, b, pos, neg, mu)
    l_pos, *_ = finetune_loss_and_grads(w, b, pos, np.zeros((0, 3)), mu)
    l_neg, *_ = finetune_loss_and_grads(w, b, np.zeros((0, 3)), neg, 1.0)
    assert l_pos >= 0 and l_neg >= 0
    assert total == pytest.approx(l_pos + mu * l_neg, rel=1e-12)


def test_head_gradients_match_finite_differences_tightly():
    rng = np.random.default_rng(5)
    for _ in range(20):
        d = int(rng.integers(2, 6))
        pos = rng.normal(size=(int(rng.integers(1, 5)), d))
        neg = rng.normal(size=(int(rng.integers(1, 8)), d))
        mu = float(rng.uniform(0, 1))
        head = ClassifierHead(rng.normal(size=d) * 0.5, float(rng.normal()))
        _, d_w, d_b = finetune_loss_and_grads(head.w, head.b, pos, neg, mu)
        numeric = fd_gradients(
            head.params_dict(),
            lambda: finetune_loss_and_grads(head.w, head.b, pos, neg, mu)[0],
        )
        assert max_rel_error({"w": d_w, "b": d_b}, numeric) < 1e-6


# -- fine-tuning ---------------------------------------------------------------


def tiny_negative_corpus():
    rng = np.random.default_rng(0)
    reps = {f"n{i}": rng.normal(size=2) for i in range(6)}
    instances = [inst(f"n{i}", relation="old") for i in range(6)]
    # single relation is fine for sampling negatives (not for pair sampling)
    return reps, LabeledCorpus.from_instances(instances)


def test_mu_zero_single_seed_drives_probability_up():
    neg_reps, negatives = tiny_negative_corpus()
    reps = dict(neg_reps)
    reps["seed"] = np.array([1.0, 1.0])
    store = store_encoder(reps)
    seeds = SeedSet("new", (inst("seed"),))
    head, _ = finetune(
        ClassifierHead.zeros(2), store, seeds, negatives,
        FinetuneConfig(epochs=300, neg_coef=0.0, seed=3),
    )
    assert predict(head, store, inst("seed")) > 0.99


def test_separable_representations_reach_perfect_f1():
    rng = np.random.default_rng(7)
    reps = {}
    instances = []
    for i in range(30):
        reps[f"p{i}"] = np.array([2.0, 0.0]) + rng.normal(scale=0.2, size=2)
        reps[f"q{i}"] = np.array([0.0, 2.0]) + rng.normal(scale=0.2, size=2)
        instances.append(inst(f"q{i}", relation="old"))
    store = store_encoder(reps)
    negatives = LabeledCorpus.from_instances(instances)
    seeds = SeedSet("new", tuple(inst(f"p{i}") for i in range(10)))
    head, _ = finetune(ClassifierHead.zeros(2), store, seeds, negatives,
                       FinetuneConfig(seed=1))
    # held-out same-distribution instances
    tp = sum(predict(head, store, inst(f"p{i}")) > 0.5 for i in range(10, 30))
    fp = sum(predict(head, store, inst(f"q{i}")) > 0.5 for i in range(10, 30))
    assert tp == 20 and fp == 0


def test_finetune_deterministic_bits():
    neg_reps, negatives = tiny_negative_corpus()
    reps = dict(neg_reps)
    reps["s0"], reps["s1"] = np.array([1.0, 0.5]), np.array([0.8, 0.9])
    store = store_encoder(reps)
    seeds = SeedSet("new", (inst("s0"), inst("s1")))
    cfg = FinetuneConfig(epochs=7, seed=42)
    h1, l1 = finetune(ClassifierHead.zeros(2), store, seeds, negatives, cfg)
    h2, l2 = finetune(ClassifierHead.zeros(2), store, seeds, negatives, cfg)
    assert h1.w.tobytes() == h2.w.tobytes()
    assert h1.b.tobytes() == h2.b.tobytes()
    assert l1 == l2


def test_finetune_leaves_input_head_and_encoder_untouched():
    vocab = [f"t{i}" for i in range(8)]
    enc = ConvEncoder.init_random(vocab, d_w=4, d_p=2, window=3, n_filters=3,
                                  max_len=6, seed=1)
    before = {k: v.tobytes() for k, v in enc.params_dict().items()}
    negatives = LabeledCorpus.from_instances(
        [inst(f"n{i}", relation="old", tokens=("t0", "t1", "t2")) for i in range(4)]
    )
    seeds = SeedSet("new", (inst("s", tokens=("t3", "t4", "t5")),))
    base = ClassifierHead.zeros(3)
    head, _ = finetune(base, enc, seeds, negatives, FinetuneConfig(epochs=3, seed=0))
    assert {k: v.tobytes() for k, v in enc.params_dict().items()} == before
    npt.assert_array_equal(base.w, 0.0)  # warm-start input not mutated
    assert head is not base and np.any(head.w != 0)


def test_zero_epoch_finetune_returns_equal_head():
    neg_reps, negatives = tiny_negative_corpus()
    reps = dict(neg_reps)
    reps["s"] = np.ones(2)
    store = store_encoder(reps)
    head, losses = finetune(
        ClassifierHead(np.array([0.3, -0.4]), 0.9), store,
        SeedSet("new", (inst("s"),)), negatives, FinetuneConfig(epochs=0),
    )
    npt.assert_array_equal(head.w, [0.3, -0.4])
    assert float(head.b) == 0.9
    assert losses == []


# -- N-way pre-training ----------------------------------------------------------


def disjoint_trigger_corpus():
    spec = SyntheticSpec(
        n_relations=4, instances_per_relation=30, vocab_size=30,
        pattern_tokens_per_relation=2, entity_pool=25, pair_reuse_rate=0.2,
        noise_rate=0.0, seed=13,
    )
    labeled, _, _ = generate_synthetic(spec)
    return labeled


def test_nway_pretraining_reaches_high_heldout_accuracy():
    labeled = disjoint_trigger_corpus()
    train, held = split_labeled(labeled, 0.8, seed=5)
    enc = ConvEncoder.init_random(
        build_vocab(labeled.instances), d_w=10, d_p=3, window=3, n_filters=12,
        max_len=16, seed=3,
    )
    W, c, losses = train_nway_layer(
        enc, train, PretrainConfig(epochs=25, learning_rate=5e-3, seed=1)
    )
    assert losses[-1] < losses[0]
    acc = nway_accuracy(enc, W, c, held, relations=sorted(train.relations))
    assert acc > 0.9


def test_pretrain_zero_epochs_leaves_encoder_unchanged():
    labeled = disjoint_trigger_corpus()
    enc = ConvEncoder.init_random(build_vocab(labeled.instances), d_w=6, d_p=2,
                                  window=3, n_filters=4, max_len=12, seed=0)
    before = {k: v.tobytes() for k, v in enc.params_dict().items()}
    pretrain_encoder(enc, labeled, PretrainConfig(epochs=0))
    assert {k: v.tobytes() for k, v in enc.params_dict().items()} == before


def test_pretrain_loss_decreases_over_first_epochs():
    labeled = disjoint_trigger_corpus()
    enc = ConvEncoder.init_random(build_vocab(labeled.instances), d_w=8, d_p=2,
                                  window=3, n_filters=8, max_len=16, seed=2)
    _, losses = pretrain_encoder(
        enc, labeled, PretrainConfig(epochs=5, learning_rate=2e-3, seed=4)
    )
    for before, after in zip(losses, losses[1:]):
        assert after < before


def test_pretrain_requires_two_relations():
    xs = [inst(f"x{i}", relation="only") for i in range(4)]
    enc = ConvEncoder.init_random(["t0"], d_w=3, d_p=1, window=1, n_filters=2,
                                  max_len=4, seed=0)
    with pytest.raises(Exception, match="2 relations"):
        pretrain_encoder(enc, LabeledCorpus.from_instances(xs))
