"""Two-phase bootstrap: selection rules, state invariants, determinism."""

import numpy as np
import pytest

from snowball_re import (
    ClassifierHead,
    FinetuneConfig,
    LabeledCorpus,
    RsnModel,
    SeedSet,
    SnowballConfig,
    SnowballEngine,
    UnlabeledCorpus,
)

from conftest import inst, store_encoder
from oracles import phase1_expected, phase2_expected

FAST_FT = FinetuneConfig(epochs=5, batch_size=4, seed=0)


def build_world(candidate_gaps, seed_pair=("H", "T"), alpha_pairable=True):
    """Seed rep at origin; candidate k at distance sqrt(gap) so its
    similarity to the seed is sigmoid(1 - gap) under the default head."""
    reps = {"seed": np.zeros(1)}
    t_instances = []
    for k, gap in enumerate(candidate_gaps):
        xid = f"c{k}"
        reps[xid] = np.array([np.sqrt(gap)])
        pair = seed_pair if alpha_pairable else (f"X{k}", f"Y{k}")
        t_instances.append(inst(xid, pair))
    negatives = []
    for i in range(5):
        xid = f"n{i}"
        reps[xid] = np.array([5.0 + i])
        negatives.append(inst(xid, (f"NH{i}", f"NT{i}"), relation="old"))
    store = store_encoder(reps)
    rsn = RsnModel(store, w_s=np.array([-1.0]), b_s=1.0)
    labeled = LabeledCorpus.from_instances(negatives)
    unlabeled = UnlabeledCorpus.from_instances(t_instances)
    seeds = SeedSet("new", (inst("seed", seed_pair),))
    return store, rsn, labeled, unlabeled, seeds


def engine_and_state(candidate_gaps, config, **world_kw):
    store, rsn, labeled, unlabeled, seeds = build_world(candidate_gaps, **world_kw)
    engine = SnowballEngine(rsn, store, labeled, unlabeled, config)
    return engine, engine.initial_state(seeds), store, rsn


# -- phase 1 -------------------------------------------------------------------


def test_phase1_no_shared_pairs_adds_nothing():
    cfg = SnowballConfig(finetune=FAST_FT)
    engine, state, *_ = engine_and_state([0.1, 0.2], cfg, alpha_pairable=False)
    result = engine.phase1(state)
    assert result.candidates == 0 and result.added == []
    assert len(state.selected) == 1
    assert np.any(state.head.w != 0)  # fine-tune still ran


def test_phase1_caps_at_k1_and_takes_highest():
    # 8 candidates sharing the seed pair; sim = sigmoid(1 - gap), alpha = 0.5
    # gaps < 1 clear the threshold: 6 candidates qualify, cap K1 = 5.
    gaps = [0.1, 0.3, 0.5, 0.7, 0.8, 0.9, 1.5, 2.5]
    cfg = SnowballConfig(k1=5, alpha=0.5, finetune=FAST_FT)
    engine, state, store, rsn = engine_and_state(gaps, cfg)
    result = engine.phase1(state)
    assert result.candidates == 8
    assert [a.instance_id for a in result.added] == ["c0", "c1", "c2", "c3", "c4"]
    assert all(a.score >= 0.5 for a in result.added)


def test_phase1_threshold_dominates_cap():
    gaps = [2.0, 3.0, 4.0]  # all similarities below 0.5
    cfg = SnowballConfig(k1=5, alpha=0.5, finetune=FAST_FT)
    engine, state, *_ = engine_and_state(gaps, cfg)
    result = engine.phase1(state)
    assert result.candidates == 3 and result.added == []


def test_phase1_matches_brute_force_oracle():
    gaps = [0.05, 0.2, 0.2, 0.6, 1.1, 1.9, 0.45, 0.95]
    cfg = SnowballConfig(k1=4, alpha=0.55, finetune=FAST_FT)
    engine, state, store, rsn = engine_and_state(gaps, cfg)
    expected = phase1_expected(
        rsn, engine.unlabeled, list(state.selected), set(state.selected_ids),
        cfg.k1, cfg.alpha,
    )
    result = engine.phase1(state)
    assert [(a.instance_id, a.score) for a in result.added] == expected


# -- phase 2 -------------------------------------------------------------------


def test_phase2_untrained_head_yields_empty_candidates():
    cfg = SnowballConfig(theta=0.9, finetune=FAST_FT)
    engine, state, *_ = engine_and_state([0.1, 0.2], cfg)
    result = engine.phase2(state)  # head is all zeros: g == 0.5 everywhere
    assert result.candidates == 0 and result.added == []


def test_phase2_exact_pass_set_added():
    # head crafted so exactly instances with rep > 1.75 pass theta = 0.9;
    # beta filter then keeps those with similarity > beta.
    reps = {"seed": np.zeros(1)}
    t_instances = []
    values = [2.0, 1.9, 1.8, 0.5, 0.2, 1.0]  # three pass the classifier gate
    for k, v in enumerate(values):
        reps[f"c{k}"] = np.array([v])
        t_instances.append(inst(f"c{k}", (f"P{k}", f"Q{k}")))
    reps["n0"] = np.array([7.0])
    store = store_encoder(reps)
    rsn = RsnModel(store, w_s=np.array([-0.01]), b_s=1.0)  # keeps sims high
    labeled = LabeledCorpus.from_instances([inst("n0", ("A", "B"), relation="old")])
    unlabeled = UnlabeledCorpus.from_instances(t_instances)
    cfg = SnowballConfig(k2=5, beta=0.5, theta=0.9, finetune=FAST_FT)
    engine = SnowballEngine(rsn, store, labeled, unlabeled, cfg)
    state = engine.initial_state(SeedSet("new", (inst("seed", ("H", "T")),)))
    state.head = ClassifierHead(np.array([4.0]), -4.8)  # g > 0.9 iff rep > ~1.75
    refs_before = list(state.selected)
    ids_before = set(state.selected_ids)
    result = engine.phase2(state)
    assert result.candidates == 3
    assert sorted(a.instance_id for a in result.added) == ["c0", "c1", "c2"]
    expected = phase2_expected(
        rsn, state.head, store, unlabeled, refs_before, ids_before,
        cfg.k2, cfg.beta, cfg.theta,
    )
    assert [(a.instance_id, a.score) for a in result.added] == expected


def test_phase2_never_revisits_phase1_additions():
    gaps = [0.0, 0.1]
    cfg = SnowballConfig(k1=5, alpha=0.4, theta=0.0, beta=0.0, finetune=FAST_FT)
    engine, state, *_ = engine_and_state(gaps, cfg)
    p1 = engine.phase1(state)
    taken = {a.instance_id for a in p1.added}
    assert taken == {"c0", "c1"}
    p2 = engine.phase2(state)
    assert taken.isdisjoint({a.instance_id for a in p2.added})


# -- full runs -----------------------------------------------------------------


def test_zero_iterations_run():
    cfg = SnowballConfig(iterations=0, finetune=FAST_FT)
    store, rsn, labeled, unlabeled, seeds = build_world([0.1])
    engine = SnowballEngine(rsn, store, labeled, unlabeled, cfg)
    state = engine.run(seeds)
    assert state.iteration_log == []
    assert [x.id for x in state.selected] == ["seed"]
    assert np.any(state.head.w != 0)


def test_growth_bound_and_monotonicity():
    rng = np.random.default_rng(3)
    reps = {}
    t_instances = []
    for k in range(40):
        reps[f"c{k}"] = rng.normal(scale=1.5, size=2)
        t_instances.append(inst(f"c{k}", ("H", "T") if k % 3 == 0 else (f"X{k}", f"Y{k}")))
    negatives = []
    for i in range(8):
        reps[f"n{i}"] = rng.normal(scale=1.5, size=2) + 4.0
        negatives.append(inst(f"n{i}", (f"NH{i}", f"NT{i}"), relation="old"))
    reps["seed"] = np.zeros(2)
    store = store_encoder(reps)
    rsn = RsnModel(store, w_s=np.array([-0.5, -0.5]), b_s=1.0)
    cfg = SnowballConfig(k1=3, k2=2, alpha=0.3, beta=0.2, theta=0.6,
                         iterations=3, finetune=FAST_FT, seed=7)
    engine = SnowballEngine(
        rsn, store, LabeledCorpus.from_instances(negatives),
        UnlabeledCorpus.from_instances(t_instances), cfg,
    )
    seeds = SeedSet("new", (inst("seed", ("H", "T")),))
    state = engine.run(seeds)
    assert len(state.iteration_log) == 3
    size = 1
    for rec in state.iteration_log:
        assert len(rec.phase1_added) <= cfg.k1
        assert len(rec.phase2_added) <= cfg.k2
        assert all(a.score >= cfg.alpha for a in rec.phase1_added)
        assert all(a.score > cfg.beta for a in rec.phase2_added)
        size += len(rec.phase1_added) + len(rec.phase2_added)
    assert len(state.selected) == size
    assert len(state.selected) <= 1 + cfg.iterations * (cfg.k1 + cfg.k2)
    assert len({x.id for x in state.selected}) == len(state.selected)


def test_full_run_deterministic():
    def one_run():
        store, rsn, labeled, unlabeled, seeds = build_world(
            [0.1, 0.4, 0.9, 1.4, 0.2, 0.6]
        )
        cfg = SnowballConfig(k1=2, k2=2, alpha=0.4, beta=0.3, theta=0.55,
                             iterations=2, finetune=FAST_FT, seed=99)
        engine = SnowballEngine(rsn, store, labeled, unlabeled, cfg)
        state = engine.run(seeds)
        return (
            [x.id for x in state.selected],
            state.head.w.tobytes(),
            [rec.to_obj() for rec in state.iteration_log],
        )

    assert one_run() == one_run()


def test_workers_do_not_change_results():
    def run_with(workers):
        store, rsn, labeled, unlabeled, seeds = build_world(
            [0.1, 0.4, 0.9, 1.4, 0.2, 0.6, 0.75, 1.2]
        )
        cfg = SnowballConfig(k1=3, k2=2, alpha=0.4, beta=0.3, theta=0.55,
                             iterations=2, finetune=FAST_FT, seed=5,
                             workers=workers)
        engine = SnowballEngine(rsn, store, labeled, unlabeled, cfg)
        state = engine.run(seeds)
        return [x.id for x in state.selected], state.head.w.tobytes()

    assert run_with(1) == run_with(4)


def test_run_aborts_cleanly_with_partial_log():
    from snowball_re.snowball import SnowballRunAborted

    store, rsn, labeled, unlabeled, seeds = build_world([0.1, 0.2])
    cfg = SnowballConfig(iterations=3, finetune=FAST_FT, seed=1)
    engine = SnowballEngine(rsn, store, labeled, unlabeled, cfg)

    calls = {"n": 0}
    original = engine.phase2

    def flaky(state):
        calls["n"] += 1
        if calls["n"] == 2:
            raise RuntimeError("synthetic failure")
        return original(state)

    engine.phase2 = flaky
    with pytest.raises(SnowballRunAborted) as err:
        engine.run(seeds)
    assert err.value.iteration == 2
    assert len(err.value.state.iteration_log) == 1  # first round committed
