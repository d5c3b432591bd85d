"""Exporter round-trip: the TypeScript embedding exporter's output feeds the
engine, and a full bootstrap run over imported embeddings keeps every
engine-side invariant.

The committed golden fixtures (frontend/fixtures/) keep these tests
runnable without node; tests that re-run the exporter skip when the built
CLI is absent (`npm install && npm run build` inside frontend/).
"""

import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from snowball_re import (
    FinetuneConfig,
    LabeledCorpus,
    RsnModel,
    SeedSet,
    SnowballConfig,
    SnowballEngine,
    UnlabeledCorpus,
    load_embedding_store,
    load_jsonl,
)
from snowball_re.cli import main as cli_main

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "frontend" / "fixtures"
EXPORT_CLI = ROOT / "frontend" / "dist" / "cli.js"


def load_fixture_world():
    corpus = load_jsonl(FIXTURES / "corpus.jsonl", kind="labeled")
    store = load_embedding_store(FIXTURES / "corpus.nsemb")
    return corpus, store


def test_golden_store_loads_with_matching_count_and_dim():
    corpus, store = load_fixture_world()
    assert len(store) == len(corpus) == 60
    assert store.dim == 24
    for x in corpus.instances:  # every id resolvable, right dimension
        assert store.encode(x).shape == (24,)


def test_end_to_end_run_over_imported_embeddings():
    corpus, store = load_fixture_world()
    relation = "rel00"
    ids = corpus.by_relation[relation]
    seeds = SeedSet(relation, tuple(corpus.by_id[i] for i in ids[:3]))
    negatives = corpus.subset([r for r in corpus.relations if r != relation])
    harvest = UnlabeledCorpus.from_instances(
        [x for x in corpus.instances if x.id not in seeds.ids]
    )
    rsn = RsnModel.init(store)
    cfg = SnowballConfig(
        alpha=0.4, beta=0.4, theta=0.6, iterations=3,
        finetune=FinetuneConfig(epochs=10, seed=1), seed=9,
    )

    def run():
        engine = SnowballEngine(rsn, store, negatives, harvest, cfg)
        return engine.run(seeds)

    state = run()
    # primary invariants over the imported-embedding run
    size = len(seeds.instances)
    for rec in state.iteration_log:
        assert len(rec.phase1_added) <= cfg.k1
        assert len(rec.phase2_added) <= cfg.k2
        assert all(a.score >= cfg.alpha for a in rec.phase1_added)
        assert all(a.score > cfg.beta for a in rec.phase2_added)
        size += len(rec.phase1_added) + len(rec.phase2_added)
    assert len(state.selected) == size
    assert len({x.id for x in state.selected}) == len(state.selected)
    assert len(state.selected) <= 3 + cfg.iterations * (cfg.k1 + cfg.k2)
    assert len(state.selected) > 3  # embeddings actually drive harvesting

    again = run()
    assert [x.id for x in again.selected] == [x.id for x in state.selected]
    assert again.head.w.tobytes() == state.head.w.tobytes()


def test_store_backed_cli_pipeline(tmp_path):
    corpus, _ = load_fixture_world()
    seeds_path = tmp_path / "seeds.jsonl"
    labeled_path = tmp_path / "sn.jsonl"
    unlabeled_path = tmp_path / "t.jsonl"
    from snowball_re import save_jsonl
    from dataclasses import replace

    relation = "rel01"
    seed_ids = set(corpus.by_relation[relation][:3])
    save_jsonl([corpus.by_id[i] for i in seed_ids], seeds_path)
    save_jsonl(
        [x for x in corpus.instances if x.relation != relation], labeled_path
    )
    save_jsonl(
        [replace(x, relation=None) for x in corpus.instances if x.id not in seed_ids],
        unlabeled_path,
    )

    models = tmp_path / "models"
    assert cli_main([
        "pretrain", "--labeled", str(labeled_path),
        "--store", str(FIXTURES / "corpus.nsemb"),
        "--pairs", "300", "--rsn-epochs", "4",
        "--out", str(models), "--seed", "3",
    ]) == 0
    assert (models / "rsn.bin").exists()
    assert not (models / "encoder.bin").exists()  # store path trains head only

    state_path = tmp_path / "state.json"
    assert cli_main([
        "run", "--seeds", str(seeds_path), "--labeled", str(labeled_path),
        "--unlabeled", str(unlabeled_path),
        "--rsn", str(models / "rsn.bin"),
        "--store", str(FIXTURES / "corpus.nsemb"),
        "--iterations", "2", "--epochs", "8",
        "--alpha", "0.4", "--beta", "0.4", "--theta", "0.6",
        "--out", str(state_path), "--seed", "11",
    ]) == 0
    import json

    state = json.loads(state_path.read_text())
    assert state["relation"] == relation
    assert len(state["iterations"]) == 2
    for rec in state["iterations"]:
        assert len(rec["phase1_added"]) <= 5
        assert all(s >= 0.4 for _, s in rec["phase1_added"])
        assert all(s > 0.4 for _, s in rec["phase2_added"])


node_available = shutil.which("node") is not None and EXPORT_CLI.exists()


@pytest.mark.skipif(not node_available, reason="frontend not built (npm run build)")
def test_exporter_reproduces_golden_store(tmp_path):
    out = tmp_path / "fresh.nsemb"
    proc = subprocess.run(
        ["node", str(EXPORT_CLI), "--input", str(FIXTURES / "corpus.jsonl"),
         "--output", str(out), "--encoder", "hashed", "--dim", "24",
         "--max-len", "64"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_bytes() == (FIXTURES / "corpus.nsemb").read_bytes()


@pytest.mark.skipif(not node_available, reason="frontend not built (npm run build)")
def test_exporter_truncation_warns_but_keeps_instance(tmp_path):
    import json

    long_instance = {
        "id": "verylong",
        "tokens": [f"t{i}" for i in range(40)],
        "head": {"id": "E1", "span": [0, 1]},
        "tail": {"id": "E2", "span": [39, 40]},
    }
    src = tmp_path / "one.jsonl"
    src.write_text(json.dumps(long_instance) + "\n")
    out = tmp_path / "one.nsemb"
    proc = subprocess.run(
        ["node", str(EXPORT_CLI), "--input", str(src), "--output", str(out),
         "--dim", "8", "--max-len", "16"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "truncat" in proc.stderr and "verylong" in proc.stderr
    store = load_embedding_store(out)
    assert set(store.table) == {"verylong"}


@pytest.mark.skipif(not node_available, reason="frontend not built (npm run build)")
def test_exporter_rejects_bad_corpus(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    proc = subprocess.run(
        ["node", str(EXPORT_CLI), "--input", str(bad), "--output",
         str(tmp_path / "x.nsemb")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "line 1" in proc.stderr
