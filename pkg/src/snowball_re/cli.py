"""Command-line pipeline driver.

Subcommands: pretrain, run, eval, generate, report. Common flags: --seed,
--workers, --json, --out. Exit codes: 0 success, 1 runtime failure, 2
usage/input error. Every emitted artifact references a manifest (config
snapshot, input digests, seed, engine version); binary checkpoints embed the
timestamp-free core so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import (
    CheckpointError,
    load_encoder,
    load_rsn,
    save_encoder,
    save_rsn,
)
from .classifier import FinetuneConfig, predict_rep, pretrain_encoder
from .corpus import (
    CorpusError,
    LabeledCorpus,
    SeedSet,
    UnlabeledCorpus,
    load_jsonl,
    sample_rsn_pairs,
    save_jsonl,
)
from .encoder import (
    ConvEncoder,
    EmbeddingStoreError,
    RepCache,
    build_vocab,
    load_embedding_store,
    load_word_vectors,
)
from .evaluation import EvalError, SyntheticSpec, generate_synthetic, score_binary
from .evaluation import format_metrics_table
from .rsn import RsnModel, RsnTrainConfig, pretrain_rsn
from .snowball import SnowballConfig, SnowballEngine

INPUT_ERRORS = (
    CorpusError,
    EmbeddingStoreError,
    CheckpointError,
    EvalError,
    FileNotFoundError,
    IsADirectoryError,
    NotADirectoryError,
    PermissionError,
    json.JSONDecodeError,
    ValueError,
)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(command: str, seed: int, config: dict, inputs: dict[str, Path]) -> dict:
    """Timestamp-free manifest core; checkpoints embed this verbatim."""
    return {
        "command": command,
        "engine_version": __version__,
        "seed": seed,
        "config": config,
        "inputs": {
            name: {"path": str(p), "sha256": _sha256(Path(p))}
            for name, p in inputs.items()
            if p is not None
        },
    }


def stamped(manifest: dict) -> dict:
    return manifest | {"created_utc": datetime.now(timezone.utc).isoformat()}


def write_json(path: str | Path, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# pretrain


def cmd_pretrain(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    labeled = load_jsonl(args.labeled, kind="labeled")
    extra = []
    if args.unlabeled:
        extra.append(load_jsonl(args.unlabeled, kind="unlabeled").instances)

    rng = np.random.default_rng(args.seed)

    def sub_seed() -> int:
        return int(rng.integers(0, 2**63))

    config = {
        "d_w": args.d_w, "d_p": args.d_p, "window": args.window,
        "filters": args.filters, "max_len": args.max_len,
        "pairs": args.pairs, "rsn_epochs": args.rsn_epochs,
        "rsn_lr": args.rsn_lr, "enc_epochs": args.enc_epochs,
        "enc_lr": args.enc_lr, "store": bool(args.store),
    }
    manifest = build_manifest(
        "pretrain", args.seed, config,
        {"labeled": args.labeled, "unlabeled": args.unlabeled,
         "word_vectors": args.word_vectors, "store": args.store},
    )

    if args.store:
        store = load_embedding_store(args.store)
        rsn = RsnModel.init(store)
        pairs = sample_rsn_pairs(labeled, args.pairs, 0.5, seed=sub_seed())
        _, losses = pretrain_rsn(
            rsn, pairs,
            RsnTrainConfig(epochs=args.rsn_epochs, learning_rate=args.rsn_lr,
                           seed=sub_seed()),
        )
        save_rsn(rsn, out_dir / "rsn.bin", manifest=manifest)
        artifacts = {"rsn": str(out_dir / "rsn.bin")}
    else:
        word_vectors = load_word_vectors(args.word_vectors) if args.word_vectors else None
        vocab = build_vocab(labeled.instances, *extra)

        def fresh_encoder() -> ConvEncoder:
            return ConvEncoder.init_random(
                vocab, d_w=args.d_w, d_p=args.d_p, window=args.window,
                n_filters=args.filters, max_len=args.max_len, seed=sub_seed(),
                word_vectors=word_vectors,
            )

        clf_encoder = fresh_encoder()
        rsn_encoder = fresh_encoder()
        pretrain_encoder(
            clf_encoder, labeled,
            cfg=_pretrain_cfg(args, seed=sub_seed()),
        )
        pairs = sample_rsn_pairs(labeled, args.pairs, 0.5, seed=sub_seed())
        rsn = RsnModel.init(rsn_encoder)
        pretrain_rsn(
            rsn, pairs,
            RsnTrainConfig(epochs=args.rsn_epochs, learning_rate=args.rsn_lr,
                           seed=sub_seed()),
        )
        save_encoder(clf_encoder, out_dir / "encoder.bin", manifest=manifest)
        save_rsn(rsn, out_dir / "rsn.bin", manifest=manifest)
        artifacts = {
            "encoder": str(out_dir / "encoder.bin"),
            "rsn": str(out_dir / "rsn.bin"),
        }

    write_json(out_dir / "manifest.json", stamped(manifest) | {"artifacts": artifacts})
    if args.json:
        print(json.dumps({"status": "ok", "artifacts": artifacts}))
    else:
        for name, path in artifacts.items():
            print(f"wrote {name} checkpoint: {path}")
    return 0


def _pretrain_cfg(args, seed: int):
    from .classifier import PretrainConfig

    return PretrainConfig(epochs=args.enc_epochs, learning_rate=args.enc_lr, seed=seed)


# ---------------------------------------------------------------------------
# run


def _load_seed_set(path: str, relation: str | None) -> SeedSet:
    corpus = load_jsonl(path, kind="labeled")
    rels = sorted(corpus.relations)
    if relation is None:
        if len(rels) != 1:
            raise CorpusError(
                f"seed file has relations {rels}; pass --relation to pick one"
            )
        relation = rels[0]
    ids = corpus.by_relation.get(relation)
    if not ids:
        raise CorpusError(f"no seed instances with relation {relation!r}")
    return SeedSet(relation=relation, instances=tuple(corpus.by_id[i] for i in ids))


_RUN_FLAGS = ("k1", "k2", "alpha", "beta", "theta", "iterations", "workers")
_FT_FLAGS = ("epochs", "batch_size", "learning_rate", "neg_coef")


def _snowball_config(args) -> SnowballConfig:
    """flag > config-file > default precedence."""
    file_cfg: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise EvalError(f"{args.config}: config must be a JSON object")
    ft_file = dict(file_cfg.get("finetune", {}))

    def pick(name, flag_value, source: dict, default):
        if flag_value is not None:
            return flag_value
        if name in source:
            return source[name]
        return default

    ft_defaults = FinetuneConfig()
    finetune = FinetuneConfig(
        epochs=pick("epochs", args.epochs, ft_file, ft_defaults.epochs),
        batch_size=pick("batch_size", args.batch_size, ft_file, ft_defaults.batch_size),
        learning_rate=pick("learning_rate", args.learning_rate, ft_file,
                           ft_defaults.learning_rate),
        neg_coef=pick("neg_coef", args.neg_coef, ft_file, ft_defaults.neg_coef),
    )
    sb_defaults = SnowballConfig()
    return SnowballConfig(
        k1=pick("k1", args.k1, file_cfg, sb_defaults.k1),
        k2=pick("k2", args.k2, file_cfg, sb_defaults.k2),
        alpha=pick("alpha", args.alpha, file_cfg, sb_defaults.alpha),
        beta=pick("beta", args.beta, file_cfg, sb_defaults.beta),
        theta=pick("theta", args.theta, file_cfg, sb_defaults.theta),
        iterations=pick("iterations", args.iterations, file_cfg, sb_defaults.iterations),
        finetune=finetune,
        seed=args.seed,
        warm_start=not args.cold_start,
        workers=pick("workers", args.workers, file_cfg, sb_defaults.workers),
    )


def cmd_run(args) -> int:
    config = _snowball_config(args)
    seeds = _load_seed_set(args.seeds, args.relation)
    labeled = load_jsonl(args.labeled, kind="labeled")
    unlabeled = load_jsonl(args.unlabeled, kind="unlabeled")

    store = load_embedding_store(args.store) if args.store else None
    rsn = load_rsn(args.rsn, store=store)
    if args.encoder:
        clf_encoder = load_encoder(args.encoder)
    elif store is not None:
        clf_encoder = store
    else:
        raise EvalError("pass --encoder or --store for the classifier encoder")

    engine = SnowballEngine(rsn, clf_encoder, labeled, unlabeled, config)
    state = engine.run(seeds)

    cfg_snapshot = asdict(config)
    manifest = stamped(
        build_manifest(
            "run", args.seed, cfg_snapshot,
            {"seeds": args.seeds, "labeled": args.labeled,
             "unlabeled": args.unlabeled, "rsn": args.rsn,
             "encoder": args.encoder, "store": args.store,
             "config": args.config},
        )
    )
    out_obj = {"manifest": manifest} | state.to_obj()
    out_obj["head"] = {"w": state.head.w.tolist(), "b": float(state.head.b)}

    if args.query:
        query = load_jsonl(args.query, kind="unlabeled")
        cache = RepCache(clf_encoder)
        predictions = {
            x.id: predict_rep(state.head, cache.get(x)) for x in query.instances
        }
        pred_path = args.predictions_out or str(Path(args.out).with_suffix(".predictions.json"))
        write_json(pred_path, {"manifest": manifest, "predictions": predictions})
        out_obj["predictions_file"] = pred_path

    write_json(args.out, out_obj)
    summary = {
        "status": "ok",
        "relation": state.relation,
        "selected": len(state.selected),
        "harvested": len(state.selected) - state.seed_count,
        "out": args.out,
    }
    if args.json:
        print(json.dumps(summary))
    else:
        print(
            f"relation {state.relation}: {summary['harvested']} instances harvested "
            f"over {config.iterations} iterations -> {args.out}"
        )
    return 0


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    with open(args.predictions, encoding="utf-8") as fh:
        pred_obj = json.load(fh)
    if not isinstance(pred_obj, dict):
        raise EvalError(f"{args.predictions}: expected a JSON object")
    predictions = pred_obj.get("predictions", pred_obj)
    if not isinstance(predictions, dict) or not all(
        isinstance(v, (int, float)) for v in predictions.values()
    ):
        raise EvalError(f"{args.predictions}: predictions must map id -> probability")

    gold_corpus = load_jsonl(args.gold, kind="labeled")
    if args.relation not in gold_corpus.relations:
        raise EvalError(f"relation {args.relation!r} absent from gold corpus")
    gold = {x.id: x.relation == args.relation for x in gold_corpus.instances}
    metrics = score_binary(predictions, gold, threshold=args.threshold)

    manifest = stamped(
        build_manifest(
            "eval", args.seed,
            {"threshold": args.threshold, "relation": args.relation,
             "label": args.label, "seed_count": args.seed_count},
            {"predictions": args.predictions, "gold": args.gold},
        )
    )
    out_obj = {
        "manifest": manifest,
        "model": args.label,
        "seeds": args.seed_count,
        **metrics.to_obj(),
    }
    if args.out:
        write_json(args.out, out_obj)
    if args.json:
        print(json.dumps({k: v for k, v in out_obj.items() if k != "manifest"}))
    else:
        row = {"model": args.label, "seeds": args.seed_count, **metrics.to_obj()}
        print(format_metrics_table([row]))
    return 0


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = SyntheticSpec(
        n_relations=args.n_relations,
        instances_per_relation=args.instances_per_relation,
        vocab_size=args.vocab_size,
        pattern_tokens_per_relation=args.pattern_tokens,
        entity_pool=args.entity_pool,
        pair_reuse_rate=args.pair_reuse,
        noise_rate=args.noise,
        seed=args.seed,
    )
    labeled, unlabeled, gold = generate_synthetic(spec)
    save_jsonl(labeled, out_dir / "labeled.jsonl")
    save_jsonl(unlabeled, out_dir / "unlabeled.jsonl")
    manifest = stamped(build_manifest("generate", args.seed, asdict(spec), {}))
    write_json(out_dir / "gold.json", {"manifest": manifest, "gold": gold})
    msg = {
        "status": "ok",
        "instances": len(labeled),
        "relations": sorted(labeled.relations),
        "out": str(out_dir),
    }
    print(json.dumps(msg) if args.json else
          f"generated {len(labeled)} instances over {len(labeled.relations)} relations in {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    if not args.state and not args.metrics:
        raise EvalError("pass --state and/or --metrics files to report on")
    lines: list[str] = []
    if args.state:
        with open(args.state, encoding="utf-8") as fh:
            state = json.load(fh)
        lines.append(f"relation: {state.get('relation')}")
        lines.append(f"seeds: {len(state.get('seed_ids', []))}  "
                     f"final selected: {len(state.get('selected_ids', []))}")
        lines.append(f'{"iter":>4} {"p1 cand":>8} {"p1 add":>7} '
                     f'{"p2 cand":>8} {"p2 add":>7} {"loss":>10}')
        for rec in state.get("iterations", []):
            lines.append(
                f'{rec["iteration"]:>4} {rec["phase1_candidates"]:>8} '
                f'{len(rec["phase1_added"]):>7} {rec["phase2_candidates"]:>8} '
                f'{len(rec["phase2_added"]):>7} {rec["classifier_loss"]:>10.4f}'
            )
    if args.metrics:
        rows = []
        for path in args.metrics:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
            rows.append(
                {
                    "model": obj.get("model") or Path(path).stem,
                    "seeds": obj.get("seeds", 0),
                    "precision": obj["precision"],
                    "recall": obj["recall"],
                    "f1": obj["f1"],
                }
            )
        if lines:
            lines.append("")
        lines.append(format_metrics_table(rows))
    text = "\n".join(lines)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(sub, out_required=True, out_dir=False):
    sub.add_argument("--seed", type=int, default=0, help="master RNG seed")
    sub.add_argument("--workers", type=int, default=None,
                     help="scoring worker threads")
    sub.add_argument("--json", action="store_true",
                     help="machine-readable stdout/stderr")
    help_out = "output directory" if out_dir else "output file"
    sub.add_argument("--out", required=out_required, help=help_out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snowball",
        description="Bootstrap a relation extractor from a handful of seed instances.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("pretrain", help="pre-train the encoder and the siamese metric")
    p.add_argument("--labeled", required=True, help="labeled corpus JSONL")
    p.add_argument("--unlabeled", help="unlabeled corpus JSONL (extends the vocabulary)")
    p.add_argument("--store", help="embedding store: skip encoder training, train the metric head over stored vectors")
    p.add_argument("--word-vectors", help="pretrained word vectors (text format)")
    p.add_argument("--pairs", type=int, default=2000, help="metric training pairs")
    p.add_argument("--rsn-epochs", type=int, default=3)
    p.add_argument("--rsn-lr", type=float, default=1e-3)
    p.add_argument("--enc-epochs", type=int, default=20)
    p.add_argument("--enc-lr", type=float, default=1e-3)
    p.add_argument("--d-w", type=int, default=50, help="word embedding dim")
    p.add_argument("--d-p", type=int, default=5, help="position embedding dim")
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--filters", type=int, default=230, help="conv filters = output dim")
    p.add_argument("--max-len", type=int, default=120)
    _add_common(p, out_dir=True)
    p.set_defaults(func=cmd_pretrain)

    p = subs.add_parser("run", help="bootstrap a new relation from seeds")
    p.add_argument("--seeds", required=True, help="seed instances JSONL (labeled)")
    p.add_argument("--relation", help="seed relation if the file holds several")
    p.add_argument("--labeled", required=True, help="labeled corpus JSONL (negatives)")
    p.add_argument("--unlabeled", required=True, help="unlabeled harvest corpus JSONL")
    p.add_argument("--rsn", required=True, help="siamese checkpoint")
    p.add_argument("--encoder", help="classifier encoder checkpoint")
    p.add_argument("--store", help="embedding store used as the (frozen) encoder")
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--k1", type=int, default=None)
    p.add_argument("--k2", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None, help="fine-tune epochs")
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--neg-coef", type=float, default=None)
    p.add_argument("--cold-start", action="store_true",
                   help="reset (w, b) before every fine-tune")
    p.add_argument("--query", help="instances to score with the final classifier")
    p.add_argument("--predictions-out", help="where to write query predictions")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = subs.add_parser("eval", help="score predictions against a gold corpus")
    p.add_argument("--predictions", required=True, help="JSON id -> probability")
    p.add_argument("--gold", required=True, help="gold labeled corpus JSONL")
    p.add_argument("--relation", required=True, help="the relation under evaluation")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--label", default="model", help="row label for the report table")
    p.add_argument("--seed-count", type=int, default=0,
                   help="seed-set size column for the report table")
    _add_common(p, out_required=False)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("generate", help="generate a synthetic ground-truth corpus")
    p.add_argument("--n-relations", type=int, default=10)
    p.add_argument("--instances-per-relation", type=int, default=60)
    p.add_argument("--vocab-size", type=int, default=120)
    p.add_argument("--pattern-tokens", type=int, default=3)
    p.add_argument("--entity-pool", type=int, default=40)
    p.add_argument("--pair-reuse", type=float, default=0.3)
    p.add_argument("--noise", type=float, default=0.15)
    _add_common(p, out_dir=True)
    p.set_defaults(func=cmd_generate)

    p = subs.add_parser("report", help="render run logs and metrics tables")
    p.add_argument("--state", help="state JSON from `run`")
    p.add_argument("--metrics", nargs="*", help="metrics JSON files from `eval`")
    _add_common(p, out_required=False)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse handles usage errors and --help
        return int(e.code or 0)
    try:
        return args.func(args)
    except INPUT_ERRORS as e:
        _emit_error(args, str(e), 2)
        return 2
    except Exception as e:  # pragma: no cover - defensive
        _emit_error(args, f"{type(e).__name__}: {e}", 1)
        return 1


def _emit_error(args, message: str, code: int) -> None:
    if getattr(args, "json", False):
        print(json.dumps({"error": message, "exit_code": code}), file=sys.stderr)
    else:
        print(f"error: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
