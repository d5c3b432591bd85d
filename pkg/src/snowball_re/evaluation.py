"""Few-shot evaluation harness: binary P/R/F1, query-set construction,
precision-at-N for the siamese ranker, and a synthetic corpus generator that
provides ground truth at desk scale.

Conventions (fixed here because they matter at the degenerate corners):
a prediction is positive iff its probability is strictly greater than the
threshold; precision/recall are 0 when their denominator is 0; F1 is 0 when
P + R = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .corpus import (
    CorpusError,
    Instance,
    LabeledCorpus,
    SeedSet,
    Span,
    UnlabeledCorpus,
)
from .encoder import RepCache
from .rsn import RsnModel


class EvalError(ValueError):
    """Infeasible request or inconsistent evaluation inputs."""


# ---------------------------------------------------------------------------
# Binary metrics


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    def to_obj(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


def metrics_from_counts(tp: int, fp: int, fn: int) -> Metrics:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(precision, recall, f1, tp, fp, fn)


def score_binary(
    predictions: Mapping[str, float],
    gold: Mapping[str, bool],
    threshold: float = 0.5,
) -> Metrics:
    """Binarize probabilities at `threshold` (strict >) against gold labels."""
    missing = [k for k in gold if k not in predictions]
    if missing:
        raise EvalError(f"missing predictions for {len(missing)} ids, e.g. {missing[0]!r}")
    tp = fp = fn = 0
    for key, is_pos in gold.items():
        predicted = predictions[key] > threshold
        if predicted and is_pos:
            tp += 1
        elif predicted:
            fp += 1
        elif is_pos:
            fn += 1
    return metrics_from_counts(tp, fp, fn)


# ---------------------------------------------------------------------------
# Query sets


@dataclass(frozen=True)
class QueryComposition:
    """How many query instances to draw per source."""

    existing: int = 100
    new: int = 20
    unseen: int = 40


@dataclass(frozen=True)
class EvalSplits:
    """`existing`: corpus of pre-training relations; `heldout`: corpus
    containing the new relation and the unseen distractor relations."""

    existing: LabeledCorpus
    heldout: LabeledCorpus


@dataclass
class QuerySet:
    instances: tuple[Instance, ...]  # labels stripped
    gold: dict[str, bool]  # id -> expresses the new relation
    composition: dict[str, int]


def _draw(ids: Sequence[str], count: int, rng, what: str) -> list[str]:
    if count > len(ids):
        raise EvalError(f"requested {count} {what} instances, only {len(ids)} available")
    picked = rng.choice(len(ids), size=count, replace=False) if count else []
    return [ids[i] for i in picked]


def build_query_set(
    splits: EvalSplits,
    relation: str,
    composition: QueryComposition,
    seed: int | np.random.Generator = 0,
) -> QuerySet:
    """Sample a mixed query pool: existing relations, the new relation, and
    unseen relations; gold marks exactly the new-relation instances."""
    if relation in splits.existing.relations:
        raise EvalError(f"{relation!r} is a pre-training relation, not a new one")
    if relation not in splits.heldout.relations:
        raise EvalError(f"{relation!r} has no instances in the held-out corpus")
    rng = np.random.default_rng(seed)

    existing_ids = [x.id for x in splits.existing.instances]
    new_ids = list(splits.heldout.by_relation[relation])
    unseen_ids = [x.id for x in splits.heldout.instances if x.relation != relation]

    chosen: list[tuple[Instance, bool]] = []
    for xid in _draw(existing_ids, composition.existing, rng, "existing-relation"):
        chosen.append((splits.existing.by_id[xid], False))
    for xid in _draw(new_ids, composition.new, rng, "new-relation"):
        chosen.append((splits.heldout.by_id[xid], True))
    for xid in _draw(unseen_ids, composition.unseen, rng, "unseen-relation"):
        chosen.append((splits.heldout.by_id[xid], False))

    order = rng.permutation(len(chosen))
    instances = tuple(replace(chosen[i][0], relation=None) for i in order)
    gold = {chosen[i][0].id: chosen[i][1] for i in order}
    return QuerySet(
        instances=instances,
        gold=gold,
        composition={
            "existing": composition.existing,
            "new": composition.new,
            "unseen": composition.unseen,
        },
    )


# ---------------------------------------------------------------------------
# Precision at N


def rank_by_seed_similarity(
    model: RsnModel,
    seeds: SeedSet,
    pool: Sequence[Instance],
    cache: RepCache | None = None,
) -> list[tuple[str, float]]:
    """Every pool instance scored by mean similarity to the seeds, ranked
    descending (ties broken by id)."""
    cache = cache or RepCache(model.encoder)
    scored = [
        (x.id, model.score_against_set(x, seeds.instances, cache=cache)) for x in pool
    ]
    return sorted(scored, key=lambda t: (-t[1], t[0]))


def precision_at_n(
    model: RsnModel,
    seeds: SeedSet,
    pool: LabeledCorpus,
    ns: Iterable[int],
    cache: RepCache | None = None,
) -> dict[int, float]:
    """Fraction of true seed-relation instances among the top-N ranked pool
    instances, for each N."""
    ns = list(ns)
    for n in ns:
        if n < 1 or n > len(pool):
            raise EvalError(f"N={n} out of range for a pool of {len(pool)}")
    ranked = rank_by_seed_similarity(model, seeds, pool.instances, cache=cache)
    is_rel = [pool.by_id[xid].relation == seeds.relation for xid, _ in ranked]
    return {n: sum(is_rel[:n]) / n for n in ns}


# ---------------------------------------------------------------------------
# Synthetic corpus generator


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs of the ground-truth corpus generator.

    Every relation gets its own disjoint cue-token vocabulary of
    `pattern_tokens_per_relation` tokens; each instance carries a random
    subset of 1-3 of them (so a small seed set never covers the whole
    pattern space) plus two entity placeholders. `pair_reuse_rate` is the
    chance an instance reuses an entity pair already used by its relation
    (phase-1 fuel); fresh pairs are globally unique. `noise_rate` flips each
    emitted cue token to a random filler token.
    """

    n_relations: int = 10
    instances_per_relation: int = 60
    vocab_size: int = 120
    pattern_tokens_per_relation: int = 3
    entity_pool: int = 40
    pair_reuse_rate: float = 0.3
    noise_rate: float = 0.15
    seed: int = 0

    def __post_init__(self):
        for name in ("pair_reuse_rate", "noise_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if min(self.n_relations, self.instances_per_relation, self.vocab_size,
               self.pattern_tokens_per_relation, self.entity_pool) < 1:
            raise ValueError("all synthetic sizes must be >= 1")


def relation_names(spec: SyntheticSpec) -> list[str]:
    return [f"rel{i:02d}" for i in range(spec.n_relations)]


def generate_synthetic(
    spec: SyntheticSpec,
) -> tuple[LabeledCorpus, UnlabeledCorpus, dict[str, str]]:
    """Build (labeled master corpus, unlabeled view with labels stripped,
    gold id -> relation map). Byte-deterministic given spec.seed."""
    rng = np.random.default_rng(spec.seed)
    rels = relation_names(spec)
    fillers = [f"w{k:03d}" for k in range(spec.vocab_size)]
    cues = {
        r: [f"{r}_cue{j}" for j in range(spec.pattern_tokens_per_relation)]
        for r in rels
    }
    entities = [f"E{m:03d}" for m in range(spec.entity_pool)]

    max_pairs = spec.entity_pool * (spec.entity_pool - 1)
    if spec.n_relations * spec.instances_per_relation > max_pairs:
        raise ValueError(
            "entity pool too small to give every instance a distinct pair "
            f"({max_pairs} orderings available)"
        )

    def some_fillers(lo: int, hi: int) -> list[str]:
        return [fillers[rng.integers(len(fillers))] for _ in range(rng.integers(lo, hi + 1))]

    used_pairs: set[tuple[str, str]] = set()
    instances: list[Instance] = []
    gold: dict[str, str] = {}
    for r in rels:
        own_pairs: list[tuple[str, str]] = []
        for i in range(spec.instances_per_relation):
            if own_pairs and rng.random() < spec.pair_reuse_rate:
                pair = own_pairs[rng.integers(len(own_pairs))]
            else:
                while True:
                    h, t = rng.choice(len(entities), size=2, replace=False)
                    pair = (entities[h], entities[t])
                    if pair not in used_pairs:
                        break
                used_pairs.add(pair)
                own_pairs.append(pair)

            n_cues = int(rng.integers(1, min(3, len(cues[r])) + 1))
            subset_idx = rng.choice(len(cues[r]), size=n_cues, replace=False)
            cue_block = [cues[r][j] for j in subset_idx]
            cue_block = [
                fillers[rng.integers(len(fillers))] if rng.random() < spec.noise_rate else c
                for c in cue_block
            ]
            head_first = bool(rng.random() < 0.5)
            first_ent, second_ent = pair if head_first else (pair[1], pair[0])

            tokens: list[str] = some_fillers(1, 3)
            first_span = (len(tokens), len(tokens) + 1)
            tokens.append(first_ent)
            tokens += some_fillers(1, 2)
            tokens += cue_block
            tokens += some_fillers(1, 2)
            second_span = (len(tokens), len(tokens) + 1)
            tokens.append(second_ent)
            tokens += some_fillers(0, 2)

            if head_first:
                head = Span(first_span[0], first_span[1], pair[0])
                tail = Span(second_span[0], second_span[1], pair[1])
            else:
                tail = Span(first_span[0], first_span[1], pair[1])
                head = Span(second_span[0], second_span[1], pair[0])
            xid = f"{r}_{i:04d}"
            instances.append(
                Instance(id=xid, tokens=tuple(tokens), head=head, tail=tail, relation=r)
            )
            gold[xid] = r

    labeled = LabeledCorpus.from_instances(instances)
    unlabeled = UnlabeledCorpus.from_instances(instances, strip_labels=True)
    return labeled, unlabeled, gold


def synthetic_word_vectors(
    spec: SyntheticSpec, d_w: int, cue_scale: float = 0.8,
    entity_scale: float = 0.3, filler_scale: float = 0.2,
) -> dict[str, np.ndarray]:
    """Fixed random word vectors covering the generator's whole vocabulary.

    Stands in for large-corpus pretrained embeddings: every token (cues of
    yet-unseen relations included) gets an informative, reproducible vector,
    so encoders can process novel relations they never trained on. Cue
    tokens carry the most energy; fillers and entity surface forms less,
    mirroring how function words and entity names carry little about which
    relation a sentence expresses.
    """
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0xE0B]))
    out: dict[str, np.ndarray] = {}
    for k in range(spec.vocab_size):
        out[f"w{k:03d}"] = rng.normal(scale=filler_scale, size=d_w)
    for m in range(spec.entity_pool):
        out[f"E{m:03d}"] = rng.normal(scale=entity_scale, size=d_w)
    for r in relation_names(spec):
        for j in range(spec.pattern_tokens_per_relation):
            out[f"{r}_cue{j}"] = rng.normal(scale=cue_scale, size=d_w)
    return out


# ---------------------------------------------------------------------------
# Episode assembly for benchmark runs


@dataclass
class Episode:
    """One few-shot trial: pre-training corpus, harvest corpus, seeds and a
    mixed query set with hidden gold."""

    train: LabeledCorpus  # S_N: pre-training relations only
    harvest: UnlabeledCorpus  # T: new-relation instances + distractors
    seeds: SeedSet
    query: QuerySet
    gold: dict[str, str]  # full generator ground truth


def build_episode(
    labeled: LabeledCorpus,
    gold: dict[str, str],
    pretrain_relations: Sequence[str],
    new_relation: str,
    k_seeds: int,
    seed: int | np.random.Generator = 0,
    train_fraction: float = 0.6,
    harvest_fraction: float = 0.2,
    composition: QueryComposition | None = None,
) -> Episode:
    """Slice a generated world into one evaluation episode.

    Pre-training relations split into S_N / T-distractor / query pools; the
    new relation into seeds / T-harvest / query pool; remaining relations
    are unseen: half distractors in T, half query pool.
    """
    rng = np.random.default_rng(seed)
    pretrain = set(pretrain_relations)
    if new_relation in pretrain:
        raise EvalError(f"{new_relation!r} is a pre-training relation")
    unseen = sorted(labeled.relations - pretrain - {new_relation})

    train_rows: list[Instance] = []
    harvest_rows: list[Instance] = []
    existing_query: list[Instance] = []
    unseen_query: list[Instance] = []

    def shuffled(rel: str) -> list[Instance]:
        ids = list(labeled.by_relation[rel])
        return [labeled.by_id[ids[i]] for i in rng.permutation(len(ids))]

    for rel in sorted(pretrain):
        xs = shuffled(rel)
        n_train = int(round(train_fraction * len(xs)))
        n_harvest = int(round(harvest_fraction * len(xs)))
        train_rows += xs[:n_train]
        harvest_rows += xs[n_train : n_train + n_harvest]
        existing_query += xs[n_train + n_harvest :]

    new_xs = shuffled(new_relation)
    if k_seeds >= len(new_xs):
        raise EvalError(f"cannot draw {k_seeds} seeds from {len(new_xs)} instances")
    seeds = SeedSet(relation=new_relation, instances=tuple(new_xs[:k_seeds]))
    composition = composition or QueryComposition()
    n_query_new = min(composition.new, len(new_xs) - k_seeds)
    query_new = new_xs[k_seeds : k_seeds + n_query_new]
    harvest_rows += new_xs[k_seeds + n_query_new :]

    for rel in unseen:
        xs = shuffled(rel)
        half = len(xs) // 2
        harvest_rows += xs[:half]
        unseen_query += xs[half:]

    splits = EvalSplits(
        existing=LabeledCorpus.from_instances(existing_query),
        heldout=LabeledCorpus.from_instances(query_new + unseen_query),
    )
    composition = replace(
        composition,
        existing=min(composition.existing, len(existing_query)),
        new=n_query_new,
        unseen=min(composition.unseen, len(unseen_query)),
    )
    query = build_query_set(splits, new_relation, composition, seed=rng)
    return Episode(
        train=LabeledCorpus.from_instances(train_rows),
        harvest=UnlabeledCorpus.from_instances(harvest_rows, strip_labels=True),
        seeds=seeds,
        query=query,
        gold=gold,
    )


# ---------------------------------------------------------------------------
# Reporting


def format_metrics_table(rows: Sequence[Mapping]) -> str:
    """Aligned plain-text table; one row per system/seed-count with P, R, F1.

    Row mapping keys: "model", "seeds", "precision", "recall", "f1".
    """
    seed_counts = sorted({r["seeds"] for r in rows})
    models = []
    for r in rows:
        if r["model"] not in models:
            models.append(r["model"])
    by_key = {(r["model"], r["seeds"]): r for r in rows}

    header1 = ["model".ljust(28)]
    header2 = [" " * 28]
    for k in seed_counts:
        header1.append(f"{k} seeds".center(23))
        header2.append(f'{"P":>7}{"R":>8}{"F1":>8}')
    lines = ["".join(header1), "".join(header2)]
    for m in models:
        cells = [str(m).ljust(28)]
        for k in seed_counts:
            r = by_key.get((m, k))
            if r is None:
                cells.append(f'{"-":>7}{"-":>8}{"-":>8}')
            else:
                cells.append(
                    f'{100 * r["precision"]:7.2f}{100 * r["recall"]:8.2f}{100 * r["f1"]:8.2f}'
                )
        lines.append("".join(cells))
    return "\n".join(lines)
