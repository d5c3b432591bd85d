"""Corpus data model: tagged instances, labeled/unlabeled corpora, entity-pair
index, JSONL (de)serialization and the sampling utilities used for training.

The JSONL schema is one UTF-8 object per line::

    {"id": str, "tokens": [str],
     "head": {"id": str, "span": [start, end]},
     "tail": {"id": str, "span": [start, end]},
     "relation": str}          # optional

Span ends are exclusive. Corpora are immutable after load and safe to share
across threads; all sampling helpers take an explicit seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class CorpusError(ValueError):
    """Malformed corpus input (bad JSONL line, bad span, duplicate id, ...)."""


@dataclass(frozen=True)
class Span:
    """Token span [start, end) tagged with the entity it mentions."""

    start: int
    end: int
    entity_id: str


@dataclass(frozen=True)
class Instance:
    """One sentence with a tagged head and tail entity.

    `relation` is None for unlabeled data.
    """

    id: str
    tokens: tuple[str, ...]
    head: Span
    tail: Span
    relation: str | None = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("instance id must be non-empty")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        n = len(self.tokens)
        for name, span in (("head", self.head), ("tail", self.tail)):
            if not span.entity_id:
                raise CorpusError(f"instance {self.id!r}: {name} entity_id is empty")
            if not (0 <= span.start < span.end <= n):
                raise CorpusError(
                    f"instance {self.id!r}: {name} span [{span.start}, {span.end}) "
                    f"out of range for {n} tokens"
                )
        if self.head.start < self.tail.end and self.tail.start < self.head.end:
            raise CorpusError(f"instance {self.id!r}: head and tail spans overlap")

    @property
    def pair(self) -> tuple[str, str]:
        """(head entity id, tail entity id) — the key used by the pair index."""
        return (self.head.entity_id, self.tail.entity_id)


PairIndex = dict[tuple[str, str], tuple[str, ...]]


def build_pair_index(instances: Iterable[Instance]) -> PairIndex:
    """Map every (head, tail) entity pair to the sorted ids mentioning it."""
    acc: dict[tuple[str, str], list[str]] = {}
    for x in instances:
        acc.setdefault(x.pair, []).append(x.id)
    return {pair: tuple(sorted(ids)) for pair, ids in acc.items()}


@dataclass(frozen=True)
class LabeledCorpus:
    """Instances that all carry a relation label, indexed by relation."""

    instances: tuple[Instance, ...]
    relations: frozenset[str]
    by_relation: dict[str, tuple[str, ...]]
    by_id: dict[str, Instance]

    @classmethod
    def from_instances(cls, instances: Sequence[Instance]) -> "LabeledCorpus":
        instances = tuple(instances)
        by_id: dict[str, Instance] = {}
        by_rel: dict[str, list[str]] = {}
        for x in instances:
            if x.relation is None:
                raise CorpusError(f"instance {x.id!r} has no relation label")
            if x.id in by_id:
                raise CorpusError(f"duplicate instance id {x.id!r}")
            by_id[x.id] = x
            by_rel.setdefault(x.relation, []).append(x.id)
        return cls(
            instances=instances,
            relations=frozenset(by_rel),
            by_relation={r: tuple(ids) for r, ids in by_rel.items()},
            by_id=by_id,
        )

    def __len__(self) -> int:
        return len(self.instances)

    def subset(self, relations: Iterable[str]) -> "LabeledCorpus":
        keep = set(relations)
        return LabeledCorpus.from_instances(
            [x for x in self.instances if x.relation in keep]
        )


@dataclass(frozen=True)
class UnlabeledCorpus:
    """Instances with labels absent (or deliberately stripped), plus the
    entity-pair index that powers candidate retrieval."""

    instances: tuple[Instance, ...]
    pair_index: PairIndex
    by_id: dict[str, Instance]

    @classmethod
    def from_instances(
        cls, instances: Sequence[Instance], strip_labels: bool = True
    ) -> "UnlabeledCorpus":
        xs = []
        by_id: dict[str, Instance] = {}
        for x in instances:
            if strip_labels and x.relation is not None:
                x = replace(x, relation=None)
            if x.id in by_id:
                raise CorpusError(f"duplicate instance id {x.id!r}")
            by_id[x.id] = x
            xs.append(x)
        return cls(instances=tuple(xs), pair_index=build_pair_index(xs), by_id=by_id)

    def __len__(self) -> int:
        return len(self.instances)

    def with_pair(self, pair: tuple[str, str]) -> tuple[str, ...]:
        """Ids of instances mentioning `pair`; empty tuple when absent."""
        return self.pair_index.get(pair, ())


@dataclass(frozen=True)
class SeedSet:
    """The handful of labeled instances that start a bootstrap run."""

    relation: str
    instances: tuple[Instance, ...]

    def __post_init__(self):
        if not self.instances:
            raise CorpusError("seed set must be non-empty")
        object.__setattr__(self, "instances", tuple(self.instances))
        ids = [x.id for x in self.instances]
        if len(set(ids)) != len(ids):
            raise CorpusError("seed set contains duplicate instance ids")

    @property
    def ids(self) -> set[str]:
        return {x.id for x in self.instances}


# ---------------------------------------------------------------------------
# JSONL ingestion


def _parse_span(obj, which: str) -> Span:
    try:
        start, end = obj["span"]
        return Span(start=int(start), end=int(end), entity_id=str(obj["id"]))
    except (KeyError, TypeError, ValueError) as e:
        raise CorpusError(f"bad {which} field: {e}") from e


def parse_instance(obj: dict) -> Instance:
    """Build an Instance from one decoded JSONL object, validating spans."""
    if not isinstance(obj, dict):
        raise CorpusError("line is not a JSON object")
    missing = [k for k in ("id", "tokens", "head", "tail") if k not in obj]
    if missing:
        raise CorpusError(f"missing fields: {', '.join(missing)}")
    tokens = obj["tokens"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise CorpusError("tokens must be a list of strings")
    relation = obj.get("relation")
    if relation is not None and not isinstance(relation, str):
        raise CorpusError("relation must be a string when present")
    return Instance(
        id=str(obj["id"]),
        tokens=tuple(tokens),
        head=_parse_span(obj["head"], "head"),
        tail=_parse_span(obj["tail"], "tail"),
        relation=relation,
    )


def iter_jsonl_instances(path: str | Path) -> Iterable[Instance]:
    """Yield instances from a JSONL file, reporting errors with line numbers."""
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {e.msg}") from e
            try:
                x = parse_instance(obj)
            except CorpusError as e:
                raise CorpusError(f"{path}:{lineno}: {e}") from e
            if x.id in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate instance id {x.id!r}")
            seen.add(x.id)
            yield x


def load_jsonl(
    path: str | Path, kind: str = "auto"
) -> LabeledCorpus | UnlabeledCorpus:
    """Load a corpus; `kind` is "labeled", "unlabeled" or "auto".

    Auto mode returns a LabeledCorpus when every line carries a relation.
    Instance order equals file order.
    """
    instances = list(iter_jsonl_instances(path))
    if kind == "auto":
        kind = "labeled" if instances and all(x.relation for x in instances) else "unlabeled"
    if kind == "labeled":
        return LabeledCorpus.from_instances(instances)
    if kind == "unlabeled":
        return UnlabeledCorpus.from_instances(instances, strip_labels=False)
    raise ValueError(f"unknown corpus kind {kind!r}")


def instance_to_obj(x: Instance) -> dict:
    obj = {
        "id": x.id,
        "tokens": list(x.tokens),
        "head": {"id": x.head.entity_id, "span": [x.head.start, x.head.end]},
        "tail": {"id": x.tail.entity_id, "span": [x.tail.start, x.tail.end]},
    }
    if x.relation is not None:
        obj["relation"] = x.relation
    return obj


def save_jsonl(
    instances: Iterable[Instance] | LabeledCorpus | UnlabeledCorpus,
    path: str | Path,
) -> None:
    """Write instances as JSONL in iteration order (round-trips with load)."""
    if isinstance(instances, (LabeledCorpus, UnlabeledCorpus)):
        instances = instances.instances
    with open(path, "w", encoding="utf-8") as fh:
        for x in instances:
            fh.write(json.dumps(instance_to_obj(x), ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# Sampling


def sample_rsn_pairs(
    corpus: LabeledCorpus,
    n: int,
    positive_fraction: float = 0.5,
    seed: int | np.random.Generator = 0,
) -> list[tuple[Instance, Instance, bool]]:
    """Sample `n` instance pairs labeled same-relation / different-relation.

    Exactly round(n * positive_fraction) pairs are positive. Raises
    CorpusError when the corpus cannot supply the requested mix.
    """
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * positive_fraction))
    n_neg = n - n_pos
    rels = sorted(corpus.relations)
    pos_rels = [r for r in rels if len(corpus.by_relation[r]) >= 2]
    if n_pos > 0 and not pos_rels:
        raise CorpusError("no relation has >= 2 instances; cannot sample positive pairs")
    if n_neg > 0 and len(rels) < 2:
        raise CorpusError("need >= 2 relations to sample negative pairs")

    pairs: list[tuple[Instance, Instance, bool]] = []
    for _ in range(n_pos):
        r = pos_rels[rng.integers(len(pos_rels))]
        ids = corpus.by_relation[r]
        i, j = rng.choice(len(ids), size=2, replace=False)
        pairs.append((corpus.by_id[ids[i]], corpus.by_id[ids[j]], True))
    for _ in range(n_neg):
        a, b = rng.choice(len(rels), size=2, replace=False)
        ids_a, ids_b = corpus.by_relation[rels[a]], corpus.by_relation[rels[b]]
        x = corpus.by_id[ids_a[rng.integers(len(ids_a))]]
        y = corpus.by_id[ids_b[rng.integers(len(ids_b))]]
        pairs.append((x, y, False))
    perm = rng.permutation(len(pairs))
    return [pairs[i] for i in perm]


def split_labeled(
    corpus: LabeledCorpus, fraction: float, seed: int | np.random.Generator = 0
) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Stratified per-relation split; the first part gets round(fraction * n)
    instances of each relation."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    rng = np.random.default_rng(seed)
    first: list[Instance] = []
    second: list[Instance] = []
    for rel in sorted(corpus.relations):
        ids = corpus.by_relation[rel]
        order = rng.permutation(len(ids))
        cut = int(round(fraction * len(ids)))
        first += [corpus.by_id[ids[i]] for i in order[:cut]]
        second += [corpus.by_id[ids[i]] for i in order[cut:]]
    return LabeledCorpus.from_instances(first), LabeledCorpus.from_instances(second)


def sample_negative_batch(
    corpus: LabeledCorpus, bs: int, seed: int | np.random.Generator = 0
) -> list[Instance]:
    """Draw `bs` instances uniformly with replacement from the whole corpus."""
    if len(corpus) == 0:
        raise CorpusError("cannot sample from an empty corpus")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(corpus.instances), size=bs)
    return [corpus.instances[i] for i in idx]
