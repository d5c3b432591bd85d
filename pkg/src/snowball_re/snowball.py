"""Iterative two-phase bootstrap that grows a selected instance set.

Each round: phase 1 harvests unlabeled instances sharing an entity pair with
the selected set (filtered by the siamese metric, threshold alpha, cap K1)
and refreshes the classifier head; phase 2 harvests instances the classifier
flags above theta, filtered by metric similarity to the whole selected set
(threshold beta, cap K2); the head is refreshed again before the next round.

The selected set only ever grows and never holds a duplicate id. Everything
is deterministic under the configured seed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .classifier import ClassifierHead, FinetuneConfig, finetune, predict_rep
from .corpus import Instance, LabeledCorpus, SeedSet, UnlabeledCorpus
from .encoder import RepCache
from .rsn import RsnModel


@dataclass(frozen=True)
class SnowballConfig:
    k1: int = 5
    k2: int = 5
    alpha: float = 0.5
    beta: float = 0.5
    theta: float = 0.9
    iterations: int = 3
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)
    seed: int = 0
    warm_start: bool = True  # continue (w, b) across rounds vs reset to zero
    workers: int = 1

    def __post_init__(self):
        for name in ("alpha", "beta", "theta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if min(self.k1, self.k2, self.iterations) < 0:
            raise ValueError("k1, k2 and iterations must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class Addition:
    """One harvested instance and the score that admitted it."""

    instance_id: str
    score: float


@dataclass
class PhaseResult:
    candidates: int
    added: list[Addition]


@dataclass
class IterationRecord:
    iteration: int  # 1-based
    phase1_candidates: int
    phase1_added: list[Addition]
    phase2_candidates: int
    phase2_added: list[Addition]
    classifier_loss: float

    def to_obj(self) -> dict:
        return {
            "iteration": self.iteration,
            "phase1_candidates": self.phase1_candidates,
            "phase1_added": [[a.instance_id, a.score] for a in self.phase1_added],
            "phase2_candidates": self.phase2_candidates,
            "phase2_added": [[a.instance_id, a.score] for a in self.phase2_added],
            "classifier_loss": self.classifier_loss,
        }


@dataclass
class SnowballState:
    relation: str
    selected: list[Instance]  # seeds first, additions in harvest order
    selected_ids: set[str]
    seed_count: int
    head: ClassifierHead
    iteration_log: list[IterationRecord] = field(default_factory=list)

    @property
    def harvested_ids(self) -> list[str]:
        return [x.id for x in self.selected[self.seed_count :]]

    def to_obj(self) -> dict:
        return {
            "relation": self.relation,
            "seed_ids": [x.id for x in self.selected[: self.seed_count]],
            "selected_ids": [x.id for x in self.selected],
            "iterations": [rec.to_obj() for rec in self.iteration_log],
        }


class SnowballRunAborted(RuntimeError):
    """An iteration failed; `state` keeps everything up to the failure."""

    def __init__(self, iteration: int, state: SnowballState, cause: BaseException):
        super().__init__(f"bootstrap aborted in iteration {iteration}: {cause}")
        self.iteration = iteration
        self.state = state
        self.cause = cause


class SnowballEngine:
    """Owns the corpora, the frozen models and the per-run caches."""

    def __init__(
        self,
        rsn: RsnModel,
        clf_encoder,
        labeled: LabeledCorpus,
        unlabeled: UnlabeledCorpus,
        config: SnowballConfig | None = None,
    ):
        if rsn.dim != rsn.encoder.dim:
            raise ValueError("siamese head dim does not match its encoder")
        self.rsn = rsn
        self.clf_encoder = clf_encoder
        self.labeled = labeled
        self.unlabeled = unlabeled
        self.config = config or SnowballConfig()
        self._rsn_reps = RepCache(rsn.encoder)
        self._clf_reps = RepCache(clf_encoder)

    # -- shared helpers -------------------------------------------------------

    def initial_state(self, seeds: SeedSet) -> SnowballState:
        # Seed ids may also exist in T; candidate gathering excludes them by id.
        return SnowballState(
            relation=seeds.relation,
            selected=list(seeds.instances),
            selected_ids=set(seeds.ids),
            seed_count=len(seeds.instances),
            head=ClassifierHead.zeros(self.clf_encoder.dim),
        )

    def _add(self, state: SnowballState, additions: list[Addition]) -> None:
        for a in additions:
            if a.instance_id in state.selected_ids:
                raise RuntimeError(f"duplicate selection of {a.instance_id!r}")
            state.selected.append(self.unlabeled.by_id[a.instance_id])
            state.selected_ids.add(a.instance_id)

    def _score_candidates(self, items: list[tuple[str, Sequence[Instance]]]):
        """Mean-similarity scores, computed per pair on the scalar path.

        `items` is [(candidate_id, reference_instances)]. Parallel workers
        only fan out the (read-only, order-preserving) scoring loop.
        """

        def score(item):
            cid, refs = item
            return cid, self.rsn.score_against_set(
                self.unlabeled.by_id[cid], refs, cache=self._rsn_reps
            )

        if self.config.workers > 1 and len(items) > 1:
            # Warm the cache serially: RepCache is not safe for parallel writes.
            for cid, refs in items:
                self._rsn_reps.get(self.unlabeled.by_id[cid])
                for r in refs:
                    self._rsn_reps.get(r)
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                return list(pool.map(score, items))
        return [score(item) for item in items]

    @staticmethod
    def _select(scored: list[tuple[str, float]], cap: int, keep) -> list[Addition]:
        """Rank desc by score (ties: id asc) and take up to `cap` passing `keep`."""
        ranked = sorted(scored, key=lambda t: (-t[1], t[0]))
        out: list[Addition] = []
        for cid, s in ranked:
            if len(out) >= cap:
                break
            if keep(s):
                out.append(Addition(cid, s))
        return out

    def finetune_head(self, state: SnowballState, seed: int) -> float:
        """Refresh (w, b) on the current selected set; returns final loss."""
        cfg = replace(self.config.finetune, seed=seed)
        base = state.head if self.config.warm_start else ClassifierHead.zeros(
            self.clf_encoder.dim
        )
        seeds = SeedSet(relation=state.relation, instances=tuple(state.selected))
        state.head, losses = finetune(
            base, self.clf_encoder, seeds, self.labeled, cfg, cache=self._clf_reps
        )
        return losses[-1] if losses else float("nan")

    # -- phases ---------------------------------------------------------------

    def phase1(self, state: SnowballState, finetune_seed: int = 0) -> PhaseResult:
        """Same-entity-pair harvest, then a classifier refresh."""
        refs_by_pair: dict[tuple[str, str], list[Instance]] = {}
        for s in state.selected:
            refs_by_pair.setdefault(s.pair, []).append(s)

        candidate_ids: set[str] = set()
        for pair in refs_by_pair:
            candidate_ids.update(self.unlabeled.with_pair(pair))
        candidate_ids -= state.selected_ids

        items = [
            (cid, refs_by_pair[self.unlabeled.by_id[cid].pair])
            for cid in sorted(candidate_ids)
        ]
        scored = self._score_candidates(items)
        alpha = self.config.alpha
        added = self._select(scored, self.config.k1, lambda s: s >= alpha)
        self._add(state, added)
        self.finetune_head(state, finetune_seed)
        return PhaseResult(candidates=len(scored), added=added)

    def phase2(self, state: SnowballState) -> PhaseResult:
        """Classifier-driven discovery of instances with new entity pairs."""
        theta = self.config.theta
        cands = []
        for x in self.unlabeled.instances:
            if x.id in state.selected_ids:
                continue
            if predict_rep(state.head, self._clf_reps.get(x)) > theta:
                cands.append(x)
        scored = self._score_candidates([(x.id, state.selected) for x in cands])
        beta = self.config.beta
        added = self._select(scored, self.config.k2, lambda s: s > beta)
        self._add(state, added)
        return PhaseResult(candidates=len(cands), added=added)

    # -- full run ---------------------------------------------------------------

    def run(self, seeds: SeedSet) -> SnowballState:
        """Initial fine-tune, then `iterations` rounds of phase1 -> phase2 ->
        fine-tune. Deterministic under config.seed."""
        state = self.initial_state(seeds)
        rng = np.random.default_rng(self.config.seed)

        def next_seed() -> int:
            return int(rng.integers(0, 2**63))

        self.finetune_head(state, next_seed())
        for iteration in range(1, self.config.iterations + 1):
            try:
                p1 = self.phase1(state, finetune_seed=next_seed())
                p2 = self.phase2(state)
                loss = self.finetune_head(state, next_seed())
            except Exception as e:  # record partial progress, then surface
                raise SnowballRunAborted(iteration, state, e) from e
            state.iteration_log.append(
                IterationRecord(
                    iteration=iteration,
                    phase1_candidates=p1.candidates,
                    phase1_added=p1.added,
                    phase2_candidates=p2.candidates,
                    phase2_added=p2.added,
                    classifier_loss=loss,
                )
            )
        return state
