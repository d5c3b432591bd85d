"""Binary relation classifier: g(x) = sigmoid(w . f(x) + b).

The encoder f is pre-trained once via N-way classification over the labeled
corpus (throwaway softmax layer) and then frozen. Adapting to a new relation
touches only (w, b): minibatches of selected instances are positives and
uniformly-sampled instances of the old relations are negatives, the negative
term down-weighted by `neg_coef`. The optimized objective is the negative
log-likelihood

    L = -( sum_pos log g(x) + neg_coef * sum_neg log(1 - g(x)) )

i.e. the negation of the summed log-probability score; minimizing it and
maximizing the raw sum are the same thing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import CorpusError, Instance, LabeledCorpus, SeedSet, sample_negative_batch
from .encoder import RepCache
from .optim import Adam, sigmoid, sigmoid_grad_mask


@dataclass
class FinetuneConfig:
    """Hyperparameters of the (w, b) fine-tune loop.

    Defaults follow the grid-searched values: 50 epochs, batch size 10,
    learning rate 0.05, negative-loss coefficient 0.2.
    """

    epochs: int = 50
    batch_size: int = 10
    learning_rate: float = 0.05
    neg_coef: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.neg_coef < 0:
            raise ValueError("neg_coef must be non-negative")


@dataclass
class PretrainConfig:
    """Hyperparameters for N-way encoder pre-training."""

    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0


class ClassifierHead:
    """The per-relation linear layer (w, b)."""

    def __init__(self, w: np.ndarray, b):
        self.w = np.asarray(w, dtype=np.float64)
        self.b = np.asarray(float(b), dtype=np.float64)

    @classmethod
    def zeros(cls, dim: int) -> "ClassifierHead":
        # Deterministic zero init; for a logistic head this loses nothing.
        return cls(np.zeros(dim), 0.0)

    @classmethod
    def random(cls, dim: int, seed: int = 0, scale: float = 0.1) -> "ClassifierHead":
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(-scale, scale, size=dim), 0.0)

    @property
    def dim(self) -> int:
        return len(self.w)

    def copy(self) -> "ClassifierHead":
        return ClassifierHead(self.w.copy(), self.b.copy())

    def params_dict(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}


def predict_rep(head: ClassifierHead, rep: np.ndarray) -> float:
    """Scalar canonical prediction path; batch consumers loop over this so
    per-instance recomputation is bit-identical."""
    if rep.shape != head.w.shape:
        raise ValueError(f"representation dim {rep.shape} != head dim {head.w.shape}")
    return sigmoid(float(np.dot(head.w, rep) + head.b))


def predict(head: ClassifierHead, encoder, x: Instance) -> float:
    """Probability in (0, 1) that x expresses the head's relation."""
    return predict_rep(head, encoder.encode(x))


def finetune_loss_and_grads(
    w: np.ndarray,
    b,
    pos_reps: np.ndarray,
    neg_reps: np.ndarray,
    neg_coef: float,
):
    """One batch of the fine-tune objective: (loss, d_w, d_b).

    Loss is the summed NLL over the positive batch plus neg_coef times the
    summed NLL over the negative batch.
    """
    b = float(b)
    loss = 0.0
    d_w = np.zeros_like(w)
    d_b = 0.0
    for rep in pos_reps:
        z = float(np.dot(w, rep) + b)
        g = sigmoid(z)
        loss -= np.log(g)
        dz = (g - 1.0) * sigmoid_grad_mask(z)
        d_w += dz * rep
        d_b += dz
    for rep in neg_reps:
        z = float(np.dot(w, rep) + b)
        g = sigmoid(z)
        loss -= neg_coef * np.log(1.0 - g)
        dz = neg_coef * g * sigmoid_grad_mask(z)
        d_w += dz * rep
        d_b += dz
    return float(loss), d_w, np.asarray(d_b)


def finetune(
    head: ClassifierHead,
    encoder,
    seeds: SeedSet,
    negatives: LabeledCorpus,
    cfg: FinetuneConfig | None = None,
    cache: RepCache | None = None,
) -> tuple[ClassifierHead, list[float]]:
    """Adapt (w, b) to the seed relation with negative sampling.

    Each epoch shuffles the selected set, splits it into consecutive
    minibatches, and pairs every positive batch with a fresh uniform negative
    batch of `cfg.batch_size` drawn from the old-relation corpus. The encoder
    is never touched. Returns a new head (the input head is the warm start)
    plus the mean batch loss per epoch.
    """
    cfg = cfg or FinetuneConfig()
    if len(negatives) == 0:
        raise CorpusError("negative-sampling corpus is empty")
    cache = cache or RepCache(encoder)
    pos_all = cache.matrix(seeds.instances)
    if pos_all.shape[1] != head.dim:
        raise ValueError("encoder dim does not match classifier head dim")

    head = head.copy()
    adam = Adam(head.params_dict(), lr=cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    epoch_losses: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(seeds.instances))
        batch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            pos = pos_all[order[start : start + cfg.batch_size]]
            neg = cache.matrix(sample_negative_batch(negatives, cfg.batch_size, rng))
            loss, d_w, d_b = finetune_loss_and_grads(
                head.w, head.b, pos, neg, cfg.neg_coef
            )
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite fine-tune loss ({loss})")
            adam.step({"w": d_w, "b": d_b})
            batch_losses.append(loss)
        epoch_losses.append(float(np.mean(batch_losses)))
    return head, epoch_losses


def _log_softmax_nll(logits: np.ndarray, label: int):
    """(loss, d_logits) for one instance of softmax cross-entropy."""
    m = logits.max()
    lse = m + np.log(np.exp(logits - m).sum())
    loss = lse - logits[label]
    p = np.exp(logits - lse)
    p[label] -= 1.0
    return float(loss), p


def nway_stream_loss(encoder, W: np.ndarray, c: np.ndarray,
                     instances: Sequence[Instance], labels: dict[str, int]) -> float:
    total = 0.0
    for x in instances:
        logits = W @ encoder.encode(x) + c
        loss, _ = _log_softmax_nll(logits, labels[x.id])
        total += loss
    return total / len(instances)


def train_nway_layer(
    encoder,
    corpus: LabeledCorpus,
    cfg: PretrainConfig | None = None,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Joint encoder + softmax-layer training; returns (W, c, losses).

    `pretrain_encoder` is the public entry point and throws the layer away;
    this lower-level variant keeps it so held-out N-way accuracy can be
    measured.
    """
    cfg = cfg or PretrainConfig()
    rels = sorted(corpus.relations)
    if len(rels) < 2:
        raise CorpusError("N-way pre-training needs at least 2 relations")
    if not getattr(encoder, "trainable", False):
        raise ValueError("pretrain_encoder requires a trainable encoder")

    rng = np.random.default_rng(cfg.seed)
    rel_index = {r: i for i, r in enumerate(rels)}
    labels = {x.id: rel_index[x.relation] for x in corpus.instances}
    W = rng.uniform(-0.1, 0.1, size=(len(rels), encoder.dim))
    c = np.zeros(len(rels))

    params = {f"enc.{k}": v for k, v in encoder.params_dict().items()}
    params["softmax_w"] = W
    params["softmax_b"] = c
    adam = Adam(params, lr=cfg.learning_rate)

    instances = corpus.instances
    losses = [nway_stream_loss(encoder, W, c, instances, labels)]
    for _ in range(cfg.epochs):
        order = rng.permutation(len(instances))
        for start in range(0, len(order), cfg.batch_size):
            batch = [instances[i] for i in order[start : start + cfg.batch_size]]
            grads = {k: np.zeros_like(v) for k, v in params.items()}
            scale = 1.0 / len(batch)
            for x in batch:
                rep, fwd_cache = encoder.forward(x)
                logits = W @ rep + c
                loss, d_logits = _log_softmax_nll(logits, labels[x.id])
                if not np.isfinite(loss):
                    raise FloatingPointError(f"non-finite pre-training loss on {x.id!r}")
                grads["softmax_w"] += scale * np.outer(d_logits, rep)
                grads["softmax_b"] += scale * d_logits
                d_rep = scale * (W.T @ d_logits)
                for name, g in encoder.backward(fwd_cache, d_rep).items():
                    grads[f"enc.{name}"] += g
            adam.step(grads)
        losses.append(nway_stream_loss(encoder, W, c, instances, labels))
    return W, c, losses


def pretrain_encoder(
    encoder,
    corpus: LabeledCorpus,
    cfg: PretrainConfig | None = None,
) -> tuple[object, list[float]]:
    """Supervised N-way pre-training of the encoder on the labeled corpus.

    The softmax layer over the corpus relations is trained jointly and then
    discarded; only the encoder survives. Returns the encoder (updated in
    place) and the stream loss at init and after each epoch.
    """
    _, _, losses = train_nway_layer(encoder, corpus, cfg)
    return encoder, losses


def nway_accuracy(encoder, W: np.ndarray, c: np.ndarray, corpus: LabeledCorpus,
                  relations: Sequence[str] | None = None) -> float:
    """Argmax accuracy of the encoder + softmax layer on a labeled corpus.

    `relations` must list the training relations in the order the layer was
    trained with (sorted order); defaults to the corpus's own sorted set.
    """
    rels = sorted(relations if relations is not None else corpus.relations)
    rel_index = {r: i for i, r in enumerate(rels)}
    hits = 0
    for x in corpus.instances:
        logits = W @ encoder.encode(x) + c
        hits += int(np.argmax(logits) == rel_index[x.relation])
    return hits / len(corpus.instances)
