"""Instance -> vector encoders.

Two implementations behind one duck-typed interface (`encode(x)`, `dim`,
`trainable`):

* ConvEncoder — trainable 1-D convolutional encoder over word + position
  embeddings, with hand-written backward pass (no autograd anywhere).
* EmbeddingStore — read-only lookup of precomputed vectors, the import path
  for representations produced by external contextual encoders.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Instance
from .optim import zero_grads_like

UNK_TOKEN = "<unk>"


class EmbeddingStoreError(ValueError):
    """Missing id, dimension mismatch or malformed store file."""


def build_vocab(*instance_groups: Iterable[Instance]) -> list[str]:
    """Sorted unique tokens over all given corpora (deterministic order)."""
    tokens: set[str] = set()
    for group in instance_groups:
        for x in group:
            tokens.update(x.tokens)
    return sorted(tokens)


# ---------------------------------------------------------------------------
# Trainable convolutional encoder


class ConvEncoder:
    """1-D conv encoder: word + two position embeddings per token, a width-
    `window` convolution with tanh, then max-pool over token positions.

    Position features are relative offsets to the head/tail span starts,
    clipped to +-max_len. Sentences are truncated at max_len tokens; the
    convolution zero-pads its input so there is one output position per
    token. Max-pool ties break toward the lowest position index, which is
    also where the backward pass routes the gradient.
    """

    trainable = True

    def __init__(self, vocab: dict[str, int], word_emb: np.ndarray,
                 pos_emb_head: np.ndarray, pos_emb_tail: np.ndarray,
                 conv_filters: np.ndarray, conv_bias: np.ndarray, max_len: int):
        self.vocab = vocab
        self.word_emb = np.asarray(word_emb, dtype=np.float64)
        self.pos_emb_head = np.asarray(pos_emb_head, dtype=np.float64)
        self.pos_emb_tail = np.asarray(pos_emb_tail, dtype=np.float64)
        self.conv_filters = np.asarray(conv_filters, dtype=np.float64)
        self.conv_bias = np.asarray(conv_bias, dtype=np.float64)
        self.max_len = int(max_len)
        self._check_shapes()

    def _check_shapes(self):
        n_filters, window, feat = self.conv_filters.shape
        d_w = self.word_emb.shape[1]
        d_p = self.pos_emb_head.shape[1]
        if self.pos_emb_tail.shape != self.pos_emb_head.shape:
            raise ValueError("head/tail position embedding shapes differ")
        if self.pos_emb_head.shape[0] != 2 * self.max_len + 1:
            raise ValueError("position table must have 2*max_len+1 rows")
        if feat != d_w + 2 * d_p:
            raise ValueError(
                f"filter feature dim {feat} != d_w + 2*d_p = {d_w + 2 * d_p}"
            )
        if self.conv_bias.shape != (n_filters,):
            raise ValueError("conv_bias shape mismatch")
        if UNK_TOKEN not in self.vocab:
            raise ValueError(f"vocab must reserve {UNK_TOKEN!r}")

    @classmethod
    def init_random(cls, tokens: Sequence[str], d_w: int = 50, d_p: int = 5,
                    window: int = 3, n_filters: int = 230, max_len: int = 120,
                    seed: int = 0,
                    word_vectors: dict[str, np.ndarray] | None = None
                    ) -> "ConvEncoder":
        """Fresh encoder with uniform(-0.1, 0.1) parameters; rows of tokens
        present in `word_vectors` are overwritten with the imported vectors."""
        rng = np.random.default_rng(seed)
        vocab = {UNK_TOKEN: 0}
        for t in tokens:
            if t not in vocab:
                vocab[t] = len(vocab)
        word_emb = rng.uniform(-0.1, 0.1, size=(len(vocab), d_w))
        if word_vectors:
            for t, row in vocab.items():
                vec = word_vectors.get(t)
                if vec is None:
                    continue
                if len(vec) != d_w:
                    raise ValueError(
                        f"imported vector for {t!r} has dim {len(vec)}, expected {d_w}"
                    )
                word_emb[row] = vec
        pos_rows = 2 * max_len + 1
        return cls(
            vocab=vocab,
            word_emb=word_emb,
            pos_emb_head=rng.uniform(-0.1, 0.1, size=(pos_rows, d_p)),
            pos_emb_tail=rng.uniform(-0.1, 0.1, size=(pos_rows, d_p)),
            conv_filters=rng.uniform(-0.1, 0.1, size=(n_filters, window, d_w + 2 * d_p)),
            conv_bias=np.zeros(n_filters),
            max_len=max_len,
        )

    # -- interface ----------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.conv_filters.shape[0]

    @property
    def window(self) -> int:
        return self.conv_filters.shape[1]

    def params_dict(self) -> dict[str, np.ndarray]:
        return {
            "word_emb": self.word_emb,
            "pos_emb_head": self.pos_emb_head,
            "pos_emb_tail": self.pos_emb_tail,
            "conv_filters": self.conv_filters,
            "conv_bias": self.conv_bias,
        }

    def copy(self) -> "ConvEncoder":
        return ConvEncoder(
            vocab=dict(self.vocab),
            word_emb=self.word_emb.copy(),
            pos_emb_head=self.pos_emb_head.copy(),
            pos_emb_tail=self.pos_emb_tail.copy(),
            conv_filters=self.conv_filters.copy(),
            conv_bias=self.conv_bias.copy(),
            max_len=self.max_len,
        )

    # -- forward / backward -------------------------------------------------

    def _token_features(self, x: Instance):
        unk = self.vocab[UNK_TOKEN]
        toks = x.tokens[: self.max_len]
        ids = np.array([self.vocab.get(t, unk) for t in toks], dtype=np.intp)
        pos = np.arange(len(toks))
        off_h = np.clip(pos - x.head.start, -self.max_len, self.max_len) + self.max_len
        off_t = np.clip(pos - x.tail.start, -self.max_len, self.max_len) + self.max_len
        return ids, off_h, off_t

    def forward(self, x: Instance):
        """Returns (representation [dim], cache for backward)."""
        ids, off_h, off_t = self._token_features(x)
        length = len(ids)
        feats = np.concatenate(
            [self.word_emb[ids], self.pos_emb_head[off_h], self.pos_emb_tail[off_t]],
            axis=1,
        )
        feat_dim = feats.shape[1]
        window = self.window
        pad_left = (window - 1) // 2
        padded = np.zeros((length + window - 1, feat_dim))
        padded[pad_left : pad_left + length] = feats
        # windows[p] = padded[p : p+window] flattened -> [length, window*feat_dim]
        win_idx = np.arange(length)[:, None] + np.arange(window)[None, :]
        windows = padded[win_idx].reshape(length, window * feat_dim)
        z = windows @ self.conv_filters.reshape(self.dim, -1).T + self.conv_bias
        h = np.tanh(z)
        argmax = h.argmax(axis=0)  # first occurrence on ties: lowest index
        rep = h[argmax, np.arange(self.dim)]
        cache = (ids, off_h, off_t, windows, h, argmax, pad_left, length, feat_dim)
        return rep, cache

    def encode(self, x: Instance) -> np.ndarray:
        return self.forward(x)[0]

    def encode_many(self, instances: Sequence[Instance]) -> np.ndarray:
        return np.stack([self.encode(x) for x in instances]) if instances else \
            np.zeros((0, self.dim))

    def backward(self, cache, upstream: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of upstream . encode(x) w.r.t. every parameter array.

        Gradient flows only through the recorded max-pool argmax positions.
        """
        ids, off_h, off_t, windows, h, argmax, pad_left, length, feat_dim = cache
        upstream = np.asarray(upstream, dtype=np.float64)
        if upstream.shape != (self.dim,):
            raise ValueError(
                f"upstream gradient shape {upstream.shape} != ({self.dim},)"
            )
        grads = zero_grads_like(self.params_dict())
        pooled = h[argmax, np.arange(self.dim)]
        g_pre = upstream * (1.0 - pooled * pooled)  # through tanh at the argmax

        grads["conv_bias"] += g_pre
        flat_filters = self.conv_filters.reshape(self.dim, -1)
        grads["conv_filters"] += (g_pre[:, None] * windows[argmax]).reshape(
            self.conv_filters.shape
        )

        d_windows = np.zeros_like(windows)
        np.add.at(d_windows, argmax, g_pre[:, None] * flat_filters)
        window = self.window
        d_padded = np.zeros((length + window - 1, feat_dim))
        d_win3 = d_windows.reshape(length, window, feat_dim)
        for w in range(window):
            d_padded[w : w + length] += d_win3[:, w, :]
        d_feats = d_padded[pad_left : pad_left + length]

        d_w = self.word_emb.shape[1]
        d_p = self.pos_emb_head.shape[1]
        np.add.at(grads["word_emb"], ids, d_feats[:, :d_w])
        np.add.at(grads["pos_emb_head"], off_h, d_feats[:, d_w : d_w + d_p])
        np.add.at(grads["pos_emb_tail"], off_t, d_feats[:, d_w + d_p :])
        return grads

    def encode_backward(self, x: Instance, upstream: np.ndarray) -> dict[str, np.ndarray]:
        _, cache = self.forward(x)
        return self.backward(cache, upstream)


# ---------------------------------------------------------------------------
# Precomputed-representation store


@dataclass
class EmbeddingStore:
    """Instance-id -> fixed-dimension vector, used as a frozen encoder."""

    dim: int
    table: dict[str, np.ndarray]
    trainable = False

    def __post_init__(self):
        for key, vec in self.table.items():
            vec = np.asarray(vec, dtype=np.float32)
            if vec.shape != (self.dim,):
                raise EmbeddingStoreError(
                    f"vector for {key!r} has shape {vec.shape}, expected ({self.dim},)"
                )
            self.table[key] = vec

    def __len__(self) -> int:
        return len(self.table)

    def vector(self, instance_id: str) -> np.ndarray:
        try:
            return self.table[instance_id]
        except KeyError:
            raise EmbeddingStoreError(
                f"no stored vector for instance id {instance_id!r}"
            ) from None

    def encode(self, x: Instance) -> np.ndarray:
        return np.asarray(self.vector(x.id), dtype=np.float64)

    def encode_many(self, instances: Sequence[Instance]) -> np.ndarray:
        return np.stack([self.encode(x) for x in instances]) if instances else \
            np.zeros((0, self.dim))


class RepCache:
    """Id-keyed memo of encoder outputs.

    Sound only while the encoder is frozen; every consumer in the bootstrap
    loop (where encoders never train) routes reads through one of these.
    """

    def __init__(self, encoder):
        self.encoder = encoder
        self._reps: dict[str, np.ndarray] = {}

    def get(self, x: Instance) -> np.ndarray:
        rep = self._reps.get(x.id)
        if rep is None:
            rep = self.encoder.encode(x)
            self._reps[x.id] = rep
        return rep

    def matrix(self, instances: Sequence[Instance]) -> np.ndarray:
        if not instances:
            return np.zeros((0, self.encoder.dim))
        return np.stack([self.get(x) for x in instances])


STORE_MAGIC = b"NSEMB1"


def save_embedding_store(store: EmbeddingStore, path: str | Path) -> None:
    """Write the binary store format: magic, u32 count, u32 dim (LE), then
    per record a u16 id length, UTF-8 id bytes and dim float32 LE values."""
    with open(path, "wb") as fh:
        fh.write(STORE_MAGIC)
        fh.write(struct.pack("<II", len(store.table), store.dim))
        for key in store.table:  # insertion order: deterministic round-trip
            raw = key.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise EmbeddingStoreError(f"instance id too long: {key[:32]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(store.table[key].astype("<f4").tobytes())


def load_embedding_store(path: str | Path) -> EmbeddingStore:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(STORE_MAGIC)] != STORE_MAGIC:
        raise EmbeddingStoreError(f"{path}: bad magic, not an embedding store")
    offset = len(STORE_MAGIC)
    count, dim = struct.unpack_from("<II", data, offset)
    offset += 8
    table: dict[str, np.ndarray] = {}
    vec_bytes = 4 * dim
    for i in range(count):
        if offset + 2 > len(data):
            raise EmbeddingStoreError(f"{path}: truncated at record {i}")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + vec_bytes > len(data):
            raise EmbeddingStoreError(f"{path}: truncated at record {i}")
        key = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
        if key in table:
            raise EmbeddingStoreError(f"{path}: duplicate id {key!r}")
        table[key] = vec
    if offset != len(data):
        raise EmbeddingStoreError(f"{path}: {len(data) - offset} trailing bytes")
    return EmbeddingStore(dim=dim, table=table)


def load_word_vectors(path: str | Path) -> dict[str, np.ndarray]:
    """Read whitespace-separated text vectors; the first token is the word."""
    out: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split()
            if len(parts) < 2:
                continue
            out[parts[0]] = np.array([float(v) for v in parts[1:]], dtype=np.float64)
    return out
