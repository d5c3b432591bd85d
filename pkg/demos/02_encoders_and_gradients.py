"""Encoders: the trainable conv encoder (with its hand-written backward
pass checked against finite differences) and the embedding-store lookup.

Run: python demos/02_encoders_and_gradients.py
"""

import tempfile
from pathlib import Path

import numpy as np

from snowball_re import (
    ConvEncoder,
    EmbeddingStore,
    Instance,
    Span,
    load_embedding_store,
    save_embedding_store,
)

enc = ConvEncoder.init_random(
    ["the", "painter", "founded", "a", "school", "in", "paris"],
    d_w=8, d_p=3, window=3, n_filters=6, max_len=12, seed=1,
)
x = Instance(
    id="s1",
    tokens=("the", "painter", "founded", "a", "school"),
    head=Span(1, 2, "Q1"),
    tail=Span(4, 5, "Q2"),
)
rep = enc.encode(x)
print("conv representation:", np.round(rep, 4))

# The backward pass is exact: compare one parameter's analytic gradient
# with a central finite difference.
upstream = np.ones(enc.dim)
grads = enc.encode_backward(x, upstream)
row = enc.vocab["painter"]
eps = 1e-6
enc.word_emb[row, 0] += eps
up = float(upstream @ enc.encode(x))
enc.word_emb[row, 0] -= 2 * eps
down = float(upstream @ enc.encode(x))
enc.word_emb[row, 0] += eps
fd = (up - down) / (2 * eps)
print(f"d(loss)/d word_emb['painter'][0]: analytic {grads['word_emb'][row, 0]:.8f}"
      f" vs finite-difference {fd:.8f}")

# Gradient only flows through max-pool argmax positions: tokens that never
# win the pool for any filter receive no gradient.
touched = [tok for tok, r in enc.vocab.items() if np.any(grads["word_emb"][r] != 0)]
print("tokens receiving gradient:", sorted(touched))

# The lookup encoder serves representations computed elsewhere (for
# example by the embed-export tool in frontend/).
store = EmbeddingStore(dim=3, table={
    "s1": np.array([0.1, -0.4, 0.8], dtype=np.float32),
    "s2": np.array([0.0, 0.2, -0.1], dtype=np.float32),
})
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "store.nsemb"
    save_embedding_store(store, path)
    loaded = load_embedding_store(path)
    print(f"\nstore round-trip: {len(loaded)} vectors, dim {loaded.dim}")
    print("lookup s1 ->", loaded.encode(x))
