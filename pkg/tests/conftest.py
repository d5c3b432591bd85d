"""Shared fixtures: tiny instances, store-backed encoders, small conv nets."""

import numpy as np
import pytest

from snowball_re import ConvEncoder, EmbeddingStore, Instance, Span


def inst(xid, pair=("H0", "T0"), relation=None, tokens=None):
    """Minimal instance; tokens only matter for conv-encoder tests."""
    tokens = tuple(tokens) if tokens else ("t0", "t1", "t2")
    return Instance(
        id=xid,
        tokens=tokens,
        head=Span(0, 1, pair[0]),
        tail=Span(len(tokens) - 1, len(tokens), pair[1]),
        relation=relation,
    )


def store_encoder(reps: dict[str, list | np.ndarray]) -> EmbeddingStore:
    dim = len(next(iter(reps.values())))
    return EmbeddingStore(
        dim=dim, table={k: np.asarray(v, dtype=np.float32) for k, v in reps.items()}
    )


@pytest.fixture
def small_conv():
    tokens = [f"tok{i}" for i in range(20)]
    return ConvEncoder.init_random(
        tokens, d_w=5, d_p=2, window=3, n_filters=4, max_len=8, seed=7
    )
