"""Deterministic binary checkpoints.

Layout: magic "NSCKPT", u16 format version, u32 header length, UTF-8 JSON
header, then the raw little-endian C-order bytes of each array in header
order. No timestamps or compression, so identical models produce identical
bytes.

The header is {"kind": ..., "meta": {...}, "arrays": [{"name", "dtype",
"shape"}]}. On top of the raw blob sit typed savers/loaders for the three
model artifacts: trainable encoders, siamese models and classifier heads.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .classifier import ClassifierHead
from .encoder import ConvEncoder
from .rsn import RsnModel

MAGIC = b"NSCKPT"
VERSION = 1


class CheckpointError(ValueError):
    """Unreadable or mismatched checkpoint file."""


def save_blob(path: str | Path, kind: str, meta: dict,
              arrays: dict[str, np.ndarray]) -> None:
    names = sorted(arrays)
    header = {
        "kind": kind,
        "meta": meta,
        "arrays": [
            {"name": n, "dtype": "<f8", "shape": list(arrays[n].shape)} for n in names
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(VERSION.to_bytes(2, "little"))
        fh.write(len(header_bytes).to_bytes(4, "little"))
        fh.write(header_bytes)
        for n in names:
            fh.write(np.ascontiguousarray(arrays[n], dtype="<f8").tobytes())


def load_blob(path: str | Path) -> tuple[str, dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version = int.from_bytes(data[6:8], "little")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    header_len = int.from_bytes(data[8:12], "little")
    header = json.loads(data[12 : 12 + header_len].decode())
    offset = 12 + header_len
    arrays: dict[str, np.ndarray] = {}
    for spec in header["arrays"]:
        n_items = int(np.prod(spec["shape"])) if spec["shape"] else 1
        n_bytes = 8 * n_items
        if offset + n_bytes > len(data):
            raise CheckpointError(f"{path}: truncated array {spec['name']!r}")
        arr = np.frombuffer(data, dtype="<f8", count=n_items, offset=offset)
        arrays[spec["name"]] = arr.reshape(spec["shape"]).astype(np.float64)
        offset += n_bytes
    if offset != len(data):
        raise CheckpointError(f"{path}: {len(data) - offset} trailing bytes")
    return header["kind"], header["meta"], arrays


# ---------------------------------------------------------------------------
# Typed model artifacts


def _encoder_payload(enc: ConvEncoder) -> tuple[dict, dict[str, np.ndarray]]:
    tokens = [None] * len(enc.vocab)
    for tok, row in enc.vocab.items():
        tokens[row] = tok
    meta = {"vocab": tokens, "max_len": enc.max_len}
    return meta, dict(enc.params_dict())


def _encoder_from_payload(meta: dict, arrays: dict[str, np.ndarray],
                          prefix: str = "") -> ConvEncoder:
    return ConvEncoder(
        vocab={tok: i for i, tok in enumerate(meta["vocab"])},
        word_emb=arrays[prefix + "word_emb"].copy(),
        pos_emb_head=arrays[prefix + "pos_emb_head"].copy(),
        pos_emb_tail=arrays[prefix + "pos_emb_tail"].copy(),
        conv_filters=arrays[prefix + "conv_filters"].copy(),
        conv_bias=arrays[prefix + "conv_bias"].copy(),
        max_len=meta["max_len"],
    )


def save_encoder(enc: ConvEncoder, path: str | Path, manifest: dict | None = None) -> None:
    meta, arrays = _encoder_payload(enc)
    if manifest:
        meta["manifest"] = manifest
    save_blob(path, "conv_encoder", meta, arrays)


def load_encoder(path: str | Path) -> ConvEncoder:
    kind, meta, arrays = load_blob(path)
    if kind != "conv_encoder":
        raise CheckpointError(f"{path}: expected a conv_encoder checkpoint, got {kind!r}")
    return _encoder_from_payload(meta, arrays)


def save_rsn(model: RsnModel, path: str | Path, manifest: dict | None = None) -> None:
    """Siamese checkpoint: distance head plus, when the encoder is the
    built-in trainable one, the full encoder. Store-backed models persist the
    head only and are rewired to a store at load time."""
    arrays = {"w_s": model.w_s, "b_s": model.b_s}
    if isinstance(model.encoder, ConvEncoder):
        meta, enc_arrays = _encoder_payload(model.encoder)
        meta["encoder"] = "conv"
        arrays.update({f"enc_{k}": v for k, v in enc_arrays.items()})
    else:
        meta = {"encoder": "store", "dim": model.encoder.dim}
    if manifest:
        meta["manifest"] = manifest
    save_blob(path, "rsn", meta, arrays)


def load_rsn(path: str | Path, store=None) -> RsnModel:
    kind, meta, arrays = load_blob(path)
    if kind != "rsn":
        raise CheckpointError(f"{path}: expected an rsn checkpoint, got {kind!r}")
    if meta["encoder"] == "conv":
        encoder = _encoder_from_payload(meta, arrays, prefix="enc_")
    else:
        if store is None:
            raise CheckpointError(
                f"{path}: checkpoint needs an embedding store (dim {meta['dim']})"
            )
        if store.dim != meta["dim"]:
            raise CheckpointError(
                f"{path}: store dim {store.dim} != checkpoint dim {meta['dim']}"
            )
        encoder = store
    return RsnModel(encoder, w_s=arrays["w_s"].copy(), b_s=float(arrays["b_s"]))


def save_head(head: ClassifierHead, path: str | Path, manifest: dict | None = None) -> None:
    meta = {"manifest": manifest} if manifest else {}
    save_blob(path, "classifier_head", meta, {"w": head.w, "b": head.b})


def load_head(path: str | Path) -> ClassifierHead:
    kind, _, arrays = load_blob(path)
    if kind != "classifier_head":
        raise CheckpointError(f"{path}: expected a classifier_head checkpoint, got {kind!r}")
    return ClassifierHead(arrays["w"].copy(), float(arrays["b"]))
