"""Checkpoint persistence.

A checkpoint is a directory with two files:

* ``manifest.json`` — everything needed to rebuild the model object:
  architecture tag, aligner tag, variant, layer sizes, the character and
  feature inventories, and bookkeeping (dev accuracy, seed).
* ``params.bin`` — the parameter tensors, in a self-describing binary
  format:

  ========  =====================================================
  bytes     content
  ========  =====================================================
  0..7      magic ``HMPARAMS``
  8..11     format version, uint32 little-endian (currently 1)
  12..19    header length L, uint64 little-endian
  20..20+L  header: UTF-8 JSON ``{"entries": [{"name", "shape"}...]}``
  rest      payload: each entry's float64 values, little-endian,
            C order, concatenated in header order
  ========  =====================================================

Both files are written atomically (temp file + rename).
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from hardmono.corpus import CharVocabulary, FeatureAlphabet
from hardmono.hacm import HacmModel, ModelConfig
from hardmono.haem import HaemModel
from hardmono.oracle import HACM, HAEM

MAGIC = b"HMPARAMS"
FORMAT_VERSION = 1

MANIFEST_NAME = "manifest.json"
PARAMS_NAME = "params.bin"


class CheckpointError(ValueError):
    """Unreadable or inconsistent checkpoint contents."""


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_params(path: str | Path, state: dict[str, np.ndarray]) -> None:
    path = Path(path)
    entries = [{"name": name, "shape": list(np.asarray(v).shape)} for name, v in state.items()]
    header = json.dumps({"entries": entries}).encode("utf-8")
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", FORMAT_VERSION)
    blob += struct.pack("<Q", len(header))
    blob += header
    for value in state.values():
        blob += np.ascontiguousarray(value, dtype="<f8").tobytes()
    _atomic_write(path, bytes(blob))


def load_params(path: str | Path) -> dict[str, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a parameter file (bad magic)")
    (version,) = struct.unpack_from("<I", raw, 8)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    (header_len,) = struct.unpack_from("<Q", raw, 12)
    header = json.loads(raw[20:20 + header_len].decode("utf-8"))
    state: dict[str, np.ndarray] = {}
    offset = 20 + header_len
    for entry in header["entries"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(raw):
            raise CheckpointError(f"{path}: truncated payload at {entry['name']!r}")
        state[entry["name"]] = np.frombuffer(raw, dtype="<f8", count=count,
                                             offset=offset).reshape(shape).copy()
        offset = end
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    return state


def build_manifest(model: HacmModel | HaemModel, aligner: str,
                   dev_accuracy: float | None = None, seed: int | None = None) -> dict:
    cfg = model.config
    return {
        "format": FORMAT_VERSION,
        "arch": model.arch,
        "aligner": aligner,
        "variant": cfg.variant,
        "hidden": cfg.hidden,
        "embed": cfg.embed,
        "feat_embed": cfg.feat_embed,
        "dropout": cfg.dropout,
        "chars": list(model.vocab.chars),
        "features": list(model.feats.features),
        "dev_accuracy": dev_accuracy,
        "seed": seed,
    }


def build_model(manifest: dict) -> HacmModel | HaemModel:
    """Model object matching a manifest, with freshly initialized weights
    (callers load the parameter file on top)."""
    config = ModelConfig(hidden=manifest["hidden"], embed=manifest["embed"],
                         feat_embed=manifest["feat_embed"], variant=manifest["variant"],
                         dropout=manifest["dropout"])
    vocab = CharVocabulary(tuple(manifest["chars"]))
    feats = FeatureAlphabet(tuple(manifest["features"]))
    arch = manifest["arch"]
    if arch == HACM:
        return HacmModel(vocab, feats, config, np.random.default_rng(0))
    if arch == HAEM:
        return HaemModel(vocab, feats, config, np.random.default_rng(0))
    raise CheckpointError(f"unknown architecture tag {arch!r}")


def save_checkpoint(directory: str | Path, model: HacmModel | HaemModel, aligner: str,
                    dev_accuracy: float | None = None, seed: int | None = None) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = build_manifest(model, aligner, dev_accuracy, seed)
    _atomic_write(directory / MANIFEST_NAME,
                  json.dumps(manifest, indent=2, ensure_ascii=False).encode("utf-8"))
    save_params(directory / PARAMS_NAME, model.params.state_dict())


def load_checkpoint(directory: str | Path) -> tuple[HacmModel | HaemModel, dict]:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise CheckpointError(f"{directory}: no {MANIFEST_NAME}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    model = build_model(manifest)
    try:
        model.params.load_state_dict(load_params(directory / PARAMS_NAME))
    except ValueError as e:
        raise CheckpointError(f"{directory}: {e}") from None
    return model, manifest
