"""Toy post-LN transformer encoder shared by an MLM head and per-task
classification heads, plus a versioned binary checkpoint format.

Parameter count for vocabulary V, width d, feed-forward width f, length T,
L layers and task heads with K_t classes::

    V*d + T*d + 2*d                         embeddings + embedding layer norm
  + L * (4*d*d + 4*d + 2*d*f + f + d + 4*d) attention, feed-forward, two layer norms
  + V                                       MLM output bias (projection tied to embeddings)
  + sum_t (d*K_t + K_t)                     task heads
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import numerics as nx
from .errors import CheckpointError, ConfigError, ContractError
from .numerics import Rng, Tensor


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    d_model: int = 32
    n_heads: int = 2
    n_layers: int = 2
    d_ff: int = 64
    max_len: int = 32
    dropout: float = 0.1

    def __post_init__(self):
        for name in ("vocab_size", "d_model", "n_heads", "n_layers", "d_ff", "max_len"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d_model % self.n_heads:
            raise ConfigError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if self.max_len < 2:
            raise ConfigError("max_len must be at least 2")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")


def parameter_count(config: EncoderConfig, head_sizes: Mapping[str, int]) -> int:
    V, d, f, T, L = config.vocab_size, config.d_model, config.d_ff, config.max_len, config.n_layers
    per_layer = 4 * d * d + 4 * d + 2 * d * f + f + d + 4 * d
    return V * d + T * d + 2 * d + L * per_layer + V + sum(d * k + k for k in head_sizes.values())


class ModelBundle:
    """Encoder parameters, tied MLM head and a map of task heads."""

    def __init__(self, config: EncoderConfig, heads: Mapping[str, Sequence[str]] | None = None, seed: int = 0):
        self.config = config
        self.seed = seed
        self.training = False
        self.head_labels: dict[str, tuple[str, ...]] = {}
        self.params: dict[str, Tensor] = {}
        rng = Rng(seed).split("init")
        d, f = config.d_model, config.d_ff

        def normal(name, shape):
            self.params[name] = Tensor(rng.split(name).normal(0.0, 0.02, shape), requires_grad=True, name=name)

        def const(name, shape, value):
            self.params[name] = Tensor(np.full(shape, value, dtype=np.float64), requires_grad=True, name=name)

        normal("embeddings.token", (config.vocab_size, d))
        normal("embeddings.position", (config.max_len, d))
        const("embeddings.ln.gain", (d,), 1.0)
        const("embeddings.ln.bias", (d,), 0.0)
        for i in range(config.n_layers):
            p = f"layers.{i}"
            for proj in ("q", "k", "v", "o"):
                normal(f"{p}.attn.{proj}.weight", (d, d))
                const(f"{p}.attn.{proj}.bias", (d,), 0.0)
            const(f"{p}.ln1.gain", (d,), 1.0)
            const(f"{p}.ln1.bias", (d,), 0.0)
            normal(f"{p}.ff.in.weight", (d, f))
            const(f"{p}.ff.in.bias", (f,), 0.0)
            normal(f"{p}.ff.out.weight", (f, d))
            const(f"{p}.ff.out.bias", (d,), 0.0)
            const(f"{p}.ln2.gain", (d,), 1.0)
            const(f"{p}.ln2.bias", (d,), 0.0)
        const("mlm.bias", (config.vocab_size,), 0.0)
        for task, labels in (heads or {}).items():
            self.add_head(task, labels)

    # -- heads -----------------------------------------------------------
    def add_head(self, task: str, labels: Sequence[str], seed: int | None = None) -> None:
        labels = tuple(labels)
        if not task or "." in task:
            raise ContractError(f"task name {task!r} must be non-empty and free of dots")
        if len(labels) < 2:
            raise ContractError(f"head {task!r} needs at least two labels")
        rng = Rng(self.seed if seed is None else seed).split("head").split(task)
        d = self.config.d_model
        self.head_labels[task] = labels
        self.params[f"heads.{task}.weight"] = Tensor(rng.normal(0.0, 0.02, (d, len(labels))),
                                                     requires_grad=True, name=f"heads.{task}.weight")
        self.params[f"heads.{task}.bias"] = Tensor(np.zeros(len(labels)), requires_grad=True,
                                                   name=f"heads.{task}.bias")

    def remove_head(self, task: str) -> None:
        del self.head_labels[task]
        del self.params[f"heads.{task}.weight"], self.params[f"heads.{task}.bias"]

    @property
    def tasks(self) -> list[str]:
        return list(self.head_labels)

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.params.values())

    # -- forward -----------------------------------------------------------
    def encode(self, ids, attention_mask, rng: Rng | None = None) -> Tensor:
        """Hidden states ``[batch, length, d_model]``.

        PAD keys get a score of -inf before the attention softmax.  Dropout is
        applied only when ``self.training`` is set and ``rng`` is given.
        """
        cfg = self.config
        ids = np.asarray(ids, dtype=np.int64)
        mask = np.asarray(attention_mask, dtype=np.int64)
        if ids.ndim != 2 or ids.shape != mask.shape:
            raise ContractError(f"ids {ids.shape} and mask {mask.shape} must be matching 2-d arrays")
        if ids.shape[1] > cfg.max_len:
            raise ContractError(f"sequence length {ids.shape[1]} exceeds max_len {cfg.max_len}")
        if ids.size and (ids.min() < 0 or ids.max() >= cfg.vocab_size):
            raise ContractError(f"token ids outside [0, {cfg.vocab_size})")
        P = self.params
        B, T = ids.shape
        H, dh = cfg.n_heads, cfg.d_model // cfg.n_heads
        train = self.training and rng is not None and cfg.dropout > 0
        drop = (lambda x, label: nx.dropout(x, cfg.dropout, rng.split(label))) if train else (lambda x, label: x)

        x = nx.embedding_gather(P["embeddings.token"], ids) + P["embeddings.position"][:T]
        x = drop(nx.layer_norm(x, P["embeddings.ln.gain"], P["embeddings.ln.bias"]), "emb")
        pad_keys = (mask == 0)[:, None, None, :]
        scale = 1.0 / np.sqrt(dh)
        for i in range(cfg.n_layers):
            p = f"layers.{i}"

            def heads(name):
                y = x @ P[f"{p}.attn.{name}.weight"] + P[f"{p}.attn.{name}.bias"]
                return y.reshape(B, T, H, dh).transpose(0, 2, 1, 3)

            q, k, v = heads("q"), heads("k"), heads("v")
            scores = nx.masked_fill((q @ k.transpose(0, 1, 3, 2)) * scale, pad_keys, -np.inf)
            attn = drop(nx.softmax(scores, axis=-1), f"{p}.attn")
            ctx = (attn @ v).transpose(0, 2, 1, 3).reshape(B, T, cfg.d_model)
            out = drop(ctx @ P[f"{p}.attn.o.weight"] + P[f"{p}.attn.o.bias"], f"{p}.attn.out")
            x = nx.layer_norm(x + out, P[f"{p}.ln1.gain"], P[f"{p}.ln1.bias"])
            hidden = nx.gelu(x @ P[f"{p}.ff.in.weight"] + P[f"{p}.ff.in.bias"])
            ff = drop(hidden @ P[f"{p}.ff.out.weight"] + P[f"{p}.ff.out.bias"], f"{p}.ff")
            x = nx.layer_norm(x + ff, P[f"{p}.ln2.gain"], P[f"{p}.ln2.bias"])
        return x

    def mlm_logits(self, hidden: Tensor) -> Tensor:
        """Vocabulary logits via the transposed token-embedding matrix plus a bias."""
        return hidden @ self.params["embeddings.token"].transpose() + self.params["mlm.bias"]

    def head_logits(self, task: str, hidden: Tensor) -> Tensor:
        if task not in self.head_labels:
            raise KeyError(f"unknown task {task!r}; registered: {sorted(self.head_labels)}")
        cls_state = hidden[:, 0, :]
        return cls_state @ self.params[f"heads.{task}.weight"] + self.params[f"heads.{task}.bias"]

    def classify(self, task: str, ids, attention_mask, rng: Rng | None = None) -> Tensor:
        if task not in self.head_labels:
            raise KeyError(f"unknown task {task!r}; registered: {sorted(self.head_labels)}")
        return self.head_logits(task, self.encode(ids, attention_mask, rng))

    # -- state -----------------------------------------------------------
    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_state(self, state: Mapping[str, np.ndarray]) -> None:
        for name, value in state.items():
            if name not in self.params:
                raise CheckpointError(f"unexpected array {name!r}")
            if self.params[name].shape != value.shape:
                raise CheckpointError(f"array {name!r}: shape {value.shape}, model expects {self.params[name].shape}")
            self.params[name].data[...] = value

    def copy(self) -> "ModelBundle":
        other = ModelBundle.__new__(ModelBundle)
        other.config = self.config
        other.seed = self.seed
        other.training = False
        other.head_labels = dict(self.head_labels)
        other.params = {n: Tensor(p.data.copy(), requires_grad=True, name=n) for n, p in self.params.items()}
        return other

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None


# -- checkpoint archive --------------------------------------------------------
#
# Layout (all integers little-endian):
#   magic    8 bytes  b"MTLFCKPT"
#   version  u32
#   meta_len u32, then meta_len bytes of UTF-8 JSON (encoder config, head labels, extras)
#   count    u32
#   count records: name_len u16, name (UTF-8), dtype u8 (1 = float64), ndim u8,
#                  shape u32 * ndim, offset u64, nbytes u64, crc32 u32
#   data section: raw little-endian array bytes; offsets are relative to its start

MAGIC = b"MTLFCKPT"
VERSION = 1
_DTYPES = {1: np.dtype("<f8")}


def save_checkpoint(bundle: ModelBundle, path, extra: Mapping | None = None) -> None:
    meta = {"config": asdict(bundle.config), "heads": {t: list(l) for t, l in bundle.head_labels.items()},
            "seed": bundle.seed, "extra": dict(extra or {})}
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    header = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(meta_bytes)), meta_bytes,
              struct.pack("<I", len(bundle.params))]
    blobs, offset = [], 0
    for name in sorted(bundle.params):
        arr = np.ascontiguousarray(bundle.params[name].data, dtype="<f8")
        raw = arr.tobytes()
        name_b = name.encode("utf-8")
        header.append(struct.pack("<H", len(name_b)) + name_b + struct.pack("<BB", 1, arr.ndim)
                      + struct.pack(f"<{arr.ndim}I", *arr.shape)
                      + struct.pack("<QQI", offset, len(raw), zlib.crc32(raw)))
        blobs.append(raw)
        offset += len(raw)
    Path(path).write_bytes(b"".join(header) + b"".join(blobs))


def read_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Return ``(meta, arrays)`` after validating every record."""
    buf = Path(path).read_bytes()
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(buf):
            raise CheckpointError(f"{path}: truncated while reading {what}")
        chunk = buf[pos:pos + n]
        pos += n
        return chunk

    if take(8, "magic") != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint archive (bad magic)")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    (meta_len,) = struct.unpack("<I", take(4, "meta length"))
    try:
        meta = json.loads(take(meta_len, "metadata").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt metadata ({e})") from None
    (count,) = struct.unpack("<I", take(4, "array count"))
    records = []
    for i in range(count):
        (name_len,) = struct.unpack("<H", take(2, f"record {i}"))
        name = take(name_len, f"record {i} name").decode("utf-8", errors="replace")
        dtype_code, ndim = struct.unpack("<BB", take(2, f"array {name!r} header"))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim, f"array {name!r} shape"))
        offset, nbytes, crc = struct.unpack("<QQI", take(20, f"array {name!r} header"))
        if dtype_code not in _DTYPES:
            raise CheckpointError(f"{path}: array {name!r} has unknown dtype code {dtype_code}")
        records.append((name, _DTYPES[dtype_code], shape, offset, nbytes, crc))
    data_start = pos
    arrays = {}
    for name, dtype, shape, offset, nbytes, crc in records:
        if nbytes != int(np.prod(shape)) * dtype.itemsize:
            raise CheckpointError(f"{path}: array {name!r} declares {nbytes} bytes for shape {shape}")
        lo = data_start + offset
        if lo + nbytes > len(buf):
            raise CheckpointError(f"{path}: array {name!r} truncated: needs {nbytes} bytes at offset {offset}, "
                                  f"{max(0, len(buf) - lo)} available")
        raw = buf[lo:lo + nbytes]
        if zlib.crc32(raw) != crc:
            raise CheckpointError(f"{path}: array {name!r} failed its checksum (corrupted data)")
        arrays[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).astype(np.float64)
    return meta, arrays


def load_checkpoint(path, heads: Mapping[str, Sequence[str]] | None = None,
                    config: EncoderConfig | None = None) -> ModelBundle:
    """Rebuild a bundle from ``path``.

    When ``heads`` is given it declares the wanted head map: heads present in
    the archive with the same labels are restored, new ones are freshly
    initialised and archived heads not declared are dropped.  Encoder arrays
    must match ``config`` (when given) exactly.
    """
    meta, arrays = read_checkpoint(path)
    stored = EncoderConfig(**meta["config"])
    if config is not None and config != stored:
        raise CheckpointError(f"{path}: encoder config {stored} differs from requested {config}")
    stored_heads = {t: tuple(l) for t, l in meta["heads"].items()}
    wanted = stored_heads if heads is None else {t: tuple(l) for t, l in heads.items()}
    bundle = ModelBundle(stored, heads=wanted, seed=meta.get("seed", 0))
    missing = [n for n in bundle.params if n not in arrays and not n.startswith("heads.")]
    if missing:
        raise CheckpointError(f"{path}: missing arrays {missing}")
    for name, value in arrays.items():
        if name.startswith("heads."):
            task = name.split(".")[1]
            if task not in wanted or stored_heads.get(task) != wanted[task]:
                continue
        if name not in bundle.params:
            raise CheckpointError(f"{path}: unexpected array {name!r}")
        if bundle.params[name].shape != value.shape:
            raise CheckpointError(f"{path}: array {name!r} has shape {value.shape}, "
                                  f"expected {bundle.params[name].shape}")
        bundle.params[name].data[...] = value
    return bundle
