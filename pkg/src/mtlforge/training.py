"""Training regimes: MLM further pre-training (TAPT / DAPT / DAPT+TAPT),
multi-task training over homogeneous batches, and single-task fine-tuning.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import numerics as nx
from .corpus import SplitSpec, TaskDataset, split_train_eval
from .errors import ConfigError, StratificationError
from .metrics import aggregate, macro_f1
from .model import ModelBundle
from .numerics import Adam, Rng
from .tokenizer import CLS, MASK, PAD, SEP, SPECIALS, Vocab, encode_batch

log = logging.getLogger(__name__)

IGNORE = -100


@dataclass(frozen=True)
class PretrainConfig:
    mask_prob: float = 0.15
    scheme: tuple[float, float, float] = (0.8, 0.1, 0.1)  # mask / random token / keep
    batch_size: int = 32
    max_epochs: int = 10
    lr: float = 5e-6
    eval_every: int | None = None  # steps; None evaluates once per epoch
    patience: int = 5
    val_fraction: float = 0.05

    def __post_init__(self):
        if abs(sum(self.scheme) - 1.0) > 1e-9 or min(self.scheme) < 0:
            raise ConfigError(f"masking scheme must be non-negative and sum to 1, got {self.scheme}")
        if not 0 <= self.mask_prob <= 1:
            raise ConfigError(f"mask_prob must lie in [0, 1], got {self.mask_prob}")
        if self.patience < 1 or self.batch_size < 1 or self.max_epochs < 0:
            raise ConfigError("patience and batch_size must be >= 1, max_epochs >= 0")

    @classmethod
    def tapt(cls, **overrides) -> "PretrainConfig":
        return cls(**{"batch_size": 32, "max_epochs": 10, **overrides})

    @classmethod
    def dapt(cls, **overrides) -> "PretrainConfig":
        return cls(**{"batch_size": 24, "max_epochs": 5, **overrides})

    @classmethod
    def from_dict(cls, d: Mapping) -> "PretrainConfig":
        d = dict(d)
        if "scheme" in d:
            d["scheme"] = tuple(d["scheme"])
        return cls(**d)


@dataclass(frozen=True)
class MtlConfig:
    batch_size: int = 4
    lr: float = 5e-6
    epochs: int = 20
    loss_weights: Mapping[str, float] = field(default_factory=dict)  # missing tasks weigh 1.0
    ft_lr: float = 1e-6
    ft_epochs: int = 10
    aggregate: str = "mean"
    dev_fraction: float = 0.1
    target_metric: float | None = None  # stop early once the aggregate dev metric reaches this

    def __post_init__(self):
        if self.epochs < 1 or self.ft_epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1, ft_epochs >= 0")
        if any(w < 0 for w in self.loss_weights.values()):
            raise ConfigError(f"loss weights must be non-negative: {dict(self.loss_weights)}")
        if self.aggregate != "mean":
            raise ConfigError(f"unsupported aggregation {self.aggregate!r}")

    def weight(self, task: str) -> float:
        return float(self.loss_weights.get(task, 1.0))

    @classmethod
    def from_dict(cls, d: Mapping) -> "MtlConfig":
        return cls(**d)


# -- masking ---------------------------------------------------------------

def mask_tokens(ids: np.ndarray, attention_mask: np.ndarray, vocab_size: int, cfg: PretrainConfig,
                rng: Rng) -> tuple[np.ndarray, np.ndarray]:
    """Select eligible positions with probability ``mask_prob`` and corrupt them.

    Specials (PAD, CLS, SEP) and padding are never selected.  Labels hold the
    original id at selected positions and ``-100`` elsewhere.
    """
    ids = np.asarray(ids, dtype=np.int64)
    eligible = (np.asarray(attention_mask) == 1) & ~np.isin(ids, (PAD, CLS, SEP))
    selected = eligible & (rng.random(ids.shape) < cfg.mask_prob)
    choice = rng.random(ids.shape)
    p_mask, p_random, _ = cfg.scheme
    first = len(SPECIALS)
    to_mask = selected & (choice < p_mask)
    to_random = selected & (choice >= p_mask) & (choice < p_mask + p_random) & (vocab_size > first)
    random_ids = rng.integers(first, max(vocab_size, first + 1), size=ids.shape)
    corrupted = np.where(to_mask, MASK, np.where(to_random, random_ids, ids))
    labels = np.where(selected, ids, IGNORE)
    return corrupted, labels


# -- convergence -----------------------------------------------------------

def check_convergence(val_losses: Sequence[float], patience: int = 5) -> bool:
    """True when the last ``patience`` successive changes are all >= 0."""
    if len(val_losses) < patience + 1:
        return False
    tail = np.asarray(val_losses[-(patience + 1):], dtype=np.float64)
    return bool((np.diff(tail) >= 0).all())


# -- scheduling ------------------------------------------------------------

@dataclass(frozen=True)
class Batch:
    task: str
    indices: tuple[int, ...]


def build_mtl_schedule(tasks: Mapping[str, int] | Sequence[TaskDataset], batch_size: int, rng: Rng) -> list[Batch]:
    """Shuffle each task on its own, cut it into batches, then shuffle the batches.

    ``tasks`` maps task name to size (or is a sequence of datasets).  The last
    partial batch of each task is kept.
    """
    sizes = {t.name: len(t) for t in tasks} if not isinstance(tasks, Mapping) else dict(tasks)
    batches = []
    for name in sorted(sizes):
        if sizes[name] <= 0:
            raise ConfigError(f"task {name!r} is empty")
        order = rng.split(name).permutation(sizes[name])
        for start in range(0, sizes[name], batch_size):
            batches.append(Batch(name, tuple(int(i) for i in order[start:start + batch_size])))
    perm = rng.split("batches").permutation(len(batches))
    return [batches[i] for i in perm]


# -- reports -----------------------------------------------------------------

@dataclass
class EpochRecord:
    epoch: int
    losses: dict[str, float]
    metrics: dict[str, float]
    aggregate: float


@dataclass
class RunReport:
    stage: str
    lr: float
    batch_size: int
    seed: int
    loss_weights: dict[str, float]
    epochs: list[EpochRecord] = field(default_factory=list)
    step_losses: list[tuple[str, float]] = field(default_factory=list)
    best_epoch: int | None = None
    best_aggregate: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["step_losses"] = [list(x) for x in self.step_losses]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_loss_csv(self, path) -> None:
        tasks = sorted({t for e in self.epochs for t in e.losses})
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", *[f"loss_{t}" for t in tasks], *[f"f1_{t}" for t in tasks], "aggregate"])
            for e in self.epochs:
                w.writerow([e.epoch, *[repr(e.losses.get(t, float("nan"))) for t in tasks],
                            *[repr(e.metrics.get(t, float("nan"))) for t in tasks], repr(e.aggregate)])


@dataclass
class LossPoint:
    step: int
    epoch: int
    train_loss: float | None
    val_loss: float


def write_curve_csv(curve: Sequence[LossPoint], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "epoch", "train_loss", "val_loss"])
        for p in curve:
            w.writerow([p.step, p.epoch, "" if p.train_loss is None else repr(p.train_loss), repr(p.val_loss)])


# -- MLM pre-training --------------------------------------------------------

def _mlm_loss(bundle: ModelBundle, ids, mask, labels, rng: Rng | None = None):
    hidden = bundle.encode(ids, mask, rng)
    return nx.cross_entropy(bundle.mlm_logits(hidden), labels, ignore_index=IGNORE)


def _val_loss(bundle: ModelBundle, batches) -> float:
    total, count = 0.0, 0
    with nx.no_grad():
        for ids, mask, labels in batches:
            n = int((labels != IGNORE).sum())
            total += _mlm_loss(bundle, ids, mask, labels).item() * n
            count += n
    return total / count


def pretrain_mlm(bundle: ModelBundle, texts: Sequence[str], vocab: Vocab, cfg: PretrainConfig,
                 seed: int = 0) -> tuple[ModelBundle, list[LossPoint]]:
    """Continue MLM training on ``texts``; return the best-validation-loss copy and the curve.

    A seeded ``val_fraction`` slice is held out and masked once, so every
    evaluation scores the same corrupted positions.  Training stops at
    ``max_epochs`` or as soon as :func:`check_convergence` fires.
    """
    texts = [t for t in texts if t.strip()]
    if not texts:
        raise ConfigError("pre-training corpus is empty")
    if cfg.max_epochs == 0:
        return bundle.copy(), []
    rng = Rng(seed).split("pretrain")
    max_len = bundle.config.max_len
    order = rng.split("val-split").permutation(len(texts))
    n_val = max(1, round(cfg.val_fraction * len(texts))) if len(texts) > 1 else 0
    val_texts = [texts[i] for i in order[:n_val]] or texts
    train_texts = [texts[i] for i in order[n_val:]]
    train_ids, train_mask = encode_batch(train_texts, vocab, max_len)
    val_ids, val_mask = encode_batch(val_texts, vocab, max_len)

    # fixed validation corruption; a tiny slice may draw no targets, so retry fully masked
    val_batches = _mask_val(val_ids, val_mask, len(vocab), cfg, rng.split("val-mask"))
    if not val_batches:
        val_batches = _mask_val(val_ids, val_mask, len(vocab), replace(cfg, mask_prob=1.0), rng.split("val-mask-all"))
    if not val_batches:
        raise ConfigError("validation texts contain no maskable tokens")

    model = bundle.copy()
    opt = Adam(model.params, lr=cfg.lr)
    best_state, best_loss = model.state_dict(), _val_loss(model, val_batches)
    curve = [LossPoint(0, 0, None, best_loss)]
    val_losses = [best_loss]
    step = 0
    mrng, srng, drng = rng.split("mask"), rng.split("shuffle"), rng.split("dropout")
    running: list[float] = []
    converged = False
    for epoch in range(1, cfg.max_epochs + 1):
        perm = srng.split(epoch).permutation(len(train_ids)) if len(train_ids) else []
        for start in range(0, len(perm), cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            ids, labels = mask_tokens(train_ids[idx], train_mask[idx], len(vocab), cfg, mrng.split(step))
            step += 1
            if not (labels != IGNORE).any():
                continue
            model.training = True
            opt.zero_grad()
            loss = _mlm_loss(model, ids, train_mask[idx], labels, drng.split(step))
            loss.backward()
            opt.step()
            model.training = False
            running.append(loss.item())
            if cfg.eval_every and step % cfg.eval_every == 0:
                converged = _evaluate_point(model, val_batches, curve, val_losses, running, step, epoch, cfg)
                if val_losses[-1] < best_loss:
                    best_loss, best_state = val_losses[-1], model.state_dict()
                if converged:
                    break
        if converged:
            break
        if not cfg.eval_every:
            converged = _evaluate_point(model, val_batches, curve, val_losses, running, step, epoch, cfg)
            if val_losses[-1] < best_loss:
                best_loss, best_state = val_losses[-1], model.state_dict()
            if converged:
                break
    log.info("MLM pre-training stopped after %d steps (converged=%s, best val loss %.4f)", step, converged, best_loss)
    model.load_state(best_state)
    return model, curve


def _mask_val(ids_all, mask_all, vocab_size, cfg, rng):
    out = []
    for start in range(0, len(ids_all), cfg.batch_size):
        ids, mask = ids_all[start:start + cfg.batch_size], mask_all[start:start + cfg.batch_size]
        corrupted, labels = mask_tokens(ids, mask, vocab_size, cfg, rng.split(start))
        if (labels != IGNORE).any():
            out.append((corrupted, mask, labels))
    return out


def _evaluate_point(model, val_batches, curve, val_losses, running, step, epoch, cfg) -> bool:
    v = _val_loss(model, val_batches)
    curve.append(LossPoint(step, epoch, float(np.mean(running)) if running else None, v))
    running.clear()
    val_losses.append(v)
    return check_convergence(val_losses, cfg.patience)


PRETRAIN_MODES = ("tapt", "dapt", "dapt+tapt")


def run_pretraining(bundle: ModelBundle, mode: str, vocab: Vocab, task_texts: Sequence[str] = (),
                    domain_texts: Sequence[str] = (), tapt_cfg: PretrainConfig | None = None,
                    dapt_cfg: PretrainConfig | None = None, seed: int = 0
                    ) -> tuple[ModelBundle, dict[str, list[LossPoint]]]:
    """TAPT trains on task texts, DAPT on domain texts, DAPT+TAPT runs both in sequence."""
    if mode not in PRETRAIN_MODES:
        raise ConfigError(f"unknown pre-training mode {mode!r}; choose from {PRETRAIN_MODES}")
    tapt_cfg = tapt_cfg or PretrainConfig.tapt()
    dapt_cfg = dapt_cfg or PretrainConfig.dapt()
    curves = {}
    if mode in ("dapt", "dapt+tapt"):
        bundle, curves["dapt"] = pretrain_mlm(bundle, domain_texts, vocab, dapt_cfg, seed)
    if mode in ("tapt", "dapt+tapt"):
        bundle, curves["tapt"] = pretrain_mlm(bundle, task_texts, vocab, tapt_cfg, seed)
    return bundle, curves


# -- supervised training -------------------------------------------------------

@dataclass
class _Encoded:
    task: TaskDataset
    ids: np.ndarray
    mask: np.ndarray
    labels: np.ndarray


def _encode_task(task: TaskDataset, vocab: Vocab, max_len: int) -> _Encoded:
    ids, mask = encode_batch([ex.text for ex in task.examples], vocab, max_len)
    index = {lab: i for i, lab in enumerate(task.label_set)}
    return _Encoded(task, ids, mask, np.array([index[ex.label] for ex in task.examples], dtype=np.int64))


def predict(bundle: ModelBundle, task: str, texts: Sequence[str], vocab: Vocab, batch_size: int = 64) -> list[str]:
    ids, mask = encode_batch(texts, vocab, bundle.config.max_len)
    return _predict_ids(bundle, task, ids, mask, batch_size)


def _predict_ids(bundle, task, ids, mask, batch_size=64) -> list[str]:
    labels = bundle.head_labels[task]
    out: list[str] = []
    with nx.no_grad():
        for start in range(0, len(ids), batch_size):
            logits = bundle.classify(task, ids[start:start + batch_size], mask[start:start + batch_size]).data
            out.extend(labels[i] for i in logits.argmax(axis=1))
    return out


def evaluate_task(bundle: ModelBundle, dataset: TaskDataset, vocab: Vocab):
    preds = predict(bundle, dataset.name, [ex.text for ex in dataset.examples], vocab)
    return macro_f1(preds, [ex.label for ex in dataset.examples], dataset.label_set)


def carve_dev(task: TaskDataset, fraction: float, seed: int) -> tuple[TaskDataset, TaskDataset]:
    spec = SplitSpec(1.0 - fraction, seed)
    try:
        return split_train_eval(task, spec)
    except StratificationError:
        return split_train_eval(task, replace(spec, stratified=False))


def _check_heads(bundle: ModelBundle, tasks: Sequence[TaskDataset]) -> None:
    for t in tasks:
        if t.name not in bundle.head_labels:
            raise ConfigError(f"task {t.name!r} has no head; registered: {sorted(bundle.head_labels)}")
        if tuple(bundle.head_labels[t.name]) != tuple(t.label_set):
            raise ConfigError(f"head {t.name!r} labels {bundle.head_labels[t.name]} != task labels {t.label_set}")


def _train(bundle: ModelBundle, train: Sequence[TaskDataset], dev: Mapping[str, TaskDataset], vocab: Vocab,
           weights: Mapping[str, float], lr: float, epochs: int, batch_size: int, seed: int, stage: str,
           target_metric: float | None) -> tuple[ModelBundle, RunReport]:
    model = bundle.copy()
    report = RunReport(stage, lr, batch_size, seed, {t.name: float(weights.get(t.name, 1.0)) for t in train})
    if epochs == 0:
        return model, report
    max_len = model.config.max_len
    enc = {t.name: _encode_task(t, vocab, max_len) for t in train}
    dev_enc = {name: _encode_task(d, vocab, max_len) for name, d in dev.items()}
    opt = Adam(model.params, lr=lr)
    rng = Rng(seed).split("train")
    srng, drng = rng.split("schedule"), rng.split("dropout")
    best_state = model.state_dict()
    step = 0
    for epoch in range(1, epochs + 1):
        sums: dict[str, list[float]] = {name: [] for name in enc}
        for batch in build_mtl_schedule({n: len(e.labels) for n, e in enc.items()}, batch_size, srng.split(epoch)):
            e = enc[batch.task]
            idx = np.array(batch.indices)
            model.training = True
            opt.zero_grad()
            logits = model.classify(batch.task, e.ids[idx], e.mask[idx], drng.split(step))
            loss = nx.cross_entropy(logits, e.labels[idx]) * report.loss_weights[batch.task]
            loss.backward()
            opt.step()
            model.training = False
            step += 1
            sums[batch.task].append(loss.item())
            report.step_losses.append((batch.task, loss.item()))
        metrics = {}
        for name, d in dev_enc.items():
            preds = _predict_ids(model, name, d.ids, d.mask)
            metrics[name] = macro_f1(preds, [ex.label for ex in d.task.examples], d.task.label_set).macro_f1
        agg = aggregate(metrics)
        report.epochs.append(EpochRecord(epoch, {k: float(np.mean(v)) for k, v in sums.items() if v}, metrics, agg))
        if report.best_aggregate is None or agg > report.best_aggregate:
            report.best_epoch, report.best_aggregate = epoch, agg
            best_state = model.state_dict()
        log.debug("%s epoch %d aggregate %.4f", stage, epoch, agg)
        if target_metric is not None and agg >= target_metric:
            break
    model.load_state(best_state)
    return model, report


def _dev_slices(tasks: Sequence[TaskDataset], dev, fraction: float, seed: int):
    if dev is not None:
        return list(tasks), dict(dev)
    train, dev_out = [], {}
    for t in tasks:
        tr, dv = carve_dev(t, fraction, seed)
        if len(dv) == 0:
            tr, dv = t, t
        train.append(tr)
        dev_out[t.name] = dv
    return train, dev_out


def train_mtl(bundle: ModelBundle, tasks: Sequence[TaskDataset], cfg: MtlConfig, vocab: Vocab, seed: int = 0,
              dev: Mapping[str, TaskDataset] | None = None) -> tuple[ModelBundle, RunReport]:
    """Multi-task training; the returned copy is the epoch with the best mean dev macro-F1.

    Each batch holds one task; its loss is that head's cross-entropy scaled by
    the task weight.  Without explicit ``dev`` sets a seeded ``dev_fraction``
    slice is carved from every task.
    """
    _check_heads(bundle, tasks)
    train, dev = _dev_slices(tasks, dev, cfg.dev_fraction, seed)
    return _train(bundle, train, dev, vocab, {t.name: cfg.weight(t.name) for t in tasks}, cfg.lr, cfg.epochs,
                  cfg.batch_size, seed, "mtl", cfg.target_metric)


def finetune(bundle: ModelBundle, task: TaskDataset, cfg: MtlConfig, vocab: Vocab, seed: int = 0,
             dev: TaskDataset | None = None) -> tuple[ModelBundle, RunReport]:
    """Single-task training at ``ft_lr`` for ``ft_epochs`` with a fresh optimiser."""
    if task.name not in bundle.head_labels:
        raise KeyError(f"unknown task {task.name!r}; registered: {sorted(bundle.head_labels)}")
    _check_heads(bundle, [task])
    train, devs = _dev_slices([task], None if dev is None else {task.name: dev}, cfg.dev_fraction, seed)
    return _train(bundle, train, devs, vocab, {task.name: 1.0}, cfg.ft_lr, cfg.ft_epochs, cfg.batch_size, seed,
                  "finetune", cfg.target_metric)
