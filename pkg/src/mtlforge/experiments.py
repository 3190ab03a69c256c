"""Seeded desk-scale experiments shared by ``scripts/`` and the acceptance suite."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .model import EncoderConfig, ModelBundle
from .synthetic import keyword_tasks, templated_domain
from .tokenizer import build_vocab
from .training import MtlConfig, PretrainConfig, evaluate_task, finetune, pretrain_mlm, train_mtl

# the default learning rates (5e-6, 1e-6) suit large pretrained encoders;
# a randomly initialised toy encoder needs a far larger step to move in a few epochs
DESK_LR = 1e-3


@dataclass(frozen=True)
class OverfitSettings:
    n_per_task: int = 64
    d_model: int = 32
    n_layers: int = 2
    n_heads: int = 2
    d_ff: int = 64
    max_epochs: int = 200
    batch_size: int = 16
    lr: float = DESK_LR


@dataclass
class OverfitResult:
    seed: int
    epochs_run: int
    best_aggregate: float
    seconds: float
    step_losses: list = field(repr=False, default_factory=list)


def run_overfit(seed: int = 0, settings: OverfitSettings = OverfitSettings()) -> OverfitResult:
    """Train the two keyword tasks jointly and select on the training data itself.

    Stops as soon as the aggregate train macro-F1 reaches 1.0.
    """
    tasks = keyword_tasks(settings.n_per_task, seed=seed)
    vocab = build_vocab([e.text for t in tasks for e in t.examples])
    cfg = EncoderConfig(len(vocab), settings.d_model, settings.n_heads, settings.n_layers, settings.d_ff,
                        max_len=8, dropout=0.0)
    bundle = ModelBundle(cfg, {t.name: t.label_set for t in tasks}, seed=seed)
    mtl = MtlConfig(batch_size=settings.batch_size, lr=settings.lr, epochs=settings.max_epochs, target_metric=1.0)
    start = time.perf_counter()
    _, report = train_mtl(bundle, tasks, mtl, vocab, seed=seed, dev={t.name: t for t in tasks})
    return OverfitResult(seed, len(report.epochs), report.best_aggregate, time.perf_counter() - start,
                         report.step_losses)


@dataclass(frozen=True)
class DaptSettings:
    n_domain: int = 2000
    n_train: int = 64
    n_eval: int = 200
    pretrain_epochs: int = 10
    pretrain_lr: float = DESK_LR
    pretrain_batch: int = 32
    ft_epochs: int = 10
    ft_lr: float = DESK_LR
    ft_batch: int = 8
    dropout: float = 0.1


@dataclass
class DaptResult:
    seed: int
    adapted_f1: float
    baseline_f1: float
    initial_val_loss: float
    final_val_loss: float
    best_val_loss: float
    evaluations: int

    @property
    def loss_ratio(self) -> float:
        return self.final_val_loss / self.initial_val_loss

    @property
    def benefit(self) -> bool:
        return self.adapted_f1 >= self.baseline_f1


def run_dapt_benefit(seed: int = 0, settings: DaptSettings = DaptSettings()) -> DaptResult:
    """Fine-tune from an MLM-adapted encoder and from the same random init; score held-out words."""
    fx = templated_domain(seed, settings.n_domain, settings.n_train, settings.n_eval)
    vocab = build_vocab(fx.domain_texts + [e.text for e in fx.train.examples + fx.eval.examples])
    cfg = EncoderConfig(len(vocab), d_model=32, n_heads=2, n_layers=2, d_ff=64, max_len=8, dropout=settings.dropout)
    init = ModelBundle(cfg, {fx.train.name: fx.train.label_set}, seed=seed)
    pre_cfg = PretrainConfig(batch_size=settings.pretrain_batch, max_epochs=settings.pretrain_epochs,
                             lr=settings.pretrain_lr)
    adapted, curve = pretrain_mlm(init, fx.domain_texts, vocab, pre_cfg, seed)
    ft_cfg = MtlConfig(batch_size=settings.ft_batch, ft_lr=settings.ft_lr, ft_epochs=settings.ft_epochs)
    tuned, _ = finetune(adapted, fx.train, ft_cfg, vocab, seed)
    baseline, _ = finetune(init, fx.train, ft_cfg, vocab, seed)
    losses = [p.val_loss for p in curve]
    return DaptResult(seed, evaluate_task(tuned, fx.eval, vocab).macro_f1,
                      evaluate_task(baseline, fx.eval, vocab).macro_f1, losses[0], losses[-1], min(losses),
                      len(losses) - 1)
