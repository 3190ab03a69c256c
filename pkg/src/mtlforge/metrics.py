"""Macro-F1 scoring and markdown result tables."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractError


@dataclass
class EvalResult:
    labels: tuple[str, ...]
    per_class: dict[str, tuple[float, float, float, int]]  # precision, recall, f1, support
    macro_f1: float
    confusion: np.ndarray  # rows gold, columns predicted
    n: int

    def to_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "n": self.n,
            "labels": list(self.labels),
            "per_class": {k: dict(zip(("precision", "recall", "f1", "support"), v))
                          for k, v in self.per_class.items()},
            "confusion": self.confusion.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_confusion_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["gold\\pred", *self.labels])
            for label, row in zip(self.labels, self.confusion):
                w.writerow([label, *row.tolist()])


def _ratio(a: float, b: float) -> float:
    return a / b if b else 0.0


def macro_f1(preds: Sequence[str], golds: Sequence[str], label_set: Sequence[str]) -> EvalResult:
    """Unweighted mean of per-class F1 over every label in ``label_set``.

    0/0 ratios count as 0, so a declared class that is never gold nor
    predicted contributes an F1 of 0.
    """
    if len(preds) != len(golds):
        raise ContractError(f"{len(preds)} predictions for {len(golds)} gold labels")
    if not golds:
        raise ContractError("cannot score an empty prediction set")
    labels = tuple(label_set)
    index = {lab: i for i, lab in enumerate(labels)}
    foreign = {x for x in (*preds, *golds) if x not in index}
    if foreign:
        raise ContractError(f"labels {sorted(map(str, foreign))} not in label set {list(labels)}")
    k = len(labels)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, ([index[g] for g in golds], [index[p] for p in preds]), 1)
    tp = np.diag(confusion)
    per_class = {}
    f1s = []
    for i, lab in enumerate(labels):
        p = _ratio(tp[i], confusion[:, i].sum())
        r = _ratio(tp[i], confusion[i].sum())
        f = _ratio(2 * p * r, p + r)
        per_class[lab] = (float(p), float(r), float(f), int(confusion[i].sum()))
        f1s.append(f)
    return EvalResult(labels, per_class, float(np.mean(f1s)), confusion, len(golds))


def aggregate(scores: Mapping[str, float]) -> float:
    """Model-selection metric for multi-task runs: plain mean over tasks."""
    return float(np.mean(list(scores.values()))) if scores else 0.0


def compare_runs(results: Mapping[str, Mapping[tuple[str, str], float]],
                 baselines: Mapping[str, Mapping[tuple[str, str], float]] | None = None) -> str:
    """Markdown table with one row per run and one column per (task, split).

    The best value in every column is bold; tied best values are all bold.
    Baseline rows come first and are separated from the runs by a rule row.
    """
    baselines = baselines or {}
    rows = list(baselines.items()) + list(results.items())
    if not rows:
        raise ContractError("nothing to compare")
    columns = list(rows[0][1])
    for name, scores in rows:
        if list(scores) != columns:
            raise ContractError(f"row {name!r} has columns {list(scores)}, expected {columns}")
    best = {c: max(round(s[c], 4) for _, s in rows) for c in columns}

    header = ["Run"] + [f"{t} {split}" for t, split in columns]
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(["---"] + ["---:"] * len(columns)) + "|"]

    def render(name, scores):
        cells = []
        for c in columns:
            v = f"{scores[c]:.4f}"
            cells.append(f"**{v}**" if round(scores[c], 4) == best[c] else v)
        return "| " + " | ".join([name] + cells) + " |"

    for name, scores in baselines.items():
        lines.append(render(name, scores))
    if baselines and results:
        lines.append("| " + " | ".join([""] * (len(columns) + 1)) + " |")
    for name, scores in results.items():
        lines.append(render(name, scores))
    return "\n".join(lines) + "\n"


def ablation_table(rows: Sequence[tuple[bool, bool, bool, float]], metric_name: str = "Task A") -> str:
    """Preprocessing ablation grid: Masks / Emoji / Hashtags toggles and a score."""
    if not rows:
        raise ContractError("no ablation rows")
    best = max(round(r[3], 4) for r in rows)
    lines = [f"| Masks | Emoji | Hashtags | {metric_name} |", "|:---:|:---:|:---:|---:|"]
    for masks, emoji, hashtags, score in rows:
        v = f"{score:.4f}"
        v = f"**{v}**" if round(score, 4) == best else v
        flags = ["+" if x else "-" for x in (masks, emoji, hashtags)]
        lines.append("| " + " | ".join(flags + [v]) + " |")
    return "\n".join(lines) + "\n"


def mtl_table(rows: Sequence[tuple[str, str, Mapping[str, float]]]) -> str:
    """Rows of (target task, dataset combination, {split: score}) ranked as given."""
    if not rows:
        raise ContractError("no rows")
    splits = list(rows[0][2])
    best = {s: max(round(r[2][s], 4) for r in rows) for s in splits}
    lines = ["| Task | Datasets | " + " | ".join(splits) + " |",
             "|---|---|" + "|".join(["---:"] * len(splits)) + "|"]
    for task, combo, scores in rows:
        cells = []
        for s in splits:
            v = f"{scores[s]:.4f}"
            cells.append(f"**{v}**" if round(scores[s], 4) == best[s] else v)
        lines.append(f"| {task} | {combo} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def write_result(result: EvalResult, path) -> None:
    Path(path).write_text(result.to_json() + "\n", encoding="utf-8")
