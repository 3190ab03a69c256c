"""Dataset loading, task compilation, seeded splitting/downsampling and the
EDOS A/B/C label-hierarchy audit.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import CompilationError, ContractError, SchemaError, StratificationError
from .numerics import Rng
from .textnorm import EmojiTable, Lexicon, NormConfig, preprocess

SCHEMA_VERSION = 1


@dataclass
class TextRecord:
    id: str
    text: str
    source: str
    labels: dict[str, str] = field(default_factory=dict)
    raw_text: str = ""


@dataclass(frozen=True)
class Example:
    id: str
    text: str
    label: str


@dataclass
class TaskDataset:
    name: str
    label_set: tuple[str, ...]
    examples: list[Example]
    loss_weight: float = 1.0

    def __post_init__(self):
        self.label_set = tuple(self.label_set)
        if len(self.label_set) < 2 or len(set(self.label_set)) != len(self.label_set):
            raise ContractError(f"task {self.name!r} needs >= 2 distinct labels, got {self.label_set}")
        if self.loss_weight <= 0:
            raise ContractError(f"task {self.name!r}: loss weight must be positive, got {self.loss_weight}")
        allowed = set(self.label_set)
        bad = {ex.label for ex in self.examples} - allowed
        if bad:
            raise ContractError(f"task {self.name!r}: labels {sorted(bad)} outside {self.label_set}")

    def __len__(self) -> int:
        return len(self.examples)

    def counts(self) -> Counter:
        return Counter(ex.label for ex in self.examples)

    def replace(self, examples: list[Example], name: str | None = None) -> "TaskDataset":
        return TaskDataset(name or self.name, self.label_set, examples, self.loss_weight)

    def save(self, path) -> None:
        """Write ``<path>`` as JSONL and ``<path>.meta.json`` with label set and weight."""
        path = Path(path)
        with open(path, "w", encoding="utf-8") as fh:
            for ex in self.examples:
                fh.write(json.dumps({"id": ex.id, "text": ex.text, "label": ex.label}, ensure_ascii=False) + "\n")
        meta = {"version": SCHEMA_VERSION, "name": self.name, "label_set": list(self.label_set),
                "loss_weight": self.loss_weight, "size": len(self)}
        Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TaskDataset":
        path = Path(path)
        meta = json.loads(Path(str(path) + ".meta.json").read_text(encoding="utf-8"))
        examples = []
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                if line.strip():
                    row = json.loads(line)
                    examples.append(Example(str(row.get("id", i)), row["text"], row["label"]))
        return cls(meta["name"], tuple(meta["label_set"]), examples, float(meta.get("loss_weight", 1.0)))


# -- loading -------------------------------------------------------------

@dataclass
class LoadResult:
    records: list[TextRecord]
    skipped: int
    source: str

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


_FORMATS = {".csv": "csv", ".tsv": "tsv", ".jsonl": "jsonl", ".json": "jsonl"}


def _rows(path: Path, fmt: str) -> tuple[list[str], Iterable[dict | None]]:
    if fmt in ("csv", "tsv"):
        fh = open(path, newline="", encoding="utf-8")
        reader = csv.DictReader(fh, delimiter="," if fmt == "csv" else "\t")
        columns = list(reader.fieldnames or [])

        def gen():
            with fh:
                for row in reader:
                    yield None if None in row or None in row.values() else row
        return columns, gen()
    rows: list[dict | None] = []
    columns: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                rows.append(None)
                continue
            if not isinstance(obj, dict):
                rows.append(None)
                continue
            columns.extend(k for k in obj if k not in columns)
            rows.append(obj)
    return columns, rows


def load_dataset(path, column_map: Mapping, fmt: str | None = None, source: str | None = None,
                 norm: NormConfig | None = None, lexicon: Lexicon | None = None,
                 table: EmojiTable | None = None) -> LoadResult:
    """Parse a CSV/TSV/JSONL file into :class:`TextRecord` objects.

    ``column_map`` has ``"text"``, optionally ``"id"``, and ``"labels"``: a
    mapping of record label keys to file columns.  Rows whose text is empty,
    or that are malformed, are skipped and counted.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    fmt = fmt or _FORMATS.get(path.suffix.lower())
    if fmt not in ("csv", "tsv", "jsonl"):
        raise SchemaError(f"{path}: unknown format {fmt!r}; use csv, tsv or jsonl")
    source = source or path.stem
    columns, rows = _rows(path, fmt)
    label_cols = dict(column_map.get("labels", {}))
    needed = [column_map["text"], *label_cols.values()] + ([column_map["id"]] if "id" in column_map else [])
    missing = [c for c in needed if c not in columns]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}; available: {columns}")

    records, skipped, seen = [], 0, set()
    for i, row in enumerate(rows):
        if row is None:
            skipped += 1
            continue
        raw = row.get(column_map["text"])
        raw = "" if raw is None else str(raw)
        text = preprocess(raw, norm, lexicon, table) if norm else raw
        rid = str(row[column_map["id"]]) if "id" in column_map else str(i)
        if not text.strip() or rid in seen:
            skipped += 1
            continue
        seen.add(rid)
        labels = {key: str(row[col]) for key, col in label_cols.items()
                  if row.get(col) is not None and str(row[col]) != ""}
        records.append(TextRecord(rid, text, source, labels, raw))
    return LoadResult(records, skipped, source)


# -- task compilation ----------------------------------------------------------

@dataclass
class TaskSchema:
    name: str
    label_set: tuple[str, ...]
    label_field: str
    mapping: dict[str, str] | None = None
    loss_weight: float = 1.0
    sources: tuple[str, ...] | None = None
    parent_map: dict[str, str] | None = None
    downsample_to: int | None = None
    description: str = ""

    @classmethod
    def from_dict(cls, d: Mapping) -> "TaskSchema":
        try:
            return cls(
                name=d["name"], label_set=tuple(d["label_set"]), label_field=d.get("label_field", d["name"]),
                mapping=dict(d["mapping"]) if d.get("mapping") is not None else None,
                loss_weight=float(d.get("loss_weight", 1.0)),
                sources=tuple(d["sources"]) if d.get("sources") else None,
                parent_map=dict(d["parent_map"]) if d.get("parent_map") else None,
                downsample_to=d.get("downsample_to"), description=d.get("description", ""),
            )
        except KeyError as e:
            raise SchemaError(f"task schema missing field {e}") from None


def load_task_schemas(path=None) -> dict[str, TaskSchema]:
    """Read a schema file ``{"version": 1, "tasks": [...]}``; default is the shipped one."""
    text = (Path(path).read_text(encoding="utf-8") if path
            else (resources.files("mtlforge") / "data" / "tasks.json").read_text(encoding="utf-8"))
    doc = json.loads(text)
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported task schema version {doc.get('version')!r}")
    return {t["name"]: TaskSchema.from_dict(t) for t in doc["tasks"]}


@dataclass
class CompileReport:
    task: str
    kept: int
    dropped: Counter

    @property
    def total(self) -> int:
        return self.kept + sum(self.dropped.values())


def compile_task(records: Iterable[TextRecord], schema: TaskSchema) -> tuple[TaskDataset, CompileReport]:
    """Map source labels into the task's label set; unmapped rows are dropped and counted."""
    examples, dropped = [], Counter()
    allowed = set(schema.label_set)
    for rec in records:
        if schema.sources and rec.source not in schema.sources:
            dropped["<other source>"] += 1
            continue
        raw = rec.labels.get(schema.label_field)
        if raw is None:
            dropped["<missing>"] += 1
            continue
        label = schema.mapping.get(raw) if schema.mapping is not None else raw
        if label is None or label not in allowed:
            dropped[raw] += 1
            continue
        examples.append(Example(f"{rec.source}:{rec.id}", rec.text, label))
    if not examples:
        raise CompilationError(f"task {schema.name!r}: no example carries a mappable label")
    ds = TaskDataset(schema.name, schema.label_set, examples, schema.loss_weight)
    return ds, CompileReport(schema.name, len(examples), dropped)


# -- splitting and sampling ------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    ratio: float = 0.8
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise ContractError(f"split ratio must lie in (0, 1), got {self.ratio}")


def _apportion(sizes: Sequence[int], total: int) -> list[int]:
    """Largest-remainder allocation of ``total`` proportionally to ``sizes``."""
    n = sum(sizes)
    quotas = [total * s / n for s in sizes]
    alloc = [int(q) for q in quotas]
    order = sorted(range(len(sizes)), key=lambda i: (-(quotas[i] - alloc[i]), i))
    for i in order[:total - sum(alloc)]:
        alloc[i] += 1
    return alloc


def split_train_eval(dataset: TaskDataset, spec: SplitSpec = SplitSpec()) -> tuple[TaskDataset, TaskDataset]:
    """Seeded split into ``ratio`` train and ``1 - ratio`` eval, stratified by label."""
    rng = Rng(spec.seed).split("split").split(dataset.name)
    n = len(dataset)
    n_eval = round((1 - spec.ratio) * n)
    if spec.stratified:
        groups: dict[str, list[int]] = {}
        for i, ex in enumerate(dataset.examples):
            groups.setdefault(ex.label, []).append(i)
        small = [lab for lab, idx in groups.items() if len(idx) < 2]
        if small and len(groups) > 1:
            raise StratificationError(f"task {dataset.name!r}: classes {small} have a single example")
        labels = sorted(groups)
        alloc = _apportion([len(groups[lab]) for lab in labels], n_eval)
        eval_idx = set()
        for lab, k in zip(labels, alloc):
            idx = groups[lab]
            perm = rng.split(lab).permutation(len(idx))
            eval_idx.update(idx[j] for j in perm[:k])
    else:
        eval_idx = set(rng.permutation(n)[:n_eval].tolist())
    train = [ex for i, ex in enumerate(dataset.examples) if i not in eval_idx]
    evals = [ex for i, ex in enumerate(dataset.examples) if i in eval_idx]
    return dataset.replace(train), dataset.replace(evals)


def downsample(dataset: TaskDataset, n: int, seed: int) -> TaskDataset:
    """Uniform sample of ``n`` examples without replacement, original order kept."""
    if n <= 0:
        raise ContractError(f"task {dataset.name!r}: cannot downsample to {n} examples")
    if n > len(dataset):
        raise ContractError(f"task {dataset.name!r}: asked for {n} of {len(dataset)} examples")
    picked = sorted(Rng(seed).split("downsample").split(dataset.name).choice(len(dataset), n, replace=False))
    return dataset.replace([dataset.examples[i] for i in picked])


# -- hierarchy audit ----------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    record_id: str | None
    detail: str


@dataclass
class HierarchyReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_hierarchy(edos_a: TaskDataset, edos_b: TaskDataset, edos_c: TaskDataset,
                    parent_map: Mapping[str, str], sexist_label: str = "sexist",
                    n_b: int = 4, n_c: int = 11) -> HierarchyReport:
    """Audit the nesting A (binary) > B (4 categories) > C (11 vectors)."""
    out: list[Violation] = []
    if len(edos_b.label_set) != n_b:
        out.append(Violation("cardinality", None, f"task B has {len(edos_b.label_set)} labels, expected {n_b}"))
    if len(edos_c.label_set) != n_c:
        out.append(Violation("cardinality", None, f"task C has {len(edos_c.label_set)} labels, expected {n_c}"))
    if sexist_label not in edos_a.label_set:
        out.append(Violation("label_set", None, f"task A lacks the label {sexist_label!r}"))
    for c_label in edos_c.label_set:
        parent = parent_map.get(c_label)
        if parent is None:
            out.append(Violation("parent_map", None, f"C label {c_label!r} has no parent"))
        elif parent not in edos_b.label_set:
            out.append(Violation("parent_map", None, f"C label {c_label!r} maps to unknown B label {parent!r}"))

    a = {ex.id: ex.label for ex in edos_a.examples}
    b = {ex.id: ex.label for ex in edos_b.examples}
    for ex in edos_b.examples:
        if ex.id not in a:
            out.append(Violation("missing_parent", ex.id, "B-labelled record absent from task A"))
        elif a[ex.id] != sexist_label:
            out.append(Violation("not_sexist", ex.id, f"B label {ex.label!r} but A label {a[ex.id]!r}"))
    for ex in edos_c.examples:
        if ex.id not in b:
            out.append(Violation("missing_parent", ex.id, "C-labelled record absent from task B"))
        elif parent_map.get(ex.label) is not None and parent_map[ex.label] != b[ex.id]:
            out.append(Violation("parent_mismatch", ex.id,
                                 f"C label {ex.label!r} belongs to {parent_map[ex.label]!r}, B says {b[ex.id]!r}"))
    return HierarchyReport(out)
