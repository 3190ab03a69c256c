"""Command-line driver chaining the pipeline stages through stamped run directories.

Every invocation writes ``<out>/<timestamp>-<command>-seed<seed>/`` holding its
artifacts, a copy of the resolved config and ``manifest.json``.  The manifest
lists the sha256 of every input and the artifacts the run produced or
inherited.  Passing ``--from <run dir>`` makes those artifacts available to
the next stage, so a typical chain is::

    mtlforge preprocess --config exp.json
    mtlforge build-vocab --config exp.json --from runs/...-preprocess-seed0
    mtlforge compile-tasks --config exp.json --from runs/...-build-vocab-seed0
    mtlforge pretrain --config exp.json --mode tapt --from runs/...-compile-tasks-seed0
    mtlforge finetune --config exp.json --from runs/...-pretrain-seed0
    mtlforge evaluate --config exp.json --from runs/...-finetune-seed0

Exit codes: 0 success, 1 contract or config error, 2 I/O error, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .corpus import SplitSpec, TaskDataset, TextRecord, check_hierarchy, compile_task, downsample, load_dataset, \
    load_task_schemas, split_train_eval
from .errors import ConfigError, ContractError
from .metrics import compare_runs, macro_f1
from .model import EncoderConfig, ModelBundle, load_checkpoint, save_checkpoint
from .textnorm import EmojiTable, Lexicon, NormConfig, preprocess
from .tokenizer import Vocab, build_vocab
from .training import PRETRAIN_MODES, MtlConfig, PretrainConfig, evaluate_task, finetune, run_pretraining, \
    train_mtl, write_curve_csv

log = logging.getLogger("mtlforge")

CONFIG_VERSION = 1
SEED_ENV = "MTLFORGE_SEED"
EXIT_OK, EXIT_CONTRACT, EXIT_IO, EXIT_USAGE = 0, 1, 2, 64
MODES = PRETRAIN_MODES + ("mtl", "finetune", "evaluate")


# -- configuration -------------------------------------------------------------

@dataclass(frozen=True)
class DatasetSource:
    path: str
    columns: dict
    format: str | None = None


@dataclass(frozen=True)
class SweepSettings:
    candidates: tuple[str, ...] = ()
    beam: int = 2
    stages: int = 3
    ft: bool = True


@dataclass
class ExperimentConfig:
    """Everything a run needs besides upstream artifacts.

    Relative paths are resolved against the directory of the config file.
    """
    datasets: dict[str, DatasetSource] = field(default_factory=dict)
    domain: str | None = None
    lexicon: str | None = None
    emoji_table: str | None = None
    task_schemas: str | None = None
    out: str = "runs"
    norm: NormConfig = field(default_factory=NormConfig)
    min_freq: int = 1
    encoder: dict = field(default_factory=dict)
    tasks: tuple[str, ...] = ()
    target: str | None = None
    split: SplitSpec = field(default_factory=SplitSpec)
    tapt: PretrainConfig = field(default_factory=PretrainConfig.tapt)
    dapt: PretrainConfig = field(default_factory=PretrainConfig.dapt)
    mtl: MtlConfig = field(default_factory=MtlConfig)
    mtl_tasks: tuple[str, ...] = ()
    sweep: SweepSettings = field(default_factory=SweepSettings)
    seed: int = 0
    mode: str = "tapt"

    @classmethod
    def from_dict(cls, d: Mapping, base: Path = Path(".")) -> "ExperimentConfig":
        d = dict(d)
        version = d.pop("version", None)
        if version != CONFIG_VERSION:
            raise ConfigError(f"config version must be {CONFIG_VERSION}, got {version!r}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")

        def resolve(p):
            return None if p is None else str((base / p).resolve())

        try:
            cfg = cls(
                datasets={k: DatasetSource(resolve(v["path"]), dict(v["columns"]), v.get("format"))
                          for k, v in d.get("datasets", {}).items()},
                domain=resolve(d.get("domain")), lexicon=resolve(d.get("lexicon")),
                emoji_table=resolve(d.get("emoji_table")), task_schemas=resolve(d.get("task_schemas")),
                out=resolve(d.get("out", "runs")),
                norm=NormConfig(**d.get("norm", {})),
                min_freq=int(d.get("min_freq", 1)),
                encoder=dict(d.get("encoder", {})),
                tasks=tuple(d.get("tasks", ())),
                target=d.get("target"),
                split=SplitSpec(**d.get("split", {})),
                tapt=PretrainConfig.tapt(**_tuple_scheme(d.get("tapt", {}))),
                dapt=PretrainConfig.dapt(**_tuple_scheme(d.get("dapt", {}))),
                mtl=MtlConfig(**d.get("mtl", {})),
                mtl_tasks=tuple(d.get("mtl_tasks", ())),
                sweep=SweepSettings(**{**d.get("sweep", {}), "candidates": tuple(d.get("sweep", {}).get("candidates", ()))}),
                seed=int(d.get("seed", 0)),
                mode=d.get("mode", "tapt"),
            )
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        if cfg.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
        if "vocab_size" in cfg.encoder:
            raise ConfigError("encoder.vocab_size is taken from the vocabulary; remove it from the config")
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(raw, path.parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["version"] = CONFIG_VERSION
        return d


def _tuple_scheme(d: Mapping) -> dict:
    d = dict(d)
    if "scheme" in d:
        d["scheme"] = tuple(d["scheme"])
    return d


def resolve_seed(flag: int | None, config_seed: int, env: Mapping[str, str] = os.environ) -> tuple[int, str]:
    """Flag beats the environment variable, which beats the config file."""
    if flag is not None:
        return flag, "flag"
    if env.get(SEED_ENV, "").strip():
        try:
            return int(env[SEED_ENV]), "env"
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV}={env[SEED_ENV]!r} is not an integer") from exc
    return config_seed, "config"


# -- run directories -------------------------------------------------------------

def file_sha256(path) -> str:
    path = Path(path)
    h = hashlib.sha256()
    if path.is_dir():
        for child in sorted(p for p in path.rglob("*") if p.is_file()):
            h.update(str(child.relative_to(path)).encode())
            h.update(bytes.fromhex(file_sha256(child)))
        return h.hexdigest()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """One stamped output directory plus the manifest being assembled for it."""

    def __init__(self, command: str, cfg: ExperimentConfig, seed: int, seed_source: str, out: str,
                 parent: Path | None):
        stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
        self.dir = Path(out) / f"{stamp}-{command}-seed{seed}"
        self.dir.mkdir(parents=True, exist_ok=False)
        self.inherited: dict[str, str] = {}
        if parent is not None:
            manifest = Path(parent) / "manifest.json"
            if not manifest.is_file():
                raise FileNotFoundError(f"no manifest.json in run directory {parent}")
            self.inherited = json.loads(manifest.read_text())["artifacts"]
        self.manifest = {"command": command, "seed": seed, "seed_source": seed_source, "created": stamp,
                         "parent": None if parent is None else str(Path(parent).resolve()),
                         "config": cfg.to_dict(), "inputs": {}, "artifacts": dict(self.inherited)}
        resolved = cfg.to_dict()
        resolved["seed"] = seed
        (self.dir / "config.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")

    def artifact(self, name: str) -> Path:
        if name not in self.inherited:
            raise ConfigError(f"this stage needs a {name!r} artifact; pass --from <run dir> of a run that made one "
                              f"(available: {sorted(self.inherited)})")
        path = Path(self.inherited[name])
        self.input(name, path)
        return path

    def input(self, name: str, path) -> Path:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"input {name!r} not found: {path}")
        self.manifest["inputs"][name] = {"path": str(path.resolve()), "sha256": file_sha256(path)}
        return path

    def produce(self, name: str, path) -> Path:
        self.manifest["artifacts"][name] = str(Path(path).resolve())
        return Path(path)

    def finish(self, status: str = "ok") -> None:
        self.manifest["status"] = status
        (self.dir / "manifest.json").write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")


# -- sweep -----------------------------------------------------------------------

@dataclass(frozen=True)
class CombinationSpec:
    target: str
    candidates: tuple[str, ...]
    beam: int = 2
    stages: int = 3
    ft: bool = True


@dataclass(frozen=True)
class SweepRow:
    tasks: tuple[str, ...]  # auxiliary tasks trained alongside the target
    score: float
    ft: bool = False

    @property
    def name(self) -> str:
        return ", ".join(self.tasks) + (" + FT" if self.ft else "")


def sweep(spec: CombinationSpec, runner: Callable[[tuple[str, ...]], float],
          ft_runner: Callable[[tuple[str, ...]], float] | None = None) -> list[SweepRow]:
    """Incremental combination search.

    Stage 1 pairs the target with each candidate.  Each later stage extends the
    ``beam`` best combinations of the previous stage by one unused candidate,
    skipping combinations already run.  With ``ft`` set, ``ft_runner`` is
    applied to the ``beam`` best combinations overall.  Rows are ranked by
    score (descending) then name.
    """
    candidates = tuple(dict.fromkeys(c for c in spec.candidates if c != spec.target))
    if not candidates:
        raise ConfigError("sweep needs at least one auxiliary candidate besides the target")
    if spec.beam < 1 or spec.stages < 1:
        raise ConfigError("beam and stages must be >= 1")
    scores: dict[tuple[str, ...], float] = {}
    frontier = [(c,) for c in candidates]
    for stage in range(spec.stages):
        fresh = []
        for combo in frontier:
            if combo not in scores:
                scores[combo] = float(runner(combo))
                fresh.append(combo)
        if not fresh or stage == spec.stages - 1:
            break
        top = _rank([SweepRow(c, scores[c]) for c in fresh])[:spec.beam]
        frontier = list(dict.fromkeys(tuple(sorted(row.tasks + (c,), key=candidates.index))
                                      for row in top for c in candidates if c not in row.tasks))
    rows = [SweepRow(c, s) for c, s in scores.items()]
    if spec.ft and ft_runner is not None:
        rows += [SweepRow(row.tasks, float(ft_runner(row.tasks)), ft=True) for row in _rank(rows)[:spec.beam]]
    return _rank(rows)


def _rank(rows: Sequence[SweepRow]) -> list[SweepRow]:
    return sorted(rows, key=lambda r: (-r.score, r.name))


def render_sweep(rows: Sequence[SweepRow], target: str) -> str:
    lines = [f"| Rank | Datasets (with {target}) | Eval F1 |", "|---|---|---|"]
    lines += [f"| {i} | {row.name} | {row.score:.4f} |" for i, row in enumerate(rows, 1)]
    return "\n".join(lines) + "\n"


# -- helpers shared by commands -------------------------------------------------------

def _resources(cfg: ExperimentConfig, run: Run):
    lexicon = Lexicon.from_file(run.input("lexicon", cfg.lexicon)) if cfg.lexicon else Lexicon.default()
    table = EmojiTable.from_file(run.input("emoji_table", cfg.emoji_table)) if cfg.emoji_table else EmojiTable.default()
    return lexicon, table


def _read_records(path: Path) -> list[TextRecord]:
    out = []
    for file in sorted(path.glob("*.jsonl")):
        with open(file, encoding="utf-8") as fh:
            out.extend(TextRecord(**json.loads(line)) for line in fh if line.strip())
    return out


def _target(cfg: ExperimentConfig) -> str:
    if not cfg.target:
        raise ConfigError("config has no 'target' task")
    return cfg.target


def _task(run: Run, name: str, split: str) -> TaskDataset:
    path = run.artifact("tasks") / f"{name}.{split}.jsonl"
    if not path.is_file():
        raise FileNotFoundError(f"compiled task file not found: {path}")
    return TaskDataset.load(path)


def _bundle(run: Run, cfg: ExperimentConfig, vocab: Vocab, heads: Mapping[str, Sequence[str]], seed: int):
    if "checkpoint" in run.inherited:
        bundle = load_checkpoint(run.artifact("checkpoint"), heads=heads)
        if bundle.config.vocab_size != len(vocab):
            raise ConfigError(f"checkpoint vocab size {bundle.config.vocab_size} != vocabulary size {len(vocab)}")
        return bundle
    return ModelBundle(EncoderConfig(vocab_size=len(vocab), **cfg.encoder), heads=heads, seed=seed)


def _write_eval(run: Run, bundle: ModelBundle, dataset: TaskDataset, vocab: Vocab, split: str = "eval") -> float:
    result = evaluate_task(bundle, dataset, vocab)
    _write_result(run, result, dataset.name, split)
    return result.macro_f1


def _write_result(run: Run, result, task: str, split: str) -> None:
    (run.dir / "eval.json").write_text(result.to_json() + "\n")
    result.write_confusion_csv(run.dir / "confusion.csv")
    scores = {"scores": [{"task": task, "split": split, "macro_f1": result.macro_f1}]}
    run.produce("results", run.dir / "results.json").write_text(json.dumps(scores, indent=2, sort_keys=True) + "\n")
    print(f"{task} {split} macro-F1 {result.macro_f1:.4f}")


# -- commands ------------------------------------------------------------------

def cmd_preprocess(args, cfg: ExperimentConfig, run: Run, seed: int) -> None:
    if not cfg.datasets and not cfg.domain:
        raise ConfigError("config lists no datasets and no domain corpus")
    lexicon, table = _resources(cfg, run)
    records_dir = run.produce("records", run.dir / "records")
    records_dir.mkdir()
    summary = {}
    for name, src in sorted(cfg.datasets.items()):
        result = load_dataset(run.input(f"dataset:{name}", src.path), src.columns, src.format, name, cfg.norm,
                              lexicon, table)
        with open(records_dir / f"{name}.jsonl", "w", encoding="utf-8") as fh:
            for rec in result.records:
                fh.write(json.dumps(asdict(rec), ensure_ascii=False, sort_keys=True) + "\n")
        summary[name] = {"kept": len(result), "skipped": result.skipped}
    if cfg.domain:
        lines = run.input("domain", cfg.domain).read_text(encoding="utf-8").splitlines()
        texts = [t for t in (preprocess(line, cfg.norm, lexicon, table).strip() for line in lines) if t]
        run.produce("domain_text", run.dir / "domain.txt").write_text("".join(t + "\n" for t in texts), encoding="utf-8")
        summary["domain"] = {"kept": len(texts), "skipped": len(lines) - len(texts)}
    (run.dir / "preprocess.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def cmd_build_vocab(args, cfg, run, seed) -> None:
    texts = [r.text for r in _read_records(run.artifact("records"))] if "records" in run.inherited else []
    if "domain_text" in run.inherited:
        texts += run.artifact("domain_text").read_text(encoding="utf-8").splitlines()
    vocab = build_vocab(texts, cfg.min_freq)
    vocab.save(run.produce("vocab", run.dir / "vocab.tsv"))
    print(f"vocabulary: {len(vocab)} entries")


def cmd_compile_tasks(args, cfg, run, seed) -> None:
    if not cfg.tasks:
        raise ConfigError("config lists no 'tasks' to compile")
    schemas = load_task_schemas(run.input("task_schemas", cfg.task_schemas) if cfg.task_schemas else None)
    missing = sorted(set(cfg.tasks) - set(schemas))
    if missing:
        raise ConfigError(f"tasks {missing} not in the schema file; known: {sorted(schemas)}")
    records = _read_records(run.artifact("records"))
    out = run.produce("tasks", run.dir / "tasks")
    out.mkdir()
    summary, compiled = {}, {}
    for name in cfg.tasks:
        dataset, report = compile_task(records, schemas[name])
        cap = schemas[name].downsample_to
        if cap is not None and len(dataset) > cap:
            dataset = downsample(dataset, cap, seed)
        compiled[name] = dataset
        if name == cfg.target:
            train, ev = split_train_eval(dataset, SplitSpec(cfg.split.ratio, seed, cfg.split.stratified))
            ev.save(out / f"{name}.eval.jsonl")
        else:
            train = dataset
        train.save(out / f"{name}.train.jsonl")
        summary[name] = {"kept": report.kept, "dropped": dict(report.dropped), "size": len(dataset)}
    if {"edosA", "edosB", "edosC"} <= set(compiled):
        report = check_hierarchy(compiled["edosA"], compiled["edosB"], compiled["edosC"], schemas["edosC"].parent_map)
        summary["hierarchy"] = [asdict(v) for v in report.violations]
        if not report.ok:
            log.warning("EDOS hierarchy audit found %d violations", len(report.violations))
    (run.dir / "compile.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def cmd_pretrain(args, cfg, run, seed) -> None:
    mode = args.mode or (cfg.mode if cfg.mode in PRETRAIN_MODES else None)
    if mode not in PRETRAIN_MODES:
        raise ConfigError(f"pretrain needs --mode in {PRETRAIN_MODES}")
    run.manifest["mode"] = mode
    vocab = Vocab.load(run.artifact("vocab"))
    task_texts = [e.text for e in _task(run, _target(cfg), "train").examples] if "tapt" in mode else []
    domain_texts = run.artifact("domain_text").read_text(encoding="utf-8").splitlines() if "dapt" in mode else []
    bundle = _bundle(run, cfg, vocab, {}, seed)
    bundle, curves = run_pretraining(bundle, mode, vocab, task_texts, domain_texts, cfg.tapt, cfg.dapt, seed)
    for stage, curve in curves.items():
        write_curve_csv(curve, run.produce(f"curve:{stage}", run.dir / f"{stage}_curve.csv"))
    save_checkpoint(bundle, run.produce("checkpoint", run.dir / "model.ckpt"), extra={"stage": mode, "seed": seed})


def cmd_mtl(args, cfg, run, seed) -> None:
    target = _target(cfg)
    names = cfg.mtl_tasks or cfg.tasks
    if target not in names:
        raise ConfigError(f"mtl_tasks {list(names)} must include the target {target!r}")
    vocab = Vocab.load(run.artifact("vocab"))
    tasks = [_task(run, n, "train") for n in names]
    bundle = _bundle(run, cfg, vocab, {t.name: t.label_set for t in tasks}, seed)
    bundle, report = train_mtl(bundle, tasks, cfg.mtl, vocab, seed)
    _save_training(run, bundle, report, seed)
    _write_eval(run, bundle, _task(run, target, "eval"), vocab)


def cmd_finetune(args, cfg, run, seed) -> None:
    target = _target(cfg)
    vocab = Vocab.load(run.artifact("vocab"))
    task = _task(run, target, "train")
    bundle = _bundle(run, cfg, vocab, {target: task.label_set}, seed)
    bundle, report = finetune(bundle, task, cfg.mtl, vocab, seed)
    _save_training(run, bundle, report, seed)
    _write_eval(run, bundle, _task(run, target, "eval"), vocab)


def _save_training(run, bundle, report, seed) -> None:
    (run.produce("report", run.dir / "report.json")).write_text(report.to_json() + "\n")
    report.write_loss_csv(run.produce("loss_curve", run.dir / "loss.csv"))
    save_checkpoint(bundle, run.produce("checkpoint", run.dir / "model.ckpt"), extra={"stage": report.stage, "seed": seed})


def cmd_evaluate(args, cfg, run, seed) -> None:
    if args.predictions:
        data = json.loads(run.input("predictions", args.predictions).read_text(encoding="utf-8"))
        try:
            result = macro_f1(data["preds"], data["golds"], data["label_set"])
        except KeyError as exc:
            raise ConfigError(f"predictions file needs 'preds', 'golds' and 'label_set' (missing {exc})") from exc
        _write_result(run, result, data.get("task", "predictions"), data.get("split", "eval"))
        return
    target = _target(cfg)
    vocab = Vocab.load(run.artifact("vocab"))
    dataset = _task(run, target, "eval")
    bundle = load_checkpoint(run.artifact("checkpoint"))
    _write_eval(run, bundle, dataset, vocab)


def cmd_sweep(args, cfg, run, seed) -> None:
    target = _target(cfg)
    spec = CombinationSpec(target, cfg.sweep.candidates,
                           args.beam if args.beam is not None else cfg.sweep.beam,
                           args.stages if args.stages is not None else cfg.sweep.stages,
                           cfg.sweep.ft if args.ft is None else args.ft)
    vocab = Vocab.load(run.artifact("vocab"))
    target_train, target_eval = _task(run, target, "train"), _task(run, target, "eval")
    models: dict[tuple[str, ...], ModelBundle] = {}

    def runner(combo):
        tasks = [target_train] + [_task(run, n, "train") for n in combo]
        bundle = _bundle(run, cfg, vocab, {t.name: t.label_set for t in tasks}, seed)
        models[combo], _ = train_mtl(bundle, tasks, cfg.mtl, vocab, seed)
        return evaluate_task(models[combo], target_eval, vocab).macro_f1

    def ft_runner(combo):
        tuned, _ = finetune(models[combo], target_train, cfg.mtl, vocab, seed)
        return evaluate_task(tuned, target_eval, vocab).macro_f1

    rows = sweep(spec, runner, ft_runner)
    table = render_sweep(rows, target)
    run.produce("sweep", run.dir / "sweep.md").write_text(table, encoding="utf-8")
    (run.dir / "sweep.json").write_text(json.dumps(
        [{"tasks": list(r.tasks), "ft": r.ft, "name": r.name, "score": r.score} for r in rows], indent=2) + "\n")
    print(table, end="")


def cmd_report(args, cfg, run, seed) -> None:
    if not args.runs:
        raise ConfigError("report needs at least one run directory")
    results = {}
    for d in args.runs:
        data = json.loads(run.input(f"results:{Path(d).name}", Path(d) / "results.json").read_text())
        results[Path(d).name] = {(s["task"], s["split"]): s["macro_f1"] for s in data["scores"]}
    table = compare_runs(results)
    run.produce("report", run.dir / "report.md").write_text(table, encoding="utf-8")
    print(table, end="")


COMMANDS: dict[str, tuple[Callable, str]] = {
    "preprocess": (cmd_preprocess, "normalize raw datasets and the domain corpus"),
    "build-vocab": (cmd_build_vocab, "build the word vocabulary from preprocessed text"),
    "compile-tasks": (cmd_compile_tasks, "compile records into task datasets and split the target"),
    "pretrain": (cmd_pretrain, "MLM further pre-training (tapt, dapt, dapt+tapt)"),
    "mtl": (cmd_mtl, "multi-task training over homogeneous batches"),
    "finetune": (cmd_finetune, "single-task fine-tuning on the target"),
    "evaluate": (cmd_evaluate, "macro-F1 of a checkpoint or a predictions file"),
    "sweep": (cmd_sweep, "incremental auxiliary-dataset combination search"),
    "report": (cmd_report, "compare results of several runs as a markdown table"),
}
NO_CONFIG = {"report", "evaluate"}


# -- argument parsing ------------------------------------------------------------

class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mtlforge", description="Desk-scale MLM pre-training and multi-task training pipeline.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="experiment config (JSON)")
        p.add_argument("--seed", type=int, help=f"overrides ${SEED_ENV} and the config seed")
        p.add_argument("--out", help="parent directory for run directories")
        p.add_argument("--from", dest="parent", help="run directory whose artifacts this stage consumes")
        if name == "pretrain":
            p.add_argument("--mode", choices=PRETRAIN_MODES)
        if name == "evaluate":
            p.add_argument("--predictions", help="JSON with 'preds', 'golds', 'label_set'")
        if name == "sweep":
            p.add_argument("--beam", type=int)
            p.add_argument("--stages", type=int)
            p.add_argument("--ft", action=argparse.BooleanOptionalAction, default=None)
        if name == "report":
            p.add_argument("runs", nargs="*", help="run directories holding results.json")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    run = None
    try:
        if args.config:
            cfg = ExperimentConfig.load(args.config)
        elif args.command in NO_CONFIG:
            cfg = ExperimentConfig()
        else:
            raise ConfigError(f"{args.command} needs --config")
        seed, source = resolve_seed(args.seed, cfg.seed)
        run = Run(args.command, cfg, seed, source, args.out or cfg.out, Path(args.parent) if args.parent else None)
        COMMANDS[args.command][0](args, cfg, run, seed)
        run.finish()
        print(run.dir)
        return EXIT_OK
    except (ContractError, KeyError) as exc:
        code, message = EXIT_CONTRACT, f"error: {exc}"
    except OSError as exc:
        code, message = EXIT_IO, f"I/O error: {exc}"
    print(message, file=sys.stderr)
    if run is not None:
        run.finish(status=f"failed ({message})")
    return code


if __name__ == "__main__":
    sys.exit(main())
