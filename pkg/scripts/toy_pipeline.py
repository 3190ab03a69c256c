"""Write a small EDOS-shaped project and drive the whole CLI chain over it.

Creates ``<dir>/data`` (EDOS A/B/C labels, an auxiliary hate-speech file and a
domain corpus) plus ``<dir>/exp.json``, then runs preprocess, build-vocab,
compile-tasks, pretrain, mtl, finetune, evaluate, sweep and report, printing
each run directory.
"""

import argparse
import csv
import json
from pathlib import Path

from mtlforge.cli import main as cli
from mtlforge.corpus import load_task_schemas
from mtlforge.numerics import Rng

FILLER = "today really just so very quite kind of honestly again".split()
NEUTRAL = ("the weather is", "my cat likes", "this game was", "the match felt")
SEXIST = ("women should", "girls cannot", "she only got", "females always")


def write_project(root: Path, n: int, seed: int) -> Path:
    data = root / "data"
    data.mkdir(parents=True, exist_ok=True)
    schemas = load_task_schemas()
    c_labels = schemas["edosC"].label_set
    parents = schemas["edosC"].parent_map
    rng = Rng(seed).split("toy-project")
    with open(data / "edos.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["rewire_id", "text", "label_sexist", "label_category", "label_vector"])
        w.writeheader()
        for i in range(n):
            sexist = i % 3 == 0
            lead = (SEXIST if sexist else NEUTRAL)[int(rng.integers(0, 4))]
            tail = " ".join(FILLER[j] for j in rng.integers(0, len(FILLER), size=4))
            handle = "@someone " if rng.random() < 0.3 else ""
            c = c_labels[int(rng.integers(0, len(c_labels)))] if sexist else "none"
            w.writerow({"rewire_id": f"sexism2022_english-{i}", "text": f"{handle}{lead} {tail} \U0001F602",
                        "label_sexist": "sexist" if sexist else "not sexist",
                        "label_category": parents[c] if sexist else "none", "label_vector": c})
    with open(data / "measuring_hs.jsonl", "w", encoding="utf-8") as fh:
        for i in range(n // 2):
            hateful = i % 2 == 1
            text = f"{'you people are awful' if hateful else 'you people are lovely'} {FILLER[i % len(FILLER)]}"
            fh.write(json.dumps({"comment_id": i, "text": text, "hate": int(hateful)}) + "\n")
    lines = [f"{lead} {' '.join(FILLER[j] for j in rng.integers(0, len(FILLER), size=3))}"
             for _ in range(4 * n) for lead in [(SEXIST + NEUTRAL)[int(rng.integers(0, 8))]]]
    (data / "domain.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    config = {
        "version": 1,
        "seed": seed,
        "datasets": {
            "edos": {"path": "data/edos.csv", "columns": {"id": "rewire_id", "text": "text", "labels": {
                "label_sexist": "label_sexist", "label_category": "label_category", "label_vector": "label_vector"}}},
            "measuring_hs": {"path": "data/measuring_hs.jsonl",
                             "columns": {"id": "comment_id", "text": "text", "labels": {"hate": "hate"}}},
        },
        "domain": "data/domain.txt",
        "out": "runs",
        "norm": {"masks": True, "emoji": True, "hashtags": False},
        "encoder": {"d_model": 32, "n_heads": 2, "n_layers": 2, "d_ff": 64, "max_len": 24, "dropout": 0.1},
        "tasks": ["edosA", "edosB", "edosC", "hs"],
        "target": "edosA",
        "tapt": {"max_epochs": 3, "lr": 1e-3},
        "dapt": {"max_epochs": 2, "lr": 1e-3},
        "mtl": {"batch_size": 8, "lr": 1e-3, "epochs": 4, "ft_lr": 3e-4, "ft_epochs": 2},
        "mtl_tasks": ["edosA", "hs"],
        "sweep": {"candidates": ["hs", "edosB"], "beam": 2, "stages": 2, "ft": True},
    }
    path = root / "exp.json"
    path.write_text(json.dumps(config, indent=2) + "\n")
    return path


def step(*argv) -> Path:
    from contextlib import redirect_stdout
    from io import StringIO
    buf = StringIO()
    with redirect_stdout(buf):
        code = cli(list(argv))
    out = buf.getvalue().strip().splitlines()
    if code != 0:
        raise SystemExit(f"{argv[0]} failed with exit code {code}")
    for line in out[:-1]:
        print("   ", line)
    print(f"{argv[0]:>14}: {out[-1]}")
    return Path(out[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("dir", type=Path)
    parser.add_argument("--n", type=int, default=240)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mode", default="dapt+tapt", choices=("tapt", "dapt", "dapt+tapt"))
    args = parser.parse_args()
    cfg = str(write_project(args.dir, args.n, args.seed))
    r = step("preprocess", "--config", cfg)
    r = step("build-vocab", "--config", cfg, "--from", str(r))
    compiled = step("compile-tasks", "--config", cfg, "--from", str(r))
    pre = step("pretrain", "--config", cfg, "--mode", args.mode, "--from", str(compiled))
    mtl = step("mtl", "--config", cfg, "--from", str(pre))
    ft = step("finetune", "--config", cfg, "--from", str(mtl))
    step("evaluate", "--config", cfg, "--from", str(ft))
    step("sweep", "--config", cfg, "--from", str(pre))
    step("report", "--out", str(args.dir / "runs"), str(mtl), str(ft))


if __name__ == "__main__":
    main()
