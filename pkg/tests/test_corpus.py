import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtlforge.corpus import (
    Example,
    SplitSpec,
    TaskDataset,
    TaskSchema,
    TextRecord,
    check_hierarchy,
    compile_task,
    downsample,
    load_dataset,
    load_task_schemas,
    split_train_eval,
)
from mtlforge.errors import CompilationError, ContractError, SchemaError, StratificationError
from mtlforge.textnorm import NormConfig

ROWS = [
    {"rid": "1", "tweet": "@bob you are great", "lab": "IND"},
    {"rid": "2", "tweet": "they all go http://x.io", "lab": "GRP"},
    {"rid": "3", "tweet": "whatever", "lab": "UNT"},
]
COLUMNS = {"id": "rid", "text": "tweet", "labels": {"target": "lab"}}


def write_csv(path, rows, header=("rid", "tweet", "lab")):
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(header))
        w.writeheader()
        w.writerows(rows)


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))


def test_load_csv(tmp_path):
    write_csv(tmp_path / "olid.csv", ROWS)
    res = load_dataset(tmp_path / "olid.csv", COLUMNS, norm=NormConfig(emoji=False))
    assert len(res) == 3 and res.skipped == 0 and res.source == "olid"
    assert res.records[0].labels == {"target": "IND"}
    assert res.records[0].text == "[USER] you are great"
    assert res.records[0].raw_text == "@bob you are great"


def test_empty_text_skipped(tmp_path):
    write_csv(tmp_path / "d.csv", ROWS + [{"rid": "4", "tweet": "  ", "lab": "IND"}])
    res = load_dataset(tmp_path / "d.csv", COLUMNS)
    assert len(res) == 3 and res.skipped == 1


def test_csv_and_jsonl_agree(tmp_path):
    write_csv(tmp_path / "d.csv", ROWS)
    write_jsonl(tmp_path / "d.jsonl", ROWS)
    a = load_dataset(tmp_path / "d.csv", COLUMNS)
    b = load_dataset(tmp_path / "d.jsonl", COLUMNS)
    assert a.records == b.records


def test_tsv_and_malformed_jsonl(tmp_path):
    (tmp_path / "d.tsv").write_text("rid\ttweet\tlab\n1\thello\tIND\n")
    assert len(load_dataset(tmp_path / "d.tsv", COLUMNS)) == 1
    (tmp_path / "d.jsonl").write_text('{"rid": 1, "tweet": "x", "lab": "IND"}\n{broken\n')
    res = load_dataset(tmp_path / "d.jsonl", COLUMNS)
    assert len(res) == 1 and res.skipped == 1


def test_missing_column_lists_available(tmp_path):
    write_csv(tmp_path / "d.csv", ROWS)
    with pytest.raises(SchemaError, match=r"available: \['rid', 'tweet', 'lab'\]"):
        load_dataset(tmp_path / "d.csv", {"text": "body"})


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "nope.csv", COLUMNS)


def records(labels, source="src", field="y"):
    return [TextRecord(str(i), f"text {i}", source, {field: lab}) for i, lab in enumerate(labels)]


def test_compile_target_task_label_set():
    schema = load_task_schemas()["target"]
    recs = [TextRecord(r["rid"], r["tweet"], "hateval", {"target": r["lab"]}) for r in ROWS]
    ds, report = compile_task(recs, schema)
    assert set(ds.label_set) == {"ind", "grp", "unt", "oth"} and len(ds.label_set) == 4
    assert report.kept == 3


def test_compile_binary_preserves_counts():
    schema = TaskSchema("sexism", ("no", "yes"), "y")
    ds, report = compile_task(records(["yes", "no", "yes", "maybe"]), schema)
    assert ds.counts() == Counter({"yes": 2, "no": 1})
    assert report.dropped == Counter({"maybe": 1}) and report.total == 4


def test_compile_merging_labels_sums_counts():
    raw = ["a", "b", "a", "c", "b", "b"]
    schema = TaskSchema("t", ("ab", "c"), "y", mapping={"a": "ab", "b": "ab", "c": "c"})
    ds, _ = compile_task(records(raw), schema)
    assert ds.counts()["ab"] == raw.count("a") + raw.count("b")


def test_compile_empty_is_error():
    with pytest.raises(CompilationError):
        compile_task(records(["x"]), TaskSchema("t", ("a", "b"), "y"))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c", "zz"]), min_size=1, max_size=40))
def test_compile_conserves_examples(raw):
    schema = TaskSchema("t", ("a", "b"), "y", sources=("src",))
    recs = records(raw) + records(["a"], source="other")
    try:
        ds, report = compile_task(recs, schema)
    except CompilationError:
        assert not {"a", "b"} & set(raw)
        return
    assert report.kept + sum(report.dropped.values()) == len(recs)


def task(labels, name="edosA"):
    return TaskDataset(name, tuple(sorted(set(labels) | {"x", "y"}) if len(set(labels)) < 2 else sorted(set(labels))),
                       [Example(str(i), f"t{i}", lab) for i, lab in enumerate(labels)])


def test_split_8020_sizes():
    ds = task(["sexist"] * 3398 + ["not sexist"] * 10602)
    train, ev = split_train_eval(ds, SplitSpec(0.8, seed=1))
    assert (len(train), len(ev)) == (11200, 2800)


def test_split_single_label():
    ds = TaskDataset("t", ("x", "y"), [Example(str(i), "t", "x") for i in range(10)])
    train, ev = split_train_eval(ds)
    assert (len(train), len(ev)) == (8, 2)


def test_split_replay_and_seed_sensitivity():
    ds = task(["a", "b"] * 50)
    ids = lambda s: [e.id for e in split_train_eval(ds, SplitSpec(seed=s))[1].examples]
    assert ids(3) == ids(3)
    assert ids(3) != ids(4)


def test_split_stratification_error():
    with pytest.raises(StratificationError):
        split_train_eval(task(["a", "a", "b"]))


def test_split_unstratified():
    train, ev = split_train_eval(task(["a", "a", "b"] * 10), SplitSpec(stratified=False))
    assert len(train) + len(ev) == 30


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.sampled_from("abcdefghijk"), st.integers(2, 40), min_size=1),
       st.floats(0.05, 0.95), st.integers(0, 1000))
def test_split_properties(sizes, ratio, seed):
    labels = [lab for lab, n in sizes.items() for _ in range(n)]
    ds = task(labels)
    train, ev = split_train_eval(ds, SplitSpec(ratio, seed))
    assert len(train) + len(ev) == len(ds)
    assert {e.id for e in train.examples}.isdisjoint(e.id for e in ev.examples)
    counts = ev.counts()
    for lab, n in sizes.items():
        assert abs(counts[lab] - (1 - ratio) * n) <= 1 + 1e-9


def test_downsample():
    ds = task(["a", "b"] * 20)
    assert sorted(downsample(ds, 40, 0).examples, key=lambda e: e.id) == sorted(ds.examples, key=lambda e: e.id)
    with pytest.raises(ContractError):
        downsample(ds, 0, 0)
    with pytest.raises(ContractError):
        downsample(ds, 41, 0)
    assert downsample(ds, 10, 5).examples == downsample(ds, 10, 5).examples
    assert len(downsample(ds, 10, 5)) == 10


def test_task_file_round_trip(tmp_path):
    ds = task(["a", "b", "a"])
    ds.save(tmp_path / "t.jsonl")
    assert TaskDataset.load(tmp_path / "t.jsonl") == ds


def test_shipped_schema_parent_map_is_consistent():
    schemas = load_task_schemas()
    b, c = schemas["edosB"], schemas["edosC"]
    assert len(b.label_set) == 4 and len(c.label_set) == 11
    assert set(c.parent_map) == set(c.label_set) and set(c.parent_map.values()) == set(b.label_set)


def test_hierarchy_smoke():
    schemas = load_task_schemas()
    parents = schemas["edosC"].parent_map
    c_label = schemas["edosC"].label_set[0]
    a = TaskDataset("edosA", ("not sexist", "sexist"), [Example("1", "t", "sexist"), Example("2", "t", "not sexist")])
    b = TaskDataset("edosB", schemas["edosB"].label_set, [Example("1", "t", parents[c_label])])
    c = TaskDataset("edosC", schemas["edosC"].label_set, [Example("1", "t", c_label)])
    assert check_hierarchy(a, b, c, parents).ok
    b_bad = b.replace([Example("2", "t", parents[c_label])])
    report = check_hierarchy(a, b_bad, c, parents)
    kinds = {v.kind for v in report.violations}
    assert "not_sexist" in kinds and "missing_parent" in kinds
