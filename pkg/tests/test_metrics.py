import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtlforge.errors import ContractError
from mtlforge.metrics import ablation_table, compare_runs, macro_f1, mtl_table


def brute_force_macro_f1(preds, golds, labels):
    total = 0.0
    for lab in labels:
        tp = sum(1 for p, g in zip(preds, golds) if p == lab and g == lab)
        fp = sum(1 for p, g in zip(preds, golds) if p == lab and g != lab)
        fn = sum(1 for p, g in zip(preds, golds) if p != lab and g == lab)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        total += 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return total / len(labels)


@st.composite
def instances(draw):
    k = draw(st.integers(1, 11))
    labels = [f"c{i}" for i in range(k)]
    n = draw(st.integers(1, 50))
    golds = draw(st.lists(st.sampled_from(labels), min_size=n, max_size=n))
    preds = draw(st.lists(st.sampled_from(labels), min_size=n, max_size=n))
    return preds, golds, labels


def test_perfect():
    assert macro_f1(list("abab"), list("abab"), "ab").macro_f1 == 1.0


def test_worked_example():
    r = macro_f1(["A", "B", "B", "B"], ["A", "A", "B", "B"], ["A", "B"])
    assert r.per_class["A"][2] == pytest.approx(2 / 3)
    assert r.per_class["B"][2] == pytest.approx(0.8)
    assert r.macro_f1 == pytest.approx((2 / 3 + 0.8) / 2)


def test_zero_support_class_counts():
    r = macro_f1(["A", "B"], ["A", "B"], ["A", "B", "C"])
    assert r.per_class["C"] == (0.0, 0.0, 0.0, 0)
    assert r.macro_f1 == pytest.approx(2 / 3)
    assert r.confusion.sum() == r.n == 2


def test_contract_errors():
    with pytest.raises(ContractError):
        macro_f1(["A"], ["A", "B"], "AB")
    with pytest.raises(ContractError, match="not in label set"):
        macro_f1(["Z"], ["A"], "AB")


@settings(max_examples=200, deadline=None)
@given(instances())
def test_matches_brute_force(inst):
    preds, golds, labels = inst
    assert abs(macro_f1(preds, golds, labels).macro_f1 - brute_force_macro_f1(preds, golds, labels)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(instances(), st.randoms())
def test_permutation_and_relabel_invariance(inst, rnd):
    preds, golds, labels = inst
    base = macro_f1(preds, golds, labels).macro_f1
    pairs = list(zip(preds, golds))
    rnd.shuffle(pairs)
    assert macro_f1([p for p, _ in pairs], [g for _, g in pairs], labels).macro_f1 == pytest.approx(base, abs=1e-12)
    new = labels[:]
    rnd.shuffle(new)
    m = dict(zip(labels, new))
    relabelled = macro_f1([m[p] for p in preds], [m[g] for g in golds], [m[x] for x in labels])
    assert relabelled.macro_f1 == pytest.approx(base, abs=1e-12)


def test_result_values_in_unit_interval():
    rng = np.random.default_rng(0)
    r = macro_f1(list(rng.choice(list("abc"), 30)), list(rng.choice(list("abc"), 30)), "abc")
    for p, rec, f, _ in r.per_class.values():
        assert 0 <= p <= 1 and 0 <= rec <= 1 and 0 <= f <= 1


COLS = [(t, s) for t in ("Task A", "Task B", "Task C") for s in ("eval", "dev", "test")]


def test_compare_runs_single_row_all_bold():
    table = compare_runs({"run": {c: 0.5 for c in COLS}})
    row = table.splitlines()[2]
    assert row.count("**0.5000**") == 9


def test_compare_runs_ties_and_shape():
    a = {c: 0.1 * i for i, c in enumerate(COLS)}
    b = dict(a)
    b[COLS[0]] = -1.0
    table = compare_runs({"2M": a, "2M+HS": b}, baselines={"Baseline": {c: 0.0 for c in COLS}})
    lines = table.splitlines()
    assert lines[0].startswith("| Run | Task A eval | Task A dev | Task A test | Task B eval")
    data_rows = [l for l in lines[2:] if l.split("|")[1].strip()]
    assert all(len(l.strip("|").split("|")) == 10 for l in data_rows)
    # tied columns are bold in both runs
    assert lines[4].count("**") == lines[5].count("**") + 2


def test_compare_runs_inconsistent_axes():
    with pytest.raises(ContractError):
        compare_runs({"a": {("A", "eval"): 1.0}, "b": {("B", "eval"): 1.0}})


def test_ablation_and_mtl_tables():
    t = ablation_table([(True, False, False, 0.8110), (True, True, False, 0.8172)])
    assert "| + | + | - | **0.8172** |" in t
    m = mtl_table([("A", "offensive + FT", {"eval": 0.85}), ("A", "hs", {"eval": 0.84})])
    assert "| A | offensive + FT | **0.8500** |" in m
