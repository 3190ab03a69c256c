import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtlforge.errors import ContractError
from mtlforge.tokenizer import Vocab, build_vocab, decode, encode, tokenize


@pytest.fixture
def ab():
    return build_vocab(["a a b"])


def test_ordering_rule(ab):
    assert ab.id_of["a"] == 5 and ab.id_of["b"] == 6 and len(ab) == 7


def test_min_freq():
    v = build_vocab(["a a b"], min_freq=2)
    assert "a" in v and "b" not in v


def test_rebuild_is_byte_identical(tmp_path):
    build_vocab(["x y y z"]).save(tmp_path / "1.tsv")
    build_vocab(["x y y z"]).save(tmp_path / "2.tsv")
    assert (tmp_path / "1.tsv").read_bytes() == (tmp_path / "2.tsv").read_bytes()


def test_empty_corpus():
    with pytest.raises(ContractError):
        build_vocab([])


def test_encode_format(ab):
    assert encode("a b", ab, 6) == ([2, 5, 6, 3, 0, 0], [1, 1, 1, 1, 0, 0])
    assert encode("zzz", ab, 4)[0] == [2, 1, 3, 0]


def test_truncation_keeps_sep(ab):
    ids, mask = encode(" ".join(["a"] * 100), ab, 8)
    assert len(ids) == 8 and ids[-1] == 3 and all(mask)


def test_decode(ab):
    assert decode([2, 3], ab) == ""
    with pytest.raises(ContractError):
        decode([99], ab)


def test_vocab_file_round_trip_and_validation(tmp_path, ab):
    ab.save(tmp_path / "v.tsv")
    assert Vocab.load(tmp_path / "v.tsv") == ab
    (tmp_path / "bad.tsv").write_text("[PAD]\t0\n[UNK]\t1\n[CLS]\t2\n[SEP]\t3\n[MASK]\t4\na\t5\na\t6\n")
    with pytest.raises(ContractError):
        Vocab.load(tmp_path / "bad.tsv")


def test_mask_tokens_survive():
    assert tokenize("[USER] said hi!") == ["[user]", "said", "hi", "!"]


WORDS = ["cat", "dog", "the", "[user]", "!", "run", "x1"]
VOCAB = build_vocab([" ".join(WORDS)])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(WORDS), max_size=10), st.integers(2, 16))
def test_encode_invariants_and_round_trip(words, max_len):
    text = " ".join(words)
    ids, mask = encode(text, VOCAB, max_len)
    assert len(ids) == len(mask) == max_len
    assert all((m == 1) == (i != 0) for i, m in zip(ids, mask))
    if len(words) <= max_len - 2:
        assert decode(ids, VOCAB) == " ".join(tokenize(text))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.text(alphabet="abc ", max_size=8), min_size=1, max_size=6), st.randoms())
def test_vocab_independent_of_text_order(texts, rnd):
    shuffled = texts[:]
    rnd.shuffle(shuffled)
    assert build_vocab(texts) == build_vocab(shuffled)
