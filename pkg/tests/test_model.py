import numpy as np
import pytest

from mtlforge import numerics as nx
from mtlforge.errors import CheckpointError, ConfigError, ContractError
from mtlforge.model import EncoderConfig, ModelBundle, load_checkpoint, parameter_count, read_checkpoint, save_checkpoint

CFG = EncoderConfig(vocab_size=30, d_model=32, n_heads=2, n_layers=2, d_ff=64, max_len=8, dropout=0.0)
TARGET = ("ind", "grp", "unt", "oth")


def batch(seed=0, b=2):
    rng = np.random.default_rng(seed)
    ids = rng.integers(5, 30, size=(b, 8))
    mask = np.ones((b, 8), dtype=np.int64)
    ids[:, 0] = 2
    ids[0, 5:] = 0
    mask[0, 5:] = 0
    return ids, mask


@pytest.fixture
def bundle():
    return ModelBundle(CFG, heads={"target": TARGET, "hs": ("no", "yes")}, seed=1)


def test_config_validation():
    with pytest.raises(ConfigError):
        EncoderConfig(vocab_size=10, d_model=30, n_heads=4)
    with pytest.raises(ConfigError):
        EncoderConfig(vocab_size=10, max_len=1)


def test_encode_shape(bundle):
    ids, mask = batch()
    assert bundle.encode(ids, mask).shape == (2, 8, 32)


def test_encode_rejects_bad_ids(bundle):
    ids, mask = batch()
    ids[0, 1] = 30
    with pytest.raises(ContractError):
        bundle.encode(ids, mask)


def test_attention_rows_sum_to_one_over_real_keys():
    ids, mask = batch()
    pad = (mask == 0)[:, None, None, :]
    scores = nx.masked_fill(nx.Tensor(np.random.default_rng(0).normal(size=(2, 2, 8, 8))), pad, -np.inf)
    p = nx.softmax(scores).data
    np.testing.assert_allclose(p.sum(-1), 1.0, atol=1e-9)
    assert (p[0, :, :, 5:] == 0).all()


def test_pad_tokens_do_not_leak(bundle):
    ids, mask = batch()
    before = bundle.encode(ids, mask).data
    ids2 = ids.copy()
    ids2[0, 5:] = 17
    after = bundle.encode(ids2, mask).data
    np.testing.assert_array_equal(before[0, :5], after[0, :5])
    np.testing.assert_array_equal(before[1], after[1])


def test_mlm_logits_shape_and_tying(bundle):
    ids, mask = batch()
    hidden = bundle.encode(ids, mask)
    logits = bundle.mlm_logits(hidden).data
    assert logits.shape == (2, 8, 30)
    bundle.params["embeddings.token"].data[7] += 0.5
    changed = bundle.mlm_logits(hidden).data != logits
    assert changed[..., 7].all() and not np.delete(changed, 7, axis=-1).any()


def test_zero_hidden_gives_bias(bundle):
    bundle.params["mlm.bias"].data[:] = np.arange(30.0)
    out = bundle.mlm_logits(nx.Tensor(np.zeros((1, 8, 32)))).data
    np.testing.assert_array_equal(out[0, 3], np.arange(30.0))


def test_classify(bundle):
    ids, mask = batch()
    assert bundle.classify("target", ids, mask).shape == (2, 4)
    with pytest.raises(KeyError, match="registered"):
        bundle.classify("xyz", ids, mask)


def test_tasks_share_encoder_activations(bundle):
    ids, mask = batch()
    hidden = bundle.encode(ids, mask)
    np.testing.assert_array_equal(bundle.classify("target", ids, mask).data, bundle.head_logits("target", hidden).data)
    np.testing.assert_array_equal(bundle.classify("hs", ids, mask).data, bundle.head_logits("hs", hidden).data)


def test_parameter_count_closed_form(bundle):
    assert bundle.parameter_count() == parameter_count(CFG, {"target": 4, "hs": 2})


def test_dropout_determinism():
    b = ModelBundle(EncoderConfig(vocab_size=30, max_len=8, dropout=0.3), seed=2)
    ids, mask = batch()
    b.training = True
    x1 = b.encode(ids, mask, nx.Rng(5)).data
    x2 = b.encode(ids, mask, nx.Rng(5)).data
    x3 = b.encode(ids, mask, nx.Rng(6)).data
    np.testing.assert_array_equal(x1, x2)
    assert not np.array_equal(x1, x3)
    b.training = False
    np.testing.assert_array_equal(b.encode(ids, mask, nx.Rng(5)).data, b.encode(ids, mask).data)


def test_every_parameter_receives_gradient(bundle):
    ids, mask = batch(3, b=4)
    hidden = bundle.encode(ids, mask)
    labels = np.where(mask == 1, ids, -100)
    loss = nx.cross_entropy(bundle.mlm_logits(hidden), labels)
    loss = loss + nx.cross_entropy(bundle.head_logits("target", hidden), [0, 1, 2, 3])
    loss = loss + nx.cross_entropy(bundle.head_logits("hs", hidden), [0, 1, 1, 0])
    loss.backward()
    dead = [n for n, p in bundle.params.items() if p.grad is None or not np.any(p.grad)]
    assert dead == []


def test_encoder_gradient_matches_finite_differences():
    small = ModelBundle(EncoderConfig(vocab_size=12, d_model=4, n_heads=2, n_layers=1, d_ff=6, max_len=4,
                                      dropout=0.0), heads={"t": ("a", "b")}, seed=0)
    for p in small.params.values():
        p.data += np.random.default_rng(0).normal(0, 0.3, p.shape)
    ids = np.array([[2, 6, 3, 0], [2, 7, 8, 3]])
    mask = (ids != 0).astype(int)
    names = ["layers.0.attn.q.weight", "layers.0.ff.in.weight", "heads.t.weight", "embeddings.ln.gain"]

    def f(*tensors):
        for n, t in zip(names, tensors):
            small.params[n] = t
        return nx.cross_entropy(small.classify("t", ids, mask), [0, 1])

    err = nx.check_gradients(f, [small.params[n] for n in names])
    assert err < 1e-4


def test_checkpoint_round_trip(tmp_path, bundle):
    ids, mask = batch()
    save_checkpoint(bundle, tmp_path / "m.ckpt")
    loaded = load_checkpoint(tmp_path / "m.ckpt")
    np.testing.assert_array_equal(loaded.classify("target", ids, mask).data, bundle.classify("target", ids, mask).data)
    assert loaded.head_labels == bundle.head_labels


def test_truncated_checkpoint_names_array(tmp_path, bundle):
    save_checkpoint(bundle, tmp_path / "m.ckpt")
    raw = (tmp_path / "m.ckpt").read_bytes()
    (tmp_path / "cut.ckpt").write_bytes(raw[:-100])
    with pytest.raises(CheckpointError, match="truncated"):
        read_checkpoint(tmp_path / "cut.ckpt")


def test_corrupted_checkpoint_names_array(tmp_path, bundle):
    save_checkpoint(bundle, tmp_path / "m.ckpt")
    raw = bytearray((tmp_path / "m.ckpt").read_bytes())
    raw[-3] ^= 0xFF
    (tmp_path / "bad.ckpt").write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match=r"array '.*' failed its checksum"):
        read_checkpoint(tmp_path / "bad.ckpt")


def test_head_map_change_keeps_encoder(tmp_path, bundle):
    save_checkpoint(bundle, tmp_path / "m.ckpt")
    loaded = load_checkpoint(tmp_path / "m.ckpt", heads={"target": TARGET, "edosA": ("not sexist", "sexist")})
    before, after = set(bundle.params), set(loaded.params)
    assert before - after == {"heads.hs.weight", "heads.hs.bias"}
    assert after - before == {"heads.edosA.weight", "heads.edosA.bias"}
    for name in before & after:
        np.testing.assert_array_equal(loaded.params[name].data, bundle.params[name].data)


def test_config_mismatch_rejected(tmp_path, bundle):
    save_checkpoint(bundle, tmp_path / "m.ckpt")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "m.ckpt", config=EncoderConfig(vocab_size=31, max_len=8, dropout=0.0))
