import numpy as np
import pytest

from roadmap.core import DomainError, RankingInstance, cosine_similarity_matrix
from roadmap.decomp import BatchAssignment, calibration_stats
from roadmap.metrics import evaluate
from roadmap.surrogates import LossConfig
from roadmap.train import (
    CheckpointError,
    OptimizerConfig,
    OptimizerState,
    SyntheticConfig,
    TrainConfig,
    category_pair_batches,
    embed,
    generate_synthetic,
    holdout_split,
    load_checkpoint,
    m_per_class_batches,
    optimizer_step,
    read_csv,
    save_checkpoint,
    train,
    write_csv,
)


@pytest.fixture(scope="module")
def data():
    return generate_synthetic(SyntheticConfig(8, 16, 32, 0.1, seed=7))


def test_noise_free_samples_equal_means():
    x, y = generate_synthetic(SyntheticConfig(3, 4, 5, 0.0, seed=1))
    for c in range(3):
        assert np.ptp(x[y == c], axis=0).max() == 0.0


def test_synthetic_deterministic_and_separable(data):
    x2, y2 = generate_synthetic(SyntheticConfig(8, 16, 32, 0.1, seed=7))
    assert np.array_equal(data[0], x2) and np.array_equal(data[1], y2)
    assert evaluate(data[0], data[1]).map_at_r >= 0.9
    with pytest.raises(DomainError):
        SyntheticConfig(classes=1)


def test_csv_round_trip(tmp_path, data):
    p = tmp_path / "d.csv"
    write_csv(p, *data)
    x, y = read_csv(p)
    assert np.array_equal(x, data[0]) and np.array_equal(y, data[1])
    p.write_text("label,f0,f1\n0,1.0,2.0\n1,oops,3.0\n")
    with pytest.raises(DomainError, match=r"d\.csv:3:"):
        read_csv(p)


def test_holdout_is_stratified():
    y = np.repeat(np.arange(4), 8)
    tr, te = holdout_split(y, 0.25, seed=0)
    assert np.bincount(y[te]).tolist() == [2, 2, 2, 2]
    assert np.intersect1d(tr, te).size == 0 and tr.size + te.size == 32


def test_m_per_class_batches():
    y = np.repeat(np.arange(4), 8)
    batches = m_per_class_batches(y, 8, 4, seed=3)
    for b in batches:
        assert b.size == 8
        assert sorted(np.bincount(y[b])[np.bincount(y[b]) > 0].tolist()) == [4, 4]
    again = m_per_class_batches(y, 8, 4, seed=3)
    assert all(np.array_equal(a, b) for a, b in zip(batches, again))
    for bad in ((8, 1), (10, 4), (32, 4)):
        with pytest.raises(DomainError):
            m_per_class_batches(y, *bad)


def test_category_pairs():
    y = np.repeat(np.arange(8), 4)
    cats = {c: c // 4 for c in range(8)}
    batches = category_pair_batches(y, cats, 8, 2, seed=0)
    assert batches and all({cats[c] for c in y[b]} <= {0, 1} for b in batches)
    cats3 = {c: c % 3 for c in range(8)}
    b3 = category_pair_batches(y, cats3, 4, 2, seed=0)
    pairs = {frozenset(cats3[c] for c in y[b]) for b in b3}
    assert len({p for p in pairs if len(p) == 2}) == 3
    assert all(np.array_equal(a, b) for a, b in zip(b3, category_pair_batches(y, cats3, 4, 2, seed=0)))


def test_optimizer_examples():
    p = np.ones((2, 2))
    sgd = OptimizerConfig(kind="sgd", lr=0.1)
    new, _ = optimizer_step(p, np.zeros((2, 2)), OptimizerState.zeros("sgd", p.shape), 0.1, sgd)
    assert np.array_equal(new, p)
    new, st = optimizer_step(p, np.ones((2, 2)), OptimizerState.zeros("sgd", p.shape), 0.1, sgd)
    np.testing.assert_allclose(new, p - 0.1)
    adam = OptimizerConfig(lr=1e-3)
    new, _ = optimizer_step(p, np.ones((2, 2)), OptimizerState.zeros("adam", p.shape), 1e-3, adam)
    np.testing.assert_allclose(p - new, 1e-3, rtol=1e-6)
    with pytest.raises(DomainError):
        optimizer_step(p, np.ones(3), OptimizerState.zeros("adam", p.shape), 1e-3, adam)


def test_step_decay():
    cfg = OptimizerConfig(lr=1.0)
    assert [cfg.lr_at(e, 10) for e in (0, 5, 6, 7, 8, 9)] == pytest.approx([1, 1, 0.3, 0.3, 0.09, 0.09])


def test_checkpoint_round_trip_and_errors(tmp_path):
    w = np.random.default_rng(0).standard_normal((5, 3))
    p = tmp_path / "m.bin"
    save_checkpoint(w, p)
    assert np.array_equal(load_checkpoint(p), w)
    raw = p.read_bytes()
    p.write_bytes(raw[:10])
    with pytest.raises(CheckpointError, match="truncated header"):
        load_checkpoint(p)
    p.write_bytes(raw[:-8])
    with pytest.raises(CheckpointError, match="truncated payload"):
        load_checkpoint(p)
    p.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(CheckpointError, match="magic") as err:
        load_checkpoint(p)
    assert err.value.offset == 0
    p.write_bytes(raw)
    with pytest.raises(CheckpointError, match="dimension"):
        load_checkpoint(p, expected_shape=(3, 5))


def _small_cfg(**kw):
    base = dict(epochs=3, batch_size=16, m=4, embed_dim=8, seed=2)
    base.update(kw)
    return TrainConfig(**base)


def test_zero_lr_keeps_params(data):
    cfg = _small_cfg(optimizer=OptimizerConfig(lr=0.0))
    w0 = np.random.default_rng(0).standard_normal((32, 8))
    w, hist = train(*data, cfg, params=w0)
    assert np.array_equal(w, w0)
    assert np.ptp(hist.losses()) < 0.05


def test_training_is_deterministic(data):
    cfg = _small_cfg()
    tr, te = holdout_split(data[1], 0.25, 0)
    a = train(data[0][tr], data[1][tr], cfg, data[0][te], data[1][te])
    b = train(data[0][tr], data[1][tr], cfg, data[0][te], data[1][te])
    assert np.array_equal(a[0], b[0]) and a[1].to_jsonl() == b[1].to_jsonl()
    assert "dg" in a[1].epochs[-1] and "metrics" in a[1].epochs[-1]


@pytest.mark.parametrize("loss", ["supap", "smoothap", "roadmap"])
def test_loss_decreases(loss):
    x, y = generate_synthetic(SyntheticConfig(8, 16, 32, 0.3, seed=0))
    _, hist = train(x, y, _small_cfg(loss=loss, epochs=20, optimizer=OptimizerConfig(lr=3e-3)))
    ls = hist.losses()
    assert ls[-3:].mean() < ls[:3].mean()


def test_calibration_only_meets_thresholds(data):
    x, y = data
    cfg = _small_cfg(loss="calibration", epochs=60, batch_size=32, loss_cfg=LossConfig(lambda_=1.0),
                     optimizer=OptimizerConfig(lr=1e-2))
    w, _ = train(x, y, cfg)
    sim = cosine_similarity_matrix(embed(x, w))
    pos_ok = neg_ok = total_p = total_n = 0
    for i in range(0, y.size, 7):
        others = np.delete(np.arange(y.size), i)
        inst = RankingInstance(others[y[others] == y[i]], others[y[others] != y[i]], i)
        st = calibration_stats(sim[i], inst, BatchAssignment(np.zeros(y.size, dtype=int), 1), 0.9, 0.6)
        pos_ok += st.g_plus[0]
        neg_ok += st.g_minus[0]
        total_p += st.g_plus[0] + st.e_plus[0]
        total_n += st.g_minus[0] + st.e_minus[0]
    assert pos_ok / total_p > 0.95 and neg_ok / total_n > 0.95
