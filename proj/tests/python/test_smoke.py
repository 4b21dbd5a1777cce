import numpy as np
import pytest

import ofrep


def test_grad_check_below_tolerance():
    for seed in (1, 2, 3):
        assert ofrep.grad_check(seed) < 1e-4


def test_triplet_loss_values():
    a = np.zeros(2)
    assert ofrep.triplet_loss(a, np.ones(2), a, 0.5) == pytest.approx(2.5)
    assert ofrep.triplet_loss(a, a, np.ones(2), 0.5) == 0.0


def test_failure_rate_random_and_perfect():
    rng = np.random.default_rng(0)
    emb = rng.normal(size=(3000, 8))
    trip = np.arange(3000).reshape(-1, 3)
    r = ofrep.failure_rate(emb, trip)
    assert r.n == 1000
    assert 0.4 < r.rate < 0.6

    emb = np.repeat([[1.0, 0.0], [-1.0, 0.0]], 5, axis=0)
    trip = np.array([[0, 1, 5], [6, 7, 2]])
    assert ofrep.failure_rate(emb, trip).rate == 0.0


def test_kmeans_and_elbow_on_blobs():
    rng = np.random.default_rng(1)
    centres = np.array([[0, 0], [10, 0], [0, 10]], dtype=float)
    pts = np.vstack([c + 0.3 * rng.normal(size=(40, 2)) for c in centres])
    model = ofrep.kmeans(pts, 3, seed=2)
    labels = np.array(model["labels"])
    truth = np.repeat([0, 1, 2], 40)
    assert ofrep.adjusted_rand_index(labels.tolist(), truth.tolist()) == pytest.approx(1.0)
    e = ofrep.elbow(pts, 1, 8, seed=3)
    assert e["k_star"] == 3
    proj, ratio = ofrep.pca(pts, 2)
    assert proj.shape == (120, 2)
    assert ratio.sum() == pytest.approx(1.0)


def test_indicators_closed_form():
    n = 50
    d = ofrep.indicators(
        t=list(range(n)), side=[1] * n, q_filled=[5] * n, q_intended=[10] * n, modif=[0] * n,
        best_bid=[100] * n, best_ask=[102] * n, bid_qty=[30] * n, ask_qty=[70] * n)
    assert set(d) == set(ofrep.indicator_names())
    assert d["frequency"] == pytest.approx(60.0)
    assert d["fill_rate"] == pytest.approx(0.5)
    assert d["direction"] == 1.0
    assert d["qs"] == 70.0


def test_errors_raise_value_error():
    with pytest.raises(ValueError):
        ofrep.failure_rate(np.zeros((2, 2)), np.zeros((0, 3), dtype=np.int64))


def test_small_pipeline(tmp_path):
    c = ofrep.Config()
    c.seed = 5
    c.n_agents = 4
    c.n_days = 5
    c.train_triplets = 200
    c.test_triplets = 200
    c.hidden = (6, 3)
    c.epochs = 1
    c.k_max = 4
    ofrep.run_all(c, str(tmp_path))
    for name in ("orders.csv", "model.json", "eval.csv", "assignments.csv", "report.md"):
        assert (tmp_path / name).exists()
    emb = ofrep.embed(str(tmp_path / "model.json"), str(tmp_path / "orders.csv"), str(tmp_path / "windows.csv"))
    assert emb.shape[1] == 3
    assert np.isfinite(emb).all()
