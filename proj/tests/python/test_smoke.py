import math

import numpy as np
import pytest

import wmagin


def test_aggregators_on_two_messages():
    x = np.array([[0.0], [0.2], [0.2]])
    y = np.array([[0.0], [0.0], [0.4]])
    nb = [[1, 2], [0], [0]]
    assert wmagin.aggregate_sum(x, nb)[0, 0] == pytest.approx(0.4)
    assert wmagin.aggregate_sum(y, nb)[0, 0] == pytest.approx(0.4)
    assert wmagin.aggregate_mean(y, nb)[0, 0] == pytest.approx(0.2)
    e = math.exp(0.4)
    assert wmagin.aggregate_softmax(y, nb)[0, 0] == pytest.approx(0.4 * e / (1 + e), abs=1e-14)


def test_cycle_neighbors():
    nb = wmagin.cycle_neighbors(5)
    assert nb[0] == [1, 4]
    assert all(len(n) == 2 for n in nb)


def test_stage_weights_and_metrics():
    w = wmagin.stage_weights(5)
    assert w == pytest.approx([i / 15 for i in range(1, 6)])
    r = wmagin.report_from_confusion([[9, 1], [5, 5]])
    assert r.wa == pytest.approx(0.7)
    assert r.ua == pytest.approx(0.7)


def test_synthetic_round_trip(tmp_path):
    spec = wmagin.SynthSpec()
    spec.utterances_per_class = 3
    data = wmagin.generate_synthetic(spec)
    assert len(data) == 12
    path = tmp_path / "d.csv"
    wmagin.save_dataset(path, data)
    back = wmagin.load_dataset(path)
    assert [u.utterance_id for u in back] == [u.utterance_id for u in data]
    np.testing.assert_allclose(back[5].frames, data[5].frames, atol=1e-12, rtol=0)


def test_config_defaults():
    cfg = wmagin.parse_config_text("")
    assert cfg.model.graph_len == 120
    assert cfg.model.gin_hidden == 256
    assert cfg.train.batch_size == 128
    assert wmagin.parse_config_text("model.fa_layer_index = 4").model.fa_layer_index == 4


def test_zero_head_forward_gives_uniform_logits():
    cfg = wmagin.ModelConfig()
    cfg.feature_dim = 3
    cfg.graph_len = 5
    cfg.gru_hidden = 2
    cfg.gin_hidden = 4
    ckpt = wmagin.init_checkpoint(cfg, seed=1, zero_heads=True)
    frames = np.random.default_rng(0).normal(size=(12, 3))
    out = ckpt.forward(frames)
    assert len(out) == 3
    assert np.all(out[0]["G"] == 0.0)
    assert len(out[0]["gin"]) == 3


def test_gradient_check():
    r = wmagin.gradient_check()
    assert r.max_rel_error < 1e-4
    assert r.num_checked > 500


def test_short_training_run(tmp_path):
    spec = wmagin.SynthSpec()
    spec.utterances_per_class = 8
    spec.feature_dim = 3
    data = wmagin.generate_synthetic(spec)
    model = wmagin.ModelConfig()
    model.feature_dim = 3
    model.graph_len = 12
    model.gru_hidden = 4
    model.gin_hidden = 8
    train = wmagin.TrainConfig()
    train.max_epochs = 2
    train.batch_size = 16
    result = wmagin.train(data, train, model)
    assert 0.0 <= result["test"].wa <= 1.0
    assert len(result["log"].strip().splitlines()) == 2
    path = tmp_path / "m.json"
    wmagin.save_checkpoint(path, result["checkpoint"])
    again = wmagin.load_checkpoint(path)
    assert again.config.gin_hidden == 8
    assert set(again.parameters()) == set(result["checkpoint"].parameters())


def test_cli_reports_errors():
    code, _, err = wmagin.cli(["eval", "--checkpoint", "/missing.json", "--data", "/missing.csv"])
    assert code != 0
    assert "error" in err
