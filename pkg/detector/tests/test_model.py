import numpy as np
import pytest

from detector.model import (
    IncompatibleFeatureDims,
    ModelSpec,
    ShapeMismatch,
    build_feature_trunk,
    build_fusion_model,
    load_detector,
    predict_distributions,
    predict_one,
    save_detector,
    train_detector,
    train_feature_model,
    train_fusion,
)

from conftest import make_fixture

TINY = ModelSpec(
    num_classes=3,
    dim=12,
    global_units=8,
    global_layers=1,
    local_units=6,
    local_layers=1,
    fusion_units=10,
    fusion_layers=1,
    batch_size=32,
    feature_epochs=3,
    fusion_epochs=2,
)


@pytest.fixture(scope="module")
def tiny_data():
    return make_fixture(n=36, classes=3, tau1=6, tau2=4, dim=12, seed=5, noise=0.2)


@pytest.fixture(scope="module")
def tiny_detector(tiny_data):
    gadgets, attentions, labels, _, _ = tiny_data
    return train_detector(gadgets, attentions, labels, TINY, seed=2)


def test_feature_model_rejects_wrong_shapes(tiny_data):
    gadgets, _, labels, _, _ = tiny_data
    with pytest.raises(ShapeMismatch):
        train_feature_model(gadgets[:, :, :5], labels, "global", TINY, 1)
    with pytest.raises(ShapeMismatch):
        train_feature_model(gadgets, labels, "global", TINY, 1, expected_tau=99)
    with pytest.raises(ShapeMismatch):
        train_feature_model(gadgets[0], labels, "global", TINY, 1)


def test_training_loss_decreases(tiny_data):
    gadgets, _, labels, _, _ = tiny_data
    fm = train_feature_model(gadgets, labels, "global", TINY, seed=3, expected_tau=6)
    losses = fm.history["loss"]
    assert losses[-1] < losses[0]


def test_seeded_determinism(tiny_data):
    gadgets, _, labels, _, _ = tiny_data
    a = train_feature_model(gadgets, labels, "global", TINY, seed=4)
    b = train_feature_model(gadgets, labels, "global", TINY, seed=4)
    assert abs(a.history["loss"][-1] - b.history["loss"][-1]) <= 1e-6


def test_fusion_freezes_feature_weights(tiny_data):
    gadgets, attentions, labels, _, _ = tiny_data
    g = train_feature_model(gadgets, labels, "global", TINY, seed=6)
    l = train_feature_model(attentions, labels, "local", TINY, seed=7)
    g_before = [w.copy() for w in g.trunk.get_weights()]
    l_before = [w.copy() for w in l.trunk.get_weights()]
    train_fusion(g, l, gadgets, attentions, labels, TINY, seed=8)
    for before, after in zip(g_before, g.trunk.get_weights()):
        assert np.array_equal(before, after)
    for before, after in zip(l_before, l.trunk.get_weights()):
        assert np.array_equal(before, after)


def test_incompatible_feature_dims():
    other = ModelSpec(num_classes=3, dim=7, global_units=4, global_layers=1,
                      local_units=4, local_layers=1)
    g = build_feature_trunk(TINY, "global")
    l = build_feature_trunk(other, "local")
    with pytest.raises(IncompatibleFeatureDims):
        build_fusion_model(g, l, TINY)


def test_distributions_are_valid(tiny_detector):
    rng = np.random.default_rng(1)
    gadgets = rng.random((50, 6, 12)).astype("float32")
    attentions = rng.random((50, 4, 12)).astype("float32")
    dists = predict_distributions(tiny_detector.fusion, gadgets, attentions)
    assert dists.shape == (50, 3)
    assert np.all(dists >= 0)
    assert np.allclose(dists.sum(axis=1), 1.0, atol=1e-5)


def test_predict_shape_contract(tiny_detector):
    rng = np.random.default_rng(2)
    good_g = rng.random((2, 6, 12)).astype("float32")
    good_a = rng.random((2, 4, 12)).astype("float32")
    predict_distributions(tiny_detector.fusion, good_g, good_a, tau1=6, tau2=4)
    with pytest.raises(ShapeMismatch):
        predict_distributions(tiny_detector.fusion, good_g, good_a, tau1=9, tau2=4)
    with pytest.raises(ShapeMismatch):
        predict_distributions(tiny_detector.fusion, good_g[:, :, :3], good_a)


def test_predict_one_matches_batch(tiny_detector, tiny_data):
    gadgets, attentions, _, _, _ = tiny_data
    batch = predict_distributions(tiny_detector.fusion, gadgets[:3], attentions[:3])
    single = predict_one(tiny_detector.fusion, gadgets[1], attentions[1])
    assert np.allclose(batch[1], single, atol=1e-6)


def test_masking_invariance_quick(tiny_detector, tiny_data):
    gadgets, attentions, _, _, _ = tiny_data
    base = predict_distributions(tiny_detector.fusion, gadgets[:4], attentions[:4])
    pad_g = np.concatenate([gadgets[:4], np.zeros((4, 3, 12), "float32")], axis=1)
    pad_a = np.concatenate([attentions[:4], np.zeros((4, 2, 12), "float32")], axis=1)
    padded = predict_distributions(tiny_detector.fusion, pad_g, pad_a)
    assert np.abs(base - padded).max() <= 1e-5


def test_save_load_round_trip(tiny_detector, tiny_data, tmp_path):
    gadgets, attentions, _, _, _ = tiny_data
    save_detector(tiny_detector, tmp_path / "ckpt")
    loaded = load_detector(tmp_path / "ckpt")
    assert loaded.tau1 == 6 and loaded.tau2 == 4
    assert loaded.spec.num_classes == 3
    a = predict_distributions(tiny_detector.fusion, gadgets[:5], attentions[:5])
    b = predict_distributions(loaded.fusion, gadgets[:5], attentions[:5])
    assert np.allclose(a, b, atol=1e-6)


def test_argmax_feeds_fusion_interface(tiny_detector, tiny_data):
    gadgets, attentions, _, _, _ = tiny_data
    dist = predict_one(tiny_detector.fusion, gadgets[0], attentions[0])
    label = int(np.argmax(dist))
    assert 0 <= label < TINY.num_classes
