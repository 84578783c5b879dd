import hashlib

import numpy as np
import pytest

from scmax.graph import Partition
from scmax.kernel import ConfigurationError, SgdConfig, contrastive_loss
from scmax.representation import (
    EncoderConfig,
    PerturbationConfig,
    perturb,
    random_noise,
    train_autoencoder,
)


def checksum(a):
    return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()


def small_encoder(**kw):
    base = dict(hidden=(32,), latent_dim=2, epochs=60, sgd=SgdConfig(3e-3, 32, 1, 11))
    base.update(kw)
    return EncoderConfig(**base)


def test_linear_identity_autoencoder_reaches_zero_loss():
    x = np.random.default_rng(0).normal(size=(64, 3))
    cfg = EncoderConfig(hidden=(), latent_dim=3, epochs=400,
                        sgd=SgdConfig(0.005, 16, 1, 5, optimizer="sgd"))
    emb = train_autoencoder(x, cfg)
    assert emb.loss_trace[-1] < 1e-6 * emb.loss_trace[0]


def test_rank_two_data_is_compressed():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(200, 2)) @ rng.normal(size=(2, 10))
    emb = train_autoencoder(x, small_encoder())
    assert emb.z.shape == (200, 2)
    assert emb.loss_trace[-1] < 0.1 * emb.loss_trace[0]


def test_autoencoder_is_deterministic():
    x = np.random.default_rng(2).normal(size=(50, 4))
    a = train_autoencoder(x, small_encoder(epochs=3))
    b = train_autoencoder(x, small_encoder(epochs=3))
    np.testing.assert_array_equal(a.z, b.z)
    assert a.loss_trace == b.loss_trace


def test_passthrough_returns_data():
    x = np.arange(12.0).reshape(4, 3)
    emb = train_autoencoder(x, EncoderConfig(passthrough=True))
    np.testing.assert_array_equal(emb.z, x)
    assert emb.loss_trace == []


def test_autoencoder_needs_two_rows():
    with pytest.raises(ConfigurationError):
        train_autoencoder(np.zeros((1, 3)), small_encoder())


def test_config_validation():
    with pytest.raises(ConfigurationError):
        PerturbationConfig(mode="dropout")
    with pytest.raises(ConfigurationError):
        EncoderConfig(latent_dim=0)
    assert EncoderConfig().hidden == (500, 500, 2000)
    assert EncoderConfig().latent_dim == 256
    assert EncoderConfig().epochs == 200
    assert PerturbationConfig().sgd.epochs == 50


def _blobs(seed=0, n=60):
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 3
    z = rng.normal(size=(n, 4)) + 6 * np.eye(3, 4)[labels]
    return z, Partition(labels)


def test_zero_learning_rate_leaves_z_unchanged():
    z, q = _blobs()
    cfg = PerturbationConfig(sgd=SgdConfig(0.0, 16, 5))
    np.testing.assert_array_equal(perturb(z, q, cfg), z)


def test_two_points_one_step_close_by_two_eta():
    z = np.array([[0.0], [5.0]])
    eta = 0.1
    for opt in ("sgd", "adam"):
        cfg = PerturbationConfig(sgd=SgdConfig(eta, 2, 1, optimizer=opt), relative_step=False)
        zp = perturb(z, Partition(np.array([0, 0])), cfg)
        assert zp[1, 0] - zp[0, 0] == pytest.approx(5.0 - 2 * eta)
        assert zp[0, 0] == pytest.approx(eta) and zp[1, 0] == pytest.approx(5 - eta)


def test_random_noise_matches_std():
    z = np.random.default_rng(3).normal(scale=2.5, size=(2000, 8))
    zp = perturb(z, Partition(np.arange(2000) % 4), PerturbationConfig(mode="random_noise"))
    assert abs((zp - z).std() / z.std() - 1) < 0.05
    # uniform on [-1, 1] has std 1/sqrt(3), so the rescaled support is about sqrt(3) std(Z)
    assert np.abs(zp - z).max() <= 1.05 * np.sqrt(3) * z.std()


def test_random_noise_is_seeded():
    z = np.random.default_rng(4).normal(size=(10, 3))
    np.testing.assert_array_equal(random_noise(z, 9), random_noise(z, 9))
    assert not np.array_equal(random_noise(z, 9), random_noise(z, 10))


@pytest.mark.parametrize("mode", ["contrastive_full", "positive_only", "negative_only", "random_noise"])
def test_perturb_never_mutates_z_and_is_deterministic(mode):
    z, q = _blobs()
    before = checksum(z)
    cfg = PerturbationConfig(mode=mode, sgd=SgdConfig(0.01, 16, 3))
    a = perturb(z, q, cfg)
    b = perturb(z, q, cfg)
    assert checksum(z) == before
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, z)


def test_identical_labels_give_identical_perturbation_regardless_of_order():
    z, q = _blobs()
    q2 = Partition(np.arange(q.n) % 2)
    cfg = PerturbationConfig(sgd=SgdConfig(0.01, 16, 3))
    first = [perturb(z, q, cfg), perturb(z, q2, cfg)]
    second = [perturb(z, q2, cfg), perturb(z, q, cfg)]
    np.testing.assert_array_equal(first[0], second[1])
    np.testing.assert_array_equal(first[1], second[0])


def test_full_mode_small_step_descends():
    rng = np.random.default_rng(5)
    for _ in range(20):
        b = int(rng.integers(4, 33))
        z = rng.normal(size=(b, int(rng.integers(1, 9))))
        labels = rng.integers(0, 3, size=b)
        labels[:2] = [0, 1]
        labels[2] = 0
        loss, grad = contrastive_loss(z, labels)
        assert contrastive_loss(z - 1e-4 * grad, labels)[0] < loss


def test_positive_only_never_increases_pair_distance():
    rng = np.random.default_rng(6)
    for _ in range(10):
        z = rng.normal(size=(2, 3))
        cfg = PerturbationConfig(mode="positive_only", sgd=SgdConfig(0.05, 2, 1))
        zp = perturb(z, Partition(np.array([0, 0])), cfg)
        assert np.linalg.norm(zp[0] - zp[1]) <= np.linalg.norm(z[0] - z[1])


def test_single_class_warns_for_negative_term(caplog):
    z, _ = _blobs()
    cfg = PerturbationConfig(mode="negative_only", sgd=SgdConfig(0.01, 16, 1))
    with caplog.at_level("WARNING"):
        zp = perturb(z, Partition(np.zeros(len(z), dtype=int)), cfg)
    assert "push-apart" in caplog.text
    np.testing.assert_array_equal(zp, z)


def test_perturb_trace_has_one_entry_per_epoch():
    z, q = _blobs()
    trace = []
    perturb(z, q, PerturbationConfig(sgd=SgdConfig(0.01, 16, 4)), trace=trace)
    assert len(trace) == 4
    assert trace[-1] < trace[0]


def test_relative_step_scales_with_embedding():
    z, q = _blobs()
    cfg = PerturbationConfig(sgd=SgdConfig(0.01, 16, 2))
    np.testing.assert_allclose(perturb(10 * z, q, cfg), 10 * perturb(z, q, cfg), rtol=1e-9)


def test_encoder_target_fine_tunes_a_copy():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(40, 5))
    emb = train_autoencoder(x, small_encoder(epochs=2))
    w_before = checksum(emb.autoencoder.encoder.layers[0].weight)
    cfg = PerturbationConfig(sgd=SgdConfig(1e-3, 16, 2), target="encoder")
    zp = perturb(emb.z, Partition(np.arange(40) % 2), cfg, x=x, autoencoder=emb.autoencoder)
    assert zp.shape == emb.z.shape
    assert not np.array_equal(zp, emb.z)
    assert checksum(emb.autoencoder.encoder.layers[0].weight) == w_before
    with pytest.raises(ConfigurationError):
        perturb(emb.z, Partition(np.arange(40) % 2), cfg)
