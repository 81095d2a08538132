import numpy as np
import pytest

from sphereid.config import RunConfig
from sphereid.errors import InsufficientSamples
from sphereid.rng import seeded_rng
from sphereid.simulate import SimulatorConfig, generate_dataset
from sphereid.trainer import compose_batch, sample_corruption, train


def _dataset(seed=7, classes=4, alpha=1.0, noise=0.1, train_n=30, test_n=0):
    cfg = SimulatorConfig(seed=seed, generator_count=classes,
                          fingerprint_strength=alpha, noise_sigma=noise,
                          train_per_class=train_n, test_per_class=test_n)
    return [s for s in generate_dataset(cfg) if s.split == "train"]


def _run_config(**kw):
    defaults = dict(epochs=3, seed=11, fake_batch=8, real_batch=2,
                    warmup_epochs=1, base_lr=1e-3, hidden_dim=16, embed_dim=8)
    defaults.update(kw)
    return RunConfig(**defaults)


# --- compose_batch ---

def test_compose_default_ratio():
    data = _dataset()
    rng = seeded_rng(0, "batches")
    batch = compose_batch(data, 32, 4, rng)
    assert len(batch) == 36
    fakes = [s for s in batch if not s.label.is_real]
    reals = [s for s in batch if s.label.is_real]
    assert len(fakes) == 32 and len(reals) == 4
    assert len({s.id for s in batch}) == 36  # without replacement


def test_compose_no_reals():
    data = _dataset()
    rng = seeded_rng(1, "batches")
    batch = compose_batch(data, 8, 0, rng)
    assert len(batch) == 8
    assert all(not s.label.is_real for s in batch)


def test_compose_deterministic_under_seed():
    data = _dataset()
    a = [s.id for s in compose_batch(data, 16, 2, seeded_rng(2, "batches"))]
    b = [s.id for s in compose_batch(data, 16, 2, seeded_rng(2, "batches"))]
    assert a == b


def test_compose_insufficient_samples():
    data = _dataset(train_n=3)
    with pytest.raises(InsufficientSamples):
        compose_batch(data, 100, 4, seeded_rng(3, "batches"))


def test_compose_stratified_covers_classes():
    data = _dataset(classes=4, train_n=30)
    rng = seeded_rng(4, "batches")
    batch = compose_batch(data, 8, 0, rng, stratified=True)
    counts = {}
    for s in batch:
        counts[s.label.generator_id] = counts.get(s.label.generator_id, 0) + 1
    assert set(counts) == {0, 1, 2, 3}
    assert all(c == 2 for c in counts.values())


# --- corruption sampling ---

def test_corruption_draws_stay_in_configured_ranges():
    cfg = _run_config()
    rng = seeded_rng(5, "augment")
    quantize_seen = smooth_seen = 0
    for _ in range(1000):
        levels, sigma = sample_corruption(rng, cfg)
        if levels is not None:
            quantize_seen += 1
            assert cfg.aug_quantize_lo <= levels <= cfg.aug_quantize_hi
        if sigma is not None:
            smooth_seen += 1
            assert cfg.aug_smooth_lo <= sigma <= cfg.aug_smooth_hi
    assert 400 < quantize_seen < 600
    assert 400 < smooth_seen < 600


def test_corruption_probability_zero_disables():
    cfg = _run_config(aug_quantize_prob=0.0, aug_smooth_prob=0.0)
    rng = seeded_rng(6, "augment")
    for _ in range(50):
        assert sample_corruption(rng, cfg) == (None, None)


# --- train ---

def test_epochs_zero_is_noop():
    data = _dataset()
    result = train(_run_config(epochs=0), data)
    assert result.report.epochs == []
    assert not result.boundary.initialized
    assert result.params.all_finite()
    assert result.train_generator_ids == [0, 1, 2, 3]


def test_train_requires_two_fake_classes():
    data = [s for s in _dataset() if s.label.is_real or s.label.generator_id == 0]
    with pytest.raises(InsufficientSamples):
        train(_run_config(), data)


def test_training_loss_decreases_on_easy_data():
    data = _dataset(alpha=1.2, noise=0.05)
    result = train(_run_config(epochs=5), data)
    sups = [e.mean_sup for e in result.report.epochs]
    assert sups[-1] < sups[0]
    assert result.boundary.initialized
    assert 0.0 <= result.boundary.gamma <= 2.0
    assert np.linalg.norm(result.params.c_r) == pytest.approx(1.0, abs=1e-9)


def test_train_deterministic_bitwise():
    data = _dataset()
    cfg = _run_config(epochs=2)
    a = train(cfg, data)
    b = train(cfg, data)
    for name in a.params.tensor_names():
        assert np.array_equal(getattr(a.params, name), getattr(b.params, name)), name
    assert a.boundary == b.boundary
    assert [e.mean_sup for e in a.report.epochs] == [e.mean_sup for e in b.report.epochs]
    assert a.rng_states == b.rng_states


def test_train_gamma_trajectory_recorded():
    data = _dataset()
    result = train(_run_config(epochs=3), data)
    assert len(result.report.epochs) == 3
    for stats in result.report.epochs:
        assert np.isfinite(stats.gamma)
        assert 0.0 <= stats.gamma <= 2.0
        assert stats.lr > 0.0


def test_train_probe_loss_tracked():
    data = _dataset()
    probe = data[:12]
    result = train(_run_config(epochs=2), data, probe_set=probe)
    assert all(e.probe_loss is not None for e in result.report.epochs)


def test_train_epoch_boundary_cadence():
    data = _dataset()
    result = train(_run_config(epochs=2, boundary_cadence="epoch"), data)
    assert result.boundary.initialized


def test_train_real_batch_zero_skips_center_and_boundary():
    data = _dataset()
    result = train(_run_config(epochs=1, warmup_epochs=0, real_batch=0, fake_batch=8), data)
    assert not result.boundary.initialized
    assert all(e.mean_cen == 0.0 for e in result.report.epochs)
