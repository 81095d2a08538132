import numpy as np
import pytest

from sphereid.corrupt import smooth
from sphereid.errors import PatternCollision
from sphereid.rng import seeded_rng
from sphereid.simulate import (OVERLAP_BOUND, SimulatorConfig, _draw_coords,
                               build_fingerprints, generate_dataset, split_folds)
from sphereid.types import SignalGrid


def _cfg(**kw):
    defaults = dict(seed=7, generator_count=12, train_per_class=20, test_per_class=5)
    defaults.update(kw)
    return SimulatorConfig(**defaults)


def test_fingerprints_unit_norm_and_overlap_bound():
    pats = build_fingerprints(_cfg())
    for p in pats:
        assert abs(np.linalg.norm(p) - 1.0) < 1e-12
    for i in range(len(pats)):
        for j in range(i + 1, len(pats)):
            assert abs(float(np.sum(pats[i] * pats[j]))) <= OVERLAP_BOUND + 1e-12


def test_fingerprints_construction_robust_across_seeds():
    for seed in range(20):
        build_fingerprints(_cfg(seed=seed))


def test_pattern_collision_when_bound_unreachable():
    # 12 unit vectors in 2 dimensions cannot all pairwise overlap below 0.3
    rng = seeded_rng(0, "collide")
    with pytest.raises(PatternCollision):
        _draw_coords(rng, count=12, dim=2)


def test_alpha_zero_fake_and_real_indistinguishable_by_mean():
    cfg = _cfg(fingerprint_strength=0.0, train_per_class=50, test_per_class=0)
    data = generate_dataset(cfg)
    real_means = [s.grid.values.mean() for s in data if s.label.is_real]
    fake_means = [s.grid.values.mean() for s in data if not s.label.is_real]
    n = min(len(real_means), len(fake_means))
    diff = abs(np.mean(fake_means) - np.mean(real_means))
    assert diff <= 3 * cfg.noise_sigma / np.sqrt(n)


def test_noise_free_nearest_pattern_oracle_is_perfect():
    cfg = _cfg(noise_sigma=0.0, fingerprint_strength=1.0,
               train_per_class=10, test_per_class=0)
    pats = build_fingerprints(cfg)
    data = generate_dataset(cfg)
    correct = total = 0
    for s in data:
        if s.label.is_real:
            continue
        residual = s.grid.values - smooth(s.grid, cfg.base_smoothness).values
        scores = [float(np.sum(residual * pats[g])) for g in range(cfg.generator_count)]
        correct += int(int(np.argmax(scores)) == s.label.generator_id)
        total += 1
    assert total == 120
    assert correct == total


def test_same_config_twice_bit_identical():
    a = generate_dataset(_cfg(train_per_class=4, test_per_class=2))
    b = generate_dataset(_cfg(train_per_class=4, test_per_class=2))
    assert len(a) == len(b)
    for sa, sb in zip(a, b):
        assert sa.id == sb.id and sa.label == sb.label and sa.split == sb.split
        assert np.array_equal(sa.grid.values, sb.grid.values)


def test_dataset_counts_and_ids():
    cfg = _cfg(train_per_class=4, test_per_class=2)
    data = generate_dataset(cfg)
    assert len(data) == 13 * 6
    ids = [s.id for s in data]
    assert len(set(ids)) == len(ids)
    reals = [s for s in data if s.label.is_real]
    assert len(reals) == 6
    assert sum(1 for s in data if s.split == "train") == 13 * 4


def test_corruption_of_generated_data_deterministic():
    cfg = _cfg(train_per_class=3, test_per_class=0)
    a = [smooth(s.grid, 1.0).values for s in generate_dataset(cfg)]
    b = [smooth(s.grid, 1.0).values for s in generate_dataset(cfg)]
    for ga, gb in zip(a, b):
        assert np.array_equal(ga, gb)


def test_fisher_separability_increases_with_alpha():
    ratios = {}
    for alpha in (0.2, 0.6, 1.0):
        cfg = _cfg(fingerprint_strength=alpha, generator_count=4,
                   train_per_class=40, test_per_class=0)
        data = generate_dataset(cfg)
        by_class = {}
        for s in data:
            if not s.label.is_real:
                by_class.setdefault(s.label.generator_id, []).append(s.grid.values.ravel())
        fishers = []
        classes = sorted(by_class)
        for i, g in enumerate(classes):
            for h in classes[i + 1:]:
                a = np.stack(by_class[g])
                b = np.stack(by_class[h])
                direction = a.mean(0) - b.mean(0)
                direction /= np.linalg.norm(direction)
                pa, pb = a @ direction, b @ direction
                fishers.append((pa.mean() - pb.mean()) ** 2 / (pa.var() + pb.var()))
        ratios[alpha] = fishers
    for pair_idx in range(len(ratios[0.2])):
        assert ratios[0.2][pair_idx] < ratios[0.6][pair_idx] < ratios[1.0][pair_idx]


def test_generator_count_minimum():
    with pytest.raises(ValueError):
        _cfg(generator_count=2).validate()


# --- fold splitter ---

def test_split_folds_partition_property():
    split = split_folds(12, 3, seed=1)
    assert split.fold_count == 3
    assert all(len(f) == 4 for f in split.folds)
    assert sorted(g for f in split.folds for g in f) == list(range(12))


def test_split_folds_paper_scale_counts():
    split = split_folds(45, 3, seed=2)
    assert [len(f) for f in split.folds] == [15, 15, 15]


def test_split_folds_deterministic():
    assert split_folds(12, 3, seed=9) == split_folds(12, 3, seed=9)
    assert split_folds(12, 3, seed=9) != split_folds(12, 3, seed=10)


def test_split_folds_uneven_sizes_differ_by_at_most_one():
    split = split_folds(11, 3, seed=0)
    sizes = sorted(len(f) for f in split.folds)
    assert sizes == [3, 4, 4]


def test_split_train_test_classes_disjoint():
    split = split_folds(12, 3, seed=3)
    for k in range(3):
        train = set(split.train_classes(k))
        test = set(split.test_classes(k))
        assert train & test == set()
        assert train | test == set(range(12))


def test_split_folds_bad_fold_count():
    with pytest.raises(ValueError):
        split_folds(3, 4, seed=0)
