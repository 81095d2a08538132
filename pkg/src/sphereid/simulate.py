"""Seeded dataset simulator and the generator-class fold splitter.

Real samples are a smooth random base field plus white noise. Fake
samples of class g add a fixed class fingerprint: x = base + alpha * F_g
+ noise. Fingerprints are unit-Frobenius-norm, block-textured patterns
drawn from a shared low-dimensional subspace, shrunk until every pair
overlaps by at most OVERLAP_BOUND. Keeping all classes inside one small
subspace is what lets an encoder trained on some classes still embed
unseen classes distinguishably, which the few-shot protocol depends on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corrupt import smooth
from .errors import PatternCollision
from .rng import seeded_rng
from .types import ClassLabel, LabeledSample, SignalGrid

OVERLAP_BOUND = 0.3
MAX_RETRIES = 100
BASE_AMPLITUDE = 0.5  # pre-smoothing std of the low-frequency base field


@dataclass(frozen=True)
class SimulatorConfig:
    seed: int
    generator_count: int = 12
    fingerprint_strength: float = 0.6
    noise_sigma: float = 0.25
    base_smoothness: float = 2.0
    grid_height: int = 32
    grid_width: int = 32
    train_per_class: int = 100
    test_per_class: int = 25

    def validate(self) -> None:
        if self.generator_count < 3:
            raise ValueError("generator_count must be >= 3")
        if self.fingerprint_strength < 0 or self.noise_sigma < 0 or self.base_smoothness < 0:
            raise ValueError("strength, noise and smoothness must be >= 0")
        if self.grid_height < 2 or self.grid_width < 2:
            raise ValueError("grid must be at least 2x2")
        if self.train_per_class < 0 or self.test_per_class < 0:
            raise ValueError("per-class counts must be >= 0")


@dataclass(frozen=True)
class FoldSplit:
    fold_count: int
    folds: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        flat = [g for fold in self.folds for g in fold]
        if len(flat) != len(set(flat)):
            raise ValueError("folds are not disjoint")
        if sorted(flat) != list(range(len(flat))):
            raise ValueError("folds do not cover the class range")
        sizes = [len(f) for f in self.folds]
        if sizes and max(sizes) - min(sizes) > 1:
            raise ValueError("fold sizes differ by more than 1")

    def test_classes(self, fold_index: int) -> tuple[int, ...]:
        return self.folds[fold_index]

    def train_classes(self, fold_index: int) -> tuple[int, ...]:
        held_out = set(self.folds[fold_index])
        return tuple(g for fold in self.folds for g in fold if g not in held_out)


def split_folds(generator_count: int, fold_count: int, seed: int) -> FoldSplit:
    """Balanced random partition of generator ids, deterministic under seed."""
    if fold_count < 1 or fold_count > generator_count:
        raise ValueError("fold_count must be in [1, generator_count]")
    rng = seeded_rng(seed, "folds")
    order = rng.permutation(generator_count)
    base, extra = divmod(generator_count, fold_count)
    folds = []
    pos = 0
    for k in range(fold_count):
        size = base + (1 if k < extra else 0)
        folds.append(tuple(sorted(int(g) for g in order[pos:pos + size])))
        pos += size
    return FoldSplit(fold_count=fold_count, folds=tuple(folds))


def _welch_bound(n: int, d: int) -> float:
    if n <= d:
        return 0.0
    return math.sqrt((n - d) / (d * (n - 1)))


def subspace_dim(generator_count: int) -> int:
    """Fingerprint subspace dimension: small enough that unseen classes stay
    mostly inside the span of the seen ones, large enough that the overlap
    bound is comfortably reachable."""
    d = max(3, math.ceil(0.75 * generator_count))
    while _welch_bound(generator_count, d) >= 0.2:
        d += 1
    return d


def build_fingerprints(cfg: SimulatorConfig) -> np.ndarray:
    """The per-class patterns F_g, shape (G, H, W), each unit Frobenius norm."""
    cfg.validate()
    rng = seeded_rng(cfg.seed, "patterns")
    block = 2 if cfg.grid_height % 2 == 0 and cfg.grid_width % 2 == 0 else 1
    bh, bw = cfg.grid_height // block, cfg.grid_width // block
    d = subspace_dim(cfg.generator_count)
    if d > bh * bw:
        raise ValueError("grid too small for the fingerprint subspace")

    basis, _ = np.linalg.qr(rng.standard_normal((bh * bw, d)))
    coords = _draw_coords(rng, cfg.generator_count, d)

    patterns = np.empty((cfg.generator_count, cfg.grid_height, cfg.grid_width))
    for g in range(cfg.generator_count):
        p = (basis @ coords[g]).reshape(bh, bw)
        full = np.repeat(np.repeat(p, block, axis=0), block, axis=1)
        full = full[:cfg.grid_height, :cfg.grid_width]
        patterns[g] = full / np.linalg.norm(full)
    return patterns


def _draw_coords(rng: np.random.Generator, count: int, dim: int) -> list[np.ndarray]:
    """Unit coordinate vectors with pairwise |dot| <= OVERLAP_BOUND.

    Candidates are drawn fresh and then shrunk against the accepted set:
    any excess overlap is partially projected out until every pair sits
    inside the bound. A candidate that cannot be fixed is redrawn, up to
    MAX_RETRIES times.
    """
    accepted: list[np.ndarray] = []
    for g in range(count):
        for _ in range(MAX_RETRIES):
            c = rng.standard_normal(dim)
            c /= np.linalg.norm(c)
            for _ in range(50):
                moved = False
                for other in accepted:
                    overlap = float(c @ other)
                    if abs(overlap) > OVERLAP_BOUND * 0.95:
                        c = c - (overlap - math.copysign(OVERLAP_BOUND * 0.8, overlap)) * other
                        c /= np.linalg.norm(c)
                        moved = True
                if not moved:
                    break
            if all(abs(float(c @ other)) <= OVERLAP_BOUND for other in accepted):
                accepted.append(c)
                break
        else:
            raise PatternCollision(
                f"could not orthogonalize fingerprint {g} below overlap "
                f"{OVERLAP_BOUND} in {MAX_RETRIES} retries")
    return accepted


def generate_dataset(cfg: SimulatorConfig) -> list[LabeledSample]:
    """Deterministic dataset: real class plus G fingerprinted fake classes,
    train_per_class + test_per_class samples each."""
    cfg.validate()
    patterns = build_fingerprints(cfg)
    rng = seeded_rng(cfg.seed, "samples")
    samples: list[LabeledSample] = []

    def emit(label: ClassLabel, prefix: str):
        pattern = None if label.is_real else patterns[label.generator_id]
        for split, count in (("train", cfg.train_per_class), ("test", cfg.test_per_class)):
            for i in range(count):
                grid = _draw_grid(rng, cfg, pattern)
                samples.append(LabeledSample(
                    id=f"{prefix}-{split}-{i:04d}", grid=grid, label=label, split=split))

    emit(ClassLabel(), "real")
    for g in range(cfg.generator_count):
        emit(ClassLabel(generator_id=g), f"g{g:02d}")
    return samples


def _draw_grid(rng: np.random.Generator, cfg: SimulatorConfig,
               pattern: np.ndarray | None) -> SignalGrid:
    shape = (cfg.grid_height, cfg.grid_width)
    base = BASE_AMPLITUDE * smooth(SignalGrid(rng.standard_normal(shape)),
                                   cfg.base_smoothness).values
    noise = rng.standard_normal(shape)  # always drawn, so alpha=0 matches real exactly
    x = base + cfg.noise_sigma * noise
    if pattern is not None:
        x = x + cfg.fingerprint_strength * pattern
    return SignalGrid(x)
