"""Shared domain types: grids, labels, samples, unit embeddings.

Embeddings are plain float64 numpy vectors; the unit-norm invariant is
enforced by assert_unit at module boundaries (a debug assertion, stripped
under ``python -O``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REAL = -1  # class key used for the single authentic class

UNIT_TOL = 1e-6


@dataclass(frozen=True)
class SignalGrid:
    """A small 2D array standing in for an image."""

    values: np.ndarray  # (height, width) float64

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"grid must be 2D and non-empty, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ClassLabel:
    """Real, or one of G generator classes. generator_id is None iff real."""

    generator_id: int | None = None

    def __post_init__(self):
        if self.generator_id is not None and self.generator_id < 0:
            raise ValueError("generator_id must be >= 0")

    @property
    def is_real(self) -> bool:
        return self.generator_id is None

    @property
    def key(self) -> int:
        """Integer class key: REAL (-1) for authentic, generator id otherwise."""
        return REAL if self.generator_id is None else self.generator_id

    def __str__(self) -> str:
        return "real" if self.is_real else f"gen:{self.generator_id}"

    @staticmethod
    def parse(text: str) -> "ClassLabel":
        if text == "real":
            return ClassLabel()
        if text.startswith("gen:"):
            return ClassLabel(generator_id=int(text[4:]))
        raise ValueError(f"unrecognized label {text!r}")


@dataclass(frozen=True)
class LabeledSample:
    id: str
    grid: SignalGrid
    label: ClassLabel
    split: str  # "train" | "test"

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be 'train' or 'test', got {self.split!r}")


def unit(v: np.ndarray) -> np.ndarray:
    """L2-normalize a vector; caller guarantees a nonzero norm."""
    return v / np.linalg.norm(v)


def assert_unit(v: np.ndarray, tol: float = UNIT_TOL) -> None:
    assert abs(float(np.linalg.norm(v)) - 1.0) <= tol, "embedding is not unit-norm"
    assert np.all(np.isfinite(v)), "embedding has non-finite components"


def assert_unit_rows(m: np.ndarray, tol: float = UNIT_TOL) -> None:
    norms = np.linalg.norm(m, axis=1)
    assert np.all(np.abs(norms - 1.0) <= tol), "a batch row is not unit-norm"
    assert np.all(np.isfinite(m)), "a batch row has non-finite components"
