"""Authenticity decision boundary.

The boundary gamma lives in cosine-distance units. Each update computes
Tukey's upper fence Q3 + 1.5*(Q3 - Q1) over a batch of real-sample
deviations and folds it in with momentum; the first observed fence
initializes gamma directly. No gradient flows through the update.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import BoundaryUninitialized, EmptyDeviations
from .types import assert_unit


@dataclass(frozen=True)
class BoundaryState:
    gamma: float = 0.0
    beta: float = 0.99
    initialized: bool = False

    def __post_init__(self):
        if not (0.0 <= self.beta < 1.0):
            raise ValueError("beta must be in [0, 1)")
        if self.initialized and not (0.0 <= self.gamma <= 2.0):
            raise ValueError("gamma must be in [0, 2] once initialized")


def deviation(z: np.ndarray, c_r: np.ndarray) -> float:
    """Cosine distance 1 - z.c_r, clipped into [0, 2] against float fuzz."""
    assert_unit(z, tol=1e-4)
    assert_unit(c_r, tol=1e-4)
    return float(np.clip(1.0 - float(z @ c_r), 0.0, 2.0))


def deviations(z_rows: np.ndarray, c_r: np.ndarray) -> np.ndarray:
    return np.clip(1.0 - z_rows @ c_r, 0.0, 2.0)


def quartiles(values: list[float] | np.ndarray) -> tuple[float, float]:
    """Q1 and Q3 by linear interpolation at p*(n-1) on the sorted list."""
    data = np.sort(np.asarray(values, dtype=np.float64))
    if data.size == 0:
        raise EmptyDeviations("quartiles of an empty list")
    return _interp_quantile(data, 0.25), _interp_quantile(data, 0.75)


def _interp_quantile(sorted_vals: np.ndarray, p: float) -> float:
    pos = p * (sorted_vals.size - 1)
    lo = int(np.floor(pos))
    frac = pos - lo
    if frac == 0.0 or lo + 1 >= sorted_vals.size:
        return float(sorted_vals[lo])
    return float(sorted_vals[lo] + frac * (sorted_vals[lo + 1] - sorted_vals[lo]))


def tukey_fence(values: list[float] | np.ndarray) -> float:
    q1, q3 = quartiles(values)
    return q3 + 1.5 * (q3 - q1)


def update_boundary(state: BoundaryState,
                    real_deviations: list[float] | np.ndarray) -> BoundaryState:
    """Fold one batch of real deviations into the boundary."""
    vals = np.asarray(real_deviations, dtype=np.float64)
    if vals.size == 0:
        raise EmptyDeviations("boundary update needs at least one deviation")
    if not np.all(np.isfinite(vals)) or np.any(vals < 0.0) or np.any(vals > 2.0):
        raise EmptyDeviations("deviations must be finite and within [0, 2]")
    fence = tukey_fence(vals)
    fence = float(np.clip(fence, 0.0, 2.0))
    if not state.initialized:
        return replace(state, gamma=fence, initialized=True)
    new_gamma = state.beta * state.gamma + (1.0 - state.beta) * fence
    return replace(state, gamma=float(new_gamma))


def classify(z: np.ndarray, c_r: np.ndarray,
             state: BoundaryState) -> tuple[str, float]:
    """Verdict and fakeness score; Fake iff the score strictly exceeds gamma."""
    if not state.initialized:
        raise BoundaryUninitialized("classify before any boundary update")
    score = deviation(z, c_r)
    return ("fake" if score > state.gamma else "real"), score


def classify_batch(z_rows: np.ndarray, c_r: np.ndarray,
                   state: BoundaryState) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized classify: returns (fake_verdicts: bool array, scores)."""
    if not state.initialized:
        raise BoundaryUninitialized("classify before any boundary update")
    scores = deviations(z_rows, c_r)
    return scores > state.gamma, scores
