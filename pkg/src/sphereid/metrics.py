"""Detection metrics: per-side accuracies and grid-swept average precision.

Average precision follows a fixed threshold grid over the normalized
score range. Thresholds are visited from the most to the least strict,
which makes recall non-decreasing along the sweep; AP is the sum of
recall increments times precision at each point, with precision defined
as 1 when nothing is predicted positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryState, classify_batch
from .corrupt import quantize, smooth
from .encoder import ParameterSet, embed_grids
from .errors import NoPositives, OneSidedGroundTruth
from .types import LabeledSample

AP_STEP = 0.05
SCORE_RANGE = 2.0  # cosine-distance scores live in [0, 2]


@dataclass(frozen=True)
class ScoredVerdicts:
    scores: np.ndarray    # (N,) fakeness scores in [0, 2]
    truths: np.ndarray    # (N,) bool, True = ground-truth fake
    verdicts: np.ndarray  # (N,) bool, True = classified fake

    def __post_init__(self):
        n = self.scores.shape[0]
        if n < 1 or self.truths.shape != (n,) or self.verdicts.shape != (n,):
            raise ValueError("scores, truths and verdicts must align and be non-empty")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("scores must be finite")
        if np.any(self.scores < 0.0) or np.any(self.scores > SCORE_RANGE):
            raise ValueError("scores must lie in [0, 2]")


def accuracy_suite(v: ScoredVerdicts) -> tuple[float, float, float]:
    """(F-Acc, R-Acc, Acc): accuracy over fakes, reals, and all samples."""
    fakes = v.truths
    reals = ~v.truths
    if not fakes.any() or not reals.any():
        raise OneSidedGroundTruth("need at least one fake and one real ground truth")
    correct = v.verdicts == v.truths
    f_acc = float(correct[fakes].mean())
    r_acc = float(correct[reals].mean())
    acc = float(correct.mean())
    return f_acc, r_acc, acc


def average_precision(scores: np.ndarray, truths: np.ndarray,
                      step: float = AP_STEP) -> float:
    """AP over thresholds {0, step, ..., 1} applied to scores/2."""
    scores = np.asarray(scores, dtype=np.float64)
    truths = np.asarray(truths, dtype=bool)
    if scores.shape != truths.shape or scores.ndim != 1:
        raise ValueError("scores and truths must be equal-length vectors")
    if np.any(scores < 0.0) or np.any(scores > SCORE_RANGE):
        raise ValueError("scores must lie in [0, 2]")
    if step <= 0:
        raise ValueError("step must be > 0")
    grid_count = round(1.0 / step)
    if abs(grid_count * step - 1.0) > 1e-9:
        raise ValueError("step must divide the unit range evenly")
    positives = int(truths.sum())
    if positives == 0:
        raise NoPositives("average precision needs at least one positive")

    norm = scores / SCORE_RANGE
    ap = 0.0
    prev_recall = 0.0
    for k in range(grid_count, -1, -1):
        threshold = k * step
        predicted = norm >= threshold
        tp = int((predicted & truths).sum())
        pred_count = int(predicted.sum())
        precision = tp / pred_count if pred_count > 0 else 1.0
        recall = tp / positives
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return float(ap)


@dataclass(frozen=True)
class DetectionReport:
    f_acc: float
    r_acc: float
    acc: float
    ap: float
    n_fake: int
    n_real: int
    per_class_f_acc: dict


def evaluate_detection(params: ParameterSet, boundary: BoundaryState,
                       samples: list[LabeledSample], crop_size: int,
                       corrupt: tuple[str, float] | None = None) -> DetectionReport:
    """Embed samples (optionally corrupted first), classify against the
    boundary, and compute the metric suite."""
    grids = []
    for s in samples:
        grid = s.grid
        if corrupt is not None:
            op, value = corrupt
            if op == "quantize":
                grid = quantize(grid, value)
            elif op == "smooth":
                grid = smooth(grid, value)
            else:
                raise ValueError(f"unknown corruption {op!r}")
        grids.append(grid)

    z = embed_grids(params, grids, crop_size)
    verdicts, scores = classify_batch(z, params.c_r, boundary)
    truths = np.array([not s.label.is_real for s in samples])
    v = ScoredVerdicts(scores=scores, truths=truths, verdicts=verdicts)
    f_acc, r_acc, acc = accuracy_suite(v)
    ap = average_precision(scores, truths)

    per_class: dict[int, float] = {}
    keys = np.array([s.label.key for s in samples])
    for cid in sorted(set(keys[truths].tolist())):
        mask = keys == cid
        per_class[int(cid)] = float((verdicts[mask]).mean())
    return DetectionReport(f_acc=f_acc, r_acc=r_acc, acc=acc, ap=ap,
                           n_fake=int(truths.sum()), n_real=int((~truths).sum()),
                           per_class_f_acc=per_class)
