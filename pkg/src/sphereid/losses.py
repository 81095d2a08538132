"""Training objective: supervised contrastive loss plus real-center loss.

Values and analytic gradients are taken w.r.t. the unconstrained
embedding rows; the sphere-normalization Jacobian lives in the encoder's
backward pass, keeping this module geometry-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBatch, NoRealSamples
from .types import REAL, assert_unit, assert_unit_rows


@dataclass(frozen=True)
class BatchEmbeddings:
    z: np.ndarray     # (N, D) unit rows
    keys: np.ndarray  # (N,) int class keys; REAL (-1) marks authentic samples

    def __post_init__(self):
        if self.z.ndim != 2 or self.z.shape[0] < 2:
            raise ValueError("batch needs at least 2 embeddings")
        if self.keys.shape != (self.z.shape[0],):
            raise ValueError("keys must align with embedding rows")
        # tolerance leaves room for finite-difference probes on raw rows
        assert_unit_rows(self.z, tol=1e-4)

    @property
    def real_mask(self) -> np.ndarray:
        return self.keys == REAL


def supcon_loss(batch: BatchEmbeddings, tau: float) -> tuple[float, np.ndarray]:
    """Supervised contrastive loss summed over anchors, with its gradient.

    For each anchor the positives are the same-class rows (excluding the
    anchor) and the denominator runs over every other row in the batch.
    Anchors with no positives contribute zero. Log-sum-exp uses a row max
    shift for stability.
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    z, keys = batch.z, batch.keys
    n = z.shape[0]

    pos = (keys[:, None] == keys[None, :])
    np.fill_diagonal(pos, False)
    pos_counts = pos.sum(axis=1)
    active = pos_counts > 0
    if not np.any(active):
        raise DegenerateBatch("no anchor has a positive in this batch")

    sims = (z @ z.T) / tau
    np.fill_diagonal(sims, -np.inf)
    row_max = sims.max(axis=1)
    exp_shift = np.exp(sims - row_max[:, None])
    np.fill_diagonal(exp_shift, 0.0)
    denom = exp_shift.sum(axis=1)
    log_prob = sims - row_max[:, None] - np.log(denom)[:, None]
    np.fill_diagonal(log_prob, 0.0)

    per_anchor = np.zeros(n)
    per_anchor[active] = -(pos[active] * log_prob[active]).sum(axis=1) / pos_counts[active]
    value = float(per_anchor.sum())

    softmax = exp_shift / denom[:, None]
    coeff = np.zeros((n, n))
    coeff[active] = softmax[active] - pos[active] / pos_counts[active, None]
    grad = (coeff + coeff.T) @ z / tau
    return value, grad


def supcon_loss_literal(batch: BatchEmbeddings, tau: float) -> tuple[float, np.ndarray]:
    """Diagnostic variant where each term's denominator runs over the
    anchor's other positives only (excluding the compared positive).
    Terms whose denominator would be empty are skipped."""
    if tau <= 0:
        raise ValueError("tau must be > 0")
    z, keys = batch.z, batch.keys
    n = z.shape[0]
    sims = (z @ z.T) / tau

    any_pair = False
    value = 0.0
    d_s = np.zeros((n, n))
    for i in range(n):
        positives = [j for j in range(n) if j != i and keys[j] == keys[i]]
        if not positives:
            continue
        any_pair = True
        inv = 1.0 / len(positives)
        for p in positives:
            others = [a for a in positives if a != p]
            if not others:
                continue
            logits = sims[i, others]
            shift = logits.max()
            lse = shift + math.log(np.exp(logits - shift).sum())
            value += -inv * (sims[i, p] - lse)
            d_s[i, p] -= inv
            soft = np.exp(logits - lse)
            for a, w in zip(others, soft):
                d_s[i, a] += inv * w
    if not any_pair:
        raise DegenerateBatch("no anchor has a positive in this batch")
    grad = (d_s + d_s.T) @ z / tau
    return value, grad


def center_loss(batch: BatchEmbeddings,
                c_r: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cosine distance of real rows to the real center c_r.

    Returns (value, grad w.r.t. embeddings [zero on fake rows], grad
    w.r.t. c_r)."""
    assert_unit(c_r, tol=1e-4)
    mask = batch.real_mask
    count = int(mask.sum())
    if count == 0:
        raise NoRealSamples("center loss needs at least one real sample")
    reals = batch.z[mask]
    value = float(np.mean(1.0 - reals @ c_r))
    grad_z = np.zeros_like(batch.z)
    grad_z[mask] = -c_r / count
    grad_c = -reals.sum(axis=0) / count
    return value, grad_z, grad_c


@dataclass(frozen=True)
class CombinedLoss:
    total: float
    sup: float
    cen: float
    grad_z: np.ndarray
    grad_c: np.ndarray
    real_count: int


def combined_loss(batch: BatchEmbeddings, tau: float, lam: float,
                  c_r: np.ndarray, denominator: str = "batch") -> CombinedLoss:
    """L = L_sup + lambda * L_cen; the center term is skipped when the
    batch carries no real samples."""
    if denominator == "positives":
        sup, grad_sup = supcon_loss_literal(batch, tau)
    else:
        sup, grad_sup = supcon_loss(batch, tau)
    real_count = int(batch.real_mask.sum())
    if real_count == 0:
        return CombinedLoss(total=sup, sup=sup, cen=0.0, grad_z=grad_sup,
                            grad_c=np.zeros_like(c_r), real_count=0)
    cen, grad_cen_z, grad_cen_c = center_loss(batch, c_r)
    return CombinedLoss(
        total=sup + lam * cen,
        sup=sup,
        cen=cen,
        grad_z=grad_sup + lam * grad_cen_z,
        grad_c=lam * grad_cen_c,
        real_count=real_count,
    )
