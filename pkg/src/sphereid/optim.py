"""Adaptive-moment optimizer with decoupled weight decay, plus the
warmup + cosine learning-rate schedule.

Decay is applied multiplicatively before the moment update. After every
step the real-center c_r is re-projected onto the unit sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .encoder import ParameterSet
from .errors import NonFiniteGradient


@dataclass
class OptimizerState:
    weight_decay: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def init_optimizer(params: ParameterSet, weight_decay: float) -> OptimizerState:
    opt = OptimizerState(weight_decay=weight_decay)
    for name in params.tensor_names():
        opt.m[name] = np.zeros_like(getattr(params, name))
        opt.v[name] = np.zeros_like(getattr(params, name))
    return opt


def optimizer_step(params: ParameterSet, grads: ParameterSet,
                   opt: OptimizerState, lr: float) -> tuple[ParameterSet, OptimizerState]:
    """One bias-corrected moment update; mutates params/opt in place and
    returns them. Raises NonFiniteGradient before touching any state."""
    for name in params.tensor_names():
        if not np.all(np.isfinite(getattr(grads, name))):
            raise NonFiniteGradient(f"non-finite gradient in {name} at step {opt.step + 1}")

    opt.step += 1
    t = opt.step
    bc1 = 1.0 - opt.beta1 ** t
    bc2 = 1.0 - opt.beta2 ** t
    decay = 1.0 - lr * opt.weight_decay
    for name in params.tensor_names():
        p = getattr(params, name)
        g = getattr(grads, name)
        if opt.weight_decay != 0.0:
            p *= decay
        m = opt.m[name]
        v = opt.v[name]
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + opt.eps)

    params.c_r /= np.linalg.norm(params.c_r)
    return params, opt


def lr_at(step: int, total_steps: int, warmup_steps: int,
          base_lr: float, min_lr: float) -> float:
    """Linear ramp 0 -> base_lr over warmup_steps, then cosine anneal from
    base_lr down to min_lr at total_steps."""
    if not (0 <= step <= total_steps):
        raise ValueError("step must be within [0, total_steps]")
    if warmup_steps > 0 and step < warmup_steps:
        return base_lr * step / warmup_steps
    if step == warmup_steps:
        return base_lr
    if step == total_steps:
        return min_lr
    progress = (step - warmup_steps) / (total_steps - warmup_steps)
    return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + math.cos(math.pi * progress))
