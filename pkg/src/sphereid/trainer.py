"""End-to-end training loop.

Each step: compose a ratio-controlled batch, corrupt grids inside the
configured augmentation ranges, extract train-time views, embed, take
the combined loss, backpropagate, apply one optimizer step, then fold
the batch's real-sample deviations into the boundary. All randomness
comes from named streams of the run seed, and gradient accumulation is
a fixed matrix product, so identical configs yield identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boundary import BoundaryState, deviations, update_boundary
from .config import RunConfig
from .corrupt import quantize, smooth
from .encoder import (TRAIN_RANDOM, ParameterSet, backward_batch, embed_grids,
                      forward_batch, init_params, make_views)
from .errors import InsufficientSamples
from .losses import BatchEmbeddings, combined_loss
from .optim import init_optimizer, lr_at, optimizer_step
from .rng import rng_state, seeded_rng
from .types import LabeledSample, SignalGrid


@dataclass
class EpochStats:
    epoch: int
    mean_sup: float
    mean_cen: float
    gamma: float
    lr: float
    probe_loss: float | None = None


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    checkpoint_path: str | None = None


@dataclass
class TrainResult:
    params: ParameterSet
    boundary: BoundaryState
    report: TrainReport
    rng_states: dict
    train_generator_ids: list[int]


def compose_batch(train_set: list[LabeledSample], fake_batch: int, real_batch: int,
                  rng: np.random.Generator, stratified: bool = False) -> list[LabeledSample]:
    """Draw fake_batch fakes + real_batch reals without replacement.

    Fakes are uniform over samples by default; the stratified flag cycles
    classes round-robin instead."""
    fake_idx = [i for i, s in enumerate(train_set) if not s.label.is_real]
    real_idx = [i for i, s in enumerate(train_set) if s.label.is_real]
    if len(fake_idx) < fake_batch:
        raise InsufficientSamples(f"need {fake_batch} fakes, have {len(fake_idx)}")
    if len(real_idx) < real_batch:
        raise InsufficientSamples(f"need {real_batch} reals, have {len(real_idx)}")

    if stratified:
        chosen_fakes = _stratified_fakes(train_set, fake_idx, fake_batch, rng)
    else:
        picks = rng.choice(len(fake_idx), size=fake_batch, replace=False)
        chosen_fakes = [fake_idx[int(i)] for i in picks]
    batch = [train_set[i] for i in chosen_fakes]
    if real_batch > 0:
        picks = rng.choice(len(real_idx), size=real_batch, replace=False)
        batch.extend(train_set[real_idx[int(i)]] for i in picks)
    return batch


def _stratified_fakes(train_set, fake_idx, fake_batch, rng) -> list[int]:
    by_class: dict[int, list[int]] = {}
    for i in fake_idx:
        by_class.setdefault(train_set[i].label.generator_id, []).append(i)
    classes = sorted(by_class)
    order = [classes[int(k)] for k in rng.permutation(len(classes))]
    pools = {c: list(rng.permutation(by_class[c])) for c in order}
    chosen: list[int] = []
    while len(chosen) < fake_batch:
        progressed = False
        for c in order:
            if pools[c]:
                chosen.append(int(pools[c].pop()))
                progressed = True
                if len(chosen) == fake_batch:
                    break
        if not progressed:
            raise InsufficientSamples("stratified sampler ran out of fake samples")
    return chosen


def sample_corruption(rng: np.random.Generator, cfg: RunConfig) -> tuple[float | None, float | None]:
    """Draw the step's corruption parameters. Four values are always
    consumed from the stream so enabling one operator never shifts the
    draws of another."""
    u_q = rng.random()
    raw_q = rng.random()
    u_s = rng.random()
    raw_s = rng.random()
    levels = None
    if u_q < cfg.aug_quantize_prob:
        log_lo, log_hi = np.log(cfg.aug_quantize_lo), np.log(cfg.aug_quantize_hi)
        levels = float(np.exp(log_lo + raw_q * (log_hi - log_lo)))
    sigma = None
    if u_s < cfg.aug_smooth_prob:
        sigma = float(cfg.aug_smooth_lo + raw_s * (cfg.aug_smooth_hi - cfg.aug_smooth_lo))
    return levels, sigma


def _corrupted(grid: SignalGrid, levels: float | None, sigma: float | None) -> SignalGrid:
    if levels is not None:
        grid = quantize(grid, levels)
    if sigma is not None:
        grid = smooth(grid, sigma)
    return grid


def train(cfg: RunConfig, train_set: list[LabeledSample],
          probe_set: list[LabeledSample] | None = None,
          on_epoch=None) -> TrainResult:
    """Run the full loop; returns final parameters, boundary and report.
    on_epoch, when given, is called with each EpochStats as it completes."""
    cfg.validate()
    fake_classes = {s.label.generator_id for s in train_set if not s.label.is_real}
    if len(fake_classes) < 2:
        raise InsufficientSamples("training needs at least 2 fake classes")
    gen_ids = sorted(fake_classes)

    init_rng = seeded_rng(cfg.seed, "init")
    batch_rng = seeded_rng(cfg.seed, "batches")
    augment_rng = seeded_rng(cfg.seed, "augment")
    crop_rng = seeded_rng(cfg.seed, "crops")

    params = init_params(cfg.crop_size, cfg.hidden_dim, cfg.embed_dim, init_rng)
    boundary = BoundaryState(beta=cfg.momentum)
    report = TrainReport()

    def snapshot():
        return {name: rng_state(r) for name, r in
                (("init", init_rng), ("batches", batch_rng),
                 ("augment", augment_rng), ("crops", crop_rng))}

    if cfg.epochs == 0:
        return TrainResult(params=params, boundary=boundary, report=report,
                           rng_states=snapshot(), train_generator_ids=gen_ids)

    n_fakes = sum(1 for s in train_set if not s.label.is_real)
    if n_fakes < cfg.fake_batch:
        raise InsufficientSamples(f"need {cfg.fake_batch} fakes, have {n_fakes}")
    steps_per_epoch = max(1, n_fakes // cfg.fake_batch)
    total_steps = cfg.epochs * steps_per_epoch
    warmup_steps = cfg.warmup_epochs * steps_per_epoch

    opt = init_optimizer(params, cfg.weight_decay)
    global_step = 0
    for epoch in range(1, cfg.epochs + 1):
        sup_values: list[float] = []
        cen_values: list[float] = []
        epoch_devs: list[float] = []
        lr = 0.0
        for _ in range(steps_per_epoch):
            lr = lr_at(global_step, total_steps, warmup_steps, cfg.base_lr, cfg.min_lr)
            batch = compose_batch(train_set, cfg.fake_batch, cfg.real_batch,
                                  batch_rng, stratified=cfg.stratified_fakes)
            vg_rows, vl_rows, keys = [], [], []
            for sample in batch:
                levels, sigma = sample_corruption(augment_rng, cfg)
                grid = _corrupted(sample.grid, levels, sigma)
                pair = make_views(grid, cfg.crop_size, TRAIN_RANDOM, crop_rng)
                vg_rows.append(pair.global_view)
                vl_rows.append(pair.local_view)
                keys.append(sample.label.key)
            z, cache = forward_batch(params, np.stack(vg_rows), np.stack(vl_rows))
            batch_emb = BatchEmbeddings(z=z, keys=np.array(keys))

            loss = combined_loss(batch_emb, cfg.temperature, cfg.lambda_center,
                                 params.c_r, denominator=cfg.supcon_denominator)
            real_devs = deviations(z[batch_emb.real_mask], params.c_r)

            grads = backward_batch(params, cache, loss.grad_z)
            grads.c_r = loss.grad_c
            params, opt = optimizer_step(params, grads, opt, lr)

            if real_devs.size:
                if cfg.boundary_cadence == "batch":
                    boundary = update_boundary(boundary, real_devs)
                else:
                    epoch_devs.extend(float(d) for d in real_devs)
            sup_values.append(loss.sup)
            cen_values.append(loss.cen)
            global_step += 1

        if cfg.boundary_cadence == "epoch" and epoch_devs:
            boundary = update_boundary(boundary, epoch_devs)

        probe_loss = None
        if probe_set is not None:
            probe_loss = _probe_loss(params, probe_set, cfg)
        stats = EpochStats(
            epoch=epoch,
            mean_sup=float(np.mean(sup_values)),
            mean_cen=float(np.mean(cen_values)),
            gamma=boundary.gamma if boundary.initialized else float("nan"),
            lr=lr,
            probe_loss=probe_loss,
        )
        report.epochs.append(stats)
        if on_epoch is not None:
            on_epoch(stats)

    return TrainResult(params=params, boundary=boundary, report=report,
                       rng_states=snapshot(), train_generator_ids=gen_ids)


def _probe_loss(params: ParameterSet, probe_set: list[LabeledSample],
                cfg: RunConfig) -> float:
    """Combined loss on a fixed clean batch, for stability tracking."""
    z = embed_grids(params, [s.grid for s in probe_set], cfg.crop_size)
    keys = np.array([s.label.key for s in probe_set])
    loss = combined_loss(BatchEmbeddings(z=z, keys=keys), cfg.temperature,
                         cfg.lambda_center, params.c_r,
                         denominator=cfg.supcon_denominator)
    return loss.total
