"""Dual-path embedding network.

A grid is seen twice: a global view (area-pooled so the shorter edge
matches the crop size, then center-cropped) and a local view (a crop at
native resolution). Each view goes through its own linear map, the two
feature halves are concatenated, passed through a one-hidden-layer relu
MLP, and the output is L2-normalized onto the unit sphere.

forward/backward are pure given (params, input); the batched variants
are the performance path and accumulate parameter gradients through
fixed matrix products, so results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import GridTooSmall, StaleCache, ZeroFeatureNorm
from .types import SignalGrid, unit

TRAIN_RANDOM = "train-random"
EVAL_CENTER = "eval-center"

_ZERO_NORM_FLOOR = 1e-12


@dataclass
class ParameterSet:
    """All trainable weights plus the learnable real-class center c_r."""

    w_g: np.ndarray  # (H, C) global-path linear map
    b_g: np.ndarray  # (H,)
    w_l: np.ndarray  # (H, C) local-path linear map
    b_l: np.ndarray  # (H,)
    w_1: np.ndarray  # (H, 2H) MLP hidden layer
    b_1: np.ndarray  # (H,)
    w_2: np.ndarray  # (D, H) MLP output layer
    b_2: np.ndarray  # (D,)
    c_r: np.ndarray  # (D,) unit-norm real center

    @property
    def hidden_dim(self) -> int:
        return self.w_g.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.w_2.shape[0]

    @property
    def view_dim(self) -> int:
        return self.w_g.shape[1]

    def tensor_names(self) -> list[str]:
        return [f.name for f in fields(self)]

    def zeros_like(self) -> "ParameterSet":
        return ParameterSet(**{n: np.zeros_like(getattr(self, n)) for n in self.tensor_names()})

    def copy(self) -> "ParameterSet":
        return ParameterSet(**{n: getattr(self, n).copy() for n in self.tensor_names()})

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(getattr(self, n))) for n in self.tensor_names())


def init_params(crop_size: int, hidden_dim: int, embed_dim: int,
                rng: np.random.Generator) -> ParameterSet:
    """Uniform [-s, s] with s = 1/sqrt(fan_in) per tensor. b_2 starts at a
    fixed small vector so the pre-normalization feature is nonzero at step
    zero; c_r starts at a random point on the sphere."""
    c = crop_size * crop_size

    def u(fan_in, *shape):
        s = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-s, s, size=shape)

    h, d = hidden_dim, embed_dim
    params = ParameterSet(
        w_g=u(c, h, c), b_g=u(c, h),
        w_l=u(c, h, c), b_l=u(c, h),
        w_1=u(2 * h, h, 2 * h), b_1=u(2 * h, h),
        w_2=u(h, d, h), b_2=0.1 * np.ones(d) / np.sqrt(d),
        c_r=unit(rng.standard_normal(d)),
    )
    return params


@dataclass(frozen=True)
class ViewPair:
    global_view: np.ndarray  # (crop_size^2,)
    local_view: np.ndarray   # (crop_size^2,)


def make_views(grid: SignalGrid, crop_size: int, mode: str,
               rng: np.random.Generator | None = None) -> ViewPair:
    """Extract the (global, local) view pair from a grid.

    Global: area-pool so the shorter edge equals crop_size (aspect
    preserved), then center-crop. Local: a crop_size x crop_size window
    of the original grid; centered in EVAL_CENTER mode, uniformly random
    in TRAIN_RANDOM mode (rng required).
    """
    h, w = grid.height, grid.width
    if h < crop_size or w < crop_size:
        raise GridTooSmall(f"grid {h}x{w} smaller than crop {crop_size}")
    if mode not in (TRAIN_RANDOM, EVAL_CENTER):
        raise ValueError(f"unknown view mode {mode!r}")

    pooled = _pool_shorter_edge(grid.values, crop_size)
    gh, gw = pooled.shape
    top, left = (gh - crop_size) // 2, (gw - crop_size) // 2
    global_view = pooled[top:top + crop_size, left:left + crop_size]

    if mode == EVAL_CENTER:
        top, left = (h - crop_size) // 2, (w - crop_size) // 2
    else:
        if rng is None:
            raise ValueError("TRAIN_RANDOM mode needs an rng")
        top = int(rng.integers(0, h - crop_size + 1))
        left = int(rng.integers(0, w - crop_size + 1))
    local_view = grid.values[top:top + crop_size, left:left + crop_size]

    return ViewPair(global_view=np.ascontiguousarray(global_view).ravel(),
                    local_view=np.ascontiguousarray(local_view).ravel())


def _pool_shorter_edge(a: np.ndarray, target: int) -> np.ndarray:
    """Area-average resampling so the shorter edge equals target, aspect
    preserved (longer edge rounded, never below target)."""
    h, w = a.shape
    if h <= w:
        out_h = target
        out_w = max(target, round(w * target / h))
    else:
        out_w = target
        out_h = max(target, round(h * target / w))
    return _area_weights(out_h, h) @ a @ _area_weights(out_w, w).T


def _area_weights(n_out: int, n_in: int) -> np.ndarray:
    """Row-stochastic matrix averaging input cells over fractional spans."""
    if n_out == n_in:
        return np.eye(n_in)
    scale = n_in / n_out
    edges_lo = np.arange(n_out)[:, None] * scale
    edges_hi = edges_lo + scale
    cells = np.arange(n_in)[None, :]
    overlap = np.minimum(edges_hi, cells + 1.0) - np.maximum(edges_lo, cells)
    return np.clip(overlap, 0.0, None) / scale


@dataclass
class BatchCache:
    vg: np.ndarray     # (N, C)
    vl: np.ndarray     # (N, C)
    hcat: np.ndarray   # (N, 2H)
    pre1: np.ndarray   # (N, H)
    act: np.ndarray    # (N, H)
    z: np.ndarray      # (N, D) unit rows
    norms: np.ndarray  # (N,)


def forward_batch(params: ParameterSet, vg: np.ndarray,
                  vl: np.ndarray) -> tuple[np.ndarray, BatchCache]:
    g = vg @ params.w_g.T + params.b_g
    loc = vl @ params.w_l.T + params.b_l
    hcat = np.concatenate([g, loc], axis=1)
    pre1 = hcat @ params.w_1.T + params.b_1
    act = np.maximum(pre1, 0.0)
    e = act @ params.w_2.T + params.b_2
    norms = np.linalg.norm(e, axis=1)
    if np.any(norms < _ZERO_NORM_FLOOR):
        raise ZeroFeatureNorm("pre-normalization feature has ~zero norm")
    z = e / norms[:, None]
    return z, BatchCache(vg=vg, vl=vl, hcat=hcat, pre1=pre1, act=act, z=z, norms=norms)


def backward_batch(params: ParameterSet, cache: BatchCache,
                   upstream: np.ndarray) -> ParameterSet:
    """Gradients of a scalar loss w.r.t. every parameter, summed over the
    batch, given upstream = dLoss/dZ. The normalization Jacobian projects
    upstream onto the tangent space: dL/de = (u - (u.z) z) / |e|."""
    h = params.hidden_dim
    if cache.act.shape[1] != h or cache.z.shape[1] != params.embed_dim \
            or cache.vg.shape[1] != params.view_dim \
            or upstream.shape != cache.z.shape:
        raise StaleCache("cache/upstream shapes do not match parameters")

    radial = np.sum(upstream * cache.z, axis=1, keepdims=True)
    d_e = (upstream - radial * cache.z) / cache.norms[:, None]

    grad = params.zeros_like()
    grad.w_2 = d_e.T @ cache.act
    grad.b_2 = d_e.sum(axis=0)
    d_act = d_e @ params.w_2
    d_pre1 = d_act * (cache.pre1 > 0.0)
    grad.w_1 = d_pre1.T @ cache.hcat
    grad.b_1 = d_pre1.sum(axis=0)
    d_h = d_pre1 @ params.w_1
    d_g, d_l = d_h[:, :h], d_h[:, h:]
    grad.w_g = d_g.T @ cache.vg
    grad.b_g = d_g.sum(axis=0)
    grad.w_l = d_l.T @ cache.vl
    grad.b_l = d_l.sum(axis=0)
    return grad


def forward(params: ParameterSet, views: ViewPair) -> tuple[np.ndarray, BatchCache]:
    """Single-sample forward; returns the unit embedding and its cache."""
    z, cache = forward_batch(params, views.global_view[None, :], views.local_view[None, :])
    return z[0], cache


def backward(params: ParameterSet, cache: BatchCache, upstream: np.ndarray) -> ParameterSet:
    """Single-sample backward for a cache produced by forward."""
    if upstream.ndim == 1:
        upstream = upstream[None, :]
    return backward_batch(params, cache, upstream)


def embed_grids(params: ParameterSet, grids: list[SignalGrid], crop_size: int) -> np.ndarray:
    """Deterministic EVAL_CENTER embedding of many grids; returns (N, D)."""
    pairs = [make_views(g, crop_size, EVAL_CENTER) for g in grids]
    vg = np.stack([p.global_view for p in pairs])
    vl = np.stack([p.local_view for p in pairs])
    z, _ = forward_batch(params, vg, vl)
    return z
