"""Versioned checkpoint container.

A checkpoint is one canonical JSON document holding every parameter
tensor, the run config, the boundary state, the training RNG stream
positions, and the generator ids seen in training. The dump is
canonical (sorted keys, fixed separators, shortest-roundtrip floats),
so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boundary import BoundaryState
from .config import RunConfig
from .encoder import ParameterSet
from .errors import BadConfig

CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    config: RunConfig
    params: ParameterSet
    boundary: BoundaryState
    rng_streams: dict
    train_generator_ids: list[int]


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    doc = {
        "version": CHECKPOINT_VERSION,
        "config": dataclasses.asdict(ckpt.config),
        "params": {name: getattr(ckpt.params, name).tolist()
                   for name in ckpt.params.tensor_names()},
        "boundary": {
            "gamma": ckpt.boundary.gamma,
            "beta": ckpt.boundary.beta,
            "initialized": ckpt.boundary.initialized,
        },
        "rng_streams": ckpt.rng_streams,
        "train_generator_ids": list(ckpt.train_generator_ids),
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8")


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BadConfig(f"checkpoint is not valid JSON: {exc}") from exc
    if doc.get("version") != CHECKPOINT_VERSION:
        raise BadConfig(f"unsupported checkpoint version {doc.get('version')!r}")

    cfg = RunConfig(**doc["config"])
    cfg.validate()
    params = ParameterSet(**{name: np.array(values, dtype=np.float64)
                             for name, values in doc["params"].items()})
    if not params.all_finite():
        raise BadConfig("checkpoint contains non-finite parameters")
    b = doc["boundary"]
    boundary = BoundaryState(gamma=b["gamma"], beta=b["beta"], initialized=b["initialized"])
    return Checkpoint(
        config=cfg,
        params=params,
        boundary=boundary,
        rng_streams=doc["rng_streams"],
        train_generator_ids=[int(g) for g in doc["train_generator_ids"]],
    )
