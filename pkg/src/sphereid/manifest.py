"""Line-delimited dataset manifest.

First line is a JSON header {"version": 1, "generator_count": G,
"grid_height": H, "grid_width": W}; every following line is one record
{"id", "label", "split", "values"} with values row-major. Floats are
serialized with shortest-roundtrip repr, so save -> load -> save is a
bijection on well-formed inputs.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import DuplicateId, MalformedRecord, UnknownGenerator
from .types import ClassLabel, LabeledSample, SignalGrid

FORMAT_VERSION = 1


def load_manifest(path: str | Path) -> tuple[list[LabeledSample], int]:
    """Read a manifest; returns (samples, declared generator count)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise MalformedRecord(1, "empty manifest (missing header)")

    header = _parse_json(1, lines[0])
    for key in ("version", "generator_count", "grid_height", "grid_width"):
        if key not in header:
            raise MalformedRecord(1, f"header missing {key!r}")
    if header["version"] != FORMAT_VERSION:
        raise MalformedRecord(1, f"unsupported version {header['version']!r}")
    gen_count = int(header["generator_count"])
    height, width = int(header["grid_height"]), int(header["grid_width"])
    if gen_count < 0 or height < 1 or width < 1:
        raise MalformedRecord(1, "header fields out of range")

    samples: list[LabeledSample] = []
    seen_ids: set[str] = set()
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        record = _parse_json(line_no, line)
        for key in ("id", "label", "split", "values"):
            if key not in record:
                raise MalformedRecord(line_no, f"record missing {key!r}")
        sample_id = record["id"]
        if not isinstance(sample_id, str) or not sample_id:
            raise MalformedRecord(line_no, "id must be a non-empty string")
        if sample_id in seen_ids:
            raise DuplicateId(f"duplicate sample id {sample_id!r} (line {line_no})")
        seen_ids.add(sample_id)

        try:
            label = ClassLabel.parse(record["label"])
        except (ValueError, TypeError) as exc:
            raise MalformedRecord(line_no, str(exc)) from exc
        if not label.is_real and label.generator_id >= gen_count:
            raise UnknownGenerator(
                f"generator_id {label.generator_id} >= declared count {gen_count}"
                f" (line {line_no})"
            )

        split = record["split"]
        if split not in ("train", "test"):
            raise MalformedRecord(line_no, f"split must be 'train' or 'test', got {split!r}")

        values = record["values"]
        if not isinstance(values, list) or len(values) != height * width:
            raise MalformedRecord(
                line_no, f"expected {height * width} values, got "
                f"{len(values) if isinstance(values, list) else type(values).__name__}")
        try:
            arr = np.array(values, dtype=np.float64).reshape(height, width)
        except (ValueError, TypeError) as exc:
            raise MalformedRecord(line_no, f"non-numeric values: {exc}") from exc
        if not np.all(np.isfinite(arr)):
            raise MalformedRecord(line_no, "non-finite value in grid")

        samples.append(LabeledSample(id=sample_id, grid=SignalGrid(arr), label=label, split=split))

    return samples, gen_count


def save_manifest(path: str | Path, samples: list[LabeledSample],
                  generator_count: int, grid_height: int, grid_width: int) -> None:
    out = [json.dumps({
        "version": FORMAT_VERSION,
        "generator_count": generator_count,
        "grid_height": grid_height,
        "grid_width": grid_width,
    }, separators=(",", ":"))]
    for s in samples:
        if s.grid.height != grid_height or s.grid.width != grid_width:
            raise ValueError(f"sample {s.id!r} grid shape does not match header")
        values = [_clean_float(v) for v in s.grid.values.ravel().tolist()]
        out.append(json.dumps({
            "id": s.id,
            "label": str(s.label),
            "split": s.split,
            "values": values,
        }, separators=(",", ":")))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def _parse_json(line_no: int, line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(line_no, f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedRecord(line_no, "expected a JSON object")
    return obj


def _clean_float(v: float) -> float:
    if not math.isfinite(v):
        raise ValueError("refusing to write non-finite value")
    return v
