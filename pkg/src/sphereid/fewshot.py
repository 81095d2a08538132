"""Open-set few-shot attribution over unseen generator classes.

Episodes draw N unseen classes, K support + Q query samples per class,
build unit-norm class prototypes from the support embeddings, and
assign each query to the nearest prototype by cosine similarity.
Every episode owns an RNG stream derived from (seed, episode index), so
serial and parallel execution produce identical results.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .encoder import ParameterSet, embed_grids
from .errors import DegenerateMean, InsufficientClassSamples
from .rng import seeded_rng
from .types import LabeledSample, assert_unit_rows


@dataclass(frozen=True)
class EpisodeSpec:
    way: int
    shot: int
    query: int = 15
    episodes: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.way < 2 or self.shot < 1 or self.query < 1 or self.episodes < 1:
            raise ValueError("need way >= 2, shot >= 1, query >= 1, episodes >= 1")


@dataclass(frozen=True)
class PrototypeBank:
    class_ids: np.ndarray   # (N,) ascending
    prototypes: np.ndarray  # (N, D) unit rows

    def __post_init__(self):
        if len(set(self.class_ids.tolist())) != len(self.class_ids):
            raise ValueError("class ids must be distinct")
        assert_unit_rows(self.prototypes)


@dataclass(frozen=True)
class FewshotResult:
    way: int
    shot: int
    query: int
    episodes: int
    mean_acc: float
    ci95: float


def group_fakes_by_class(samples: list[LabeledSample]) -> dict[int, list[LabeledSample]]:
    pool: dict[int, list[LabeledSample]] = {}
    for s in samples:
        if not s.label.is_real:
            pool.setdefault(s.label.generator_id, []).append(s)
    return pool


def sample_episode(pool: dict[int, list], spec: EpisodeSpec, rng: np.random.Generator
                   ) -> tuple[list[tuple[int, list]], list[tuple[int, list]]]:
    """Draw one episode: N distinct classes, then K support + Q disjoint
    query items per class. Items may be samples or any indexable payload."""
    class_ids = sorted(pool)
    if len(class_ids) < spec.way:
        raise InsufficientClassSamples(
            f"pool has {len(class_ids)} classes, episode needs {spec.way}")
    picks = rng.choice(len(class_ids), size=spec.way, replace=False)
    support, query = [], []
    for pick in picks:
        cid = class_ids[int(pick)]
        items = pool[cid]
        need = spec.shot + spec.query
        if len(items) < need:
            raise InsufficientClassSamples(
                f"class {cid} has {len(items)} samples, episode needs {need}")
        idx = rng.choice(len(items), size=need, replace=False)
        support.append((cid, [items[int(i)] for i in idx[:spec.shot]]))
        query.append((cid, [items[int(i)] for i in idx[spec.shot:]]))
    return support, query


def build_prototypes(support_embeddings: dict[int, np.ndarray]) -> PrototypeBank:
    """Renormalized per-class mean of support embeddings."""
    class_ids = sorted(support_embeddings)
    protos = []
    for cid in class_ids:
        emb = support_embeddings[cid]
        if emb.ndim != 2 or emb.shape[0] < 1:
            raise ValueError(f"class {cid}: need at least one support embedding")
        mean = emb.mean(axis=0)
        norm = float(np.linalg.norm(mean))
        if norm < 1e-12:
            raise DegenerateMean(f"class {cid}: support embeddings cancel out")
        protos.append(mean / norm)
    return PrototypeBank(class_ids=np.array(class_ids), prototypes=np.stack(protos))


def classify_query(z: np.ndarray, bank: PrototypeBank) -> int:
    """Nearest prototype by cosine similarity; ties go to the lowest id."""
    sims = bank.prototypes @ z
    return int(bank.class_ids[int(np.argmax(sims))])


def run_episodes(params: ParameterSet, crop_size: int,
                 samples_by_class: dict[int, list[LabeledSample]],
                 spec: EpisodeSpec, train_class_ids: list[int] | None = None,
                 workers: int = 1) -> FewshotResult:
    """Episodic evaluation. Embeddings are deterministic per grid, so the
    pool is embedded once up front; episodes then index into it."""
    if train_class_ids is not None:
        overlap = set(samples_by_class) & set(train_class_ids)
        assert not overlap, f"episode pool overlaps training classes: {sorted(overlap)}"

    embedded: dict[int, np.ndarray] = {}
    index_pool: dict[int, list[int]] = {}
    for cid, samples in sorted(samples_by_class.items()):
        embedded[cid] = embed_grids(params, [s.grid for s in samples], crop_size)
        index_pool[cid] = list(range(len(samples)))

    def one_episode(m: int) -> float:
        rng = seeded_rng(spec.seed, f"episode-{m}")
        support, query = sample_episode(index_pool, spec, rng)
        bank = build_prototypes({cid: embedded[cid][idx] for cid, idx in support})
        correct = 0
        total = 0
        for cid, idx in query:
            for i in idx:
                correct += int(classify_query(embedded[cid][i], bank) == cid)
                total += 1
        return correct / total

    if workers <= 1:
        accs = [one_episode(m) for m in range(spec.episodes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            accs = list(pool.map(one_episode, range(spec.episodes)))

    accs_arr = np.array(accs)
    mean = float(accs_arr.mean())
    if spec.episodes > 1:
        ci95 = float(1.96 * accs_arr.std(ddof=1) / np.sqrt(spec.episodes))
    else:
        ci95 = 0.0
    return FewshotResult(way=spec.way, shot=spec.shot, query=spec.query,
                         episodes=spec.episodes, mean_acc=mean, ci95=ci95)
