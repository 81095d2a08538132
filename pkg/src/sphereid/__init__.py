"""Unit-sphere metric learning for synthetic-signal detection and
open-set few-shot source attribution."""

from .boundary import BoundaryState, classify, deviation, update_boundary
from .config import RunConfig, load_config
from .encoder import ParameterSet, ViewPair, backward, forward, init_params, make_views
from .fewshot import EpisodeSpec, PrototypeBank, build_prototypes, classify_query, run_episodes
from .losses import BatchEmbeddings, center_loss, combined_loss, supcon_loss
from .manifest import load_manifest, save_manifest
from .metrics import ScoredVerdicts, accuracy_suite, average_precision
from .rng import seeded_rng
from .simulate import FoldSplit, SimulatorConfig, generate_dataset, split_folds
from .trainer import TrainReport, compose_batch, train
from .types import ClassLabel, LabeledSample, SignalGrid

__version__ = "0.1.0"

__all__ = [
    "BatchEmbeddings", "BoundaryState", "ClassLabel", "EpisodeSpec", "FoldSplit",
    "LabeledSample", "ParameterSet", "PrototypeBank", "RunConfig", "ScoredVerdicts",
    "SignalGrid", "SimulatorConfig", "TrainReport", "ViewPair", "accuracy_suite",
    "average_precision", "backward", "build_prototypes", "center_loss", "classify",
    "classify_query", "combined_loss", "compose_batch", "deviation", "forward",
    "generate_dataset", "init_params", "load_config", "load_manifest", "make_views",
    "run_episodes", "save_manifest", "seeded_rng", "split_folds", "supcon_loss",
    "train", "update_boundary",
]
