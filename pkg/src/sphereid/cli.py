"""Single command-line entry point.

Subcommands: synth-data, train, eval-detect, eval-fewshot, robust-sweep,
report. Exit codes: 0 success, 1 domain errors, 2 usage errors. Every
output file is written canonically, so identical inputs and seeds yield
byte-identical outputs; no subcommand mutates its inputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import checkpoint as ckpt_io
from .config import apply_overrides, load_config
from .errors import InsufficientSamples, SphereidError
from .fewshot import EpisodeSpec, group_fakes_by_class, run_episodes
from .manifest import load_manifest, save_manifest
from .metrics import evaluate_detection
from .simulate import SimulatorConfig, generate_dataset, split_folds
from .trainer import train


class _Parser(argparse.ArgumentParser):
    """Argparse with full help text on usage errors (exit code 2)."""

    def error(self, message):
        print(f"error: {message}\n", file=sys.stderr)
        self.print_help(sys.stderr)
        raise SystemExit(2)


def _canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _emit(doc, out_path: str | None) -> None:
    text = _canonical_json(doc)
    sys.stdout.write(text)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")


def build_parser() -> _Parser:
    parser = _Parser(prog="sphereid",
                     description="Sphere-embedding toolkit for synthetic-signal "
                                 "detection and few-shot source attribution")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth-data", help="generate a seeded synthetic dataset")
    p.add_argument("--out", required=True, help="manifest path to write")
    p.add_argument("--classes", type=int, default=12, help="generator count G")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.6, help="fingerprint strength")
    p.add_argument("--noise-sigma", type=float, default=0.25)
    p.add_argument("--base-smoothness", type=float, default=2.0)
    p.add_argument("--grid-height", type=int, default=32)
    p.add_argument("--grid-width", type=int, default=32)
    p.add_argument("--train-per-class", type=int, default=100)
    p.add_argument("--test-per-class", type=int, default=25)
    p.add_argument("--folds", type=int, default=3, help="class folds recorded in the sidecar")
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("train", help="train a checkpoint from a manifest")
    p.add_argument("--config", required=True, help="run-config file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="checkpoint path to write")
    p.add_argument("--fold", type=int, default=None,
                   help="hold out this fold's classes (uses the manifest sidecar)")
    p.add_argument("--meta", default=None,
                   help="sidecar path (default: <manifest>.meta.json)")
    p.add_argument("--exclude-classes", default=None,
                   help="comma-separated generator ids to hold out")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (flag > file > default)")
    p.add_argument("--report", default=None,
                   help="training report path (default: <out>.report.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval-detect", help="binary detection metrics on the test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--corrupt", default=None, metavar="OP:VALUE",
                   help="quantize:<levels> or smooth:<sigma> applied before scoring")
    p.add_argument("--fakes", choices=("unseen", "all"), default="unseen",
                   help="which fake classes to score (default: classes not trained on)")
    p.add_argument("--out", default=None, help="also write the result JSON here")
    p.set_defaults(func=cmd_eval_detect)

    p = sub.add_parser("eval-fewshot", help="episodic N-way K-shot attribution")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--way", type=int, required=True)
    p.add_argument("--shot", type=int, required=True)
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--query", type=int, default=15)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval_fewshot)

    p = sub.add_parser("robust-sweep", help="eval-detect across corruption severities")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--op", choices=("quantize", "smooth"), required=True)
    p.add_argument("--values", required=True, help="comma-separated severities")
    p.add_argument("--fakes", choices=("unseen", "all"), default="unseen")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_robust_sweep)

    p = sub.add_parser("report", help="merge result files into one table")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_report)

    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except SphereidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


# --- subcommand implementations ---

def cmd_synth_data(args) -> int:
    cfg = SimulatorConfig(
        seed=args.seed,
        generator_count=args.classes,
        fingerprint_strength=args.alpha,
        noise_sigma=args.noise_sigma,
        base_smoothness=args.base_smoothness,
        grid_height=args.grid_height,
        grid_width=args.grid_width,
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
    )
    try:
        cfg.validate()
        fold_split = split_folds(cfg.generator_count, args.folds, cfg.seed)
    except ValueError as exc:
        raise SphereidError(str(exc)) from exc
    samples = generate_dataset(cfg)
    save_manifest(args.out, samples, cfg.generator_count,
                  cfg.grid_height, cfg.grid_width)
    meta = {
        "format": 1,
        "simulator": dataclasses.asdict(cfg),
        "fold_split": {"fold_count": fold_split.fold_count,
                       "folds": [list(f) for f in fold_split.folds]},
    }
    Path(_meta_path(args.out)).write_text(_canonical_json(meta), encoding="utf-8")
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def _meta_path(manifest_path: str) -> str:
    return manifest_path + ".meta.json"


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    samples, _ = load_manifest(args.manifest)
    train_set = [s for s in samples if s.split == "train"]

    if args.fold is not None and args.exclude_classes is not None:
        raise SphereidError("--fold and --exclude-classes are mutually exclusive")
    excluded: set[int] = set()
    if args.fold is not None:
        meta_path = args.meta or _meta_path(args.manifest)
        meta = json.loads(Path(meta_path).read_text(encoding="utf-8"))
        folds = meta["fold_split"]["folds"]
        if not (0 <= args.fold < len(folds)):
            raise SphereidError(f"fold {args.fold} out of range (have {len(folds)})")
        excluded = set(folds[args.fold])
    elif args.exclude_classes is not None:
        excluded = {int(x) for x in args.exclude_classes.split(",") if x.strip()}
    if excluded:
        train_set = [s for s in train_set
                     if s.label.is_real or s.label.generator_id not in excluded]
    if not train_set:
        raise InsufficientSamples("no training samples left after filtering")

    def progress(stats):
        print(f"epoch {stats.epoch}: L_sup={stats.mean_sup:.6f} "
              f"L_cen={stats.mean_cen:.6f} gamma={stats.gamma:.6f} lr={stats.lr:.6g}")

    result = train(cfg, train_set, on_epoch=progress)
    ckpt = ckpt_io.Checkpoint(
        config=cfg,
        params=result.params,
        boundary=result.boundary,
        rng_streams=result.rng_states,
        train_generator_ids=result.train_generator_ids,
    )
    ckpt_io.save_checkpoint(args.out, ckpt)

    report_path = args.report or (args.out + ".report.json")
    report_doc = {
        "checkpoint": args.out,
        "epochs": [{
            "epoch": e.epoch, "mean_sup": e.mean_sup, "mean_cen": e.mean_cen,
            "gamma": e.gamma, "lr": e.lr,
        } for e in result.report.epochs],
        "train_generator_ids": result.train_generator_ids,
    }
    Path(report_path).write_text(_canonical_json(report_doc), encoding="utf-8")
    print(f"wrote checkpoint {args.out}")
    return 0


def _load_eval_inputs(checkpoint_path: str, manifest_path: str, fakes_mode: str):
    ckpt = ckpt_io.load_checkpoint(checkpoint_path)
    samples, _ = load_manifest(manifest_path)
    test = [s for s in samples if s.split == "test"]
    trained = set(ckpt.train_generator_ids)
    if fakes_mode == "unseen":
        kept = [s for s in test
                if s.label.is_real or s.label.generator_id not in trained]
        if all(s.label.is_real for s in kept):
            raise InsufficientSamples(
                "no unseen fake classes in the test split; try --fakes all")
    else:
        kept = test
    return ckpt, kept


def _parse_corrupt(text: str | None) -> tuple[str, float] | None:
    if text is None:
        return None
    if ":" not in text:
        raise SphereidError("corruption must look like quantize:<levels> or smooth:<sigma>")
    op, raw = text.split(":", 1)
    if op not in ("quantize", "smooth"):
        raise SphereidError(f"unknown corruption {op!r}")
    try:
        return op, float(raw)
    except ValueError as exc:
        raise SphereidError(f"bad corruption value {raw!r}") from exc


def _detect_doc(report, corrupt_text: str) -> dict:
    return {
        "kind": "detect",
        "corrupt": corrupt_text,
        "f_acc": report.f_acc,
        "r_acc": report.r_acc,
        "acc": report.acc,
        "ap": report.ap,
        "n_fake": report.n_fake,
        "n_real": report.n_real,
        "per_class_f_acc": {str(k): v for k, v in report.per_class_f_acc.items()},
    }


def cmd_eval_detect(args) -> int:
    ckpt, samples = _load_eval_inputs(args.checkpoint, args.manifest, args.fakes)
    corrupt = _parse_corrupt(args.corrupt)
    report = evaluate_detection(ckpt.params, ckpt.boundary, samples,
                                ckpt.config.crop_size, corrupt=corrupt)
    _emit(_detect_doc(report, args.corrupt or "none"), args.out)
    return 0


def cmd_eval_fewshot(args) -> int:
    ckpt, samples = _load_eval_inputs(args.checkpoint, args.manifest, "unseen")
    pool = group_fakes_by_class(samples)
    spec = EpisodeSpec(way=args.way, shot=args.shot, query=args.query,
                       episodes=args.episodes, seed=args.seed)
    result = run_episodes(ckpt.params, ckpt.config.crop_size, pool, spec,
                          train_class_ids=ckpt.train_generator_ids,
                          workers=args.workers)
    _emit({
        "kind": "fewshot",
        "way": result.way,
        "shot": result.shot,
        "query": result.query,
        "episodes": result.episodes,
        "mean_acc": result.mean_acc,
        "ci95": result.ci95,
    }, args.out)
    return 0


def cmd_robust_sweep(args) -> int:
    ckpt, samples = _load_eval_inputs(args.checkpoint, args.manifest, args.fakes)
    try:
        values = [float(x) for x in args.values.split(",") if x.strip()]
    except ValueError as exc:
        raise SphereidError(f"bad --values list: {exc}") from exc
    if not values:
        raise SphereidError("--values must contain at least one number")
    results = []
    for value in values:
        rep = evaluate_detection(ckpt.params, ckpt.boundary, samples,
                                 ckpt.config.crop_size, corrupt=(args.op, value))
        results.append({"value": value, "f_acc": rep.f_acc, "r_acc": rep.r_acc,
                        "acc": rep.acc, "ap": rep.ap})
    doc = {"kind": "sweep", "op": args.op, "results": results}
    text = _canonical_json(doc)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    _print_table([f"{args.op}={r['value']:g}" for r in results],
                 [(r["f_acc"], r["r_acc"], r["acc"], r["ap"]) for r in results])
    return 0


def cmd_report(args) -> int:
    detect_rows: list[tuple[str, tuple]] = []
    fewshot_rows: list[tuple[str, dict]] = []
    for path in args.files:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        kind = doc.get("kind")
        name = Path(path).name
        if kind == "detect":
            detect_rows.append((f"{name} [{doc['corrupt']}]",
                                (doc["f_acc"], doc["r_acc"], doc["acc"], doc["ap"])))
        elif kind == "sweep":
            for r in doc["results"]:
                detect_rows.append((f"{name} [{doc['op']}={r['value']:g}]",
                                    (r["f_acc"], r["r_acc"], r["acc"], r["ap"])))
        elif kind == "fewshot":
            fewshot_rows.append((name, doc))
        else:
            raise SphereidError(f"{path}: unrecognized result kind {kind!r}")
    if detect_rows:
        _print_table([label for label, _ in detect_rows],
                     [vals for _, vals in detect_rows])
    if fewshot_rows:
        width = max(len(label) for label, _ in fewshot_rows)
        print(f"{'source':<{width}}  way  shot  episodes  mean_acc  ci95")
        for label, doc in fewshot_rows:
            print(f"{label:<{width}}  {doc['way']:>3}  {doc['shot']:>4}  "
                  f"{doc['episodes']:>8}  {doc['mean_acc']:>8.4f}  {doc['ci95']:>6.4f}")
    return 0


def _print_table(labels: list[str], rows: list[tuple]) -> None:
    width = max(len(label) for label in labels)
    print(f"{'source':<{width}}  {'F-Acc':>6}  {'R-Acc':>6}  {'Acc':>6}  {'AP':>6}")
    for label, (f_acc, r_acc, acc, ap) in zip(labels, rows):
        print(f"{label:<{width}}  {f_acc:>6.4f}  {r_acc:>6.4f}  {acc:>6.4f}  {ap:>6.4f}")


if __name__ == "__main__":
    main()
