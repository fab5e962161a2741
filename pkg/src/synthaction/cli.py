"""Command line interface.

Subcommands: gen, flow, train, eval, exp. Global flags --seed, --threads,
--verbose. Exit codes: 0 success, 1 usage or config error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

from .classifier import NumericalError, load_checkpoint, save_checkpoint
from .config import ConfigError, REQUIRED, SectionReader, load_config
from .experiments import ExperimentConfig, run_experiment
from .flow import FlowParams
from .fusion import evaluate, fuse_scores, predict_video
from .generate import ClassSpec, GenerationConfig, extract_flow_for_dataset, \
    generate_dataset
from .manifest import ManifestError, make_splits, write_split
from .pgm import PnmError
from .pipeline import Dataset, FeatureBank, TrainSettings, train_network


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="synthaction",
                     description="Synthetic action video toolkit")
    parser.add_argument("--seed", type=int, default=0, help="global seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="parallel workers for generation")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a dataset with flow and splits")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-flow", action="store_true",
                   help="skip flow extraction (run the flow command later)")

    p = sub.add_parser("flow", help="extract missing flow files for a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--force", action="store_true", help="recompute existing flow")
    p.add_argument("--config", help="optional config with a [flow] section")

    p = sub.add_parser("train", help="train a network on one split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--network", required=True, choices=("net1", "net2", "net3"))
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--config", help="optional config with a [train] section")

    p = sub.add_parser("eval", help="evaluate a checkpoint on one split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", type=int, required=True, choices=(1, 2, 3))

    p = sub.add_parser("exp", help="run an experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    return parser


# -- config section builders -------------------------------------------------


def generation_config_from(section: SectionReader, source_kind: str
                           ) -> GenerationConfig:
    classes = tuple(ClassSpec.parse(tok) for tok in
                    section.get_list("classes", default=REQUIRED))
    cfg = GenerationConfig(
        source_kind=source_kind,
        classes=classes,
        videos_per_class=section.get_int("videos_per_class", 40),
        viewpoints_per_class=section.get_int("viewpoints_per_class", 4),
        lighting_presets=tuple(section.get_list(
            "lighting_presets", ["bright", "shadow", "dark"])),
        shake_amplitudes=tuple(section.get_list(
            "shake_amplitudes", [0.008, 0.015, 0.025], convert=float)),
        image_size=tuple(section.get_pair("image_size", (64, 48), convert=int)),
        fps=section.get_int("fps", 30),
        duration_range=section.get_pair("duration_range", (2.0, 2.2)),
    )
    section.finish()
    return cfg


def flow_params_from(section: SectionReader) -> tuple[FlowParams, float]:
    params = FlowParams(
        smoothness_alpha=section.get_float("smoothness_alpha", 15.0),
        iterations_per_level=section.get_int("iterations_per_level", 100),
        pyramid_levels=section.get_int("pyramid_levels", 4),
        pyramid_scale=section.get_float("pyramid_scale", 0.5),
        warp_steps_per_level=section.get_int("warp_steps_per_level", 3),
        zero_damping=section.get_float("zero_damping", 2.5),
    )
    bound = section.get_float("bound", 20.0)
    section.finish()
    return params, bound


def train_settings_from(section: SectionReader, seed: int) -> TrainSettings:
    defaults = TrainSettings()
    hidden = section.get_int("hidden_units", defaults.hidden_units)
    settings = TrainSettings(
        batch_size=section.get_int("batch_size", defaults.batch_size),
        momentum=section.get_float("momentum", defaults.momentum),
        learning_rate=section.get_float("learning_rate", defaults.learning_rate),
        lr_decay=section.get_float("lr_decay", defaults.lr_decay),
        epochs=section.get_int("epochs", defaults.epochs),
        seed=section.get_int("seed", seed),
        hidden_units=hidden if hidden > 0 else None,
        flow_dropout=section.get_float("flow_dropout", defaults.flow_dropout),
        rgb_dropout=section.get_float("rgb_dropout", defaults.rgb_dropout),
        snippet_draws=section.get_int("snippet_draws", defaults.snippet_draws),
    )
    section.finish()
    return settings


def _section(sections: dict, name: str) -> SectionReader:
    return SectionReader(name, sections.get(name, {}))


def _check_sections(sections: dict, allowed: set[str]) -> None:
    unknown = set(sections) - allowed
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")


# -- commands ----------------------------------------------------------------


def cmd_gen(args) -> int:
    sections = load_config(args.config)
    _check_sections(sections, {"dataset", "flow", "real_like", "simplified"})
    flow_params, flow_bound = flow_params_from(_section(sections, "flow"))
    ds = _section(sections, "dataset")
    test_fraction = ds.get_float("test_fraction", 0.3)
    ds.finish()
    configs = []
    for kind in ("real_like", "simplified"):
        if kind in sections:
            configs.append(generation_config_from(_section(sections, kind), kind))
    if not configs:
        raise ConfigError("config needs a [real_like] and/or [simplified] section")

    t0 = time.time()
    progress = None
    if args.verbose:
        def progress(done, total):
            print(f"  generated {done}/{total} videos", file=sys.stderr)
    manifest = generate_dataset(
        configs, args.out, global_seed=args.seed,
        flow_params=None if args.no_flow else flow_params,
        flow_bound=flow_bound, threads=args.threads, progress=progress)
    splits = make_splits(manifest, test_fraction=test_fraction, seed=args.seed)
    for split in splits:
        write_split(Path(args.out) / f"split_{split.split_id}.tsv", split)
    if args.verbose:
        print(f"gen: {len(manifest.records)} videos, "
              f"{len(manifest.classes)} classes in {time.time() - t0:.1f}s")
    return 0


def cmd_flow(args) -> int:
    flow_params, _ = flow_params_from(SectionReader("flow", {}))
    if args.config:
        sections = load_config(args.config)
        # a full gen config may be reused here; only [flow] is consulted
        _check_sections(sections, {"dataset", "flow", "real_like", "simplified"})
        flow_params, _ = flow_params_from(_section(sections, "flow"))
    dataset = Dataset(args.dataset)
    n = extract_flow_for_dataset(args.dataset, dataset.manifest,
                                 flow_params=flow_params, force=args.force,
                                 threads=args.threads)
    if args.verbose:
        print(f"flow: processed {n} videos")
    return 0


def cmd_train(args) -> int:
    settings = train_settings_from(SectionReader("train", {}), args.seed)
    if args.config:
        sections = load_config(args.config)
        # an experiment config may be reused here; only [train] is consulted
        _check_sections(sections, {"train", "experiment"})
        settings = train_settings_from(_section(sections, "train"), args.seed)
    dataset = Dataset(args.dataset)
    split = dataset.split(args.split)
    bank = FeatureBank(dataset)
    trained = train_network(dataset, split, args.network, settings, bank)
    save_checkpoint(args.out, [(spec.name, clf, spec.weight)
                               for spec, clf in trained.streams])
    for spec, clf in trained.streams:
        loss_path = Path(f"{args.out}.{spec.name}.loss.csv")
        lines = ["epoch,loss"] + [f"{epoch},{loss:.8f}"
                                  for epoch, loss in enumerate(clf.loss_history_)]
        loss_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        if args.verbose:
            print(f"train: stream {spec.name} final loss "
                  f"{clf.loss_history_[-1]:.4f} ({loss_path.name})")
    print(f"checkpoint written to {args.out}")
    return 0


def cmd_eval(args) -> int:
    streams = load_checkpoint(args.ckpt)
    dataset = Dataset(args.dataset)
    split = dataset.split(args.split)
    bank = FeatureBank(dataset)
    by_id = dataset.manifest.by_id()
    test_ids = sorted(v for v in split.test_ids
                      if by_id[v].source_kind == "real_like")
    if not test_ids:
        raise ManifestError("split has no real_like test videos")
    weights = [w for _, _, w in streams]
    y_true, y_pred = [], []
    for vid in test_ids:
        scores = []
        for name, clf, _ in streams:
            modality = "flow" if name.startswith("flow") else "rgb"
            feats = bank.get(vid, modality, "test_center")
            if feats.shape[1] != clf.num_features_:
                raise ManifestError(
                    f"checkpoint stream {name} expects {clf.num_features_} "
                    f"features, dataset yields {feats.shape[1]}")
            scores.append(predict_video(clf, feats))
        _, pred = fuse_scores(scores, weights)
        y_true.append(by_id[vid].class_index)
        y_pred.append(pred)
    result = evaluate(y_true, y_pred, len(dataset.manifest.classes))
    print(result.summary(dataset.manifest.classes))
    return 0


def cmd_exp(args) -> int:
    sections = load_config(args.config)
    _check_sections(sections, {"experiment", "train"})
    sec = _section(sections, "experiment")
    config = ExperimentConfig(
        experiment_id=sec.get_str("experiment_id", REQUIRED),
        dataset_dir=sec.get_str("dataset_dir", REQUIRED),
        keep_fractions=tuple(sec.get_list("keep_fractions",
                                          [1.0, 0.5, 0.1, 0.0], convert=float)),
        synthetic_counts=tuple(sec.get_list("synthetic_counts",
                                            ["none", "half", "all"])),
        seeds=tuple(sec.get_list("seeds", [0, 1, 2], convert=int)),
        splits=tuple(sec.get_list("splits", [1, 2, 3], convert=int)),
        network=sec.get_str("network", "net2"),
    )
    sec.finish()
    train = train_settings_from(_section(sections, "train"), args.seed)
    config = dataclasses.replace(config, train=train)
    progress = None
    if args.verbose:
        def progress(row):
            print(f"  {row.condition} seed={row.seed} split={row.split} "
                  f"fused={row.fused_accuracy:.4f}", file=sys.stderr)
    report = run_experiment(config, progress=progress)
    csv_path, txt_path = report.write(args.out)
    print(txt_path.read_text(), end="")
    print(f"report written to {csv_path} and {txt_path}")
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "flow": cmd_flow,
    "train": cmd_train,
    "eval": cmd_eval,
    "exp": cmd_exp,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, ManifestError, PnmError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
