"""The three study runners and their deterministic reports.

Desk-scale stand-ins: "real" data are real_like renders (textured
background, textured character, camera shake); "synthetic" data are
simplified renders (blank background, flat character, no shake). The
cross-domain gap is far smaller than real-world versus synthetic, so all
comparisons here are trend-level. Published benchmark numbers are carried
in the reports as literature context only and are clearly labeled as such.

E1  background effect: Network-1 plus a background-synthetic pool versus
    Network-2 plus N and 2N simplified videos.
E2  synthetic augmentation: Network-2 with {none, half, all} simplified
    training videos added to its third stream.
E3  real reduction: keep fractions of real training videos crossed with
    {none, half, all} simplified counts; the 0% row trains Network-3 on
    simplified videos alone and tests on real_like videos.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .fusion import EvalResult
from .manifest import SplitSpec, subsample_real, subsample_synthetic
from .pipeline import (
    Dataset,
    FeatureBank,
    TrainSettings,
    network_streams,
    train_network,
    train_streams,
    evaluate_network,
)
from .seeding import stable_seed

EXPERIMENT_IDS = ("E1", "E2", "E3", "per_class")

# Published values carried as context; never measured by this package.
LITERATURE_CONTEXT = {
    "E1": [
        ("Network-1 + 4000 background synthetic videos, HMDB-51", 72.3),
        ("Network-2 + 4000 simplified synthetic videos, HMDB-51", 71.8),
        ("Network-2 + 8000 simplified synthetic videos, HMDB-51", 72.4),
    ],
    "E2": [
        ("HMDB-38 real only", 71.8),
        ("HMDB-38 half synthetic + real", 73.66),
        ("HMDB-38 all synthetic + real", 74.62),
        ("UCF-25 real only", 96.66),
        ("UCF-25 half synthetic + real", 97.5),
        ("UCF-25 all synthetic + real", 97.8),
    ],
    "E3": [
        ("UCF-25 100% real / +2500 / +5000", "96.66 / 97.5 / 97.8"),
        ("UCF-25 50% real / +2500 / +5000", "96.34 / 97.02 / 97.7"),
        ("UCF-25 10% real / +2500 / +5000", "77.4 / 81.69 / 85.41"),
        ("UCF-25 0% real: +2500 -> 30.71, +5000 -> 52.7 (flow-only network)", None),
    ],
    "per_class": [],
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    dataset_dir: str
    keep_fractions: tuple[float, ...] = (1.0, 0.5, 0.1, 0.0)
    synthetic_counts: tuple[str, ...] = ("none", "half", "all")
    seeds: tuple[int, ...] = (0, 1, 2)
    splits: tuple[int, ...] = (1, 2, 3)
    network: str = "net2"
    train: TrainSettings = field(default_factory=TrainSettings)

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENT_IDS:
            raise ValueError(f"unknown experiment {self.experiment_id!r}")
        object.__setattr__(self, "keep_fractions", tuple(self.keep_fractions))
        object.__setattr__(self, "synthetic_counts", tuple(self.synthetic_counts))
        object.__setattr__(self, "seeds", tuple(self.seeds))
        object.__setattr__(self, "splits", tuple(self.splits))
        for token in self.synthetic_counts:
            if token not in ("none", "half", "all") and not token.isdigit():
                raise ValueError(f"bad synthetic count {token!r}; use none|half|all|<int>")


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    condition: str
    network: str
    seed: int
    split: int
    fused_accuracy: float
    stream_accuracies: tuple[tuple[str, float], ...]
    config_hash: str


@dataclass
class ExperimentReport:
    experiment: str
    rows: list[ReportRow]
    per_class: list[tuple[str, float]] | None = None

    def condition_means(self) -> list[tuple[str, float]]:
        """Mean fused accuracy per condition, in first-seen order."""
        order: list[str] = []
        acc: dict[str, list[float]] = {}
        for row in self.rows:
            if row.condition not in acc:
                order.append(row.condition)
                acc[row.condition] = []
            acc[row.condition].append(row.fused_accuracy)
        return [(cond, float(np.mean(acc[cond]))) for cond in order]

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["experiment", "condition", "network", "seed", "split",
                         "fused_accuracy", "stream_accuracies", "config_hash"])
        for r in self.rows:
            streams = ";".join(f"{n}={a:.4f}" for n, a in r.stream_accuracies)
            writer.writerow([r.experiment, r.condition, r.network, r.seed, r.split,
                             f"{r.fused_accuracy:.6f}", streams, r.config_hash])
        return out.getvalue()

    def to_text(self) -> str:
        lines = [
            f"experiment {self.experiment} (desk scale)",
            "NOTE: real data are stand-in textured renders and synthetic data are",
            "blank-background renders; results support trend comparisons only.",
            "",
            f"{'condition':<28s} {'runs':>4s} {'mean fused acc':>14s}",
        ]
        for cond, mean in self.condition_means():
            n = sum(1 for r in self.rows if r.condition == cond)
            lines.append(f"{cond:<28s} {n:>4d} {mean:>14.4f}")
        lines.append("")
        lines.append(f"{'condition':<28s} {'seed':>4s} {'split':>5s} {'fused':>8s}")
        for r in self.rows:
            lines.append(f"{r.condition:<28s} {r.seed:>4d} {r.split:>5d} "
                         f"{r.fused_accuracy:>8.4f}")
        if self.per_class is not None:
            lines.append("")
            lines.append(f"{'class':<20s} {'accuracy':>8s}")
            for name, acc in self.per_class:
                lines.append(f"{name:<20s} {acc:>8.4f}")
        context = LITERATURE_CONTEXT.get(self.experiment, [])
        if context:
            lines.append("")
            lines.append("literature context (published values, NOT measured here):")
            for label, value in context:
                lines.append(f"  {label}: {value if value is not None else ''}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.experiment}_report.csv"
        txt_path = out / f"{self.experiment}_report.txt"
        csv_path.write_text(self.to_csv(), encoding="utf-8", newline="\n")
        txt_path.write_text(self.to_text(), encoding="utf-8", newline="\n")
        if self.per_class is not None:
            pc = out / f"{self.experiment}_per_class.csv"
            body = "class,accuracy\n" + "".join(
                f"{name},{acc:.6f}\n" for name, acc in self.per_class)
            pc.write_text(body, encoding="utf-8", newline="\n")
        return csv_path, txt_path


def _row_hash(*parts) -> str:
    return f"{stable_seed(*parts):016x}"


def simplified_train_count(dataset: Dataset, split: SplitSpec) -> int:
    """Per-class simplified training count (minimum across classes)."""
    by_id = dataset.manifest.by_id()
    counts: dict[str, int] = {c: 0 for c in dataset.manifest.classes}
    for vid in split.train_ids:
        rec = by_id[vid]
        if rec.source_kind == "simplified":
            counts[rec.class_name] += 1
    relevant = [n for n in counts.values() if n > 0]
    return min(relevant) if relevant else 0


def resolve_synth_count(token: str, per_class_total: int) -> int | None:
    """Map none|half|all|<int> to a per-class cap (None = no cap)."""
    if token == "none":
        return 0
    if token == "half":
        return per_class_total // 2
    if token == "all":
        return None
    return int(token)


def run_condition(dataset: Dataset, bank: FeatureBank, split: SplitSpec,
                  network: str, condition: str, seed: int,
                  train_settings: TrainSettings, keep_fraction: float = 1.0,
                  synthetic_count: int | None = None,
                  experiment: str = "") -> tuple[ReportRow, EvalResult]:
    settings = replace(train_settings, seed=seed)
    trained = train_network(dataset, split, network, settings, bank,
                            keep_fraction=keep_fraction,
                            synthetic_count=synthetic_count)
    fused, per_stream = evaluate_network(trained, dataset, split, bank)
    row = ReportRow(
        experiment=experiment, condition=condition, network=network,
        seed=seed, split=split.split_id, fused_accuracy=fused.accuracy,
        stream_accuracies=tuple((name, res.accuracy)
                                for name, res in per_stream.items()),
        config_hash=_row_hash(experiment, condition, network, seed,
                              split.split_id, keep_fraction,
                              -1 if synthetic_count is None else synthetic_count,
                              dataset.manifest.global_seed),
    )
    return row, fused


def run_E1_background_effect(config: ExperimentConfig,
                             progress=None) -> ExperimentReport:
    """Network-1 with a background-synthetic pool versus Network-2 with
    N and 2N simplified videos.

    The real_like training videos are halved: the kept half plays the real
    data, the removed half plays the N background-synthetic augmentation
    pool (backgrounds are what distinguish that pool from simplified
    videos). N simplified matches the pool size per class; 2N is all of
    them.
    """
    dataset = Dataset(config.dataset_dir)
    bank = FeatureBank(dataset)
    by_id = dataset.manifest.by_id()
    rows: list[ReportRow] = []
    for split_id in config.splits:
        split = dataset.split(split_id)
        real_train_all = {v for v in split.train_ids
                          if by_id[v].source_kind == "real_like"}
        for seed in config.seeds:
            settings = replace(config.train, seed=seed)
            half_split = subsample_real(split, dataset.manifest, 0.5, seed=seed)
            real_half = {v for v in half_split.train_ids
                         if by_id[v].source_kind == "real_like"}
            bg_pool = real_train_all - real_half
            n_per_class = max(1, len(bg_pool) // len(dataset.manifest.classes))
            simp_n = {v for v in subsample_synthetic(
                split, dataset.manifest, n_per_class, seed=seed).train_ids
                if by_id[v].source_kind == "simplified"}
            simp_all = {v for v in split.train_ids
                        if by_id[v].source_kind == "simplified"}

            specs1 = network_streams("net1")
            net1_data = [
                (specs1[0], sorted(real_half | bg_pool)),   # flow real+bg-synth
                (specs1[1], sorted(real_half)),             # flow real
                (specs1[2], sorted(real_half)),             # rgb real
                (specs1[3], sorted(real_half | bg_pool)),   # rgb real+bg-synth
            ]
            specs2 = network_streams("net2")

            def net2_data(simp_ids):
                return [
                    (specs2[0], sorted(real_half)),
                    (specs2[1], sorted(real_half)),
                    (specs2[2], sorted(real_half | simp_ids)),
                ]

            jobs = [
                ("net1_bg_synth", "net1", net1_data),
                ("net2_N_simplified", "net2", net2_data(simp_n)),
                ("net2_2N_simplified", "net2", net2_data(simp_all)),
            ]
            for condition, network, stream_data in jobs:
                trained = train_streams(dataset, stream_data, settings,
                                        split_id, network, bank)
                fused, per_stream = evaluate_network(trained, dataset, split, bank)
                rows.append(ReportRow(
                    experiment="E1", condition=condition, network=network,
                    seed=seed, split=split_id, fused_accuracy=fused.accuracy,
                    stream_accuracies=tuple((n, r.accuracy)
                                            for n, r in per_stream.items()),
                    config_hash=_row_hash("E1", condition, network, seed,
                                          split_id, dataset.manifest.global_seed)))
                if progress is not None:
                    progress(rows[-1])
    return ExperimentReport("E1", rows)


def run_E2_synthetic_augmentation(config: ExperimentConfig,
                                  progress=None) -> ExperimentReport:
    """Network-2 with {real only, real + half synthetic, real + all
    synthetic} training data."""
    dataset = Dataset(config.dataset_dir)
    bank = FeatureBank(dataset)
    rows: list[ReportRow] = []
    labels = {"none": "real_only", "half": "real_plus_half_synth",
              "all": "real_plus_all_synth"}
    for split_id in config.splits:
        split = dataset.split(split_id)
        total = simplified_train_count(dataset, split)
        for seed in config.seeds:
            for token in config.synthetic_counts:
                count = resolve_synth_count(token, total)
                condition = labels.get(token, f"real_plus_{token}_synth")
                row, _ = run_condition(
                    dataset, bank, split, "net2", condition, seed, config.train,
                    keep_fraction=1.0, synthetic_count=count, experiment="E2")
                rows.append(row)
                if progress is not None:
                    progress(row)
    return ExperimentReport("E2", rows)


def run_E3_real_reduction(config: ExperimentConfig,
                          progress=None) -> ExperimentReport:
    """Grid over keep fractions and synthetic counts; the 0% real row runs
    the flow-only Network-3 trained purely on simplified videos."""
    dataset = Dataset(config.dataset_dir)
    bank = FeatureBank(dataset)
    rows: list[ReportRow] = []
    for split_id in config.splits:
        split = dataset.split(split_id)
        total = simplified_train_count(dataset, split)
        for seed in config.seeds:
            for frac in config.keep_fractions:
                for token in config.synthetic_counts:
                    count = resolve_synth_count(token, total)
                    if frac == 0.0 and count == 0:
                        continue  # no training data at all
                    network = "net3" if frac == 0.0 else "net2"
                    condition = f"keep{int(round(frac * 100)):03d}_{token}_synth"
                    row, _ = run_condition(
                        dataset, bank, split, network, condition, seed,
                        config.train, keep_fraction=frac,
                        synthetic_count=count, experiment="E3")
                    rows.append(row)
                    if progress is not None:
                        progress(row)
    return ExperimentReport("E3", rows)


def run_per_class(config: ExperimentConfig, progress=None) -> ExperimentReport:
    """One full-data run per seed on the first configured split, reporting
    the per-class accuracy table of the last evaluation."""
    dataset = Dataset(config.dataset_dir)
    bank = FeatureBank(dataset)
    rows: list[ReportRow] = []
    split = dataset.split(config.splits[0])
    result: EvalResult | None = None
    for seed in config.seeds:
        row, result = run_condition(
            dataset, bank, split, config.network, "full_data", seed,
            config.train, experiment="per_class")
        rows.append(row)
        if progress is not None:
            progress(row)
    per_class = list(zip(dataset.manifest.classes,
                         result.per_class_accuracy.tolist()))
    return ExperimentReport("per_class", rows, per_class=per_class)


def report_per_class(result: EvalResult, classes) -> tuple[str, str]:
    """Aligned text table and CSV body for per-class accuracies."""
    text_lines = [f"{'class':<20s} {'accuracy':>8s}"]
    csv_lines = ["class,accuracy"]
    for name, acc in zip(classes, result.per_class_accuracy):
        text_lines.append(f"{name:<20s} {acc:>8.4f}")
        csv_lines.append(f"{name},{acc:.6f}")
    return "\n".join(text_lines) + "\n", "\n".join(csv_lines) + "\n"


RUNNERS = {
    "E1": run_E1_background_effect,
    "E2": run_E2_synthetic_augmentation,
    "E3": run_E3_real_reduction,
    "per_class": run_per_class,
}


def run_experiment(config: ExperimentConfig, progress=None) -> ExperimentReport:
    return RUNNERS[config.experiment_id](config, progress=progress)
