"""CLI contract: subcommands, config files, exit codes."""

import numpy as np
import pytest

from synthaction.cli import main

GEN_CONFIG = """
[dataset]
test_fraction = 0.34

[flow]
iterations_per_level = 20
pyramid_levels = 2
warp_steps_per_level = 1

[real_like]
classes = wave, bow
videos_per_class = 4
viewpoints_per_class = 2
image_size = 48, 36
duration_range = 2.0, 2.0

[simplified]
classes = wave, bow
videos_per_class = 4
viewpoints_per_class = 2
image_size = 48, 36
duration_range = 2.0, 2.0
"""

TRAIN_CONFIG = """
[train]
epochs = 5
hidden_units = 16
learning_rate = 0.1
"""


@pytest.fixture(scope="module")
def cli_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_ds")
    cfg = root / "gen.cfg"
    cfg.write_text(GEN_CONFIG)
    out = root / "data"
    assert main(["--seed", "5", "gen", "--config", str(cfg),
                 "--out", str(out)]) == 0
    return out


class TestGen:
    def test_outputs_exist(self, cli_dataset):
        assert (cli_dataset / "manifest.tsv").exists()
        for i in (1, 2, 3):
            assert (cli_dataset / f"split_{i}.tsv").exists()

    def test_unknown_config_key_exits_1(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[real_like]\nclasses = wave\nfrobnicate = 9\n")
        code = main(["gen", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 1
        assert "frobnicate" in capsys.readouterr().err

    def test_unknown_section_exits_1(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[mystery]\nx = 1\n")
        assert main(["gen", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 1

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["gen", "--config", str(tmp_path / "nope.cfg"),
                     "--out", str(tmp_path / "o")]) == 2


class TestFlowCommand:
    def test_no_flow_then_flow(self, tmp_path):
        cfg = tmp_path / "gen.cfg"
        cfg.write_text(GEN_CONFIG.replace("videos_per_class = 4",
                                          "videos_per_class = 2"))
        out = tmp_path / "data"
        assert main(["gen", "--config", str(cfg), "--out", str(out),
                     "--no-flow"]) == 0
        assert not list(out.glob("*/*/flow_x_00000.pgm"))
        assert main(["flow", "--dataset", str(out), "--config", str(cfg)]) == 0
        assert list(out.glob("*/*/flow_x_00000.pgm"))


class TestTrainEval:
    def test_train_then_eval(self, cli_dataset, tmp_path, capsys):
        cfg = tmp_path / "train.cfg"
        cfg.write_text(TRAIN_CONFIG)
        ckpt = tmp_path / "model.ckpt"
        assert main(["train", "--dataset", str(cli_dataset), "--split", "1",
                     "--network", "net2", "--out", str(ckpt),
                     "--config", str(cfg)]) == 0
        assert ckpt.exists()
        assert ckpt.read_bytes()[:4] == b"TSNC"
        loss_csv = tmp_path / "model.ckpt.flow_real.loss.csv"
        lines = loss_csv.read_text().splitlines()
        assert lines[0] == "epoch,loss"
        assert len(lines) == 1 + 5  # header + one line per epoch
        capsys.readouterr()
        assert main(["eval", "--ckpt", str(ckpt), "--dataset",
                     str(cli_dataset), "--split", "1"]) == 0
        out = capsys.readouterr().out
        assert "top-1 accuracy" in out
        assert "wave" in out

    def test_train_checkpoints_are_deterministic(self, cli_dataset, tmp_path):
        payloads = []
        for name in ("a.ckpt", "b.ckpt"):
            ckpt = tmp_path / name
            assert main(["--seed", "9", "train", "--dataset", str(cli_dataset),
                         "--split", "1", "--network", "net3",
                         "--out", str(ckpt)]) == 0
            payloads.append(ckpt.read_bytes())
        assert payloads[0] == payloads[1]

    def test_eval_missing_checkpoint_exits_2(self, cli_dataset, tmp_path):
        assert main(["eval", "--ckpt", str(tmp_path / "nope.ckpt"),
                     "--dataset", str(cli_dataset), "--split", "1"]) == 2


class TestExp:
    def test_exp_e2_writes_reports(self, cli_dataset, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(f"""
[experiment]
experiment_id = E2
dataset_dir = {cli_dataset}
seeds = 0
splits = 1

[train]
epochs = 5
hidden_units = 16
""")
        out = tmp_path / "reports"
        assert main(["exp", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "E2_report.csv").exists()
        assert (out / "E2_report.txt").exists()
        stdout = capsys.readouterr().out
        assert "real_only" in stdout

    def test_bad_experiment_id_exits(self, cli_dataset, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(f"""
[experiment]
experiment_id = E9
dataset_dir = {cli_dataset}
""")
        assert main(["exp", "--config", str(cfg),
                     "--out", str(tmp_path / "r")]) == 2


class TestUsage:
    def test_no_command_is_usage_error(self):
        assert main([]) == 1

    def test_unknown_command_is_usage_error(self):
        assert main(["transmogrify"]) == 1

    def test_bad_split_value(self, tmp_path):
        assert main(["train", "--dataset", "x", "--split", "9",
                     "--network", "net2", "--out", "y"]) == 1
