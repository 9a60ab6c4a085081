"""Command line entry points, exit codes, and artifact paths."""

import json

import pytest

from evosynth.cli import main
from evosynth.report import read_metrics_csv

FAST_RUN = ["--generations", "1", "--population", "2", "--parents", "2",
            "--epochs", "1", "--train-fraction", "0.05", "--seed", "1"]


class TestRunCommand:
    def test_writes_csv_and_reports_best(self, tmp_path, capsys):
        out = tmp_path / "metrics.csv"
        code = main(["run", "--out", str(out), "--r", "0.9"] + FAST_RUN)
        assert code == 0
        stdout = capsys.readouterr().out
        assert "tagged_rc090_rs090_s1" in stdout
        assert "best accuracy" in stdout
        rows = read_metrics_csv(out)
        assert len(rows) == 1 + 2
        # Rerunning replaces rather than appends.
        assert main(["run", "--out", str(out), "--r", "0.9"] + FAST_RUN) == 0
        assert len(read_metrics_csv(out)) == 3

    def test_invalid_resource_level_exits_2(self, tmp_path, capsys):
        code = main(["run", "--out", str(tmp_path / "m.csv"), "--r", "1.5"]
                    + FAST_RUN)
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_mnist_without_dir_exits_2(self, tmp_path, capsys):
        code = main(["run", "--out", str(tmp_path / "m.csv"),
                     "--data", "mnist"] + FAST_RUN)
        assert code == 2

    def test_missing_mnist_files_exit_3(self, tmp_path, capsys):
        code = main(["run", "--out", str(tmp_path / "m.csv"),
                     "--data", "mnist", "--data-dir", str(tmp_path)]
                    + FAST_RUN)
        assert code == 3
        assert "data error" in capsys.readouterr().err


class TestSweepCommand:
    def test_grid_with_manifest(self, tmp_path, capsys):
        out_dir = tmp_path / "sweep"
        code = main(["sweep", "--modes", "tagged,untagged", "--r-values",
                     "0.9", "--seeds", "1", "--out-dir", str(out_dir),
                     "--workers", "1"] + FAST_RUN)
        assert code == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        ids = [c["experiment_id"] for c in manifest["combos"]]
        assert ids == ["tagged_rc090_rs090_s1", "untagged_rc090_rs090_s1"]
        for combo in manifest["combos"]:
            assert (out_dir / combo["csv"]).is_file()
        assert "2 combos" in capsys.readouterr().out


class TestPlotCommand:
    def test_renders_three_figures(self, tmp_path, capsys, monkeypatch):
        out = tmp_path / "m.csv"
        assert main(["run", "--out", str(out), "--r", "0.9"] + FAST_RUN) == 0
        monkeypatch.chdir(tmp_path)
        code = main(["plot", "m.csv", "--out-dir", "figs"])
        assert code == 0
        for name in ("accuracy_series.svg", "storage_series.svg",
                     "scatter.svg"):
            assert (tmp_path / "figs" / name).is_file()

    def test_missing_csv_exits_3(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["plot", "nothing.csv"]) == 3


class TestGradcheckCommand:
    def test_clean_network_passes(self, capsys):
        code = main(["gradcheck", "--seed", "0", "--samples", "2"])
        assert code == 0
        out = capsys.readouterr().out
        assert "gradient check PASSED" in out
        assert "dense_w" in out

    def test_fault_injection_fails(self, capsys):
        code = main(["gradcheck", "--seed", "0", "--samples", "2",
                     "--perturb-group", "conv2_w", "--perturb-scale", "1.01"])
        assert code == 1
        assert "FAILED" in capsys.readouterr().out

    def test_unknown_group_exits_2(self, capsys):
        assert main(["gradcheck", "--perturb-group", "bogus"]) == 2


def test_console_script_help():
    import subprocess

    out = subprocess.run(["evosynth", "--help"], capture_output=True,
                         text=True)
    assert out.returncode == 0
    for sub in ("run", "sweep", "plot", "gradcheck"):
        assert sub in out.stdout
