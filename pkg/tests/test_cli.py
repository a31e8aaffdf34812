import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from rankforge import __version__
from rankforge.cli.main import cli
from rankforge.core.data import parse_letor, write_letor
from rankforge.core.logging import setup_logging
from rankforge.models.ranking import LossOutput
from rankforge.services import training_service

QUICK = ["--epochs", "2", "--hidden", "8"]


@pytest.fixture
def runner():
    yield CliRunner()
    # handlers created inside invoke() point at the runner's closed streams
    setup_logging("WARNING")


@pytest.fixture
def split_files(mini_dataset, tmp_path):
    paths = []
    for name, idx in (("train", range(0, 8)), ("vali", range(8, 10)), ("test", range(10, 12))):
        paths.append(write_letor(mini_dataset.subset(idx), tmp_path / "data" / f"{name}.txt"))
    return paths


def data_args(paths):
    return [arg for p in paths for arg in ("--data", str(p))]


def tree_bytes(root: Path):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


class TestTrainCommand:
    def test_writes_run_outputs(self, runner, mini_letor_path, tmp_path):
        out = tmp_path / "run"
        result = runner.invoke(cli, ["train", "--data", str(mini_letor_path), "--out", str(out)] + QUICK)
        assert result.exit_code == 0, result.output
        for name in ("best.ckpt", "final.ckpt", "plotdata.csv", "eval_best.csv", "eval_final.csv"):
            assert (out / name).exists()
        plot = pd.read_csv(out / "plotdata.csv")
        assert list(plot["epoch"]) == [1, 2]
        report = pd.read_csv(out / "eval_best.csv")
        assert len(report) == 4 * 5
        assert set(report["metric"]) == {"precision", "map", "ndcg", "nerr"}

    def test_eval_reproduces_final_train_ndcg(self, runner, split_files, tmp_path):
        out = tmp_path / "run"
        result = runner.invoke(cli, ["train"] + data_args(split_files) + ["--out", str(out)] + QUICK)
        assert result.exit_code == 0, result.output

        report_path = tmp_path / "train_eval.csv"
        result = runner.invoke(cli, ["eval", "--checkpoint", str(out / "final.ckpt"),
                                     "--data", str(split_files[0]), "--out", str(report_path)])
        assert result.exit_code == 0, result.output

        report = pd.read_csv(report_path)
        ndcg5 = report[(report["metric"] == "ndcg") & (report["k"] == 5)]["mean"].item()
        last = pd.read_csv(out / "plotdata.csv").iloc[-1]
        assert ndcg5 == last["train_ndcg5"]

    @pytest.mark.parametrize("extra", [
        ["--loss", "ndcg.type9"],
        ["--loss", "ap@5.type3"],
        ["--epochs", "0"],
        ["--folds", "2"],
        ["--cutoffs", "1,x"],
        ["--lr", "-1"],
        ["--fold", "6"],
        ["--fold", "4", "--folds", "3"],
    ])
    def test_bad_configuration_exits_2(self, runner, mini_letor_path, tmp_path, extra):
        result = runner.invoke(cli, ["train", "--data", str(mini_letor_path), "--out", str(tmp_path)] + extra)
        assert result.exit_code == 2

    def test_two_data_files_exit_2(self, runner, split_files, tmp_path):
        result = runner.invoke(cli, ["train"] + data_args(split_files[:2]) + ["--out", str(tmp_path)] + QUICK)
        assert result.exit_code == 2

    def test_missing_data_exits_3(self, runner, tmp_path):
        result = runner.invoke(cli, ["train", "--data", str(tmp_path / "nope.txt"), "--out", str(tmp_path)])
        assert result.exit_code == 3

    def test_corrupt_data_exits_3(self, runner, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("1 qid:1 1:0.5\n2 qid:1 1:abc\n")
        result = runner.invoke(cli, ["train", "--data", str(bad), "--out", str(tmp_path / "run")])
        assert result.exit_code == 3

    def test_numeric_failure_exits_4(self, runner, mini_letor_path, tmp_path, monkeypatch):
        def broken(spec, y, labels, tie_counter=0):
            return LossOutput(value=float("inf"), grad=np.zeros(len(y)))

        monkeypatch.setattr(training_service, "compute_loss", broken)
        out = tmp_path / "run"
        result = runner.invoke(cli, ["train", "--data", str(mini_letor_path), "--out", str(out)] + QUICK)
        assert result.exit_code == 4
        dump = json.loads((out / "numeric_failure.json").read_text())
        assert dump["loss"] == "ndcg.type3"


class TestEvalCommand:
    @pytest.fixture
    def checkpoint(self, runner, mini_letor_path, tmp_path):
        out = tmp_path / "run"
        result = runner.invoke(cli, ["train", "--data", str(mini_letor_path), "--out", str(out),
                                     "--epochs", "1", "--hidden", "4"])
        assert result.exit_code == 0, result.output
        return out / "final.ckpt"

    def test_default_report_path(self, runner, checkpoint, mini_letor_path):
        result = runner.invoke(cli, ["eval", "--checkpoint", str(checkpoint), "--data", str(mini_letor_path),
                                     "--cutoffs", "1,3"])
        assert result.exit_code == 0, result.output
        report = pd.read_csv(checkpoint.with_suffix(".eval.csv"))
        assert len(report) == 4 * 2
        assert (report["n_queries"] == 12).all()

    def test_wider_data_exits_3(self, runner, checkpoint, tmp_path):
        wide = tmp_path / "wide.txt"
        assert runner.invoke(cli, ["synth", "--queries", "3", "--docs", "4", "--dim", "6",
                                   "--out", str(wide)]).exit_code == 0
        result = runner.invoke(cli, ["eval", "--checkpoint", str(checkpoint), "--data", str(wide)])
        assert result.exit_code == 3

    def test_corrupt_checkpoint_exits_3(self, runner, mini_letor_path, tmp_path):
        ckpt = tmp_path / "broken.ckpt"
        ckpt.write_text("not a checkpoint\n")
        result = runner.invoke(cli, ["eval", "--checkpoint", str(ckpt), "--data", str(mini_letor_path)])
        assert result.exit_code == 3

    def test_empty_cutoffs_exit_2(self, runner, checkpoint, mini_letor_path):
        result = runner.invoke(cli, ["eval", "--checkpoint", str(checkpoint), "--data", str(mini_letor_path),
                                     "--cutoffs", ""])
        assert result.exit_code == 2


class TestCvCommand:
    def run_cv(self, runner, data, out, *extra):
        result = runner.invoke(cli, ["cv", "--data", str(data), "--out", str(out)] + QUICK + list(extra))
        assert result.exit_code == 0, result.output
        return tree_bytes(out)

    def test_outputs(self, runner, mini_letor_path, tmp_path):
        self.run_cv(runner, mini_letor_path, tmp_path / "cv")
        summary = pd.read_csv(tmp_path / "cv" / "cv_summary.csv")
        assert len(summary) == 20
        assert (summary["mean"].between(0.0, 1.0)).all()
        assert (tmp_path / "cv" / "cv_summary_final.csv").exists()
        per_query = pd.read_csv(tmp_path / "cv" / "per_query.csv")
        # every query is tested once, under both selections
        assert len(per_query) == 2 * 12
        assert per_query[per_query["qid"] == 112]["flagged"].tolist() == [1, 1]
        for f in range(1, 6):
            assert (tmp_path / "cv" / f"fold{f}" / "best.ckpt").exists()

    def test_rerun_is_byte_identical(self, runner, mini_letor_path, tmp_path):
        first = self.run_cv(runner, mini_letor_path, tmp_path / "a")
        second = self.run_cv(runner, mini_letor_path, tmp_path / "b")
        assert first == second

    def test_parallel_folds_match_sequential(self, runner, mini_letor_path, tmp_path):
        sequential = self.run_cv(runner, mini_letor_path, tmp_path / "seq")
        parallel = self.run_cv(runner, mini_letor_path, tmp_path / "par", "--jobs", "2")
        assert sequential == parallel


class TestRankexpCommand:
    def test_small_run(self, runner, tmp_path):
        out = tmp_path / "rankexp.csv"
        result = runner.invoke(cli, ["rankexp", "--v1", "5", "--v2", "20", "--alphas", "1,100", "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = pd.read_csv(out)
        assert list(rows["method"]) == ["pi_minus", "pi_minus", "pi_plus", "pi_plus_tie_breaking"]
        assert rows["alpha"].isna().tolist() == [False, False, True, True]

    @pytest.mark.slow
    def test_default_experiment(self, runner, tmp_path):
        out = tmp_path / "rankexp.csv"
        result = runner.invoke(cli, ["rankexp", "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = pd.read_csv(out)
        assert len(rows) == 2 * 8
        exact = rows[rows["method"] == "pi_plus_tie_breaking"]
        assert (exact["mean_L1"] == 0.0).all()
        for v2 in (123, 1000):
            approx = rows[(rows["method"] == "pi_minus") & (rows["v2"] == v2)].sort_values("alpha")
            assert np.all(np.diff(approx["mean_L1"].to_numpy()) < 0)
        at_one = rows[(rows["method"] == "pi_minus") & (rows["v2"] == 123) & (rows["alpha"] == 1.0)]
        assert at_one["mean_L1"].item() == pytest.approx(2866.94, rel=0.3)


def test_synth_command(runner, tmp_path):
    out = tmp_path / "synth.txt"
    result = runner.invoke(cli, ["synth", "--queries", "7", "--docs", "5", "--dim", "3", "--noise", "0.1",
                                 "--out", str(out)])
    assert result.exit_code == 0, result.output
    ds = parse_letor(out)
    assert len(ds) == 7
    assert ds.dim == 3
    assert all(g.size == 5 for g in ds.groups)


class TestPlotCommand:
    def test_draws_training_curves(self, runner, mini_letor_path, tmp_path):
        out = tmp_path / "run"
        assert runner.invoke(cli, ["train", "--data", str(mini_letor_path), "--out", str(out)] + QUICK).exit_code == 0
        result = runner.invoke(cli, ["plot", "--plotdata", str(out / "plotdata.csv")])
        assert result.exit_code == 0, result.output
        image = out / "plotdata.png"
        assert image.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_missing_plotdata_exits_3(self, runner, tmp_path):
        result = runner.invoke(cli, ["plot", "--plotdata", str(tmp_path / "none.csv")])
        assert result.exit_code == 3

    def test_wrong_columns_exit_3(self, runner, tmp_path):
        csv = tmp_path / "other.csv"
        csv.write_text("metric,k,mean,n_queries\nndcg,5,0.5,3\n")
        result = runner.invoke(cli, ["plot", "--plotdata", str(csv), "--out", str(tmp_path / "x.png")])
        assert result.exit_code == 3
