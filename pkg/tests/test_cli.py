"""コマンドラインインターフェースのテスト。"""

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from deep_sad.cli import EXIT_RUNTIME, EXIT_USAGE, cli, exit_code_for, parse_seeds
from deep_sad.data.csv_loader import write_csv
from deep_sad.data.dataset import Dataset
from deep_sad.eval.records import EvalRecord, append_records
from deep_sad.exceptions import (
    DataFormatError,
    InvalidArgumentError,
    ModelFileError,
    NumericError,
    ScenarioInfeasibleError,
    TrainingError,
)
from deep_sad.models.registry import load_detector, load_run_metadata

# 全コマンドで共通の小さなネットワーク
NET = ["--hidden", "4", "--rep-dim", "2", "--epochs", "1"]


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def config(tmp_path: Path) -> Path:
    """1エポックで終わる設定ファイル。"""
    path = tmp_path / "config.toml"
    path.write_text(
        "[training]\nsearch_epochs = 1\nfinetune_epochs = 1\nbatch_size = 32\n\n"
        "[baselines]\niforest_trees = 5\niforest_subsample = 32\nkde_folds = 3\n",
        encoding="utf-8",
    )
    return path


@pytest.fixture
def data(tmp_path: Path) -> Path:
    """正常40行・異常20行の label 付き CSV。"""
    rng = np.random.default_rng(3)
    features = np.vstack([rng.normal(size=(40, 3)), rng.normal(loc=4.0, size=(20, 3))])
    path = tmp_path / "train.csv"
    write_csv(path, Dataset(features, anomaly_labels=np.array([1] * 40 + [-1] * 20)))
    return path


@pytest.fixture
def labeled(tmp_path: Path) -> Path:
    rng = np.random.default_rng(4)
    path = tmp_path / "labeled.csv"
    write_csv(path, Dataset(rng.normal(loc=4.0, size=(3, 3)), anomaly_labels=np.array([-1, -1, 1])))
    return path


def train_model(runner: CliRunner, data: Path, out: Path, *extra: str) -> None:
    result = runner.invoke(cli, ["train", "--data", str(data), "--out", str(out), *NET, *extra])
    assert result.exit_code == 0, result.output


def describe_parse_seeds():
    def 範囲とカンマ区切りを混ぜて書ける():
        assert parse_seeds("0-2,5") == [0, 1, 2, 5]

    def 負のシードも読める():
        assert parse_seeds("-1") == [-1]

    @pytest.mark.parametrize("text", ["a", "1-b", "", " , "])
    def 読めない指定はInvalidArgumentError(text: str):
        with pytest.raises(InvalidArgumentError):
            parse_seeds(text)


def describe_exit_code_for():
    @pytest.mark.parametrize(
        "error",
        [
            InvalidArgumentError("x"),
            DataFormatError("x", 2, "label"),
            ModelFileError("x"),
            ScenarioInfeasibleError("x", 10, 3),
        ],
    )
    def 入力の誤りは2(error: Exception):
        assert exit_code_for(error) == EXIT_USAGE

    @pytest.mark.parametrize("error", [TrainingError("x", 1), NumericError("x")])
    def 実行時の失敗は3(error: Exception):
        assert exit_code_for(error) == EXIT_RUNTIME


def describe_cli():
    def バージョンを表示する(runner: CliRunner):
        result = runner.invoke(cli, ["--version"])

        assert result.exit_code == 0
        assert "deep-sad" in result.output

    def 存在しない入力ファイルは使い方の誤り(runner: CliRunner, tmp_path: Path):
        result = runner.invoke(cli, ["train", "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path / "m")])

        assert result.exit_code == 2

    def 未知の手法は終了コード2で赤字のエラー(runner: CliRunner, data: Path, tmp_path: Path):
        result = runner.invoke(cli, ["train", "--data", str(data), "--method", "svm", "--out", str(tmp_path / "m")])

        assert result.exit_code == EXIT_USAGE
        assert "エラー" in result.output
        assert not (tmp_path / "m").exists()


def describe_pretrain():
    def 自己符号化器と損失ログを書き出す(runner: CliRunner, data: Path, tmp_path: Path):
        out, log = tmp_path / "ae.model", tmp_path / "loss.txt"

        result = runner.invoke(
            cli, ["pretrain", "--data", str(data), "--out", str(out), "--loss-log", str(log), *NET]
        )

        assert result.exit_code == 0, result.output
        model = load_detector(out)
        assert model.kind == "autoencoder"
        assert model.input_dim == 3
        assert load_run_metadata(out)["method"] == "ae"
        assert log.exists()


def describe_train():
    def ラベル付きデータと事前学習済みモデルで学習する(
        runner: CliRunner, data: Path, labeled: Path, tmp_path: Path
    ):
        ae, out = tmp_path / "ae.model", tmp_path / "sad.model"
        pre = runner.invoke(cli, ["pretrain", "--data", str(data), "--out", str(ae), *NET])
        assert pre.exit_code == 0, pre.output

        train_model(runner, data, out, "--labeled", str(labeled), "--pretrained", str(ae), "--eta", "2")

        metadata = load_run_metadata(out)
        assert load_detector(out).kind == "deep-sad"
        assert metadata["eta"] == 2.0
        assert metadata["pretrained"] == str(ae)
        assert metadata["labeled"] == str(labeled)

    def 前処理の情報をメタデータに残す(runner: CliRunner, data: Path, tmp_path: Path):
        out = tmp_path / "kde.model"

        train_model(runner, data, out, "--method", "kde", "--preprocessing", "standardize")

        assert load_run_metadata(out)["preprocessing"]["scaling"] == "standardize"

    def 自己符号化器でないモデルは事前学習済みとして使えない(runner: CliRunner, data: Path, tmp_path: Path):
        kde = tmp_path / "kde.model"
        train_model(runner, data, kde, "--method", "kde")

        result = runner.invoke(
            cli, ["train", "--data", str(data), "--pretrained", str(kde), "--out", str(tmp_path / "m"), *NET]
        )

        assert result.exit_code == EXIT_USAGE


def describe_score():
    def 行ごとのスコアと最後にAUCを書く(runner: CliRunner, config: Path, data: Path, tmp_path: Path):
        model, out = tmp_path / "m.model", tmp_path / "scores.txt"
        train_model(runner, data, model, "--method", "iforest")

        result = runner.invoke(
            cli, ["--config", str(config), "score", "--model", str(model), "--data", str(data), "--out", str(out)]
        )

        assert result.exit_code == 0, result.output
        lines = out.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 61
        assert all(0.0 < float(line) <= 1.0 for line in lines[:60])
        assert lines[-1].startswith("auc,")
        assert 0.0 <= float(lines[-1].split(",")[1]) <= 1.0

    def label列がなければスコアだけ(runner: CliRunner, data: Path, tmp_path: Path):
        model, out = tmp_path / "m.model", tmp_path / "scores.txt"
        unlabeled = tmp_path / "x.csv"
        write_csv(unlabeled, Dataset(np.zeros((4, 3))))
        train_model(runner, data, model, "--method", "one-class")

        result = runner.invoke(cli, ["score", "--model", str(model), "--data", str(unlabeled), "--out", str(out)])

        assert result.exit_code == 0, result.output
        assert len(out.read_text(encoding="utf-8").splitlines()) == 4

    def 次元が合わなければ終了コード2(runner: CliRunner, data: Path, tmp_path: Path):
        model = tmp_path / "m.model"
        wide = tmp_path / "wide.csv"
        write_csv(wide, Dataset(np.zeros((4, 5))))
        train_model(runner, data, model, "--method", "one-class")

        result = runner.invoke(
            cli, ["score", "--model", str(model), "--data", str(wide), "--out", str(tmp_path / "s.txt")]
        )

        assert result.exit_code == EXIT_USAGE
        assert not (tmp_path / "s.txt").exists()


def describe_entropy():
    @pytest.mark.parametrize("assume", ["full", "isotropic"])
    def 正常と異常のエントロピーを表示する(assume: str, runner: CliRunner, data: Path, tmp_path: Path):
        model = tmp_path / "m.model"
        train_model(runner, data, model, "--method", "one-class")

        result = runner.invoke(cli, ["entropy", "--model", str(model), "--data", str(data), "--assume", assume])

        assert result.exit_code == 0, result.output
        assert "normal" in result.output
        assert "anomaly" in result.output

    def 潜在表現を持たないモデルは終了コード2(runner: CliRunner, data: Path, tmp_path: Path):
        model = tmp_path / "m.model"
        train_model(runner, data, model, "--method", "kde")

        result = runner.invoke(cli, ["entropy", "--model", str(model), "--data", str(data)])

        assert result.exit_code == EXIT_USAGE


def describe_benchmark_odds():
    def データセットごとに手法とシードのレコードを書く(
        runner: CliRunner, config: Path, tmp_path: Path
    ):
        rng = np.random.default_rng(5)
        dataset = tmp_path / "thyroid.csv"
        features = np.vstack([rng.normal(size=(180, 3)), rng.normal(loc=5.0, size=(20, 3))])
        write_csv(dataset, Dataset(features, anomaly_labels=np.array([1] * 180 + [-1] * 20)))
        out = tmp_path / "records.jsonl"
        args = ["--config", str(config), "benchmark-odds", str(dataset), "--method", "kde", "--method", "iforest"]

        first = runner.invoke(cli, [*args, "--seeds", "0-1", "--out", str(out)])
        second = runner.invoke(cli, [*args, "--seeds", "0-1", "--out", str(out)])

        assert first.exit_code == 0, first.output
        assert second.exit_code == 0, second.output
        assert len(out.read_text(encoding="utf-8").splitlines()) == 4

    def 同じシードの2回の実行は実行時間以外が一致する(runner: CliRunner, config: Path, tmp_path: Path):
        rng = np.random.default_rng(5)
        dataset = tmp_path / "thyroid.csv"
        features = np.vstack([rng.normal(size=(180, 3)), rng.normal(loc=5.0, size=(20, 3))])
        write_csv(dataset, Dataset(features, anomaly_labels=np.array([1] * 180 + [-1] * 20)))
        args = ["--config", str(config), "benchmark-odds", str(dataset), "--seeds", "0-1"]
        args += ["--method", "deep-sad", "--method", "kde", "--method", "iforest"]

        def without_wall_time(path: Path) -> list[str]:
            lines = path.read_text(encoding="utf-8").splitlines()
            return [json.dumps({k: v for k, v in json.loads(line).items() if k != "wall_time"}) for line in lines]

        outs = [tmp_path / "first.jsonl", tmp_path / "second.jsonl"]
        for out in outs:
            result = runner.invoke(cli, [*args, "--out", str(out)])
            assert result.exit_code == 0, result.output

        first, second = (without_wall_time(out) for out in outs)
        assert len(first) == 6
        assert first == second


def describe_scenario():
    def グリッドファイルを実行する(runner: CliRunner, config: Path, tmp_path: Path):
        rng = np.random.default_rng(6)
        classes = np.repeat(np.arange(2), 30)
        for name in ("train", "test"):
            write_csv(
                tmp_path / f"{name}.csv",
                Dataset(rng.normal(size=(60, 2)) + 3.0 * classes[:, None], class_labels=classes),
            )
        grid = tmp_path / "grid.toml"
        grid.write_text(
            '[defaults]\ntrain = "train.csv"\ntest = "test.csv"\nmethods = "kde"\n\n[[cells]]\nnormal_class = 0\n',
            encoding="utf-8",
        )
        out = tmp_path / "records.jsonl"

        result = runner.invoke(cli, ["--config", str(config), "scenario", str(grid), "--out", str(out)])

        assert result.exit_code == 0, result.output
        assert len(out.read_text(encoding="utf-8").splitlines()) == 1


def describe_demo_toy():
    def 格子点のスコアを書き出す(runner: CliRunner, config: Path, tmp_path: Path):
        out = tmp_path / "grid.csv"

        result = runner.invoke(cli, ["--config", str(config), "demo-toy", "--steps", "3", "--out", str(out)])

        assert result.exit_code == 0, result.output
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "x,y,score_deepsad,score_supervised"
        assert len(lines) == 10

    def 同じシードなら同じバイト列(runner: CliRunner, config: Path, tmp_path: Path):
        outs = [tmp_path / "first.csv", tmp_path / "second.csv"]
        for out in outs:
            result = runner.invoke(
                cli, ["--config", str(config), "demo-toy", "--seed", "7", "--steps", "5", "--out", str(out)]
            )
            assert result.exit_code == 0, result.output

        assert outs[0].read_bytes() == outs[1].read_bytes()


def describe_report():
    @pytest.fixture
    def records(tmp_path: Path) -> Path:
        path = tmp_path / "records.jsonl"
        append_records(
            path,
            [
                EvalRecord(method=method, dataset="cardio", seed=seed, auc=auc)
                for method, auc in (("deep-sad", 0.75), ("kde", 0.5))
                for seed in range(6)
            ],
        )
        return path

    def 手法ごとの集計表を書き出す(runner: CliRunner, records: Path, tmp_path: Path):
        out = tmp_path / "summary.csv"

        result = runner.invoke(cli, ["report", str(records), "--out", str(out)])

        assert result.exit_code == 0, result.output
        assert out.read_text(encoding="utf-8") == (
            "method,mean_auc,std_auc,count\ndeep-sad,0.75,0.0,6\nkde,0.5,0.0,6\n"
        )

    def 複数キーで集計する(runner: CliRunner, records: Path, tmp_path: Path):
        out = tmp_path / "summary.csv"

        result = runner.invoke(cli, ["report", str(records), "--group-by", "dataset,method", "--out", str(out)])

        assert result.exit_code == 0, result.output
        assert out.read_text(encoding="utf-8").splitlines()[1] == "cardio,deep-sad,0.75,0.0,6"

    def 集計キーが空なら終了コード2(runner: CliRunner, records: Path):
        result = runner.invoke(cli, ["report", str(records), "--group-by", " , "])

        assert result.exit_code == EXIT_USAGE
