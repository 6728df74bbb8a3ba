"""表形式ベンチマークのテスト。"""

from pathlib import Path

import numpy as np
import pytest
from deep_sad.config.settings import AppSettings
from deep_sad.data.csv_loader import write_csv
from deep_sad.data.dataset import Dataset
from deep_sad.eval.records import RecordStatus
from deep_sad.exceptions import InvalidArgumentError
from deep_sad.experiments.methods import Method
from deep_sad.experiments.odds import DEFAULT_SEEDS, OddsTask, odds_tasks


def describe_odds_tasks():
    def データセット_手法_シードの順に並ぶ():
        tasks = odds_tasks([Path("a.csv"), Path("b.csv")], [Method.KDE, Method.IFOREST], seeds=[0, 1])

        assert len(tasks) == 8
        assert [(t.dataset, t.method, t.seed) for t in tasks[:3]] == [
            ("a", Method.KDE, 0),
            ("a", Method.KDE, 1),
            ("a", Method.IFOREST, 0),
        ]

    def 既定のシードは10個():
        assert DEFAULT_SEEDS == tuple(range(10))

    @pytest.mark.parametrize(
        "paths, methods, seeds",
        [([], [Method.KDE], [0]), ([Path("a.csv")], [], [0]), ([Path("a.csv")], [Method.KDE], [])],
    )
    def 空の指定はエラー(paths, methods, seeds):
        with pytest.raises(InvalidArgumentError):
            odds_tasks(paths, methods, seeds)


def describe_OddsTask():
    def レコードのフィールドはベンチマークの固定値():
        fields = OddsTask(Path("data/thyroid.csv"), Method.DEEP_SAD, 3).fields()

        assert fields["dataset"] == "thyroid"
        assert fields["gamma_l"] == 0.01
        assert fields["gamma_p"] == 0.0
        assert fields["normal_class"] is None
        assert fields["seed"] == 3

    @pytest.mark.parametrize("method", [Method.KDE, Method.IFOREST, Method.DEEP_SAD])
    def CSVを分割してAUCを記録する(method: Method, labeled_csv: Path, tiny_settings: AppSettings):
        result = OddsTask(labeled_csv, method, 0).run(tiny_settings)

        assert result.status == RecordStatus.OK
        assert result.dataset == "cardio"
        assert result.auc is not None and 0.0 <= result.auc <= 1.0

    def 浅い手法は離れた異常を見分ける(labeled_csv: Path, tiny_settings: AppSettings):
        result = OddsTask(labeled_csv, Method.KDE, 1).run(tiny_settings)

        assert result.auc is not None and result.auc > 0.9

    def ラベル付き異常を作れなければスキップ(tmp_path: Path, tiny_settings: AppSettings):
        path = tmp_path / "small.csv"
        features = np.arange(20.0).reshape(10, 2)
        write_csv(path, Dataset(features, anomaly_labels=np.array([1] * 8 + [-1] * 2)))

        result = OddsTask(path, Method.KDE, 0).run(tiny_settings)

        assert result.status == RecordStatus.SKIPPED

    def 読めないデータセットは失敗として記録する(tmp_path: Path, tiny_settings: AppSettings):
        result = OddsTask(tmp_path / "missing.csv", Method.KDE, 0).run(tiny_settings)

        assert result.status == RecordStatus.FAILED
        assert result.reason
