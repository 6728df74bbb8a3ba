"""実験テスト用の小さな設定とデータ。"""

from pathlib import Path

import numpy as np
import pytest
from deep_sad.config.settings import AppSettings
from deep_sad.data.csv_loader import write_csv
from deep_sad.data.dataset import Dataset


@pytest.fixture
def tiny_settings(tmp_path: Path) -> AppSettings:
    """数エポックで終わる設定。"""
    return AppSettings(
        search_epochs=1,
        finetune_epochs=1,
        batch_size=32,
        iforest_trees=5,
        iforest_subsample=32,
        kde_folds=3,
        cache_enabled=False,
        cache_dir=tmp_path / "cache",
    )


@pytest.fixture
def class_csvs(tmp_path: Path) -> tuple[Path, Path]:
    """クラス0〜2の学習・テスト CSV（クラスごとに平均をずらす）。"""
    rng = np.random.default_rng(7)

    def build(per_class: int) -> Dataset:
        classes = np.repeat(np.arange(3), per_class)
        features = rng.normal(size=(classes.size, 4)) + 3.0 * classes[:, None]
        return Dataset(features, class_labels=classes)

    train_path, test_path = tmp_path / "train.csv", tmp_path / "test.csv"
    write_csv(train_path, build(60))
    write_csv(test_path, build(10))
    return train_path, test_path


@pytest.fixture
def labeled_csv(tmp_path: Path) -> Path:
    """正常180行・異常20行の label 付き CSV。"""
    rng = np.random.default_rng(11)
    features = np.vstack([rng.normal(size=(180, 3)), rng.normal(loc=5.0, size=(20, 3))])
    labels = np.array([1] * 180 + [-1] * 20)
    path = tmp_path / "cardio.csv"
    write_csv(path, Dataset(features, anomaly_labels=labels))
    return path
