"""CSV データセットの読み書きのテスト。"""

from pathlib import Path
from unittest.mock import Mock, patch

import numpy as np
import pytest
from deep_sad.data.csv_loader import CsvDatasetLoader, load_csv, load_dataset, write_csv
from deep_sad.data.dataset import Dataset
from deep_sad.exceptions import DataFormatError, InvalidArgumentError, ShapeError


def write_text(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def describe_load_csv():
    def 特徴量とラベルとクラスを読み分ける(tmp_path: Path):
        path = write_text(tmp_path / "d.csv", "a,label,b,class\n1.5,1,2,0\n-3,-1,4e-1,7\n")

        data = load_csv(path)

        assert data.feature_names == ["a", "b"]
        np.testing.assert_array_equal(data.features, [[1.5, 2.0], [-3.0, 0.4]])
        np.testing.assert_array_equal(data.anomaly_labels, [1, -1])
        np.testing.assert_array_equal(data.class_labels, [0, 7])

    def ラベル列がなければNone(tmp_path: Path):
        data = load_csv(write_text(tmp_path / "d.csv", "x,y\n0,1\n2,3\n"))

        assert data.anomaly_labels is None
        assert data.class_labels is None
        assert data.n_rows == 2

    def 空行は読み飛ばす(tmp_path: Path):
        data = load_csv(write_text(tmp_path / "d.csv", "x\n1\n\n2\n"))

        np.testing.assert_array_equal(data.features[:, 0], [1.0, 2.0])

    def データ行がなくても列数は保つ(tmp_path: Path):
        data = load_csv(write_text(tmp_path / "d.csv", "x,y,label\n"))

        assert data.features.shape == (0, 2)

    def 数値でないセルは行と列を報告する(tmp_path: Path):
        path = write_text(tmp_path / "d.csv", "x,y\n1,2\n3,abc\n")

        with pytest.raises(DataFormatError) as exc_info:
            load_csv(path)

        assert exc_info.value.row == 3
        assert exc_info.value.column == "y"

    def 非有限の値はエラー(tmp_path: Path):
        with pytest.raises(DataFormatError):
            load_csv(write_text(tmp_path / "d.csv", "x\nnan\n"))

    def 列数の不一致はエラー(tmp_path: Path):
        with pytest.raises(DataFormatError) as exc_info:
            load_csv(write_text(tmp_path / "d.csv", "x,y\n1\n"))

        assert exc_info.value.row == 2

    def ラベルが正負1以外ならエラー(tmp_path: Path):
        with pytest.raises(DataFormatError) as exc_info:
            load_csv(write_text(tmp_path / "d.csv", "x,label\n1,0\n"))

        assert exc_info.value.column == "label"

    def ヘッダがなければエラー(tmp_path: Path):
        with pytest.raises(DataFormatError):
            load_csv(write_text(tmp_path / "d.csv", ""))

    def 特徴量の列がなければエラー(tmp_path: Path):
        with pytest.raises(DataFormatError):
            load_csv(write_text(tmp_path / "d.csv", "label,class\n1,0\n"))


def describe_write_csv():
    def 書き出した値がそのまま読み戻せる(tmp_path: Path):
        original = Dataset(
            features=np.array([[0.1, 1e-300], [2.0 / 3.0, -5.0]]),
            class_labels=np.array([3, 4]),
            anomaly_labels=np.array([1, -1]),
            feature_names=["p", "q"],
        )
        path = tmp_path / "out.csv"

        write_csv(path, original)
        loaded = load_csv(path)

        np.testing.assert_array_equal(loaded.features, original.features)
        np.testing.assert_array_equal(loaded.class_labels, original.class_labels)
        np.testing.assert_array_equal(loaded.anomaly_labels, original.anomaly_labels)
        assert loaded.feature_names == ["p", "q"]


def describe_CsvDatasetLoader():
    def npzキャッシュから同じデータを復元する(tmp_path: Path):
        path = write_text(tmp_path / "d.csv", "x,y,label\n1,2,1\n3,4,-1\n")
        settings = Mock(cache_enabled=True, cache_ttl_hours=24, cache_dir=tmp_path / "cache")
        with patch("deep_sad.data.base.get_settings", return_value=settings):
            loader = CsvDatasetLoader()
            first = loader.load_data(path)
            second = loader.load_data(path)

        assert first.cached is False
        assert second.cached is True
        assert second.cache_path is not None and second.cache_path.suffix == ".npz"
        np.testing.assert_array_equal(second.data.features, first.data.features)
        np.testing.assert_array_equal(second.data.anomaly_labels, [1, -1])
        assert second.data.class_labels is None
        assert second.data.feature_names == ["x", "y"]

    def load_datasetはDatasetを返す(tmp_path: Path):
        path = write_text(tmp_path / "d.csv", "x\n1\n")

        data = load_dataset(path, cache_enabled=False)

        assert isinstance(data, Dataset)
        assert data.n_features == 1


def describe_Dataset():
    def 行数の合わないラベルはShapeError():
        with pytest.raises(ShapeError):
            Dataset(np.zeros((2, 1)), anomaly_labels=np.array([1]))

    def 正負1以外の異常ラベルはエラー():
        with pytest.raises(InvalidArgumentError):
            Dataset(np.zeros((1, 1)), anomaly_labels=np.array([2]))

    def 列名を省略すると連番になる():
        assert Dataset(np.zeros((1, 3))).feature_names == ["x0", "x1", "x2"]

    def subsetはラベルも絞り込む():
        data = Dataset(np.arange(6.0).reshape(3, 2), class_labels=np.array([5, 6, 7]))

        part = data.subset([2, 0])

        np.testing.assert_array_equal(part.features, [[4.0, 5.0], [0.0, 1.0]])
        np.testing.assert_array_equal(part.class_labels, [7, 5])
