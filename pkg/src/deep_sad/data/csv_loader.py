"""ヘッダ付き CSV の読み書きと .npz キャッシュ付きローダー。

予約列名 `label` は異常ラベル（+1/−1）、`class` はクラス番号として読む。
それ以外の列は全て数値の特徴量。
"""

import csv
import math
from pathlib import Path
from typing import Any, ClassVar

import numpy as np

from deep_sad.data.base import BaseDataLoader, CacheError
from deep_sad.data.dataset import ANOMALY, NORMAL, Dataset
from deep_sad.exceptions import DataFormatError

LABEL_COLUMN = "label"
CLASS_COLUMN = "class"


def _parse_label(text: str, row: int) -> int:
    try:
        value = int(text.strip())
    except ValueError as e:
        raise DataFormatError(
            f"{row} 行目: label 列の値が整数ではありません: {text!r}", row, LABEL_COLUMN, e
        ) from e
    if value not in (NORMAL, ANOMALY):
        raise DataFormatError(f"{row} 行目: label は +1 または −1 である必要があります: {text!r}", row, LABEL_COLUMN)
    return value


def load_csv(path: Path) -> Dataset:
    """CSV ファイルを読み込む。行順は保持する。

    Args:
    ----
        path: ヘッダ行を持つ CSV ファイル

    Returns:
    -------
        データセット（label/class 列がなければ該当ラベルは None）

    Raises:
    ------
        FileNotFoundError: ファイルが存在しない場合
        DataFormatError: ヘッダがない、列数が一致しない、数値でないセルがある場合
            （行番号はヘッダを1行目として数える）

    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise DataFormatError(f"ヘッダ行がありません: {path}", row=1)
        names = [h.strip() for h in header]
        label_idx = names.index(LABEL_COLUMN) if LABEL_COLUMN in names else None
        class_idx = names.index(CLASS_COLUMN) if CLASS_COLUMN in names else None
        feature_idx = [i for i in range(len(names)) if i not in (label_idx, class_idx)]
        if not feature_idx:
            raise DataFormatError(f"特徴量の列がありません: {path}", row=1)

        features: list[list[float]] = []
        labels: list[int] = []
        classes: list[int] = []
        for row_number, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(names):
                raise DataFormatError(
                    f"{row_number} 行目: 列数 {len(record)} がヘッダの列数 {len(names)} と一致しません",
                    row=row_number,
                )
            values: list[float] = []
            for i in feature_idx:
                try:
                    value = float(record[i])
                except ValueError as e:
                    raise DataFormatError(
                        f"{row_number} 行目 {names[i]} 列: 数値ではありません: {record[i]!r}",
                        row_number,
                        names[i],
                        e,
                    ) from e
                if not math.isfinite(value):
                    raise DataFormatError(
                        f"{row_number} 行目 {names[i]} 列: 有限の値ではありません: {record[i]!r}",
                        row_number,
                        names[i],
                    )
                values.append(value)
            features.append(values)
            if label_idx is not None:
                labels.append(_parse_label(record[label_idx], row_number))
            if class_idx is not None:
                try:
                    classes.append(int(record[class_idx].strip()))
                except ValueError as e:
                    raise DataFormatError(
                        f"{row_number} 行目: class 列の値が整数ではありません: {record[class_idx]!r}",
                        row_number,
                        CLASS_COLUMN,
                        e,
                    ) from e

    matrix = np.asarray(features, dtype=np.float64).reshape(len(features), len(feature_idx))
    return Dataset(
        features=matrix,
        class_labels=np.asarray(classes, dtype=np.int64) if class_idx is not None else None,
        anomaly_labels=np.asarray(labels, dtype=np.int64) if label_idx is not None else None,
        feature_names=[names[i] for i in feature_idx],
    )


def write_csv(path: Path, dataset: Dataset) -> None:
    """データセットを CSV に書き出す。数値は往復で同じ値に戻る表記で書く。"""
    header = list(dataset.feature_names)
    if dataset.anomaly_labels is not None:
        header.append(LABEL_COLUMN)
    if dataset.class_labels is not None:
        header.append(CLASS_COLUMN)

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for i in range(dataset.n_rows):
            row = [repr(float(v)) for v in dataset.features[i]]
            if dataset.anomaly_labels is not None:
                row.append(str(int(dataset.anomaly_labels[i])))
            if dataset.class_labels is not None:
                row.append(str(int(dataset.class_labels[i])))
            writer.writerow(row)


class CsvDatasetLoader(BaseDataLoader):
    """CSV データセットを読み込み、解析結果を .npz にキャッシュする。"""

    cache_suffix: ClassVar[str] = ".npz"

    def _load_data_from_source(self, path: Path) -> Dataset:
        return load_csv(path)

    def _save_to_cache(self, data: Any, cache_path: Path) -> None:
        dataset: Dataset = data
        arrays: dict[str, np.ndarray] = {
            "features": dataset.features,
            "feature_names": np.asarray(dataset.feature_names, dtype=np.str_),
        }
        if dataset.class_labels is not None:
            arrays["class_labels"] = dataset.class_labels
        if dataset.anomaly_labels is not None:
            arrays["anomaly_labels"] = dataset.anomaly_labels
        try:
            with open(cache_path, "wb") as f:
                np.savez(f, **arrays)
        except OSError as e:
            raise CacheError(f"キャッシュを保存できません: {cache_path}: {e}", e) from e

    def _load_from_cache(self, cache_path: Path) -> Dataset:
        try:
            with np.load(cache_path, allow_pickle=False) as archive:
                return Dataset(
                    features=archive["features"],
                    class_labels=archive["class_labels"] if "class_labels" in archive.files else None,
                    anomaly_labels=archive["anomaly_labels"] if "anomaly_labels" in archive.files else None,
                    feature_names=[str(n) for n in archive["feature_names"]],
                )
        except (OSError, KeyError, ValueError) as e:
            raise CacheError(f"キャッシュを読み込めません: {cache_path}: {e}", e) from e


def load_dataset(path: Path, cache_enabled: bool = True) -> Dataset:
    """キャッシュ付きで CSV データセットを読み込む。"""
    return CsvDatasetLoader(cache_enabled=cache_enabled).load_data(path).data
