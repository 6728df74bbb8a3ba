"""特徴量行列と任意のラベルからなるデータセット。"""

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from deep_sad.exceptions import InvalidArgumentError, ShapeError
from deep_sad.nn.layers import FloatArray

IntArray = NDArray[np.int64]

NORMAL = 1
ANOMALY = -1


@dataclass
class Dataset:
    """データセット。

    Attributes
    ----------
        features: (N, D) の特徴量
        class_labels: 行ごとのクラス番号（任意）
        anomaly_labels: 行ごとの +1（正常）/ −1（異常）（任意）
        feature_names: 特徴量の列名

    """

    features: FloatArray
    class_labels: IntArray | None = None
    anomaly_labels: IntArray | None = None
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ShapeError(f"特徴量は2次元の行列である必要があります: {self.features.shape}")
        n_rows = self.features.shape[0]
        if self.class_labels is not None:
            self.class_labels = np.asarray(self.class_labels, dtype=np.int64)
            if self.class_labels.shape != (n_rows,):
                raise ShapeError(f"クラスラベル数 {self.class_labels.shape} が行数 {n_rows} と一致しません")
        if self.anomaly_labels is not None:
            self.anomaly_labels = np.asarray(self.anomaly_labels, dtype=np.int64)
            if self.anomaly_labels.shape != (n_rows,):
                raise ShapeError(f"異常ラベル数 {self.anomaly_labels.shape} が行数 {n_rows} と一致しません")
            if not np.isin(self.anomaly_labels, (NORMAL, ANOMALY)).all():
                raise InvalidArgumentError("異常ラベルは +1 または −1 である必要があります")
        if not self.feature_names:
            self.feature_names = [f"x{i}" for i in range(self.features.shape[1])]
        elif len(self.feature_names) != self.features.shape[1]:
            raise ShapeError("列名の数が特徴量の次元と一致しません")

    @property
    def n_rows(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def subset(self, index: ArrayLike) -> "Dataset":
        """指定した行だけを持つデータセット。"""
        idx = np.asarray(index)
        return Dataset(
            features=self.features[idx],
            class_labels=None if self.class_labels is None else self.class_labels[idx],
            anomaly_labels=None if self.anomaly_labels is None else self.anomaly_labels[idx],
            feature_names=list(self.feature_names),
        )

    def with_features(self, features: FloatArray) -> "Dataset":
        """ラベルを保ったまま特徴量を差し替える。"""
        return Dataset(features, self.class_labels, self.anomaly_labels, list(self.feature_names))
