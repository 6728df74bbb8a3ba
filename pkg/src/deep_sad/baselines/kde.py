"""ガウスカーネル密度推定（交差検証でバンド幅を選ぶ）。"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from numpy.typing import ArrayLike
from scipy.spatial.distance import cdist
from scipy.special import logsumexp
from sklearn.model_selection import KFold

from deep_sad.exceptions import InvalidArgumentError, ModelFileError, ShapeError
from deep_sad.models.base import as_batch
from deep_sad.nn.layers import FloatArray
from deep_sad.nn.serialization import Envelope

logger = logging.getLogger(__name__)

DEFAULT_BANDWIDTH_GRID = tuple(2.0 ** (k / 2) for k in range(1, 11))

# 距離行列を作る行数の上限（メモリ使用量の目安）
_CHUNK_ROWS = 1024


def gaussian_log_density(
    x: FloatArray, points: FloatArray, bandwidth: float
) -> FloatArray:
    """log((1/n)Σᵢ (2πh²)^{−D/2} exp(−‖x−xᵢ‖²/(2h²))) を行ごとに返す。"""
    n, dim = points.shape
    log_norm = math.log(n) + 0.5 * dim * math.log(2.0 * math.pi * bandwidth * bandwidth)
    out = np.empty(x.shape[0])
    for start in range(0, x.shape[0], _CHUNK_ROWS):
        chunk = x[start : start + _CHUNK_ROWS]
        sq = cdist(chunk, points, metric="sqeuclidean")
        out[start : start + chunk.shape[0]] = logsumexp(-sq / (2.0 * bandwidth**2), axis=1)
    return out - log_norm


@dataclass
class KdeModel:
    """学習点とバンド幅 h。

    Attributes
    ----------
        training_points: (n, D) の学習点
        bandwidth: ガウスカーネルのバンド幅 h > 0
        cv_log_likelihood: 候補ごとの交差検証平均対数尤度（選択時のみ）

    """

    training_points: FloatArray
    bandwidth: float
    cv_log_likelihood: dict[float, float] = field(default_factory=dict)

    kind: ClassVar[str] = "kde"

    def __post_init__(self) -> None:
        self.training_points = np.asarray(self.training_points, dtype=np.float64)
        if self.training_points.ndim != 2 or self.training_points.shape[0] == 0:
            raise InvalidArgumentError(f"学習点が空です: {self.training_points.shape}")
        if not self.bandwidth > 0:
            raise InvalidArgumentError(f"バンド幅は正である必要があります: {self.bandwidth}")

    @property
    def input_dim(self) -> int:
        return int(self.training_points.shape[1])

    def log_density(self, x: ArrayLike) -> FloatArray:
        return gaussian_log_density(as_batch(x, self.input_dim), self.training_points, self.bandwidth)

    def score(self, x: ArrayLike) -> FloatArray:
        """−log 密度。"""
        return -self.log_density(x)

    def to_envelope(self) -> Envelope:
        return Envelope(
            self.kind,
            arrays={"training_points": self.training_points},
            metadata={"bandwidth": self.bandwidth},
        )

    @classmethod
    def from_envelope(cls, envelope: Envelope) -> "KdeModel":
        try:
            return cls(envelope.arrays["training_points"], float(envelope.metadata["bandwidth"]))
        except KeyError as e:
            raise ModelFileError(f"KDE モデルの内容が不足しています: {e}", e) from e


def kde_fit(
    data: ArrayLike,
    bandwidth_grid: Sequence[float] = DEFAULT_BANDWIDTH_GRID,
    folds: int = 5,
    seed: int = 0,
) -> KdeModel:
    """交差検証の平均対数尤度が最大のバンド幅で KDE を作る。

    各分割で、検証点の対数尤度の平均を残りの点を学習点として計算し、分割間で平均する。
    同点の場合は候補の先頭側を選ぶ。

    Args:
    ----
        data: (n, D) の学習データ
        bandwidth_grid: バンド幅の候補
        folds: 分割数
        seed: 分割前シャッフルの乱数シード

    Returns:
    -------
        全学習点を保持した KDE モデル

    Raises:
    ------
        InvalidArgumentError: 行数が分割数より少ない、または候補が空・非正の場合

    """
    points = np.asarray(data, dtype=np.float64)
    if points.ndim != 2:
        raise ShapeError(f"学習データは2次元の行列である必要があります: {points.shape}")
    if not bandwidth_grid or any(h <= 0 for h in bandwidth_grid):
        raise InvalidArgumentError(f"バンド幅の候補が不正です: {list(bandwidth_grid)}")
    if folds < 2:
        raise InvalidArgumentError(f"分割数は2以上である必要があります: {folds}")
    if points.shape[0] < folds:
        raise InvalidArgumentError(f"行数 {points.shape[0]} が分割数 {folds} より少ないです")

    splits = list(KFold(n_splits=folds, shuffle=True, random_state=seed).split(points))
    cv_scores: dict[float, float] = {}
    for h in bandwidth_grid:
        fold_means = [
            float(np.mean(gaussian_log_density(points[test], points[train], h)))
            for train, test in splits
        ]
        cv_scores[float(h)] = float(np.mean(fold_means))
        logger.debug("KDE h=%.4g: 交差検証平均対数尤度 %.6g", h, cv_scores[float(h)])

    best = max(cv_scores, key=lambda h: cv_scores[h])
    logger.info("KDE バンド幅 %.4g を選択", best)
    return KdeModel(points, best, cv_scores)
