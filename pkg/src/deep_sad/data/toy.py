"""2次元のトイデータ（正常の塊と、ラベル付き正常・ラベル付き異常）。"""

from dataclasses import dataclass

import numpy as np

from deep_sad.data.dataset import ANOMALY, NORMAL, Dataset
from deep_sad.data.scenarios import SemiSupervisedSplit
from deep_sad.nn.layers import FloatArray

NORMAL_CENTER = (0.0, 0.0)
ANOMALY_CENTER = (3.0, 3.0)
SPREAD = 0.5


@dataclass(frozen=True)
class ToyConfig:
    """トイデータの行数と配置。"""

    n_unlabeled: int = 500
    n_labeled_normal: int = 20
    n_labeled_anomaly: int = 20
    n_test_normal: int = 200
    n_test_anomaly: int = 50
    normal_center: tuple[float, float] = NORMAL_CENTER
    anomaly_center: tuple[float, float] = ANOMALY_CENTER
    spread: float = SPREAD


@dataclass
class ToyData:
    """学習用の半教師あり分割と評価用データ。"""

    split: SemiSupervisedSplit
    test: Dataset


def _blob(rng: np.random.Generator, center: tuple[float, float], spread: float, n: int) -> FloatArray:
    return rng.normal(loc=center, scale=spread, size=(n, 2))


def make_toy(seed: int = 0, cfg: ToyConfig | None = None) -> ToyData:
    """正常の塊（ラベルなし＋少数のラベル付き正常）と、離れた位置のラベル付き異常を生成する。

    テストの異常は異常の塊と、正常の塊を囲む一様な外れ値から半数ずつ作る。
    """
    cfg = cfg or ToyConfig()
    rng = np.random.default_rng(seed)
    unlabeled = _blob(rng, cfg.normal_center, cfg.spread, cfg.n_unlabeled)
    labeled_normal = _blob(rng, cfg.normal_center, cfg.spread, cfg.n_labeled_normal)
    labeled_anomaly = _blob(rng, cfg.anomaly_center, cfg.spread, cfg.n_labeled_anomaly)

    test_normal = _blob(rng, cfg.normal_center, cfg.spread, cfg.n_test_normal)
    n_cluster = cfg.n_test_anomaly // 2
    center = np.asarray(cfg.normal_center)
    offsets = rng.uniform(-6.0, 6.0, size=(cfg.n_test_anomaly - n_cluster, 2))
    # 正常の塊（半径 4σ）の内側に落ちた外れ値は境界まで押し出す
    radius = np.linalg.norm(offsets, axis=1)
    offsets *= np.maximum(1.0, 4 * cfg.spread / np.maximum(radius, 1e-12))[:, None]
    test_anomaly = np.vstack([_blob(rng, cfg.anomaly_center, cfg.spread, n_cluster), center + offsets])

    split = SemiSupervisedSplit(
        unlabeled=unlabeled,
        labeled=np.vstack([labeled_normal, labeled_anomaly]),
        labeled_targets=np.concatenate(
            [np.full(cfg.n_labeled_normal, NORMAL), np.full(cfg.n_labeled_anomaly, ANOMALY)]
        ).astype(np.int64),
        unlabeled_truth=np.full(cfg.n_unlabeled, NORMAL, dtype=np.int64),
    )
    test = Dataset(
        features=np.vstack([test_normal, test_anomaly]),
        anomaly_labels=np.concatenate(
            [np.full(cfg.n_test_normal, NORMAL), np.full(cfg.n_test_anomaly, ANOMALY)]
        ),
        feature_names=["x", "y"],
    )
    return ToyData(split, test)


def grid_points(lower: float = -5.0, upper: float = 5.0, steps: int = 51) -> FloatArray:
    """[lower, upper]² の格子点（x が速く変わる行順）。"""
    axis = np.linspace(lower, upper, steps)
    xx, yy = np.meshgrid(axis, axis)
    return np.column_stack([xx.ravel(), yy.ravel()])
