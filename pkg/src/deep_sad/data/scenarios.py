"""半教師ありシナリオと表形式ベンチマーク分割の構成。

シナリオは (正常クラス, γ_l, γ_p, k_l, seed) で決まる。ラベルなし集合は学習分割の
正常クラス全行（n 行）で、そのうち ⌊γ_p·n⌋ 行を異常に置き換える（n は変えない）。
ラベル付き集合は既知の k_l クラスから抽出した m = round(γ_l·n/(1−γ_l)) 行の異常。
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field, model_validator
from sklearn.model_selection import train_test_split

from deep_sad.data.dataset import ANOMALY, NORMAL, Dataset, IntArray
from deep_sad.exceptions import InvalidArgumentError, ScenarioInfeasibleError, ShapeError
from deep_sad.nn.layers import FloatArray

logger = logging.getLogger(__name__)

ODDS_TEST_SIZE = 0.4
ODDS_GAMMA_L = 0.01

# 0.3 * 10 のような入力で床関数が1つ下にずれないための余裕
_FLOOR_SLACK = 1e-9


class ScenarioConfig(BaseModel):
    """実験グリッドの1セル。

    Attributes
    ----------
        normal_class: 正常とするクラス
        gamma_l: ラベル付き比率 m/(n+m)
        gamma_p: ラベルなし集合の汚染率
        k_l: ラベル付き異常に含める既知異常クラス数
        anomaly_classes: 既知異常クラスの明示指定（None なら seed で一様に選ぶ）
        seed: 乱数シード

    """

    normal_class: int
    gamma_l: float = Field(default=0.0, ge=0, lt=1)
    gamma_p: float = Field(default=0.0, ge=0, lt=1)
    k_l: int = Field(default=1, ge=0)
    anomaly_classes: tuple[int, ...] | None = None
    seed: int = 0

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_known_classes(self) -> "ScenarioConfig":
        if self.anomaly_classes is not None:
            if len(set(self.anomaly_classes)) != len(self.anomaly_classes):
                raise ValueError(f"既知異常クラスが重複しています: {self.anomaly_classes}")
            if len(self.anomaly_classes) != self.k_l:
                raise ValueError(
                    f"既知異常クラスの数 {len(self.anomaly_classes)} が k_l={self.k_l} と一致しません"
                )
            if self.normal_class in self.anomaly_classes:
                raise ValueError("正常クラスを既知異常クラスに含めることはできません")
        return self


def labeled_count(n_unlabeled: int, gamma_l: float) -> int:
    """m = round(γ_l·n/(1−γ_l))（0.5 は切り上げ）。"""
    return math.floor(gamma_l * n_unlabeled / (1.0 - gamma_l) + 0.5)


def pollution_count(n_unlabeled: int, gamma_p: float) -> int:
    """⌊γ_p·n⌋。"""
    return math.floor(gamma_p * n_unlabeled + _FLOOR_SLACK)


@dataclass
class SemiSupervisedSplit:
    """ラベルなし n 行とラベル付き m 行の学習データ。

    Attributes
    ----------
        unlabeled: (n, D) のラベルなしデータ
        labeled: (m, D) のラベル付きデータ
        labeled_targets: (m,) の +1 / −1
        provenance: 構成に使ったシナリオ
        unlabeled_truth: ラベルなし行の真のラベル（評価用、学習には使わない）

    """

    unlabeled: FloatArray
    labeled: FloatArray
    labeled_targets: IntArray
    provenance: ScenarioConfig | None = None
    unlabeled_truth: IntArray | None = None

    def __post_init__(self) -> None:
        self.unlabeled = np.asarray(self.unlabeled, dtype=np.float64)
        self.labeled = np.asarray(self.labeled, dtype=np.float64)
        self.labeled_targets = np.asarray(self.labeled_targets, dtype=np.int64)
        if self.unlabeled.ndim != 2 or self.labeled.ndim != 2:
            raise ShapeError("ラベルなし・ラベル付きデータは2次元の行列である必要があります")
        if self.unlabeled.shape[1] != self.labeled.shape[1]:
            raise ShapeError(
                f"ラベルなし ({self.unlabeled.shape[1]}) とラベル付き ({self.labeled.shape[1]}) の次元が一致しません"
            )
        if self.labeled_targets.shape != (self.labeled.shape[0],):
            raise ShapeError("ラベル数がラベル付きデータの行数と一致しません")
        if not np.isin(self.labeled_targets, (NORMAL, ANOMALY)).all():
            raise InvalidArgumentError("ラベルは +1 または −1 である必要があります")
        if self.n_unlabeled + self.n_labeled < 1:
            raise InvalidArgumentError("学習データが1行もありません")

    @classmethod
    def unsupervised(cls, data: FloatArray) -> "SemiSupervisedSplit":
        """全行をラベルなしとする分割。"""
        data = np.asarray(data, dtype=np.float64)
        return cls(data, np.empty((0, data.shape[1])), np.empty(0, dtype=np.int64))

    @classmethod
    def from_datasets(cls, unlabeled: Dataset, labeled: Dataset | None = None) -> "SemiSupervisedSplit":
        """ラベルなしデータセットとラベル付きデータセットから作る。

        ラベルなし側の label 列は学習に使わず unlabeled_truth に残す。

        Raises
        ------
            InvalidArgumentError: ラベル付き側に label 列がない場合
            ShapeError: 両者の次元が一致しない場合

        """
        if labeled is None:
            labeled_x = np.empty((0, unlabeled.n_features))
            targets = np.empty(0, dtype=np.int64)
        elif labeled.anomaly_labels is None:
            raise InvalidArgumentError("ラベル付きデータセットには label 列が必要です")
        else:
            labeled_x, targets = labeled.features, labeled.anomaly_labels
        return cls(unlabeled.features, labeled_x, targets, unlabeled_truth=unlabeled.anomaly_labels)

    @property
    def n_unlabeled(self) -> int:
        return int(self.unlabeled.shape[0])

    @property
    def n_labeled(self) -> int:
        return int(self.labeled.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.unlabeled.shape[1])

    @property
    def labeled_ratio(self) -> float:
        """m/(n+m)。"""
        return self.n_labeled / (self.n_unlabeled + self.n_labeled)

    def training_matrix(self) -> tuple[FloatArray, NDArray[np.int64]]:
        """ラベルなし行（ラベル0）に続けてラベル付き行を並べた行列とラベル。"""
        x = np.vstack([self.unlabeled, self.labeled])
        labels = np.concatenate([np.zeros(self.n_unlabeled, dtype=np.int64), self.labeled_targets])
        return x, labels


def _choose(rng: np.random.Generator, pool: NDArray[np.int64], count: int, what: str) -> NDArray[np.int64]:
    if count > pool.size:
        raise ScenarioInfeasibleError(
            f"{what}: {count} 行が必要ですが {pool.size} 行しかありません", count, int(pool.size)
        )
    return np.sort(rng.choice(pool, size=count, replace=False)) if count else pool[:0]


def make_scenario(
    train: Dataset, test: Dataset, cfg: ScenarioConfig
) -> tuple[SemiSupervisedSplit, Dataset]:
    """クラスラベル付きの学習・テスト分割からシナリオを構成する。

    Args:
    ----
        train: 学習分割（class 列が必要）
        test: テスト分割（class 列が必要）。そのまま全行を使う
        cfg: シナリオ設定

    Returns:
    -------
        (半教師あり学習データ, 正常 +1 / 他 −1 のラベルを付けたテストデータ)

    Raises:
    ------
        InvalidArgumentError: class 列がない場合
        ScenarioInfeasibleError: 正常クラスがない、または抽出元の行が足りない場合

    """
    if train.class_labels is None or test.class_labels is None:
        raise InvalidArgumentError("シナリオの構成には class 列が必要です")
    rng = np.random.default_rng(cfg.seed)
    classes = train.class_labels

    normal_idx = np.flatnonzero(classes == cfg.normal_class)
    n = int(normal_idx.size)
    if n == 0:
        raise ScenarioInfeasibleError(f"正常クラス {cfg.normal_class} の行がありません", 1, 0)
    anomaly_classes = np.unique(classes[classes != cfg.normal_class])

    if cfg.anomaly_classes is not None:
        missing = sorted(set(cfg.anomaly_classes) - set(anomaly_classes.tolist()))
        if missing:
            raise ScenarioInfeasibleError(
                f"既知異常クラス {missing} が学習データにありません", cfg.k_l, cfg.k_l - len(missing)
            )
        known = np.asarray(sorted(cfg.anomaly_classes), dtype=np.int64)
    else:
        if cfg.k_l > anomaly_classes.size:
            raise ScenarioInfeasibleError(
                f"既知異常クラス数 k_l={cfg.k_l} が異常クラス数 {anomaly_classes.size} を超えています",
                cfg.k_l,
                int(anomaly_classes.size),
            )
        known = np.sort(rng.choice(anomaly_classes, size=cfg.k_l, replace=False))

    m = labeled_count(n, cfg.gamma_l)
    labeled_pool = np.flatnonzero(np.isin(classes, known))
    labeled_idx = _choose(rng, labeled_pool, m, "ラベル付き異常")

    n_polluted = pollution_count(n, cfg.gamma_p)
    anomaly_pool = np.setdiff1d(np.flatnonzero(classes != cfg.normal_class), labeled_idx)
    polluted_idx = _choose(rng, anomaly_pool, n_polluted, "汚染用の異常")
    kept_normal_idx = _choose(rng, normal_idx, n - n_polluted, "正常")

    unlabeled_idx = np.concatenate([kept_normal_idx, polluted_idx])
    truth = np.concatenate(
        [np.full(kept_normal_idx.size, NORMAL), np.full(polluted_idx.size, ANOMALY)]
    ).astype(np.int64)
    split = SemiSupervisedSplit(
        unlabeled=train.features[unlabeled_idx],
        labeled=train.features[labeled_idx],
        labeled_targets=np.full(labeled_idx.size, ANOMALY, dtype=np.int64),
        provenance=cfg,
        unlabeled_truth=truth,
    )
    test_labels = np.where(test.class_labels == cfg.normal_class, NORMAL, ANOMALY).astype(np.int64)
    logger.debug(
        "シナリオ: 正常クラス %d, n=%d, m=%d, 汚染 %d, 既知クラス %s",
        cfg.normal_class,
        n,
        m,
        n_polluted,
        known.tolist(),
    )
    return split, Dataset(test.features, test.class_labels, test_labels, list(test.feature_names))


@dataclass
class OddsSplit:
    """表形式ベンチマークの1分割。"""

    train: Dataset
    test: Dataset
    split: SemiSupervisedSplit


def odds_split(dataset: Dataset, seed: int, gamma_l: float = ODDS_GAMMA_L) -> OddsSplit:
    """異常比率を保った 60:40 分割と γ_l=0.01, γ_p=0 の学習データ。

    ラベルなし集合は学習分割の正常全行。ラベル付き集合は学習分割の異常から抽出した
    m = round(0.01·n/0.99) 行で、残りの学習分割の異常は使わない。

    Raises
    ------
        InvalidArgumentError: label 列がない、または片方のラベルしかない場合
        ScenarioInfeasibleError: m ≥ 1 を満たす異常が学習分割にない場合

    """
    if dataset.anomaly_labels is None:
        raise InvalidArgumentError("ベンチマーク分割には label 列が必要です")
    labels = dataset.anomaly_labels
    if not ((labels == NORMAL).any() and (labels == ANOMALY).any()):
        raise InvalidArgumentError("正常と異常の両方のラベルが必要です")

    train_idx, test_idx = train_test_split(
        np.arange(dataset.n_rows),
        test_size=ODDS_TEST_SIZE,
        stratify=labels,
        random_state=seed,
    )
    train = dataset.subset(np.sort(train_idx))
    test = dataset.subset(np.sort(test_idx))
    assert train.anomaly_labels is not None

    normal_rows = np.flatnonzero(train.anomaly_labels == NORMAL)
    anomaly_rows = np.flatnonzero(train.anomaly_labels == ANOMALY)
    m = labeled_count(normal_rows.size, gamma_l)
    if m < 1:
        raise ScenarioInfeasibleError(
            f"正常 {normal_rows.size} 行ではラベル付き異常が1行も作れません", 1, int(anomaly_rows.size)
        )
    labeled_idx = _choose(np.random.default_rng(seed), anomaly_rows, m, "ラベル付き異常")
    split = SemiSupervisedSplit(
        unlabeled=train.features[normal_rows],
        labeled=train.features[labeled_idx],
        labeled_targets=np.full(m, ANOMALY, dtype=np.int64),
        unlabeled_truth=np.full(normal_rows.size, NORMAL, dtype=np.int64),
    )
    return OddsSplit(train, test, split)
