"""半教師ありシナリオとベンチマーク分割のテスト。"""

import numpy as np
import pytest
from deep_sad.data.dataset import ANOMALY, NORMAL, Dataset
from deep_sad.data.scenarios import (
    ScenarioConfig,
    SemiSupervisedSplit,
    labeled_count,
    make_scenario,
    odds_split,
    pollution_count,
)
from deep_sad.exceptions import InvalidArgumentError, ScenarioInfeasibleError, ShapeError
from pydantic import ValidationError


def class_dataset(counts: dict[int, int], seed: int = 0) -> Dataset:
    """クラスごとに値をずらした2次元データ。特徴量の1列目に元の行番号を入れる。"""
    rng = np.random.default_rng(seed)
    classes = np.concatenate([np.full(n, c) for c, n in counts.items()])
    features = np.column_stack([np.arange(classes.size, dtype=float), classes + rng.normal(size=classes.size)])
    return Dataset(features, class_labels=classes)


def describe_件数の計算():
    def ラベル付き件数は四捨五入():
        assert labeled_count(950, 0.05) == 50
        assert labeled_count(100, 0.0) == 0
        assert labeled_count(99, 0.01) == 1

    def 汚染件数は床関数():
        assert pollution_count(1000, 0.1) == 100
        assert pollution_count(10, 0.3) == 3
        assert pollution_count(9, 0.1) == 0


def describe_ScenarioConfig():
    def 既知クラス数とk_lが一致しなければエラー():
        with pytest.raises(ValidationError):
            ScenarioConfig(normal_class=0, k_l=2, anomaly_classes=(1,))

    def 正常クラスを既知異常に含めるとエラー():
        with pytest.raises(ValidationError):
            ScenarioConfig(normal_class=0, k_l=1, anomaly_classes=(0,))

    def 重複した既知クラスはエラー():
        with pytest.raises(ValidationError):
            ScenarioConfig(normal_class=0, k_l=2, anomaly_classes=(1, 1))

    def γ_lは1未満():
        with pytest.raises(ValidationError):
            ScenarioConfig(normal_class=0, gamma_l=1.0)


def describe_make_scenario():
    def ラベル付き比率と件数が一致する():
        train = class_dataset({0: 950, 1: 100, 2: 100})
        test = class_dataset({0: 10, 1: 10})
        cfg = ScenarioConfig(normal_class=0, gamma_l=0.05, k_l=1, seed=3)

        split, labeled_test = make_scenario(train, test, cfg)

        assert split.n_unlabeled == 950
        assert split.n_labeled == 50
        assert (split.labeled_targets == ANOMALY).all()
        assert split.provenance == cfg
        np.testing.assert_array_equal(labeled_test.anomaly_labels, [NORMAL] * 10 + [ANOMALY] * 10)

    def ラベル付き異常は既知の1クラスだけから選ばれる():
        train = class_dataset({0: 200, 1: 50, 2: 50, 3: 50})
        test = class_dataset({0: 2, 1: 2})
        split, _ = make_scenario(train, test, ScenarioConfig(normal_class=0, gamma_l=0.1, k_l=1, seed=5))

        rows = split.labeled[:, 0].astype(int)
        assert np.unique(train.class_labels[rows]).size == 1
        assert (train.class_labels[rows] != 0).all()

    def 明示した既知クラスを使う():
        train = class_dataset({0: 100, 1: 30, 2: 30})
        test = class_dataset({0: 2, 1: 2})
        cfg = ScenarioConfig(normal_class=0, gamma_l=0.1, k_l=1, anomaly_classes=(2,))

        split, _ = make_scenario(train, test, cfg)

        rows = split.labeled[:, 0].astype(int)
        assert set(train.class_labels[rows].tolist()) == {2}

    def 汚染しても件数nは変わらない():
        train = class_dataset({0: 1000, 1: 200, 2: 200})
        test = class_dataset({0: 2, 1: 2})
        cfg = ScenarioConfig(normal_class=0, gamma_l=0.0, gamma_p=0.1, k_l=1, seed=1)

        split, _ = make_scenario(train, test, cfg)

        assert split.n_unlabeled == 1000
        assert split.n_labeled == 0
        assert split.unlabeled_truth is not None
        assert int((split.unlabeled_truth == ANOMALY).sum()) == 100
        rows = split.unlabeled[:, 0].astype(int)
        truth_from_class = np.where(train.class_labels[rows] == 0, NORMAL, ANOMALY)
        np.testing.assert_array_equal(split.unlabeled_truth, truth_from_class)

    def 汚染とラベル付きは重ならない():
        train = class_dataset({0: 300, 1: 40})
        test = class_dataset({0: 2, 1: 2})
        cfg = ScenarioConfig(normal_class=0, gamma_l=0.05, gamma_p=0.05, k_l=1, seed=2)

        split, _ = make_scenario(train, test, cfg)

        labeled_rows = set(split.labeled[:, 0].astype(int).tolist())
        unlabeled_rows = set(split.unlabeled[:, 0].astype(int).tolist())
        assert not labeled_rows & unlabeled_rows

    def 同じシードなら同じ分割になる():
        train = class_dataset({0: 100, 1: 30, 2: 30})
        test = class_dataset({0: 2, 1: 2})
        cfg = ScenarioConfig(normal_class=0, gamma_l=0.1, gamma_p=0.05, k_l=1, seed=9)

        a, _ = make_scenario(train, test, cfg)
        b, _ = make_scenario(train, test, cfg)

        np.testing.assert_array_equal(a.unlabeled, b.unlabeled)
        np.testing.assert_array_equal(a.labeled, b.labeled)

    def 異常が足りなければScenarioInfeasibleError():
        train = class_dataset({0: 1000, 1: 10})
        test = class_dataset({0: 2, 1: 2})
        cfg = ScenarioConfig(normal_class=0, gamma_l=0.2, k_l=1)

        with pytest.raises(ScenarioInfeasibleError) as exc_info:
            make_scenario(train, test, cfg)

        assert exc_info.value.requested == 250
        assert exc_info.value.available == 10

    def k_lが異常クラス数を超えるとScenarioInfeasibleError():
        train = class_dataset({0: 10, 1: 5})
        test = class_dataset({0: 2, 1: 2})

        with pytest.raises(ScenarioInfeasibleError):
            make_scenario(train, test, ScenarioConfig(normal_class=0, k_l=2))

    def 正常クラスがなければScenarioInfeasibleError():
        train = class_dataset({1: 10, 2: 5})
        test = class_dataset({0: 2, 1: 2})

        with pytest.raises(ScenarioInfeasibleError):
            make_scenario(train, test, ScenarioConfig(normal_class=0))

    def class列がなければエラー():
        plain = Dataset(np.zeros((3, 1)))

        with pytest.raises(InvalidArgumentError):
            make_scenario(plain, plain, ScenarioConfig(normal_class=0))


def describe_SemiSupervisedSplit():
    def 学習行列はラベルなしに続けてラベル付きを並べる():
        split = SemiSupervisedSplit(
            unlabeled=np.zeros((2, 1)),
            labeled=np.ones((1, 1)),
            labeled_targets=np.array([ANOMALY]),
        )

        x, labels = split.training_matrix()

        np.testing.assert_array_equal(x[:, 0], [0.0, 0.0, 1.0])
        np.testing.assert_array_equal(labels, [0, 0, -1])
        assert split.labeled_ratio == pytest.approx(1 / 3)

    def 次元が違えばShapeError():
        with pytest.raises(ShapeError):
            SemiSupervisedSplit(np.zeros((2, 2)), np.zeros((1, 3)), np.array([1]))

    def ラベル値は正負1のみ():
        with pytest.raises(InvalidArgumentError):
            SemiSupervisedSplit(np.zeros((2, 1)), np.zeros((1, 1)), np.array([0]))

    def 空の学習データはエラー():
        with pytest.raises(InvalidArgumentError):
            SemiSupervisedSplit.unsupervised(np.empty((0, 2)))

    def from_datasetsはラベルなし側のラベルを評価用に残す():
        unlabeled = Dataset(np.zeros((2, 1)), anomaly_labels=np.array([1, -1]))
        labeled = Dataset(np.ones((1, 1)), anomaly_labels=np.array([1]))

        split = SemiSupervisedSplit.from_datasets(unlabeled, labeled)

        np.testing.assert_array_equal(split.unlabeled_truth, [1, -1])
        np.testing.assert_array_equal(split.labeled_targets, [1])

    def ラベル付き側にlabel列がなければエラー():
        with pytest.raises(InvalidArgumentError):
            SemiSupervisedSplit.from_datasets(Dataset(np.zeros((2, 1))), Dataset(np.ones((1, 1))))


def describe_odds_split():
    def 十行を六対四に分ける():
        labels = np.array([NORMAL] * 8 + [ANOMALY] * 2)
        data = Dataset(np.arange(10.0).reshape(10, 1), anomaly_labels=labels)

        with pytest.raises(ScenarioInfeasibleError):
            # 正常 5 行では m = round(0.05) = 0
            odds_split(data, seed=0)

        part = odds_split(data, seed=0, gamma_l=0.2)
        assert part.train.n_rows == 6
        assert part.test.n_rows == 4

    def 層化分割で異常比率を保ち学習データはγ_l_0_01になる():
        labels = np.array([NORMAL] * 900 + [ANOMALY] * 100)
        data = Dataset(np.arange(1000.0).reshape(1000, 1), anomaly_labels=labels)

        part = odds_split(data, seed=4)

        assert part.train.n_rows == 600
        assert part.test.n_rows == 400
        assert int((part.test.anomaly_labels == ANOMALY).sum()) == 40
        assert part.split.n_unlabeled == 540
        assert part.split.n_labeled == 5
        train_rows = set(part.train.features[:, 0].tolist())
        test_rows = set(part.test.features[:, 0].tolist())
        assert not train_rows & test_rows
        assert set(part.split.labeled[:, 0].tolist()) <= train_rows
        assert (part.split.labeled_targets == ANOMALY).all()

    def シードが同じなら同じ分割():
        labels = np.array([NORMAL] * 180 + [ANOMALY] * 20)
        data = Dataset(np.arange(200.0).reshape(200, 1), anomaly_labels=labels)

        a = odds_split(data, seed=1)
        b = odds_split(data, seed=1)

        np.testing.assert_array_equal(a.test.features, b.test.features)
        np.testing.assert_array_equal(a.split.labeled, b.split.labeled)

    def 片方のラベルしかなければエラー():
        data = Dataset(np.zeros((5, 1)), anomaly_labels=np.ones(5, dtype=int))

        with pytest.raises(InvalidArgumentError):
            odds_split(data, seed=0)
