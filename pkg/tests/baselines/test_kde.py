"""カーネル密度推定のテスト。"""

import math

import numpy as np
import pytest
from deep_sad.baselines.kde import DEFAULT_BANDWIDTH_GRID, KdeModel, gaussian_log_density, kde_fit
from deep_sad.exceptions import InvalidArgumentError


def describe_gaussian_log_density():
    def 一点なら正規分布の対数密度():
        log_density = gaussian_log_density(np.array([[1.0, 0.0]]), np.zeros((1, 2)), 2.0)

        expected = -math.log(2.0 * math.pi * 4.0) - 1.0 / 8.0
        assert log_density[0] == pytest.approx(expected)

    def 遠い点でも有限(rng: np.random.Generator):
        log_density = gaussian_log_density(np.array([[1e3, 1e3]]), rng.normal(size=(5, 2)), 0.5)

        assert np.isfinite(log_density).all()


def describe_kde_fit():
    def 既定の候補は2のk半乗():
        assert DEFAULT_BANDWIDTH_GRID[0] == pytest.approx(math.sqrt(2.0))
        assert DEFAULT_BANDWIDTH_GRID[-1] == pytest.approx(32.0)
        assert len(DEFAULT_BANDWIDTH_GRID) == 10

    def 交差検証で尤度最大のバンド幅を選ぶ(rng: np.random.Generator):
        data = rng.normal(scale=1.0, size=(200, 1))

        model = kde_fit(data, (0.01, 0.4, 50.0), folds=5)

        assert model.bandwidth == 0.4
        assert set(model.cv_log_likelihood) == {0.01, 0.4, 50.0}

    def 同点なら先頭の候補(rng: np.random.Generator):
        data = rng.normal(size=(20, 2))

        model = kde_fit(data, (1.0, 1.0), folds=4)

        assert model.bandwidth == 1.0

    def 同じシードなら同じ選択(rng: np.random.Generator):
        data = rng.normal(size=(60, 2))
        grid = (0.2, 0.5, 1.0)

        assert kde_fit(data, grid, seed=1).cv_log_likelihood == kde_fit(data, grid, seed=1).cv_log_likelihood

    def 外れた点ほどスコアが高い(rng: np.random.Generator):
        model = kde_fit(rng.normal(size=(100, 2)), (0.5, 1.0))

        scores = model.score(np.array([[0.0, 0.0], [2.0, 2.0], [6.0, 6.0]]))

        assert scores[0] < scores[1] < scores[2]

    def 行数が分割数より少なければエラー():
        with pytest.raises(InvalidArgumentError):
            kde_fit(np.zeros((3, 2)), folds=5)

    @pytest.mark.parametrize("grid", [(), (1.0, 0.0)])
    def 不正な候補はエラー(grid: tuple[float, ...]):
        with pytest.raises(InvalidArgumentError):
            kde_fit(np.zeros((10, 2)), grid)


def describe_KdeModel():
    def バンド幅は正():
        with pytest.raises(InvalidArgumentError):
            KdeModel(np.zeros((2, 2)), 0.0)

    def スコアは負の対数密度(rng: np.random.Generator):
        model = KdeModel(rng.normal(size=(10, 3)), 1.0)
        x = rng.normal(size=(4, 3))

        np.testing.assert_allclose(model.score(x), -model.log_density(x))
