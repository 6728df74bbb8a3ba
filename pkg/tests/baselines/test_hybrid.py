"""ハイブリッド（自己符号化器の符号 + 浅い手法）のテスト。"""

import numpy as np
import pytest
from deep_sad.baselines.hybrid import HybridModel, ShallowKind, ShallowSpec, hybrid_apply, hybrid_fit
from deep_sad.baselines.iforest import IsolationForest
from deep_sad.baselines.kde import KdeModel, kde_fit
from deep_sad.config.settings import AppSettings, TrainingConfig
from deep_sad.exceptions import ShapeError
from deep_sad.models.autoencoder import Autoencoder, pretrain_autoencoder
from deep_sad.nn.spec import mlp_specs

NO_EPOCHS = TrainingConfig(search_epochs=0, finetune_epochs=0)


@pytest.fixture
def autoencoder(rng: np.random.Generator) -> Autoencoder:
    return pretrain_autoencoder(rng.normal(size=(20, 4)), mlp_specs(4, (6,), 2), NO_EPOCHS).model


def describe_ShallowSpec():
    def 設定から値を引き継ぐ():
        settings = AppSettings(iforest_trees=7, iforest_subsample=32, kde_folds=3, n_jobs=2)

        spec = ShallowSpec.from_settings("iforest", settings, seed=5)

        assert spec.kind == ShallowKind.IFOREST
        assert (spec.n_trees, spec.subsample, spec.folds, spec.seed, spec.n_jobs) == (7, 32, 3, 5, 2)

    def 種類に応じたモデルを作る(rng: np.random.Generator):
        data = rng.normal(size=(20, 2))

        assert isinstance(ShallowSpec(ShallowKind.KDE, bandwidth_grid=(1.0,)).fit(data), KdeModel)
        assert isinstance(ShallowSpec(ShallowKind.IFOREST, n_trees=3).fit(data), IsolationForest)


def describe_hybrid_fit():
    def 符号の上で浅い手法を学習する(autoencoder: Autoencoder, rng: np.random.Generator):
        data = rng.normal(size=(30, 4))
        spec = ShallowSpec(ShallowKind.KDE, bandwidth_grid=(0.5, 1.0), folds=3)

        model = hybrid_fit(autoencoder, spec, data)

        assert model.kind == "hybrid-kde"
        assert model.shallow.input_dim == 2
        expected = kde_fit(autoencoder.encode(data), (0.5, 1.0), folds=3).score(autoencoder.encode(data[:5]))
        np.testing.assert_allclose(model.score(data[:5]), expected)

    def hybrid_applyはテストデータのスコアを返す(autoencoder: Autoencoder, rng: np.random.Generator):
        spec = ShallowSpec(ShallowKind.IFOREST, n_trees=5, subsample=16)

        scores = hybrid_apply(autoencoder, spec, rng.normal(size=(30, 4)), rng.normal(size=(9, 4)))

        assert scores.shape == (9,)
        assert ((scores > 0) & (scores <= 1)).all()

    def 浅い手法の入力次元が符号と違えばShapeError(autoencoder: Autoencoder, rng: np.random.Generator):
        with pytest.raises(ShapeError):
            HybridModel(autoencoder, KdeModel(rng.normal(size=(5, 3)), 1.0))
