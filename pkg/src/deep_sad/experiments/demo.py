"""2次元トイデータでの決定面（格子点スコア）の出力。"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from deep_sad.config.settings import AppSettings, TrainingConfig
from deep_sad.data.toy import ToyData, grid_points, make_toy
from deep_sad.eval.metrics import auc_roc
from deep_sad.models.autoencoder import pretrain_autoencoder
from deep_sad.models.deep_sad import DeepSadModel
from deep_sad.models.entropy import EntropyEstimate, class_conditional_entropy
from deep_sad.models.supervised import SupervisedClassifier
from deep_sad.models.trainer import Objective, train
from deep_sad.nn.layers import FloatArray
from deep_sad.nn.spec import ARCHITECTURE_PRESETS, LayerSpec, mlp_specs

logger = logging.getLogger(__name__)

GRID_HEADER = ("x", "y", "score_deepsad", "score_supervised")


def toy_specs(leakiness: float = 0.1) -> list[LayerSpec]:
    """トイデータ用の小さな φ（バッチ正規化なし）。"""
    hidden, rep_dim = ARCHITECTURE_PRESETS["toy"]
    return mlp_specs(2, hidden, rep_dim, leakiness=leakiness, batch_norm=False)


@dataclass
class DemoResult:
    """格子点スコアと学習済みモデル。"""

    grid: FloatArray
    deep_sad: DeepSadModel
    supervised: SupervisedClassifier
    toy: ToyData
    test_auc: dict[str, float]
    entropy: dict[str, EntropyEstimate]

    def to_text(self) -> str:
        lines = [",".join(GRID_HEADER)]
        lines.extend(",".join(repr(float(v)) for v in row) for row in self.grid)
        return "\n".join(lines) + "\n"

    def write(self, path: Path) -> None:
        path.write_text(self.to_text(), encoding="utf-8")


def run_demo(seed: int, settings: AppSettings, steps: int = 51, extent: float = 5.0) -> DemoResult:
    """トイデータで Deep SAD と教師あり分類器を学習し、格子点でのスコアを求める。"""
    toy = make_toy(seed)
    arch = toy_specs(settings.leakiness)
    cfg = TrainingConfig.from_settings(settings, seed)
    x, _ = toy.split.training_matrix()

    ae = pretrain_autoencoder(x, arch, cfg, settings.weight_decay).model
    deep_sad = train(
        toy.split, arch, cfg, Objective.deep_sad(settings.eta), ae, settings.weight_decay, settings.inverse_eps
    ).model
    supervised = train(toy.split, arch, cfg, Objective.supervised(), None, settings.weight_decay).model
    assert isinstance(deep_sad, DeepSadModel) and isinstance(supervised, SupervisedClassifier)

    points = grid_points(-extent, extent, steps)
    grid = np.column_stack([points, deep_sad.score(points), supervised.score(points)])

    assert toy.test.anomaly_labels is not None
    test_auc = {
        "deep-sad": auc_roc(deep_sad.score(toy.test.features), toy.test.anomaly_labels),
        "supervised": auc_roc(supervised.score(toy.test.features), toy.test.anomaly_labels),
    }
    entropy = class_conditional_entropy(deep_sad.latents(toy.split.labeled), toy.split.labeled_targets)
    logger.info("トイデータのテスト AUC: %s", test_auc)
    return DemoResult(grid, deep_sad, supervised, toy, test_auc, entropy)
