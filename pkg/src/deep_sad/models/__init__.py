"""自己符号化器・超球面モデル・教師あり分類器と学習。"""

from deep_sad.models.autoencoder import Autoencoder, pretrain_autoencoder
from deep_sad.models.deep_sad import DeepSadModel, HypersphereKind, init_center
from deep_sad.models.entropy import CovarianceAssumption, EntropyEstimate, latent_entropy
from deep_sad.models.loop import TrainingHistory, TrainResult
from deep_sad.models.losses import (
    SoftBoundaryState,
    deep_sad_loss,
    deep_svdd_loss,
    update_radius,
)
from deep_sad.models.supervised import SupervisedClassifier
from deep_sad.models.trainer import CenterSource, Objective, ObjectiveKind, train

__all__ = [
    "Autoencoder",
    "CenterSource",
    "CovarianceAssumption",
    "DeepSadModel",
    "EntropyEstimate",
    "HypersphereKind",
    "Objective",
    "ObjectiveKind",
    "SoftBoundaryState",
    "SupervisedClassifier",
    "TrainResult",
    "TrainingHistory",
    "deep_sad_loss",
    "deep_svdd_loss",
    "init_center",
    "latent_entropy",
    "pretrain_autoencoder",
    "train",
    "update_radius",
]
