"""半教師あり分割からの学習（Deep SAD / Deep SVDD / 教師あり分類器）。"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from deep_sad.config.settings import TrainingConfig
from deep_sad.data.scenarios import SemiSupervisedSplit
from deep_sad.exceptions import InvalidArgumentError, ShapeError
from deep_sad.models.autoencoder import Autoencoder
from deep_sad.models.deep_sad import DeepSadModel, HypersphereKind, init_center
from deep_sad.models.loop import TrainResult, run_schedule, training_generators
from deep_sad.models.losses import (
    LABELED_ANOMALY,
    LABELED_NORMAL,
    SoftBoundaryState,
    bce_loss,
    deep_sad_loss,
    one_class_loss,
    soft_boundary_loss,
    squared_distances,
    update_radius,
    weight_decay_term,
)
from deep_sad.models.supervised import SupervisedClassifier
from deep_sad.nn.layers import FloatArray
from deep_sad.nn.network import Mode, Network
from deep_sad.nn.spec import LayerSpec, classifier_specs

logger = logging.getLogger(__name__)


class ObjectiveKind(StrEnum):
    """学習目的の種類。"""

    DEEP_SAD = "deep-sad"
    ONE_CLASS = "one-class"
    SOFT_BOUNDARY = "soft-boundary"
    SUPERVISED = "supervised"


class CenterSource(StrEnum):
    """中心 c の初期化に使う行。"""

    UNION = "union"
    LABELED_NORMAL = "labeled-normal"


@dataclass(frozen=True)
class Objective:
    """学習目的とそのハイパーパラメータ。"""

    kind: ObjectiveKind
    eta: float = 1.0
    nu: float = 0.1

    def __post_init__(self) -> None:
        if self.eta <= 0:
            raise InvalidArgumentError(f"η は正である必要があります: {self.eta}")
        if not 0.0 < self.nu <= 1.0:
            raise InvalidArgumentError(f"ν は (0, 1] の範囲である必要があります: {self.nu}")

    @classmethod
    def deep_sad(cls, eta: float = 1.0) -> "Objective":
        return cls(ObjectiveKind.DEEP_SAD, eta=eta)

    @classmethod
    def one_class(cls) -> "Objective":
        return cls(ObjectiveKind.ONE_CLASS)

    @classmethod
    def soft_boundary(cls, nu: float = 0.1) -> "Objective":
        return cls(ObjectiveKind.SOFT_BOUNDARY, nu=nu)

    @classmethod
    def supervised(cls) -> "Objective":
        return cls(ObjectiveKind.SUPERVISED)

    @property
    def uses_labels(self) -> bool:
        return self.kind in (ObjectiveKind.DEEP_SAD, ObjectiveKind.SUPERVISED)


def train(
    split: SemiSupervisedSplit,
    arch: Sequence[LayerSpec],
    cfg: TrainingConfig,
    objective: Objective,
    pretrained: Autoencoder | None = None,
    weight_decay: float = 1e-6,
    inverse_eps: float = 1e-6,
    center_source: CenterSource = CenterSource.UNION,
) -> TrainResult[DeepSadModel] | TrainResult[SupervisedClassifier]:
    """半教師あり分割でモデルを学習する。

    超球面の目的では、事前学習済みエンコーダ（なければ Glorot 初期化）から始め、
    最初のエポックの前に中心 c を固定する。one-class と soft-boundary はラベルを使わず、
    全学習行をラベルなしとして扱う。教師あり分類器はラベルなし行を正常 (+1) とみなす。

    Args:
    ----
        split: 学習データ
        arch: φ の層仕様
        cfg: 学習設定
        objective: 学習目的
        pretrained: 事前学習済み自己符号化器。エンコーダは arch と一致すること
        weight_decay: 重み減衰 λ
        inverse_eps: 逆数項の分母に足す値
        center_source: 中心に使う行（既定はラベルなしとラベル付き正常の和集合）

    Returns:
    -------
        学習済みモデルと損失履歴

    Raises:
    ------
        InvalidArgumentError: 学習に使える行がない場合
        ShapeError: 構造・事前学習モデル・データの次元が一致しない場合
        TrainingError: 損失が非有限になった場合

    """
    arch = list(arch)
    if not arch:
        raise InvalidArgumentError("φ の層仕様が空です")
    if arch[0].fan_in != split.input_dim:
        raise ShapeError(f"データの次元 {split.input_dim} が構造の入力次元 {arch[0].fan_in} と一致しません")
    if pretrained is not None and pretrained.encoder.specs() != arch:
        raise ShapeError("事前学習済みエンコーダの構造が φ の構造と一致しません")

    x, semi = split.training_matrix()
    if x.shape[0] == 0:
        raise InvalidArgumentError("学習に使える行がありません")
    if not objective.uses_labels:
        semi = np.zeros_like(semi)

    init_rng, shuffle_rng = training_generators(cfg.seed)
    logger.info(
        "%s の学習を開始: ラベルなし %d 行, ラベル付き %d 行",
        objective.kind,
        split.n_unlabeled,
        split.n_labeled,
    )

    if objective.kind == ObjectiveKind.SUPERVISED:
        if pretrained is not None:
            logger.warning("教師あり分類器は Glorot 初期化から学習するため事前学習モデルを使いません")
        return _train_supervised(x, semi, arch, cfg, weight_decay, init_rng, shuffle_rng)

    phi = pretrained.encoder.copy() if pretrained is not None else Network.from_specs(arch, init_rng)
    center = init_center(phi, _center_rows(x, semi, center_source))
    return _train_hypersphere(
        phi, center, x, semi, cfg, objective, weight_decay, inverse_eps, shuffle_rng
    )


def _center_rows(x: FloatArray, semi: np.ndarray, source: CenterSource) -> FloatArray:
    if source == CenterSource.LABELED_NORMAL:
        normals = x[semi == LABELED_NORMAL]
        if normals.shape[0] > 0:
            return normals
        logger.info("ラベル付き正常がないため、中心はラベルなし行から計算します")
    return x[semi != LABELED_ANOMALY]


def _train_hypersphere(
    phi: Network,
    center: FloatArray,
    x: FloatArray,
    semi: np.ndarray,
    cfg: TrainingConfig,
    objective: Objective,
    weight_decay: float,
    inverse_eps: float,
    shuffle_rng: np.random.Generator,
) -> TrainResult[DeepSadModel]:
    soft = SoftBoundaryState(nu=objective.nu) if objective.kind == ObjectiveKind.SOFT_BOUNDARY else None
    last_dist_sq: list[FloatArray] = []

    def step(index: np.ndarray) -> tuple[float, list[FloatArray]]:
        outputs, tape = phi.forward(x[index], Mode.TRAINING)
        weights = phi.weight_matrices()
        if objective.kind == ObjectiveKind.DEEP_SAD:
            loss, grad = deep_sad_loss(
                outputs, semi[index], center, objective.eta, inverse_eps, weights, weight_decay
            )
        elif soft is not None:
            loss, grad = soft_boundary_loss(outputs, center, soft, weights, weight_decay)
            last_dist_sq[:] = [squared_distances(outputs, center)]
        else:
            loss, grad = one_class_loss(outputs, center, weights, weight_decay)
        return loss, phi.backward(tape, grad)

    def after_step(index: np.ndarray) -> None:
        if soft is not None and last_dist_sq:
            soft.radius_sq = update_radius(last_dist_sq[0], soft.nu)

    history = run_schedule(
        [phi],
        step,
        x.shape[0],
        cfg,
        weight_decay,
        shuffle_rng,
        after_step=after_step,
        label=str(objective.kind),
    )
    model = DeepSadModel(
        phi=phi,
        center=center,
        eta=objective.eta,
        weight_decay=weight_decay,
        inverse_eps=inverse_eps,
        objective=HypersphereKind(str(objective.kind)),
        soft_boundary=soft,
    )
    return TrainResult(model, history)


def _train_supervised(
    x: FloatArray,
    semi: np.ndarray,
    arch: list[LayerSpec],
    cfg: TrainingConfig,
    weight_decay: float,
    init_rng: np.random.Generator,
    shuffle_rng: np.random.Generator,
) -> TrainResult[SupervisedClassifier]:
    net = Network.from_specs(classifier_specs(arch), init_rng)
    targets = (semi != LABELED_ANOMALY).astype(np.float64)

    def step(index: np.ndarray) -> tuple[float, list[FloatArray]]:
        logits, tape = net.forward(x[index], Mode.TRAINING)
        loss, grad = bce_loss(logits, targets[index])
        loss += weight_decay_term(net.weight_matrices(), weight_decay)
        return loss, net.backward(tape, grad)

    history = run_schedule(
        [net], step, x.shape[0], cfg, weight_decay, shuffle_rng, label="supervised"
    )
    return TrainResult(SupervisedClassifier(net, weight_decay), history)
