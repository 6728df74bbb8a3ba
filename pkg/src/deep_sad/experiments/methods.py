"""手法IDから検知器を学習する。"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum

from deep_sad.baselines.hybrid import ShallowKind, ShallowSpec, hybrid_fit
from deep_sad.config.settings import AppSettings, TrainingConfig
from deep_sad.data.scenarios import SemiSupervisedSplit
from deep_sad.exceptions import InvalidArgumentError
from deep_sad.models.autoencoder import Autoencoder, pretrain_autoencoder
from deep_sad.models.base import Detector
from deep_sad.models.loop import TrainingHistory, TrainResult
from deep_sad.models.trainer import CenterSource, Objective, train
from deep_sad.nn.spec import LayerSpec

logger = logging.getLogger(__name__)


class Method(StrEnum):
    """実験で比較する手法。"""

    DEEP_SAD = "deep-sad"
    ONE_CLASS = "one-class"
    SOFT_BOUNDARY = "soft-boundary"
    SUPERVISED = "supervised"
    AE = "ae"
    KDE = "kde"
    IFOREST = "iforest"
    HYBRID_KDE = "hybrid-kde"
    HYBRID_IFOREST = "hybrid-iforest"

    @property
    def needs_pretraining(self) -> bool:
        return self in _PRETRAINED

    @property
    def shallow_kind(self) -> ShallowKind | None:
        return _SHALLOW.get(self)


_PRETRAINED = frozenset(
    {Method.DEEP_SAD, Method.ONE_CLASS, Method.SOFT_BOUNDARY, Method.AE, Method.HYBRID_KDE, Method.HYBRID_IFOREST}
)
_SHALLOW = {
    Method.KDE: ShallowKind.KDE,
    Method.IFOREST: ShallowKind.IFOREST,
    Method.HYBRID_KDE: ShallowKind.KDE,
    Method.HYBRID_IFOREST: ShallowKind.IFOREST,
}


def parse_method(text: str) -> Method:
    """手法IDを解釈する。

    Raises
    ------
        InvalidArgumentError: 未知の手法の場合

    """
    try:
        return Method(text.strip().lower())
    except ValueError as e:
        valid = ", ".join(m.value for m in Method)
        raise InvalidArgumentError(f"未知の手法です: {text!r}（{valid} のいずれか）", e) from e


@dataclass(frozen=True)
class MethodSpec:
    """手法とその学習設定。

    Attributes
    ----------
        method: 手法
        arch: φ の層仕様（浅い手法では未使用）
        training: 学習設定（seed を含む）
        eta: Deep SAD の η
        nu: ソフト境界の ν
        weight_decay: 重み減衰 λ
        inverse_eps: 逆数項の分母に足す値
        center_source: 中心 c の初期化に使う行
        shallow: 浅い手法の設定（kde, iforest, hybrid-* のみ）

    """

    method: Method
    arch: tuple[LayerSpec, ...]
    training: TrainingConfig
    eta: float = 1.0
    nu: float = 0.1
    weight_decay: float = 1e-6
    inverse_eps: float = 1e-6
    center_source: CenterSource = CenterSource.UNION
    shallow: ShallowSpec | None = None

    @classmethod
    def from_settings(
        cls,
        method: Method | str,
        arch: Sequence[LayerSpec],
        settings: AppSettings,
        seed: int = 0,
        eta: float | None = None,
    ) -> "MethodSpec":
        """設定値から手法の設定を作る。eta を指定すると設定値を上書きする。"""
        method = Method(method)
        kind = method.shallow_kind
        return cls(
            method=method,
            arch=tuple(arch),
            training=TrainingConfig.from_settings(settings, seed),
            eta=eta if eta is not None else settings.eta,
            nu=settings.nu,
            weight_decay=settings.weight_decay,
            inverse_eps=settings.inverse_eps,
            shallow=ShallowSpec.from_settings(kind, settings, seed) if kind is not None else None,
        )

    def objective(self) -> Objective:
        if self.method == Method.DEEP_SAD:
            return Objective.deep_sad(self.eta)
        if self.method == Method.ONE_CLASS:
            return Objective.one_class()
        if self.method == Method.SOFT_BOUNDARY:
            return Objective.soft_boundary(self.nu)
        if self.method == Method.SUPERVISED:
            return Objective.supervised()
        raise InvalidArgumentError(f"{self.method} はネットワークの学習目的を持ちません")


def fit_detector(
    spec: MethodSpec,
    split: SemiSupervisedSplit,
    pretrained: Autoencoder | None = None,
) -> TrainResult[Detector]:
    """手法に応じて検知器を学習し、損失履歴（浅い手法では空）とともに返す。

    ラベルを使うのは deep-sad と supervised だけで、他の手法は全学習行をラベルなしとして扱う。
    事前学習が必要な手法で pretrained が与えられなければ、その場で自己符号化器を学習する。
    """
    x, _ = split.training_matrix()
    history = TrainingHistory()
    if spec.method.needs_pretraining and pretrained is None:
        pretraining = pretrain_autoencoder(x, spec.arch, spec.training, spec.weight_decay)
        pretrained, history = pretraining.model, pretraining.history

    if spec.method == Method.AE:
        assert pretrained is not None
        return TrainResult(pretrained, history)
    if spec.method in (Method.KDE, Method.IFOREST):
        assert spec.shallow is not None
        return TrainResult(spec.shallow.fit(x), history)
    if spec.method in (Method.HYBRID_KDE, Method.HYBRID_IFOREST):
        assert spec.shallow is not None and pretrained is not None
        return TrainResult(hybrid_fit(pretrained, spec.shallow, x), history)

    result = train(
        split,
        spec.arch,
        spec.training,
        spec.objective(),
        pretrained=pretrained if spec.method != Method.SUPERVISED else None,
        weight_decay=spec.weight_decay,
        inverse_eps=spec.inverse_eps,
        center_source=spec.center_source,
    )
    return TrainResult(result.model, result.history)
