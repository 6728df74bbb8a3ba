"""超球面モデル（Deep SAD / Deep SVDD）と中心の初期化。"""

from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike

from deep_sad.exceptions import InvalidArgumentError, ModelFileError, ShapeError
from deep_sad.models.base import as_batch
from deep_sad.models.losses import SoftBoundaryState
from deep_sad.nn.layers import FloatArray
from deep_sad.nn.network import Network
from deep_sad.nn.serialization import Envelope


class HypersphereKind(StrEnum):
    """超球面モデルの学習目的。"""

    DEEP_SAD = "deep-sad"
    ONE_CLASS = "one-class"
    SOFT_BOUNDARY = "soft-boundary"


def init_center(phi: Network, data: ArrayLike) -> FloatArray:
    """推論モードの φ(x) の次元ごとの平均を中心 c とする。

    バッチ正規化を含む場合は、先に data 全体で移動統計を確定させてから推論する。
    data にはラベル付き異常を含めないこと。

    Raises
    ------
        InvalidArgumentError: data が空の場合
        ShapeError: 次元が一致しない場合

    """
    batch = np.asarray(data, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise InvalidArgumentError(f"中心の初期化に使えるデータがありません: {batch.shape}")
    if phi.has_batchnorm():
        phi.prime_batchnorm(batch)
    return np.asarray(phi.predict(batch).mean(axis=0), dtype=np.float64)


@dataclass
class DeepSadModel:
    """学習済みネットワーク φ と固定中心 c。

    Attributes
    ----------
        phi: R^D → R^d のネットワーク（バイアスなし）
        center: 中心 c ∈ R^d
        eta: ラベル付き項の重み η
        weight_decay: 重み減衰 λ
        inverse_eps: 逆数項の分母に足した値
        objective: 学習目的
        soft_boundary: ソフト境界の半径（soft-boundary のみ）

    """

    phi: Network
    center: FloatArray
    eta: float = 1.0
    weight_decay: float = 1e-6
    inverse_eps: float = 1e-6
    objective: HypersphereKind = HypersphereKind.DEEP_SAD
    soft_boundary: SoftBoundaryState | None = None

    def __post_init__(self) -> None:
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.center.shape != (self.phi.output_dim,):
            raise ShapeError(
                f"中心の次元 {self.center.shape} が出力次元 {self.phi.output_dim} と一致しません"
            )
        if self.eta <= 0:
            raise InvalidArgumentError(f"η は正である必要があります: {self.eta}")
        if self.weight_decay < 0:
            raise InvalidArgumentError(f"λ は0以上である必要があります: {self.weight_decay}")
        if self.inverse_eps <= 0:
            raise InvalidArgumentError(f"inverse_eps は正である必要があります: {self.inverse_eps}")
        self.objective = HypersphereKind(self.objective)
        if (self.objective == HypersphereKind.SOFT_BOUNDARY) != (self.soft_boundary is not None):
            raise InvalidArgumentError("ソフト境界の状態は soft-boundary のときだけ必要です")

    @property
    def kind(self) -> str:
        return str(self.objective)

    @property
    def input_dim(self) -> int:
        return self.phi.input_dim

    def latents(self, x: ArrayLike) -> FloatArray:
        """推論モードの φ(x)。"""
        return self.phi.predict(as_batch(x, self.input_dim))

    def score(self, x: ArrayLike) -> FloatArray:
        """s(x) = ‖φ(x) − c‖（行ごと）。"""
        diff = self.latents(x) - self.center
        # 成分の二乗がアンダーフローしないよう hypot で畳み込む
        return np.hypot.reduce(diff, axis=1)

    def to_envelope(self) -> Envelope:
        metadata: dict[str, object] = {
            "eta": self.eta,
            "weight_decay": self.weight_decay,
            "inverse_eps": self.inverse_eps,
        }
        if self.soft_boundary is not None:
            metadata["radius_sq"] = self.soft_boundary.radius_sq
            metadata["nu"] = self.soft_boundary.nu
        return Envelope(self.kind, {"phi": self.phi}, {"center": self.center}, metadata)

    @classmethod
    def from_envelope(cls, envelope: Envelope) -> "DeepSadModel":
        try:
            meta = envelope.metadata
            soft = None
            if envelope.kind == HypersphereKind.SOFT_BOUNDARY:
                soft = SoftBoundaryState(radius_sq=float(meta["radius_sq"]), nu=float(meta["nu"]))
            return cls(
                phi=envelope.networks["phi"],
                center=envelope.arrays["center"],
                eta=float(meta["eta"]),
                weight_decay=float(meta["weight_decay"]),
                inverse_eps=float(meta["inverse_eps"]),
                objective=HypersphereKind(envelope.kind),
                soft_boundary=soft,
            )
        except (KeyError, ValueError) as e:
            raise ModelFileError(f"超球面モデルの内容が不足しています: {e}", e) from e
