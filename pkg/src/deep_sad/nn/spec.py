"""層仕様とMLPアーキテクチャの構築。

ネットワーク構造は LayerSpec のリストで記述する。モデルファイルのヘッダにも
同じリストをそのまま書き出す。
"""

import logging
from collections.abc import Sequence
from enum import StrEnum

from pydantic import BaseModel, Field, model_validator

from deep_sad.exceptions import InvalidArgumentError, ShapeError

logger = logging.getLogger(__name__)

DEFAULT_LEAKINESS = 0.1


class LayerKind(StrEnum):
    """層の種類。"""

    DENSE = "dense"
    LEAKY_RELU = "leaky_relu"
    BATCHNORM = "batchnorm"


class LayerSpec(BaseModel):
    """1層分の構成。

    Attributes
    ----------
        kind: 層の種類
        fan_in: 入力次元
        fan_out: 出力次元（活性化・バッチ正規化では fan_in と等しい）
        leakiness: LeakyReLU の傾き（leaky_relu のみ）
        use_bias: バイアスの有無（dense のみ。超球面モデルでは False）

    """

    kind: LayerKind
    fan_in: int = Field(ge=1)
    fan_out: int = Field(ge=1)
    leakiness: float | None = Field(default=None, gt=0, lt=1)
    use_bias: bool = False

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_consistency(self) -> "LayerSpec":
        """種類ごとの整合性を検証。"""
        if self.kind != LayerKind.DENSE and self.fan_in != self.fan_out:
            raise ValueError(f"{self.kind} 層は fan_in と fan_out が等しい必要があります")
        if self.kind == LayerKind.LEAKY_RELU and self.leakiness is None:
            raise ValueError("leaky_relu 層には leakiness が必要です")
        if self.kind != LayerKind.DENSE and self.use_bias:
            raise ValueError(f"{self.kind} 層はバイアスを持てません")
        return self

    @classmethod
    def dense(cls, fan_in: int, fan_out: int, use_bias: bool = False) -> "LayerSpec":
        """全結合層の仕様。"""
        return cls(kind=LayerKind.DENSE, fan_in=fan_in, fan_out=fan_out, use_bias=use_bias)

    @classmethod
    def leaky_relu(cls, features: int, leakiness: float = DEFAULT_LEAKINESS) -> "LayerSpec":
        """LeakyReLU 層の仕様。"""
        return cls(
            kind=LayerKind.LEAKY_RELU,
            fan_in=features,
            fan_out=features,
            leakiness=leakiness,
        )

    @classmethod
    def batchnorm(cls, features: int) -> "LayerSpec":
        """スケールのみのバッチ正規化層の仕様。"""
        return cls(kind=LayerKind.BATCHNORM, fan_in=features, fan_out=features)


# 表形式ベンチマーク用の（隠れ層, 出力次元）
ARCHITECTURE_PRESETS: dict[str, tuple[tuple[int, ...], int]] = {
    "arrhythmia": ((128, 64), 32),
    "cardio": ((32, 16), 8),
    "satellite": ((32, 16), 8),
    "satimage-2": ((32, 16), 8),
    "shuttle": ((32, 16), 8),
    "thyroid": ((32, 16), 4),
    "mnist": ((128, 64), 32),
    "fmnist": ((128, 64), 32),
    "toy": ((16, 8), 2),
}

DEFAULT_PRESET = "cardio"


def validate_chain(specs: Sequence[LayerSpec]) -> None:
    """隣接する層の次元が連続しているか検証する。

    Raises
    ------
        InvalidArgumentError: 層が空、または dense 層を含まない場合
        ShapeError: 隣接層の次元が一致しない場合

    """
    if not specs:
        raise InvalidArgumentError("層が1つもありません")
    if not any(s.kind == LayerKind.DENSE for s in specs):
        raise InvalidArgumentError("dense 層が1つもありません")
    for i, (prev, nxt) in enumerate(zip(specs, specs[1:], strict=False)):
        if prev.fan_out != nxt.fan_in:
            raise ShapeError(
                f"層 {i} の出力次元 {prev.fan_out} と層 {i + 1} の入力次元 {nxt.fan_in} が一致しません"
            )
    last_dense = [s for s in specs if s.kind == LayerKind.DENSE][-1]
    if last_dense.fan_out != specs[-1].fan_out:
        raise ShapeError("出力次元が最後の dense 層の fan_out と一致しません")


def mlp_specs(
    input_dim: int,
    hidden: Sequence[int],
    rep_dim: int,
    leakiness: float = DEFAULT_LEAKINESS,
    batch_norm: bool = True,
    use_bias: bool = False,
) -> list[LayerSpec]:
    """dense → (batchnorm) → LeakyReLU を隠れ層ごとに積み、最後に dense を置く。

    Args:
    ----
        input_dim: 入力次元 D
        hidden: 隠れ層のユニット数
        rep_dim: 出力次元 d
        leakiness: LeakyReLU の傾き
        batch_norm: バッチ正規化を挟むかどうか
        use_bias: dense 層のバイアス有無

    Returns:
    -------
        層仕様のリスト

    """
    specs: list[LayerSpec] = []
    prev = input_dim
    for units in hidden:
        specs.append(LayerSpec.dense(prev, units, use_bias=use_bias))
        if batch_norm:
            specs.append(LayerSpec.batchnorm(units))
        specs.append(LayerSpec.leaky_relu(units, leakiness))
        prev = units
    specs.append(LayerSpec.dense(prev, rep_dim, use_bias=use_bias))
    validate_chain(specs)
    return specs


def _dense_dims(specs: Sequence[LayerSpec]) -> list[int]:
    dense = [s for s in specs if s.kind == LayerKind.DENSE]
    return [dense[0].fan_in] + [s.fan_out for s in dense]


def _leakiness_of(specs: Sequence[LayerSpec]) -> float:
    for s in specs:
        if s.kind == LayerKind.LEAKY_RELU and s.leakiness is not None:
            return s.leakiness
    return DEFAULT_LEAKINESS


def decoder_specs(encoder: Sequence[LayerSpec]) -> list[LayerSpec]:
    """エンコーダと対称なデコーダ（R^d → R^D）を構築する。"""
    validate_chain(encoder)
    dims = _dense_dims(encoder)
    reversed_dims = dims[::-1]
    batch_norm = any(s.kind == LayerKind.BATCHNORM for s in encoder)
    return mlp_specs(
        input_dim=reversed_dims[0],
        hidden=reversed_dims[1:-1],
        rep_dim=reversed_dims[-1],
        leakiness=_leakiness_of(encoder),
        batch_norm=batch_norm,
    )


def classifier_specs(encoder: Sequence[LayerSpec]) -> list[LayerSpec]:
    """φ の後に LeakyReLU とバイアス付きのスカラー出力を足した分類器構造。"""
    validate_chain(encoder)
    rep_dim = encoder[-1].fan_out
    return [
        *encoder,
        LayerSpec.leaky_relu(rep_dim, _leakiness_of(encoder)),
        LayerSpec.dense(rep_dim, 1, use_bias=True),
    ]


def preset_specs(
    name: str,
    input_dim: int,
    rep_dim: int | None = None,
    leakiness: float = DEFAULT_LEAKINESS,
) -> list[LayerSpec]:
    """プリセット名から φ の構造を作る。未知の名前は警告を出して既定プリセットを使う。"""
    if name not in ARCHITECTURE_PRESETS:
        logger.warning("未知のプリセット %r のため %s の構造を使います", name, DEFAULT_PRESET)
        name = DEFAULT_PRESET
    hidden, default_rep = ARCHITECTURE_PRESETS[name]
    return mlp_specs(input_dim, hidden, default_rep if rep_dim is None else rep_dim, leakiness=leakiness)


def parse_hidden(text: str) -> tuple[int, ...]:
    """'32,16' 形式の隠れ層指定を解釈する。

    Raises
    ------
        InvalidArgumentError: 正の整数のカンマ区切りでない場合

    """
    try:
        units = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise InvalidArgumentError(f"隠れ層の指定が不正です: {text!r}", e) from e
    if not units or any(u < 1 for u in units):
        raise InvalidArgumentError(f"隠れ層の指定が不正です: {text!r}")
    return units
