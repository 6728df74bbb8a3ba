"""超球面目的関数・再構成誤差・二値交差エントロピー。

各損失は (損失値, 出力に関する勾配) を返す。重み減衰 (λ/2)Σ‖W‖²_F は損失値に
含めるが、その勾配はオプティマイザ側で λ·W として加える。
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.typing import NDArray
from scipy.special import expit

from deep_sad.exceptions import InvalidArgumentError, ShapeError
from deep_sad.nn.layers import FloatArray

UNLABELED = 0
LABELED_NORMAL = 1
LABELED_ANOMALY = -1
_VALID_LABELS = (UNLABELED, LABELED_NORMAL, LABELED_ANOMALY)


@dataclass
class SoftBoundaryState:
    """ソフト境界 Deep SVDD の半径。

    Attributes
    ----------
        radius_sq: 半径の二乗 R²
        nu: 境界外に許す割合 ν ∈ (0, 1]

    """

    radius_sq: float = 0.0
    nu: float = 0.1

    def __post_init__(self) -> None:
        _check_nu(self.nu)
        if self.radius_sq < 0:
            raise InvalidArgumentError(f"R² は0以上である必要があります: {self.radius_sq}")


def _check_nu(nu: float) -> None:
    if not 0.0 < nu <= 1.0:
        raise InvalidArgumentError(f"ν は (0, 1] の範囲である必要があります: {nu}")


def weight_decay_term(weights: Sequence[FloatArray], weight_decay: float) -> float:
    """(λ/2) Σ ‖W‖²_F。"""
    if weight_decay == 0.0:
        return 0.0
    return 0.5 * weight_decay * sum(float(np.sum(w * w)) for w in weights)


def _check_outputs(outputs: FloatArray, center: FloatArray) -> None:
    if outputs.ndim != 2 or outputs.shape[0] < 1:
        raise ShapeError(f"出力は1行以上の2次元行列である必要があります: {outputs.shape}")
    if center.shape != (outputs.shape[1],):
        raise ShapeError(f"中心の次元 {center.shape} が出力次元 {outputs.shape[1]} と一致しません")


def squared_distances(outputs: FloatArray, center: FloatArray) -> FloatArray:
    """行ごとの ‖o − c‖²。"""
    diff = outputs - center
    return np.sum(diff * diff, axis=1)


def deep_sad_loss(
    outputs: FloatArray,
    labels: NDArray[np.integer],
    center: FloatArray,
    eta: float,
    inverse_eps: float,
    weights: Sequence[FloatArray] = (),
    weight_decay: float = 0.0,
) -> tuple[float, FloatArray]:
    """Deep SAD の損失と出力勾配。

    loss = (1/N)Σ_unlabeled ‖o−c‖² + (η/N)Σ_labeled (‖o−c‖²)^ỹ + (λ/2)Σ‖W‖²_F
    ただし ỹ=−1 の項は 1/(‖o−c‖² + inverse_eps)、N = n + m。

    Args:
    ----
        outputs: (N, d) のネットワーク出力
        labels: 行ごとのラベル（0: ラベルなし, +1: 正常, −1: 異常）
        center: 中心 c
        eta: ラベル付き項の重み η
        inverse_eps: 逆数項の分母に足す値
        weights: 重み減衰の対象行列
        weight_decay: λ

    Returns:
    -------
        (損失, 出力に関する勾配)

    Raises:
    ------
        InvalidArgumentError: 未知のラベル値、η ≤ 0、inverse_eps ≤ 0 の場合
        ShapeError: 形状が一致しない場合

    """
    _check_outputs(outputs, center)
    labels = np.asarray(labels)
    if labels.shape != (outputs.shape[0],):
        raise ShapeError(f"ラベル数 {labels.shape} が出力行数 {outputs.shape[0]} と一致しません")
    unknown = np.setdiff1d(np.unique(labels), _VALID_LABELS)
    if unknown.size:
        raise InvalidArgumentError(f"未知のラベル値があります: {unknown.tolist()}")
    if eta <= 0:
        raise InvalidArgumentError(f"η は正である必要があります: {eta}")
    if inverse_eps <= 0:
        raise InvalidArgumentError(f"inverse_eps は正である必要があります: {inverse_eps}")

    n_rows = outputs.shape[0]
    diff = outputs - center
    dist_sq = np.sum(diff * diff, axis=1)
    anomaly = labels == LABELED_ANOMALY
    coef = np.where(labels == UNLABELED, 1.0, eta)
    shifted = dist_sq + inverse_eps
    terms = np.where(anomaly, 1.0 / shifted, dist_sq)
    loss = float(np.sum(coef * terms)) / n_rows + weight_decay_term(weights, weight_decay)

    d_terms = np.where(anomaly, -1.0 / (shifted * shifted), 1.0)
    grad = (2.0 / n_rows) * (coef * d_terms)[:, None] * diff
    return loss, grad


def one_class_loss(
    outputs: FloatArray,
    center: FloatArray,
    weights: Sequence[FloatArray] = (),
    weight_decay: float = 0.0,
) -> tuple[float, FloatArray]:
    """One-Class Deep SVDD: 平均 ‖o−c‖² + 重み減衰。

    全行をラベルなしとした deep_sad_loss と同じ計算経路を通す。
    """
    labels = np.zeros(outputs.shape[0], dtype=np.int64)
    return deep_sad_loss(outputs, labels, center, 1.0, 1.0, weights, weight_decay)


def soft_boundary_loss(
    outputs: FloatArray,
    center: FloatArray,
    state: SoftBoundaryState,
    weights: Sequence[FloatArray] = (),
    weight_decay: float = 0.0,
) -> tuple[float, FloatArray]:
    """ソフト境界 Deep SVDD: R² + (1/(νN))Σ max(0, ‖o−c‖² − R²) + 重み減衰。

    勾配ステップ中 R² は固定として扱う。
    """
    _check_outputs(outputs, center)
    _check_nu(state.nu)
    n_rows = outputs.shape[0]
    diff = outputs - center
    slack = np.sum(diff * diff, axis=1) - state.radius_sq
    outside = slack > 0
    scale = 1.0 / (state.nu * n_rows)
    loss = (
        state.radius_sq
        + scale * float(np.sum(np.where(outside, slack, 0.0)))
        + weight_decay_term(weights, weight_decay)
    )
    grad = (2.0 * scale) * outside[:, None] * diff
    return loss, grad


def deep_svdd_loss(
    outputs: FloatArray,
    center: FloatArray,
    variant: SoftBoundaryState | None = None,
    weights: Sequence[FloatArray] = (),
    weight_decay: float = 0.0,
) -> tuple[float, FloatArray]:
    """Deep SVDD の損失。variant が None なら one-class、それ以外はソフト境界。"""
    if variant is None:
        return one_class_loss(outputs, center, weights, weight_decay)
    return soft_boundary_loss(outputs, center, variant, weights, weight_decay)


def update_radius(distances_sq: Sequence[float] | FloatArray, nu: float) -> float:
    """R² + (1/(νn))Σ max(0, dᵢ² − R²) を最小にする R² を返す。

    最小点が複数あるときは最小のものを返す。これは距離の (1−ν) 分位点、すなわち
    ⌈(1−ν)·n⌉ 個以上の値がそれ以下となる最小の値に等しい（個数が0なら R²=0）。

    Raises
    ------
        InvalidArgumentError: 空のリスト、または ν ∉ (0, 1] の場合

    """
    _check_nu(nu)
    values = np.sort(np.asarray(distances_sq, dtype=np.float64))
    if values.size == 0:
        raise InvalidArgumentError("距離のリストが空です")
    # ⌈(1−ν)n⌉ は浮動小数の丸めで1ずれないよう有理数で計算する（0.7 を 7/10 として扱う）
    k = math.ceil(values.size * (1 - Fraction(nu).limit_denominator(10**9)))
    if k <= 0:
        return 0.0
    return float(values[k - 1])


def mse_loss(reconstruction: FloatArray, target: FloatArray) -> tuple[float, FloatArray]:
    """全要素の平均二乗誤差と勾配。"""
    if reconstruction.shape != target.shape:
        raise ShapeError(f"再構成 {reconstruction.shape} と入力 {target.shape} の形状が一致しません")
    residual = reconstruction - target
    loss = float(np.mean(residual * residual))
    grad = (2.0 / residual.size) * residual
    return loss, grad


def bce_loss(logits: FloatArray, targets: FloatArray) -> tuple[float, FloatArray]:
    """ロジットに対する二値交差エントロピーの平均と勾配。

    Args:
    ----
        logits: (N, 1) のロジット
        targets: (N,) の目標値（1: 正常, 0: 異常）

    """
    if logits.ndim != 2 or logits.shape[1] != 1 or logits.shape[0] != targets.shape[0]:
        raise ShapeError(f"ロジット {logits.shape} と目標 {targets.shape} の形状が一致しません")
    z = logits[:, 0]
    # log(1 + e^{-z}) と log(1 + e^{z}) を安定に計算
    per_row = np.where(targets > 0.5, np.logaddexp(0.0, -z), np.logaddexp(0.0, z))
    n_rows = z.shape[0]
    loss = float(np.mean(per_row))
    grad = ((expit(z) - targets) / n_rows)[:, None]
    return loss, grad
