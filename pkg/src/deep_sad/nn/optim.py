"""Adam オプティマイザ（L2 重み減衰を勾配に加える結合型）。"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from deep_sad.exceptions import InvalidArgumentError, NumericError, ShapeError
from deep_sad.nn.layers import FloatArray, Parameter


@dataclass
class AdamState:
    """Adam のモーメントとステップ数。

    Attributes
    ----------
        step_count: 実行済みステップ数
        first_moment: パラメータごとの一次モーメント
        second_moment: パラメータごとの二次モーメント
        beta1: 一次モーメントの減衰率
        beta2: 二次モーメントの減衰率
        numeric_eps: 分母の安定化項

    """

    step_count: int = 0
    first_moment: list[FloatArray] = field(default_factory=list)
    second_moment: list[FloatArray] = field(default_factory=list)
    beta1: float = 0.9
    beta2: float = 0.999
    numeric_eps: float = 1e-8

    @classmethod
    def for_parameters(cls, params: Sequence[Parameter]) -> "AdamState":
        """パラメータと同形状のゼロモーメントで初期化。"""
        return cls(
            first_moment=[np.zeros_like(p.value) for p in params],
            second_moment=[np.zeros_like(p.value) for p in params],
        )


def adam_step(
    params: Sequence[Parameter],
    grads: Sequence[FloatArray],
    state: AdamState,
    lr: float,
    weight_decay: float = 0.0,
) -> AdamState:
    """Adam の1ステップをその場で適用する。

    decay=True のパラメータには実効勾配 grad + λ·param を使う。

    Args:
    ----
        params: 更新対象のパラメータ（値はその場で更新される）
        grads: params と同順・同形状の勾配
        state: Adam の状態（その場で更新される）
        lr: 学習率
        weight_decay: L2 重み減衰係数 λ

    Returns:
    -------
        更新後の状態（引数と同一オブジェクト）

    Raises:
    ------
        InvalidArgumentError: lr ≤ 0 または λ < 0 の場合
        ShapeError: パラメータ・勾配・モーメントの形状が一致しない場合
        NumericError: 勾配に非有限値が含まれる場合

    """
    if lr <= 0:
        raise InvalidArgumentError(f"学習率は正である必要があります: {lr}")
    if weight_decay < 0:
        raise InvalidArgumentError(f"重み減衰は0以上である必要があります: {weight_decay}")
    if not state.first_moment:
        state.first_moment = [np.zeros_like(p.value) for p in params]
        state.second_moment = [np.zeros_like(p.value) for p in params]
    if not (len(params) == len(grads) == len(state.first_moment) == len(state.second_moment)):
        raise ShapeError("パラメータ・勾配・モーメントの数が一致しません")

    for param, grad in zip(params, grads, strict=True):
        if grad.shape != param.value.shape:
            raise ShapeError(f"{param.name} の勾配形状 {grad.shape} がパラメータ {param.value.shape} と一致しません")
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"パラメータ {param.name} の勾配に非有限値があります", parameter=param.name)

    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    for param, grad, m, v in zip(params, grads, state.first_moment, state.second_moment, strict=True):
        effective = grad + weight_decay * param.value if param.decay else grad
        m *= state.beta1
        m += (1.0 - state.beta1) * effective
        v *= state.beta2
        v += (1.0 - state.beta2) * effective**2
        step = lr * (m / correction1) / (np.sqrt(v / correction2) + state.numeric_eps)
        np.subtract(param.value, step, out=param.value)
    return state


def global_grad_norm(grads: Sequence[FloatArray]) -> float:
    """全勾配を連結したユークリッドノルム。"""
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads))


def clip_grads(grads: Sequence[FloatArray], max_norm: float) -> list[FloatArray]:
    """全体ノルムが max_norm を超える場合に一律に縮小する。"""
    norm = global_grad_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return list(grads)
    factor = max_norm / norm
    return [g * factor for g in grads]
