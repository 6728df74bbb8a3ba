"""全結合層・LeakyReLU・スケールのみのバッチ正規化。

各層は forward でキャッシュを返し、backward でそのキャッシュから
入力勾配とパラメータ勾配を計算する。行列は float64 の numpy 配列。
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from deep_sad.exceptions import InvalidArgumentError, ShapeError
from deep_sad.nn.spec import DEFAULT_LEAKINESS, LayerSpec

FloatArray = NDArray[np.float64]

BATCHNORM_MOMENTUM = 0.1
BATCHNORM_EPS = 1e-8


@dataclass
class Parameter:
    """学習対象のパラメータ配列。

    Attributes
    ----------
        name: 宣言順で一意な名前（例: "0.weight"）
        value: 値。オプティマイザがその場で更新する
        decay: 重み減衰の対象かどうか

    """

    name: str
    value: FloatArray
    decay: bool = True


def glorot_init(fan_in: int, fan_out: int, rng: np.random.Generator) -> FloatArray:
    """一様 Glorot 初期化で (fan_out, fan_in) の重み行列を作る。

    Raises
    ------
        InvalidArgumentError: fan_in または fan_out が1未満の場合

    """
    if fan_in < 1 or fan_out < 1:
        raise InvalidArgumentError(f"fan_in/fan_out は1以上である必要があります: {fan_in}, {fan_out}")
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


class Layer(ABC):
    """層の抽象基底クラス。"""

    @property
    @abstractmethod
    def spec(self) -> LayerSpec:
        """この層の構成。"""

    @abstractmethod
    def forward(self, x: FloatArray, training: bool) -> tuple[FloatArray, Any]:
        """順伝播。出力と backward 用キャッシュを返す。"""

    @abstractmethod
    def backward(self, grad: FloatArray, cache: Any) -> tuple[FloatArray, list[FloatArray]]:
        """逆伝播。入力勾配と parameters() 順のパラメータ勾配を返す。"""

    def parameters(self) -> list[Parameter]:
        """学習対象パラメータ。"""
        return []

    def buffers(self) -> dict[str, FloatArray]:
        """学習対象外の状態（バッチ正規化の移動統計など）。"""
        return {}


class DenseLayer(Layer):
    """全結合層 y = x Wᵀ (+ b)。"""

    def __init__(self, weights: FloatArray, bias: FloatArray | None = None):
        """全結合層を初期化。

        Args:
        ----
            weights: (fan_out, fan_in) の重み
            bias: (fan_out,) のバイアス。None ならバイアスなし

        """
        if weights.ndim != 2:
            raise ShapeError(f"重みは2次元である必要があります: {weights.shape}")
        if bias is not None and bias.shape != (weights.shape[0],):
            raise ShapeError(f"バイアスの形状 {bias.shape} が重み {weights.shape} と一致しません")
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = None if bias is None else np.asarray(bias, dtype=np.float64)

    @classmethod
    def initialized(
        cls, fan_in: int, fan_out: int, rng: np.random.Generator, use_bias: bool = False
    ) -> "DenseLayer":
        """Glorot 初期化済みの層を作る。バイアスは0で初期化する。"""
        bias = np.zeros(fan_out) if use_bias else None
        return cls(glorot_init(fan_in, fan_out, rng), bias)

    @property
    def use_bias(self) -> bool:
        return self.bias is not None

    @property
    def spec(self) -> LayerSpec:
        fan_out, fan_in = self.weights.shape
        return LayerSpec.dense(fan_in, fan_out, use_bias=self.use_bias)

    def forward(self, x: FloatArray, training: bool) -> tuple[FloatArray, Any]:
        y = x @ self.weights.T
        if self.bias is not None:
            y = y + self.bias
        return y, x

    def backward(self, grad: FloatArray, cache: Any) -> tuple[FloatArray, list[FloatArray]]:
        x: FloatArray = cache
        grads = [grad.T @ x]
        if self.bias is not None:
            grads.append(grad.sum(axis=0))
        return grad @ self.weights, grads

    def parameters(self) -> list[Parameter]:
        params = [Parameter("weight", self.weights, decay=True)]
        if self.bias is not None:
            params.append(Parameter("bias", self.bias, decay=False))
        return params


class LeakyRelu(Layer):
    """LeakyReLU。x=0 での微分は α とする。"""

    def __init__(self, features: int, leakiness: float = DEFAULT_LEAKINESS):
        """LeakyReLU を初期化。

        Raises
        ------
            InvalidArgumentError: α が (0, 1) にない場合

        """
        if not 0.0 < leakiness < 1.0:
            raise InvalidArgumentError(f"leakiness は (0, 1) の範囲である必要があります: {leakiness}")
        self.features = features
        self.leakiness = leakiness

    @property
    def spec(self) -> LayerSpec:
        return LayerSpec.leaky_relu(self.features, self.leakiness)

    def forward(self, x: FloatArray, training: bool) -> tuple[FloatArray, Any]:
        positive = x > 0
        return np.where(positive, x, self.leakiness * x), positive

    def backward(self, grad: FloatArray, cache: Any) -> tuple[FloatArray, list[FloatArray]]:
        positive: NDArray[np.bool_] = cache
        return np.where(positive, grad, self.leakiness * grad), []


class BatchNormScale(Layer):
    """シフト（バイアス）を持たず、スケール γ のみ学習するバッチ正規化。

    学習モードではバッチの平均・分散（標本数で割る分散）で正規化し、
    移動統計を momentum で更新する。推論モードでは移動統計を使う。
    """

    def __init__(
        self,
        features: int,
        scale: FloatArray | None = None,
        running_mean: FloatArray | None = None,
        running_var: FloatArray | None = None,
        momentum: float = BATCHNORM_MOMENTUM,
        numeric_eps: float = BATCHNORM_EPS,
    ):
        """バッチ正規化層を初期化。

        Raises
        ------
            InvalidArgumentError: momentum が (0, 1] にない場合

        """
        if not 0.0 < momentum <= 1.0:
            raise InvalidArgumentError(f"momentum は (0, 1] の範囲である必要があります: {momentum}")
        self.features = features
        self.scale = np.ones(features) if scale is None else np.asarray(scale, dtype=np.float64)
        self.running_mean = (
            np.zeros(features) if running_mean is None else np.asarray(running_mean, dtype=np.float64)
        )
        self.running_var = (
            np.ones(features) if running_var is None else np.asarray(running_var, dtype=np.float64)
        )
        self.momentum = momentum
        self.numeric_eps = numeric_eps

    @property
    def spec(self) -> LayerSpec:
        return LayerSpec.batchnorm(self.features)

    def forward(self, x: FloatArray, training: bool) -> tuple[FloatArray, Any]:
        if not training:
            normalized = (x - self.running_mean) / np.sqrt(self.running_var + self.numeric_eps)
            return self.scale * normalized, None

        if x.shape[0] < 2:
            raise InvalidArgumentError("学習モードのバッチ正規化にはバッチサイズ2以上が必要です")
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + self.numeric_eps)
        normalized = (x - mean) * inv_std

        # 移動統計の更新はその場で行う（配列の同一性を保つ）
        self.running_mean *= 1.0 - self.momentum
        self.running_mean += self.momentum * mean
        self.running_var *= 1.0 - self.momentum
        self.running_var += self.momentum * var
        return self.scale * normalized, (normalized, inv_std)

    def backward(self, grad: FloatArray, cache: Any) -> tuple[FloatArray, list[FloatArray]]:
        normalized, inv_std = cache
        n = grad.shape[0]
        grad_scale = np.sum(grad * normalized, axis=0)
        grad_normalized = grad * self.scale
        grad_input = (inv_std / n) * (
            n * grad_normalized
            - grad_normalized.sum(axis=0)
            - normalized * np.sum(grad_normalized * normalized, axis=0)
        )
        return grad_input, [grad_scale]

    def parameters(self) -> list[Parameter]:
        return [Parameter("scale", self.scale, decay=False)]

    def buffers(self) -> dict[str, FloatArray]:
        return {"running_mean": self.running_mean, "running_var": self.running_var}
