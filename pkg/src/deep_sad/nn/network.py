"""順序付きの層からなるネットワーク φ(·; W): R^D → R^d。"""

import copy
import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np

from deep_sad.exceptions import InvalidArgumentError, InvalidStateError, ShapeError
from deep_sad.nn.layers import (
    BatchNormScale,
    DenseLayer,
    FloatArray,
    Layer,
    LeakyRelu,
    Parameter,
)
from deep_sad.nn.spec import LayerKind, LayerSpec, validate_chain

_network_ids = itertools.count()


class Mode(StrEnum):
    """順伝播のモード。"""

    TRAINING = "training"
    INFERENCE = "inference"


@dataclass
class Tape:
    """forward が記録する中間値。backward はこれを消費する。

    Attributes
    ----------
        network_id: 記録したネットワークの識別子
        version: 記録時のパラメータ版数
        mode: 順伝播のモード
        batch_rows: バッチの行数
        caches: 層ごとのキャッシュ

    """

    network_id: int
    version: int
    mode: Mode
    batch_rows: int
    caches: list[Any] = field(default_factory=list)


def _build_layer(spec: LayerSpec, rng: np.random.Generator) -> Layer:
    if spec.kind == LayerKind.DENSE:
        return DenseLayer.initialized(spec.fan_in, spec.fan_out, rng, use_bias=spec.use_bias)
    if spec.kind == LayerKind.LEAKY_RELU:
        assert spec.leakiness is not None
        return LeakyRelu(spec.fan_in, spec.leakiness)
    return BatchNormScale(spec.fan_in)


class Network:
    """固定の逐次トポロジを持つ全結合ネットワーク。

    パラメータ更新（オプティマイザ・読み込み）のたびに version を進め、
    古い Tape による backward を検出する。
    """

    def __init__(self, layers: Sequence[Layer]):
        """ネットワークを初期化。

        Raises
        ------
            InvalidArgumentError: 層が空の場合
            ShapeError: 隣接層の次元が一致しない場合

        """
        validate_chain([layer.spec for layer in layers])
        self.layers = list(layers)
        self.version = 0
        self._id = next(_network_ids)

    @classmethod
    def from_specs(cls, specs: Sequence[LayerSpec], rng: np.random.Generator) -> "Network":
        """層仕様から Glorot 初期化したネットワークを作る。"""
        validate_chain(specs)
        return cls([_build_layer(spec, rng) for spec in specs])

    @property
    def input_dim(self) -> int:
        return self.layers[0].spec.fan_in

    @property
    def output_dim(self) -> int:
        return self.layers[-1].spec.fan_out

    def specs(self) -> list[LayerSpec]:
        """層仕様のリスト。"""
        return [layer.spec for layer in self.layers]

    def has_batchnorm(self) -> bool:
        return any(isinstance(layer, BatchNormScale) for layer in self.layers)

    def parameters(self) -> list[Parameter]:
        """宣言順のパラメータ。名前は '層番号.名前'。"""
        params = []
        for i, layer in enumerate(self.layers):
            for p in layer.parameters():
                params.append(Parameter(f"{i}.{p.name}", p.value, p.decay))
        return params

    def buffers(self) -> dict[str, FloatArray]:
        """宣言順の非学習状態。"""
        return {
            f"{i}.{name}": value
            for i, layer in enumerate(self.layers)
            for name, value in layer.buffers().items()
        }

    def weight_matrices(self) -> list[FloatArray]:
        """重み減衰 (λ/2)Σ‖W‖²_F の対象となる重み行列。"""
        return [p.value for p in self.parameters() if p.decay]

    def mark_updated(self) -> None:
        """パラメータがその場で更新されたことを記録する。"""
        self.version += 1

    def copy(self) -> "Network":
        """パラメータとバッファを複製した独立のネットワーク。"""
        clone = copy.deepcopy(self)
        clone._id = next(_network_ids)
        clone.version = 0
        return clone

    def _check_input(self, batch: FloatArray) -> FloatArray:
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim != 2:
            raise ShapeError(f"入力は2次元の行列である必要があります: {batch.shape}")
        if batch.shape[0] == 0:
            raise InvalidArgumentError("入力バッチが空です")
        if batch.shape[1] != self.input_dim:
            raise ShapeError(f"入力次元 {batch.shape[1]} がネットワークの入力次元 {self.input_dim} と一致しません")
        return batch

    def forward(self, batch: FloatArray, mode: Mode = Mode.INFERENCE) -> tuple[FloatArray, Tape]:
        """順伝播。

        Args:
        ----
            batch: (行数, input_dim) の入力
            mode: 学習モードならバッチ統計、推論モードなら移動統計を使う

        Returns:
        -------
            (出力, テープ)

        Raises:
        ------
            ShapeError: 入力次元が一致しない場合

        """
        x = self._check_input(batch)
        training = mode == Mode.TRAINING
        tape = Tape(self._id, self.version, Mode(mode), x.shape[0])
        for layer in self.layers:
            x, cache = layer.forward(x, training)
            tape.caches.append(cache)
        return x, tape

    def predict(self, batch: FloatArray) -> FloatArray:
        """推論モードの出力のみを返す。"""
        output, _ = self.forward(batch, Mode.INFERENCE)
        return output

    def prime_batchnorm(self, batch: FloatArray) -> None:
        """バッチ正規化の移動統計を、与えたデータ全体の平均・分散で置き換える。

        前段までは推論モードで伝播するため、各層の統計は確定済みの前段の下で計算される。
        """
        x = self._check_input(batch)
        for layer in self.layers:
            if isinstance(layer, BatchNormScale):
                layer.running_mean[...] = x.mean(axis=0)
                layer.running_var[...] = x.var(axis=0)
            x, _ = layer.forward(x, training=False)
        self.mark_updated()

    def backward(self, tape: Tape, grad_output: FloatArray) -> list[FloatArray]:
        """逆伝播。parameters() と同じ順のパラメータ勾配を返す。

        Raises
        ------
            InvalidStateError: テープが別ネットワーク・古い版数・推論モードのものの場合
            ShapeError: grad_output の形状が出力と一致しない場合

        """
        _, grads = self.backward_with_input(tape, grad_output)
        return grads

    def backward_with_input(
        self, tape: Tape, grad_output: FloatArray
    ) -> tuple[FloatArray, list[FloatArray]]:
        """逆伝播。（入力に関する勾配, パラメータ勾配）を返す。"""
        if tape.network_id != self._id or len(tape.caches) != len(self.layers):
            raise InvalidStateError("テープがこのネットワークの forward で記録されたものではありません")
        if tape.version != self.version:
            raise InvalidStateError("テープ記録後にパラメータが更新されています")
        if tape.mode != Mode.TRAINING:
            raise InvalidStateError("backward には学習モードの forward が必要です")
        if grad_output.shape != (tape.batch_rows, self.output_dim):
            raise ShapeError(
                f"grad_output の形状 {grad_output.shape} が出力 ({tape.batch_rows}, {self.output_dim}) と一致しません"
            )

        grads_per_layer: list[list[FloatArray]] = [[] for _ in self.layers]
        grad = grad_output
        for i in range(len(self.layers) - 1, -1, -1):
            grad, layer_grads = self.layers[i].backward(grad, tape.caches[i])
            grads_per_layer[i] = layer_grads
        return grad, [g for layer_grads in grads_per_layer for g in layer_grads]

    def get_state(self) -> dict[str, FloatArray]:
        """パラメータとバッファのスナップショット（複製）。"""
        state = {p.name: p.value.copy() for p in self.parameters()}
        state.update({name: value.copy() for name, value in self.buffers().items()})
        return state

    def set_state(self, state: dict[str, FloatArray]) -> None:
        """get_state の値をその場で書き戻す。

        Raises
        ------
            ShapeError: 名前または形状が一致しない場合

        """
        targets = {p.name: p.value for p in self.parameters()}
        targets.update(self.buffers())
        if set(targets) != set(state):
            raise ShapeError(f"状態のキーが一致しません: {sorted(set(targets) ^ set(state))}")
        for name, target in targets.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != target.shape:
                raise ShapeError(f"{name} の形状 {value.shape} が {target.shape} と一致しません")
            target[...] = value
        self.mark_updated()
