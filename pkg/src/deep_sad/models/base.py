"""検知器の共通インターフェースと入力整形。"""

from typing import Protocol, runtime_checkable

import numpy as np
from numpy.typing import ArrayLike

from deep_sad.exceptions import InvalidArgumentError, ShapeError
from deep_sad.nn.layers import FloatArray
from deep_sad.nn.serialization import Envelope


@runtime_checkable
class Detector(Protocol):
    """異常スコアを返す学習済みモデル。スコアが大きいほど異常。"""

    @property
    def kind(self) -> str:
        """モデルファイルに記録する種別タグ。"""
        ...

    @property
    def input_dim(self) -> int:
        """入力次元 D。"""
        ...

    def score(self, x: ArrayLike) -> FloatArray:
        """行ごとの異常スコア。"""
        ...

    def to_envelope(self) -> Envelope:
        """モデルファイルへ書き出す内容。"""
        ...


def as_batch(x: ArrayLike, input_dim: int) -> FloatArray:
    """1行または行列を (行数, input_dim) の float64 行列にする。

    Raises
    ------
        InvalidArgumentError: 行が空の場合
        ShapeError: 次元が一致しない場合

    """
    batch = np.asarray(x, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch.reshape(1, -1)
    if batch.ndim != 2:
        raise ShapeError(f"入力は1行または2次元の行列である必要があります: {batch.shape}")
    if batch.shape[0] == 0:
        raise InvalidArgumentError("入力が空です")
    if batch.shape[1] != input_dim:
        raise ShapeError(f"入力次元 {batch.shape[1]} がモデルの入力次元 {input_dim} と一致しません")
    return batch
