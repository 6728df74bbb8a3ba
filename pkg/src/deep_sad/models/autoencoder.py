"""自己符号化器の事前学習と再構成誤差スコア。"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from numpy.typing import ArrayLike

from deep_sad.config.settings import TrainingConfig
from deep_sad.exceptions import InvalidArgumentError, ModelFileError, ShapeError
from deep_sad.models.base import as_batch
from deep_sad.models.loop import TrainResult, run_schedule, training_generators
from deep_sad.models.losses import mse_loss, weight_decay_term
from deep_sad.nn.layers import FloatArray
from deep_sad.nn.network import Mode, Network
from deep_sad.nn.serialization import Envelope
from deep_sad.nn.spec import LayerSpec, decoder_specs

logger = logging.getLogger(__name__)


@dataclass
class Autoencoder:
    """エンコーダ φ と対称なデコーダの組。

    Attributes
    ----------
        encoder: R^D → R^d
        decoder: R^d → R^D

    """

    encoder: Network
    decoder: Network

    kind: ClassVar[str] = "autoencoder"

    def __post_init__(self) -> None:
        if self.decoder.input_dim != self.encoder.output_dim:
            raise ShapeError(
                f"デコーダの入力次元 {self.decoder.input_dim} が符号の次元 {self.encoder.output_dim} と一致しません"
            )
        if self.decoder.output_dim != self.encoder.input_dim:
            raise ShapeError(
                f"デコーダの出力次元 {self.decoder.output_dim} が入力次元 {self.encoder.input_dim} と一致しません"
            )

    @classmethod
    def initialized(cls, encoder_specs: Sequence[LayerSpec], rng: np.random.Generator) -> "Autoencoder":
        """Glorot 初期化したエンコーダと対称デコーダを作る。"""
        encoder = Network.from_specs(encoder_specs, rng)
        decoder = Network.from_specs(decoder_specs(encoder_specs), rng)
        return cls(encoder, decoder)

    @property
    def input_dim(self) -> int:
        return self.encoder.input_dim

    def encode(self, x: ArrayLike) -> FloatArray:
        """推論モードの符号。"""
        return self.encoder.predict(as_batch(x, self.input_dim))

    def reconstruct(self, x: ArrayLike) -> FloatArray:
        return self.decoder.predict(self.encode(x))

    def score(self, x: ArrayLike) -> FloatArray:
        """行ごとの再構成平均二乗誤差。"""
        batch = as_batch(x, self.input_dim)
        residual = self.decoder.predict(self.encoder.predict(batch)) - batch
        return np.mean(residual * residual, axis=1)

    def to_envelope(self) -> Envelope:
        return Envelope(self.kind, {"encoder": self.encoder, "decoder": self.decoder})

    @classmethod
    def from_envelope(cls, envelope: Envelope) -> "Autoencoder":
        try:
            return cls(envelope.networks["encoder"], envelope.networks["decoder"])
        except KeyError as e:
            raise ModelFileError(f"自己符号化器のネットワークがありません: {e}") from e


def pretrain_autoencoder(
    data: ArrayLike,
    arch: Sequence[LayerSpec],
    cfg: TrainingConfig,
    weight_decay: float = 0.0,
) -> TrainResult[Autoencoder]:
    """再構成平均二乗誤差で自己符号化器を学習する。

    Args:
    ----
        data: (N, D) の学習データ（ラベルは使わない）
        arch: エンコーダの層仕様。デコーダは対称に構築する
        cfg: 学習設定。合計0エポックなら初期化直後のモデルを返す
        weight_decay: 重み減衰 λ

    Returns:
    -------
        学習済み自己符号化器と損失履歴

    Raises:
    ------
        InvalidArgumentError: データが空の場合
        ShapeError: データの次元が構造と一致しない場合
        TrainingError: 損失が非有限になった場合

    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InvalidArgumentError(f"事前学習データが空か2次元ではありません: {x.shape}")
    init_rng, shuffle_rng = training_generators(cfg.seed)
    ae = Autoencoder.initialized(arch, init_rng)
    if x.shape[1] != ae.input_dim:
        raise ShapeError(f"データの次元 {x.shape[1]} が構造の入力次元 {ae.input_dim} と一致しません")

    def step(index: np.ndarray) -> tuple[float, list[FloatArray]]:
        batch = x[index]
        codes, enc_tape = ae.encoder.forward(batch, Mode.TRAINING)
        recon, dec_tape = ae.decoder.forward(codes, Mode.TRAINING)
        loss, grad_recon = mse_loss(recon, batch)
        loss += weight_decay_term(
            ae.encoder.weight_matrices() + ae.decoder.weight_matrices(), weight_decay
        )
        grad_codes, dec_grads = ae.decoder.backward_with_input(dec_tape, grad_recon)
        enc_grads = ae.encoder.backward(enc_tape, grad_codes)
        return loss, enc_grads + dec_grads

    logger.info("自己符号化器の事前学習を開始: %d 行, %d 次元", x.shape[0], x.shape[1])
    history = run_schedule(
        [ae.encoder, ae.decoder],
        step,
        x.shape[0],
        cfg,
        weight_decay,
        shuffle_rng,
        label="pretrain",
    )
    return TrainResult(ae, history)
