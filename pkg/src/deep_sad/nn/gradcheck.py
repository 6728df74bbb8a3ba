"""中心差分による勾配検証。"""

import logging
from collections.abc import Callable

import numpy as np

from deep_sad.exceptions import InvalidArgumentError, NumericError
from deep_sad.nn.layers import FloatArray
from deep_sad.nn.network import Mode, Network

logger = logging.getLogger(__name__)

LossFn = Callable[[FloatArray], tuple[float, FloatArray]]


def _loss_at(net: Network, loss_fn: LossFn, batch: FloatArray) -> float:
    output, _ = net.forward(batch, Mode.TRAINING)
    loss, _ = loss_fn(output)
    if not np.isfinite(loss):
        raise NumericError(f"損失が非有限です: {loss}")
    return float(loss)


def gradient_check(
    net: Network,
    loss_fn: LossFn,
    batch: FloatArray,
    fd_eps: float = 1e-6,
    abs_floor: float = 1e-8,
) -> float:
    """backward の勾配を中心差分 (L(θ+ε) − L(θ−ε)) / 2ε と比較する。

    相対誤差はパラメータ配列ごとに ‖解析 − 数値‖ / max(‖数値‖, abs_floor) で測り、
    その最大値を返す。バッチ正規化の移動統計は検証後に元へ戻す。

    Args:
    ----
        net: 検証対象のネットワーク
        loss_fn: 出力から (損失, 出力勾配) を返す関数
        batch: 入力バッチ
        fd_eps: 差分の刻み幅
        abs_floor: 相対誤差の分母の下限

    Returns:
    -------
        最大相対誤差

    Raises:
    ------
        InvalidArgumentError: fd_eps ≤ 0 の場合
        NumericError: 損失が非有限の場合

    """
    if fd_eps <= 0:
        raise InvalidArgumentError(f"fd_eps は正である必要があります: {fd_eps}")
    batch = np.asarray(batch, dtype=np.float64)
    saved_buffers = {name: value.copy() for name, value in net.buffers().items()}

    try:
        output, tape = net.forward(batch, Mode.TRAINING)
        loss, grad_output = loss_fn(output)
        if not np.isfinite(loss):
            raise NumericError(f"損失が非有限です: {loss}")
        analytic = net.backward(tape, grad_output)

        worst = 0.0
        for param, grad in zip(net.parameters(), analytic, strict=True):
            numeric = np.zeros_like(param.value)
            for index in np.ndindex(param.value.shape):
                original = param.value[index]
                param.value[index] = original + fd_eps
                loss_plus = _loss_at(net, loss_fn, batch)
                param.value[index] = original - fd_eps
                loss_minus = _loss_at(net, loss_fn, batch)
                param.value[index] = original
                numeric[index] = (loss_plus - loss_minus) / (2.0 * fd_eps)

            error = float(np.linalg.norm(grad - numeric)) / max(
                float(np.linalg.norm(numeric)), abs_floor
            )
            logger.debug("勾配検証 %s: 相対誤差 %.3e", param.name, error)
            worst = max(worst, error)
    finally:
        for name, value in net.buffers().items():
            value[...] = saved_buffers[name]
        net.mark_updated()

    return worst
