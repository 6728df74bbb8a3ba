"""ミニバッチ学習ループと損失履歴。

全ての学習（自己符号化器の事前学習、超球面目的、分類器）は run_schedule を通る。
探索・微調整の二段階で Adam の状態を共有し、エポックごとにバッチ損失の平均を記録する。
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Generic, TypeVar

import numpy as np
from numpy.typing import NDArray

from deep_sad.config.settings import TrainingConfig
from deep_sad.exceptions import NumericError, TrainingError
from deep_sad.nn.layers import FloatArray
from deep_sad.nn.network import Network
from deep_sad.nn.optim import AdamState, adam_step, clip_grads

logger = logging.getLogger(__name__)

BatchIndex = NDArray[np.intp]
StepFn = Callable[[BatchIndex], tuple[float, list[FloatArray]]]
AfterStepFn = Callable[[BatchIndex], None]

ModelT = TypeVar("ModelT")


@dataclass(frozen=True)
class EpochLoss:
    """1エポック分の記録。"""

    epoch: int
    phase: str
    mean_loss: float


@dataclass
class TrainingHistory:
    """エポックごとの平均損失。"""

    epochs: list[EpochLoss] = field(default_factory=list)

    @property
    def losses(self) -> list[float]:
        return [e.mean_loss for e in self.epochs]

    def to_text(self, delimiter: str = ",") -> str:
        """epoch, phase, mean_loss の区切りテキスト（ヘッダ付き）。"""
        lines = [delimiter.join(("epoch", "phase", "mean_loss"))]
        lines.extend(
            delimiter.join((str(e.epoch), e.phase, repr(e.mean_loss))) for e in self.epochs
        )
        return "\n".join(lines) + "\n"

    def write(self, path: Path, delimiter: str = ",") -> None:
        Path(path).write_text(self.to_text(delimiter), encoding="utf-8")


@dataclass
class TrainResult(Generic[ModelT]):
    """学習済みモデルと損失履歴。"""

    model: ModelT
    history: TrainingHistory


def training_generators(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """（初期化用, シャッフル用）の独立な乱数生成器。"""
    init_seq, shuffle_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_seq), np.random.default_rng(shuffle_seq)


def iter_batches(
    n_rows: int, batch_size: int, rng: np.random.Generator, shuffle: bool = True
) -> list[BatchIndex]:
    """1エポック分のバッチ添字。

    末尾が1行だけになる場合は直前のバッチに併合する（学習モードのバッチ正規化は2行以上を要する）。
    """
    order = rng.permutation(n_rows) if shuffle else np.arange(n_rows)
    batches = [order[start : start + batch_size] for start in range(0, n_rows, batch_size)]
    if len(batches) > 1 and batches[-1].shape[0] == 1:
        tail = batches.pop()
        batches[-1] = np.concatenate([batches[-1], tail])
    return batches


def run_schedule(
    networks: Sequence[Network],
    step: StepFn,
    n_rows: int,
    cfg: TrainingConfig,
    weight_decay: float,
    shuffle_rng: np.random.Generator,
    after_step: AfterStepFn | None = None,
    label: str = "train",
) -> TrainingHistory:
    """二段階スケジュールで Adam 学習を行う。

    Args:
    ----
        networks: 更新対象のネットワーク（パラメータはこの順に連結する）
        step: バッチ添字から (損失, パラメータ勾配) を返す関数
        n_rows: 学習データの行数
        cfg: 学習設定
        weight_decay: 結合型 L2 重み減衰 λ
        shuffle_rng: バッチ順のシャッフルに使う乱数生成器
        after_step: パラメータ更新後に呼ぶ関数（ソフト境界の半径更新など）
        label: ログ用の名前

    Returns:
    -------
        エポックごとの平均損失

    Raises:
    ------
        TrainingError: 損失または勾配が非有限になった場合

    """
    params = [p for net in networks for p in net.parameters()]
    state = AdamState.for_parameters(params)
    history = TrainingHistory()
    epoch = 0

    for phase, n_epochs, lr in cfg.phases():
        for _ in range(n_epochs):
            batch_losses: list[float] = []
            for index in iter_batches(n_rows, cfg.batch_size, shuffle_rng, cfg.shuffle):
                loss, grads = step(index)
                if not math.isfinite(loss):
                    raise TrainingError(
                        f"{label}: エポック {epoch} で損失が非有限になりました: {loss}", epoch
                    )
                if cfg.clip_grad_norm is not None:
                    grads = clip_grads(grads, cfg.clip_grad_norm)
                try:
                    adam_step(params, grads, state, lr, weight_decay)
                except NumericError as e:
                    raise TrainingError(
                        f"{label}: エポック {epoch} で勾配が非有限になりました ({e.parameter})",
                        epoch,
                        e,
                    ) from e
                for net in networks:
                    net.mark_updated()
                if after_step is not None:
                    after_step(index)
                batch_losses.append(loss)
                logger.debug("%s epoch=%d batch=%d loss=%.6g", label, epoch, len(index), loss)

            mean_loss = float(np.mean(batch_losses))
            history.epochs.append(EpochLoss(epoch, phase, mean_loss))
            logger.info(
                "%s エポック %d/%d (%s): 平均損失 %.6g",
                label,
                epoch + 1,
                cfg.total_epochs,
                phase,
                mean_loss,
            )
            epoch += 1

    return history
