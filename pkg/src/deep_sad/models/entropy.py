"""潜在表現のエントロピー（ガウス上界）による診断。"""

import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from deep_sad.exceptions import InvalidArgumentError
from deep_sad.models.losses import LABELED_ANOMALY, LABELED_NORMAL


class CovarianceAssumption(StrEnum):
    """共分散の仮定。"""

    ISOTROPIC = "isotropic"
    FULL = "full"


@dataclass(frozen=True)
class EntropyEstimate:
    """エントロピー上界（nats）。共分散が特異なら -inf と degenerate=True。"""

    nats: float
    degenerate: bool = False


def latent_entropy(
    latents: ArrayLike, assume: CovarianceAssumption | str = CovarianceAssumption.FULL
) -> EntropyEstimate:
    """潜在表現 Z のエントロピーのガウス上界。

    full: ½·log((2πe)^d · det Σ̂)（Σ̂ は標本共分散）
    isotropic: (d/2)(1 + log(2πσ̂²))（σ̂² は次元ごとの標本分散の平均）

    Args:
    ----
        latents: (行数, d) の潜在表現
        assume: 共分散の仮定

    Returns:
    -------
        エントロピーの推定値

    Raises:
    ------
        InvalidArgumentError: 行数が足りない場合（full は d+1 行、isotropic は2行）

    """
    z = np.asarray(latents, dtype=np.float64)
    if z.ndim != 2:
        raise InvalidArgumentError(f"潜在表現は2次元の行列である必要があります: {z.shape}")
    assume = CovarianceAssumption(assume)
    rows, d = z.shape

    if assume == CovarianceAssumption.ISOTROPIC:
        if rows < 2:
            raise InvalidArgumentError(f"isotropic の推定には2行以上が必要です: {rows}")
        sigma_sq = float(np.mean(np.var(z, axis=0, ddof=1)))
        if sigma_sq <= 0:
            return EntropyEstimate(-math.inf, degenerate=True)
        return EntropyEstimate(0.5 * d * (1.0 + math.log(2.0 * math.pi * sigma_sq)))

    if rows < d + 1:
        raise InvalidArgumentError(f"full の推定には {d + 1} 行以上が必要です: {rows}")
    covariance = np.atleast_2d(np.cov(z, rowvar=False))
    sign, logdet = np.linalg.slogdet(covariance)
    if sign <= 0 or not np.isfinite(logdet):
        return EntropyEstimate(-math.inf, degenerate=True)
    return EntropyEstimate(0.5 * (d * math.log(2.0 * math.pi * math.e) + float(logdet)))


def class_conditional_entropy(
    latents: ArrayLike,
    labels: NDArray[np.integer],
    assume: CovarianceAssumption | str = CovarianceAssumption.FULL,
) -> dict[str, EntropyEstimate]:
    """正常 (+1) と異常 (−1) それぞれの潜在表現のエントロピー。"""
    z = np.asarray(latents, dtype=np.float64)
    labels = np.asarray(labels)
    return {
        "normal": latent_entropy(z[labels == LABELED_NORMAL], assume),
        "anomaly": latent_entropy(z[labels == LABELED_ANOMALY], assume),
    }
