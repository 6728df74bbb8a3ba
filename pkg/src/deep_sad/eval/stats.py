"""対応のある2標本の Wilcoxon 符号順位検定。"""

import logging
from enum import StrEnum
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.stats import norm, rankdata

from deep_sad.exceptions import InsufficientDataError, InvalidArgumentError, ShapeError

logger = logging.getLogger(__name__)

MIN_PAIRS = 5
EXACT_MAX_N = 20


class ZeroPolicy(StrEnum):
    """差が0の組の扱い。"""

    WILCOX = "wilcox"  # 除外してから順位付け
    PRATT = "pratt"  # 順位付けに含め、順位和からは除外


class PValueMethod(StrEnum):
    AUTO = "auto"
    EXACT = "exact"
    APPROX = "approx"


class WilcoxonResult(NamedTuple):
    """検定結果。"""

    statistic: float
    p_value: float
    n: int
    method: PValueMethod


def _exact_lower_tail(doubled_ranks: np.ndarray, threshold: int) -> int:
    """符号パターン 2^n 通りのうち W⁺ ≤ threshold となる数（順位は2倍した整数）。"""
    counts = np.zeros(int(doubled_ranks.sum()) + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    return int(counts[: threshold + 1].sum())


def wilcoxon_signed_rank(
    paired_a: ArrayLike,
    paired_b: ArrayLike,
    zero_policy: ZeroPolicy | str = ZeroPolicy.WILCOX,
    method: PValueMethod | str = PValueMethod.AUTO,
) -> WilcoxonResult:
    """W = min(W⁺, W⁻) と両側 p 値。

    n ≤ 20 では実際の（同順位を平均した）順位で全符号パターンを数え上げた正確な p、
    それより大きい場合は同順位補正と連続修正付きの正規近似を使う。

    Raises
    ------
        ShapeError: 長さが一致しない場合
        InsufficientDataError: 差が0でない組が5未満の場合

    """
    a = np.asarray(paired_a, dtype=np.float64).ravel()
    b = np.asarray(paired_b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ShapeError(f"対応する標本の長さ {a.size} と {b.size} が一致しません")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise InvalidArgumentError("標本に非有限の値が含まれています")
    policy = ZeroPolicy(zero_policy)
    how = PValueMethod(method)

    d = a - b
    nonzero = d != 0
    n = int(nonzero.sum())
    if n < MIN_PAIRS:
        raise InsufficientDataError(f"差が0でない組が {n} しかありません（{MIN_PAIRS} 以上必要）")

    if policy == ZeroPolicy.WILCOX:
        d = d[nonzero]
        ranks = rankdata(np.abs(d))
    else:
        ranks = rankdata(np.abs(d))[nonzero]
        d = d[nonzero]

    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    statistic = min(w_plus, w_minus)

    if how == PValueMethod.AUTO:
        how = PValueMethod.EXACT if n <= EXACT_MAX_N else PValueMethod.APPROX

    if how == PValueMethod.EXACT:
        doubled = np.rint(2 * ranks).astype(np.int64)
        count = _exact_lower_tail(doubled, int(round(2 * statistic)))
        p_value = min(1.0, 2.0 * count / 2.0**n)
    else:
        mean = float(ranks.sum()) / 2.0
        sd = float(np.sqrt((ranks * ranks).sum() / 4.0))
        z = min(0.0, (statistic - mean + 0.5) / sd)
        p_value = min(1.0, float(2.0 * norm.cdf(z)))

    logger.debug("Wilcoxon: n=%d, W+=%s, W-=%s, p=%s (%s)", n, w_plus, w_minus, p_value, how)
    return WilcoxonResult(statistic, p_value, n, how)
