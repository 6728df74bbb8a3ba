"""ROC-AUC。スコアが大きいほど異常、異常（−1）を陽性クラスとする。"""

import numpy as np
from numpy.typing import ArrayLike
from scipy.stats import rankdata

from deep_sad.data.dataset import ANOMALY, NORMAL
from deep_sad.exceptions import InvalidArgumentError, ShapeError, UndefinedMetricError


def auc_roc(scores: ArrayLike, labels: ArrayLike) -> float:
    """Mann–Whitney の U を正規化した AUC。同順位は平均順位で扱う（引き分けは 1/2）。

    Args:
    ----
        scores: 異常スコア
        labels: +1（正常）/ −1（異常）

    Returns:
    -------
        P(異常のスコア > 正常のスコア) + P(同点)/2

    Raises:
    ------
        ShapeError: 長さが一致しない場合
        InvalidArgumentError: ラベルが ±1 以外、またはスコアが非有限の場合
        UndefinedMetricError: 片方のラベルしかない場合

    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ShapeError(f"スコア数 {s.size} とラベル数 {y.size} が一致しません")
    if not np.isin(y, (NORMAL, ANOMALY)).all():
        raise InvalidArgumentError("ラベルは +1 または −1 である必要があります")
    if not np.isfinite(s).all():
        raise InvalidArgumentError("スコアに非有限の値が含まれています")

    is_anomaly = y == ANOMALY
    n_anomaly = int(is_anomaly.sum())
    n_normal = int(s.size - n_anomaly)
    if n_anomaly == 0 or n_normal == 0:
        raise UndefinedMetricError("AUC には正常と異常の両方のラベルが必要です")

    ranks = rankdata(s, method="average")
    u = ranks[is_anomaly].sum() - n_anomaly * (n_anomaly + 1) / 2.0
    return float(u / (n_anomaly * n_normal))
