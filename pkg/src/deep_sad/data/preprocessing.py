"""学習データの統計だけで当てはめる特徴量スケーリング。"""

from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from sklearn.preprocessing import MinMaxScaler, StandardScaler

from deep_sad.exceptions import InvalidArgumentError, ModelFileError, ShapeError
from deep_sad.nn.layers import FloatArray


class Scaling(StrEnum):
    """前処理の種類。"""

    NONE = "none"
    MINMAX = "minmax"
    STANDARDIZE = "standardize"


@dataclass(frozen=True)
class FittedScaler:
    """学習データで当てはめたスケーラ。"""

    scaling: Scaling
    scaler: MinMaxScaler | StandardScaler | None

    def transform(self, x: ArrayLike) -> FloatArray:
        data = np.asarray(x, dtype=np.float64)
        if self.scaler is None:
            return data.copy()
        if data.ndim != 2 or data.shape[1] != self.scaler.n_features_in_:
            raise ShapeError(f"次元 {data.shape} がスケーラの次元 {self.scaler.n_features_in_} と一致しません")
        if data.shape[0] == 0:
            return data.copy()
        return np.asarray(self.scaler.transform(data), dtype=np.float64)

    def to_metadata(self) -> dict[str, Any]:
        """モデルファイルに残すための当てはめ済みの統計。"""
        meta: dict[str, Any] = {"scaling": str(self.scaling)}
        if self.scaler is not None:
            meta.update({name: getattr(self.scaler, name).tolist() for name in _FITTED_STATE[self.scaling]})
        return meta

    @classmethod
    def from_metadata(cls, meta: dict[str, Any]) -> "FittedScaler":
        """to_metadata の出力からスケーラを復元する。

        Raises
        ------
            ModelFileError: 統計が欠けている場合

        """
        try:
            scaling = Scaling(meta.get("scaling", Scaling.NONE))
            if scaling == Scaling.NONE:
                return cls(scaling, None)
            scaler = MinMaxScaler() if scaling == Scaling.MINMAX else StandardScaler()
            for name in _FITTED_STATE[scaling]:
                setattr(scaler, name, np.asarray(meta[name], dtype=np.float64))
        except (KeyError, ValueError) as e:
            raise ModelFileError(f"前処理の統計を復元できません: {e}", e) from e
        scaler.n_features_in_ = len(meta[_FITTED_STATE[scaling][0]])
        return cls(scaling, scaler)


_FITTED_STATE: dict[Scaling, tuple[str, ...]] = {
    Scaling.MINMAX: ("min_", "scale_", "data_min_", "data_max_", "data_range_"),
    Scaling.STANDARDIZE: ("mean_", "var_", "scale_"),
}


def _fit(scaling: Scaling, train: ArrayLike) -> FittedScaler:
    data = np.asarray(train, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise InvalidArgumentError(f"スケーラを当てはめる学習データが空です: {data.shape}")
    if scaling == Scaling.MINMAX:
        # 定数の特徴は幅1として扱われ、学習データ上では0になる
        return FittedScaler(scaling, MinMaxScaler(clip=False).fit(data))
    if scaling == Scaling.STANDARDIZE:
        # 母標準偏差で割る。σ=0 の特徴は中心化のみ
        return FittedScaler(scaling, StandardScaler().fit(data))
    return FittedScaler(scaling, None)


def fit_scaler(scaling: Scaling | str, train: ArrayLike) -> FittedScaler:
    """学習データでスケーラを当てはめる。"""
    return _fit(Scaling(scaling), train)


def minmax_scale(train: ArrayLike, *apply_to: ArrayLike) -> tuple[list[FloatArray], FittedScaler]:
    """学習データの最小・最大で [0, 1] に写す。他のデータは範囲外になっても切り詰めない。

    Returns
    -------
        ([変換後の学習データ, *変換後の他データ], スケーラ)

    """
    scaler = _fit(Scaling.MINMAX, train)
    return [scaler.transform(train), *(scaler.transform(x) for x in apply_to)], scaler


def standardize(train: ArrayLike, *apply_to: ArrayLike) -> tuple[list[FloatArray], FittedScaler]:
    """学習データの平均と母標準偏差で標準化する。"""
    scaler = _fit(Scaling.STANDARDIZE, train)
    return [scaler.transform(train), *(scaler.transform(x) for x in apply_to)], scaler
