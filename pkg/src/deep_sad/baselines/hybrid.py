"""自己符号化器の符号に浅い手法を当てはめるハイブリッド。"""

import logging
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike

from deep_sad.baselines.iforest import IsolationForest, iforest_fit
from deep_sad.baselines.kde import DEFAULT_BANDWIDTH_GRID, KdeModel, kde_fit
from deep_sad.config.settings import AppSettings
from deep_sad.exceptions import ModelFileError, ShapeError
from deep_sad.models.autoencoder import Autoencoder
from deep_sad.nn.layers import FloatArray
from deep_sad.nn.serialization import Envelope

logger = logging.getLogger(__name__)

ShallowModel = KdeModel | IsolationForest

_SHALLOW_PREFIX = "shallow/"


class ShallowKind(StrEnum):
    """浅い手法の種類。"""

    KDE = "kde"
    IFOREST = "iforest"


@dataclass(frozen=True)
class ShallowSpec:
    """浅い手法とそのハイパーパラメータ。"""

    kind: ShallowKind
    bandwidth_grid: tuple[float, ...] = DEFAULT_BANDWIDTH_GRID
    folds: int = 5
    n_trees: int = 100
    subsample: int = 256
    seed: int = 0
    n_jobs: int = 1

    @classmethod
    def from_settings(cls, kind: ShallowKind | str, settings: AppSettings, seed: int = 0) -> "ShallowSpec":
        return cls(
            kind=ShallowKind(kind),
            bandwidth_grid=tuple(settings.kde_bandwidth_grid),
            folds=settings.kde_folds,
            n_trees=settings.iforest_trees,
            subsample=settings.iforest_subsample,
            seed=seed,
            n_jobs=settings.n_jobs,
        )

    def fit(self, data: ArrayLike) -> ShallowModel:
        if self.kind == ShallowKind.KDE:
            return kde_fit(data, self.bandwidth_grid, self.folds, self.seed)
        return iforest_fit(data, self.n_trees, self.subsample, self.seed, self.n_jobs)


@dataclass
class HybridModel:
    """エンコーダ（推論モード）の符号を入力とする浅い手法。"""

    autoencoder: Autoencoder
    shallow: ShallowModel

    def __post_init__(self) -> None:
        if self.shallow.input_dim != self.autoencoder.encoder.output_dim:
            raise ShapeError(
                f"浅い手法の入力次元 {self.shallow.input_dim} が符号の次元 {self.autoencoder.encoder.output_dim} と一致しません"
            )

    @property
    def kind(self) -> str:
        return f"hybrid-{self.shallow.kind}"

    @property
    def input_dim(self) -> int:
        return self.autoencoder.input_dim

    def score(self, x: ArrayLike) -> FloatArray:
        return self.shallow.score(self.autoencoder.encode(x))

    def to_envelope(self) -> Envelope:
        inner = self.shallow.to_envelope()
        return Envelope(
            self.kind,
            networks=self.autoencoder.to_envelope().networks,
            arrays={_SHALLOW_PREFIX + k: v for k, v in inner.arrays.items()},
            metadata=dict(inner.metadata),
        )

    @classmethod
    def from_envelope(cls, envelope: Envelope) -> "HybridModel":
        shallow_kind = envelope.kind.removeprefix("hybrid-")
        inner = Envelope(
            shallow_kind,
            arrays={
                k.removeprefix(_SHALLOW_PREFIX): v
                for k, v in envelope.arrays.items()
                if k.startswith(_SHALLOW_PREFIX)
            },
            metadata=envelope.metadata,
        )
        shallow: ShallowModel
        if shallow_kind == ShallowKind.KDE:
            shallow = KdeModel.from_envelope(inner)
        elif shallow_kind == ShallowKind.IFOREST:
            shallow = IsolationForest.from_envelope(inner)
        else:
            raise ModelFileError(f"未知のハイブリッド種別です: {envelope.kind}")
        return cls(Autoencoder.from_envelope(envelope), shallow)


def hybrid_fit(ae: Autoencoder, spec: ShallowSpec, train_data: ArrayLike) -> HybridModel:
    """学習データを符号化し、符号に浅い手法を当てはめる。"""
    codes = ae.encode(train_data)
    logger.info("ハイブリッド %s: 符号 %d 次元で学習", spec.kind, codes.shape[1])
    return HybridModel(ae, spec.fit(codes))


def hybrid_apply(
    ae: Autoencoder, spec: ShallowSpec, train_data: ArrayLike, test_data: ArrayLike
) -> FloatArray:
    """学習データの符号で浅い手法を学習し、テストデータの符号を採点する。"""
    return np.asarray(hybrid_fit(ae, spec, train_data).score(test_data), dtype=np.float64)
