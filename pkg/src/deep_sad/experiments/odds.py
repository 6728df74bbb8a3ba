"""表形式ベンチマークの実験手順。

データセットごと・シードごとに、異常比率を保った 60:40 分割、学習分割の統計による標準化、
γ_l=0.01 / γ_p=0 の学習データ構成を行い、各手法のテスト AUC を記録する。
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from deep_sad.config.settings import AppSettings
from deep_sad.data.csv_loader import load_dataset
from deep_sad.data.preprocessing import standardize
from deep_sad.data.scenarios import ODDS_GAMMA_L, odds_split
from deep_sad.eval.metrics import auc_roc
from deep_sad.eval.records import KEY_FIELDS, EvalRecord, RecordStatus
from deep_sad.exceptions import DeepSadError, InvalidArgumentError
from deep_sad.experiments.grid import scale_split, timed_record
from deep_sad.experiments.methods import Method, MethodSpec, fit_detector
from deep_sad.nn.spec import preset_specs

logger = logging.getLogger(__name__)

DEFAULT_SEEDS = tuple(range(10))


@dataclass(frozen=True)
class OddsTask:
    """（データセット, 手法, シード）の1実験。"""

    path: Path
    method: Method
    seed: int
    rep_dim: int | None = None

    @property
    def dataset(self) -> str:
        return self.path.stem

    def fields(self) -> dict[str, Any]:
        return {
            "method": str(self.method),
            "dataset": self.dataset,
            "normal_class": None,
            "gamma_l": ODDS_GAMMA_L,
            "gamma_p": 0.0,
            "k_l": 0,
            "anomaly_classes": None,
            "eta": None,
            "rep_dim": self.rep_dim,
            "seed": self.seed,
        }

    def key(self) -> tuple[Any, ...]:
        fields = self.fields()
        return tuple(fields[name] for name in KEY_FIELDS)

    def run(self, settings: AppSettings) -> EvalRecord:
        def body() -> float:
            data = odds_split(load_dataset(self.path, settings.cache_enabled), self.seed)
            (_, test_features), scaler = standardize(data.train.features, data.test.features)
            split = scale_split(data.split, scaler)
            arch = preset_specs(self.dataset, split.input_dim, self.rep_dim, leakiness=settings.leakiness)
            spec = MethodSpec.from_settings(self.method, arch, settings, self.seed)
            detector = fit_detector(spec, split).model
            assert data.test.anomaly_labels is not None
            return auc_roc(detector.score(test_features), data.test.anomaly_labels)

        try:
            return timed_record(self.fields(), body)
        except DeepSadError as e:
            # データセット単位の失敗は他のデータセットに波及させない
            logger.error("%s: %s", self.dataset, e)
            return EvalRecord(**self.fields(), status=RecordStatus.FAILED, reason=str(e))


def odds_tasks(
    paths: Sequence[Path],
    methods: Sequence[Method],
    seeds: Sequence[int] = DEFAULT_SEEDS,
    rep_dim: int | None = None,
) -> list[OddsTask]:
    """データセット × 手法 × シードの順に並べる。

    Raises
    ------
        InvalidArgumentError: データセット・手法・シードのいずれかが空の場合

    """
    if not paths:
        raise InvalidArgumentError("データセットが指定されていません")
    if not methods:
        raise InvalidArgumentError("手法が指定されていません")
    if not seeds:
        raise InvalidArgumentError("シードが指定されていません")
    return [OddsTask(path, method, seed, rep_dim) for path in paths for method in methods for seed in seeds]
