"""データセットの読み込み・前処理・シナリオ構成パッケージ。"""

from deep_sad.data.csv_loader import load_csv, load_dataset, write_csv
from deep_sad.data.dataset import ANOMALY, NORMAL, Dataset
from deep_sad.data.preprocessing import Scaling, fit_scaler, minmax_scale, standardize
from deep_sad.data.scenarios import (
    OddsSplit,
    ScenarioConfig,
    SemiSupervisedSplit,
    make_scenario,
    odds_split,
)

__all__ = [
    "ANOMALY",
    "NORMAL",
    "Dataset",
    "OddsSplit",
    "ScenarioConfig",
    "Scaling",
    "SemiSupervisedSplit",
    "fit_scaler",
    "load_csv",
    "load_dataset",
    "make_scenario",
    "minmax_scale",
    "odds_split",
    "standardize",
    "write_csv",
]
