"""浅いベースライン（KDE, Isolation Forest）とハイブリッド。"""

from deep_sad.baselines.hybrid import HybridModel, ShallowKind, ShallowSpec, hybrid_apply, hybrid_fit
from deep_sad.baselines.iforest import IsolationForest, average_path_length, iforest_fit
from deep_sad.baselines.kde import KdeModel, kde_fit

__all__ = [
    "HybridModel",
    "IsolationForest",
    "KdeModel",
    "ShallowKind",
    "ShallowSpec",
    "average_path_length",
    "hybrid_apply",
    "hybrid_fit",
    "iforest_fit",
    "kde_fit",
]
