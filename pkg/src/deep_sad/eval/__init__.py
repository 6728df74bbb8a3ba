"""AUC・Wilcoxon 検定・結果の集計。"""

from deep_sad.eval.metrics import auc_roc
from deep_sad.eval.records import (
    EvalRecord,
    RecordStatus,
    SummaryRow,
    aggregate,
    append_records,
    compare_best_methods,
    read_records,
)
from deep_sad.eval.stats import WilcoxonResult, ZeroPolicy, wilcoxon_signed_rank

__all__ = [
    "EvalRecord",
    "RecordStatus",
    "SummaryRow",
    "WilcoxonResult",
    "ZeroPolicy",
    "aggregate",
    "append_records",
    "auc_roc",
    "compare_best_methods",
    "read_records",
    "wilcoxon_signed_rank",
]
