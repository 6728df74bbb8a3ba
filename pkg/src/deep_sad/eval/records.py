"""評価レコード（1実験1行の JSON Lines）と集計。"""

import logging
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from deep_sad.eval.stats import WilcoxonResult, wilcoxon_signed_rank
from deep_sad.exceptions import DataFormatError, InsufficientDataError, InvalidArgumentError

logger = logging.getLogger(__name__)


class RecordStatus(StrEnum):
    OK = "ok"
    SKIPPED = "skipped"
    FAILED = "failed"


# 同じ実験セルを識別するフィールド（method を除くと対応づけのキーになる）
KEY_FIELDS = (
    "method",
    "dataset",
    "normal_class",
    "gamma_l",
    "gamma_p",
    "k_l",
    "anomaly_classes",
    "eta",
    "rep_dim",
    "seed",
)


class EvalRecord(BaseModel):
    """1実験の結果。

    Attributes
    ----------
        method: 手法ID
        dataset: データセット名
        normal_class: 正常クラス（ベンチマーク分割では None）
        gamma_l: ラベル付き比率
        gamma_p: 汚染率
        k_l: 既知異常クラス数
        anomaly_classes: 明示指定した既知異常クラス
        eta: η の上書き値
        rep_dim: 出力次元の上書き値
        seed: 乱数シード
        auc: テスト AUC（スキップ・失敗時は None）
        wall_time: 実行時間（秒）
        status: ok / skipped / failed
        reason: スキップ・失敗の理由

    """

    method: str
    dataset: str
    normal_class: int | None = None
    gamma_l: float = 0.0
    gamma_p: float = 0.0
    k_l: int = 0
    anomaly_classes: tuple[int, ...] | None = None
    eta: float | None = None
    rep_dim: int | None = None
    seed: int = 0
    auc: float | None = Field(default=None, ge=0, le=1)
    wall_time: float = Field(default=0.0, ge=0)
    status: RecordStatus = RecordStatus.OK
    reason: str | None = None

    @model_validator(mode="after")
    def check_auc(self) -> "EvalRecord":
        if self.status == RecordStatus.OK and self.auc is None:
            raise ValueError("成功したレコードには AUC が必要です")
        return self

    def key(self) -> tuple[Any, ...]:
        """再開時に完了済みセルを判定するキー。"""
        return tuple(getattr(self, name) for name in KEY_FIELDS)

    def pairing_key(self) -> tuple[Any, ...]:
        """手法間で同じセルを対応づけるキー。"""
        return self.key()[1:]


def append_records(path: Path, records: Iterable[EvalRecord]) -> int:
    """レコードをファイル末尾に1行ずつ追記し、書いた件数を返す。"""
    written = 0
    with open(path, "a", encoding="utf-8") as f:
        for record in records:
            f.write(record.model_dump_json() + "\n")
            f.flush()
            written += 1
    return written


def read_records(path: Path) -> list[EvalRecord]:
    """レコードファイルを読む。ファイルがなければ空のリスト。

    Raises
    ------
        DataFormatError: 解釈できない行がある場合（行番号は1始まり）

    """
    if not path.exists():
        return []
    records: list[EvalRecord] = []
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(EvalRecord.model_validate_json(line))
            except ValidationError as e:
                raise DataFormatError(f"{path}:{line_number}: レコードを解釈できません", line_number, None, e) from e
    return records


def completed_keys(path: Path) -> set[tuple[Any, ...]]:
    """記録済み（成功・スキップ）のセルのキー。失敗したセルは再実行の対象にする。"""
    return {r.key() for r in read_records(path) if r.status != RecordStatus.FAILED}


@dataclass(frozen=True)
class SummaryRow:
    """集計表の1行。"""

    group: tuple[Any, ...]
    mean_auc: float
    std_auc: float
    count: int
    std_undefined: bool = False


def _sort_key(value: Any) -> tuple[int, Any]:
    if value is None:
        return (0, 0)
    if isinstance(value, tuple):
        return (1, tuple(_sort_key(v) for v in value))
    return (1, value)


def _check_fields(group_by: Sequence[str]) -> None:
    unknown = [f for f in group_by if f not in EvalRecord.model_fields]
    if unknown:
        raise InvalidArgumentError(f"集計できないフィールドです: {unknown}")


def aggregate(records: Sequence[EvalRecord], group_by: Sequence[str]) -> list[SummaryRow]:
    """成功したレコードをグループごとに平均・標本標準偏差（n−1）・件数へ集計する。

    1件だけのグループは標準偏差を0とし std_undefined を立てる。行はグループの値で昇順に並ぶ。
    """
    _check_fields(group_by)
    groups: dict[tuple[Any, ...], list[float]] = defaultdict(list)
    for record in records:
        if record.status == RecordStatus.OK and record.auc is not None:
            groups[tuple(getattr(record, f) for f in group_by)].append(record.auc)

    rows: list[SummaryRow] = []
    for group in sorted(groups, key=lambda g: tuple(_sort_key(v) for v in g)):
        values = np.asarray(groups[group])
        single = values.size == 1
        rows.append(
            SummaryRow(
                group=group,
                mean_auc=float(values.mean()),
                std_auc=0.0 if single else float(values.std(ddof=1)),
                count=int(values.size),
                std_undefined=single,
            )
        )
    return rows


def summary_to_text(rows: Sequence[SummaryRow], group_by: Sequence[str], delimiter: str = ",") -> str:
    """集計表を区切り文字付きテキストにする。"""
    lines = [delimiter.join([*group_by, "mean_auc", "std_auc", "count"])]
    for row in rows:
        cells = ["" if v is None else str(v) for v in row.group]
        lines.append(delimiter.join([*cells, repr(row.mean_auc), repr(row.std_auc), str(row.count)]))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MethodComparison:
    """グループ内の上位2手法の比較。"""

    group: tuple[Any, ...]
    best: str
    second: str
    test: WilcoxonResult | None
    reason: str | None = None


def paired_aucs(records: Sequence[EvalRecord], method_a: str, method_b: str) -> tuple[list[float], list[float]]:
    """同じセル・シードで両手法が成功した AUC の組。"""
    by_method: dict[str, dict[tuple[Any, ...], float]] = defaultdict(dict)
    for r in records:
        if r.status == RecordStatus.OK and r.auc is not None and r.method in (method_a, method_b):
            by_method[r.method][r.pairing_key()] = r.auc
    shared = sorted(
        set(by_method[method_a]) & set(by_method[method_b]),
        key=lambda k: tuple(_sort_key(v) for v in k),
    )
    return [by_method[method_a][k] for k in shared], [by_method[method_b][k] for k in shared]


def compare_best_methods(records: Sequence[EvalRecord], group_by: Sequence[str]) -> list[MethodComparison]:
    """method 以外のフィールドでまとめた各グループで、平均 AUC の上位2手法を検定する。

    組の数が足りない場合は test を None にして理由を残す。
    """
    fields = [f for f in group_by if f != "method"]
    _check_fields(fields)
    grouped: dict[tuple[Any, ...], list[EvalRecord]] = defaultdict(list)
    for r in records:
        grouped[tuple(getattr(r, f) for f in fields)].append(r)

    comparisons: list[MethodComparison] = []
    for group in sorted(grouped, key=lambda g: tuple(_sort_key(v) for v in g)):
        ranking = sorted(aggregate(grouped[group], ["method"]), key=lambda row: (-row.mean_auc, row.group))
        if len(ranking) < 2:
            continue
        best, second = str(ranking[0].group[0]), str(ranking[1].group[0])
        a, b = paired_aucs(grouped[group], best, second)
        try:
            comparisons.append(MethodComparison(group, best, second, wilcoxon_signed_rank(a, b)))
        except InsufficientDataError as e:
            comparisons.append(MethodComparison(group, best, second, None, str(e)))
    return comparisons
