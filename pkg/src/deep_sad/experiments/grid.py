"""シナリオグリッドファイルと、再開可能な並列実行。

グリッドファイルは TOML で、[defaults] に共通値、[[cells]] に各セルを書く。
セルの値がリストのフィールド（normal_class, gamma_l, gamma_p, k_l, eta, rep_dim）は
直積に展開する。各（セル × 手法 × シード）が1件のレコードになる。

    [defaults]
    train = "mnist_train.csv"
    test = "mnist_test.csv"
    methods = ["deep-sad", "one-class"]
    seeds = [0, 1]

    [[cells]]
    normal_class = 0
    gamma_l = [0.0, 0.01, 0.05]
"""

import itertools
import logging
import time
import tomllib
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Protocol

from joblib import Parallel, delayed
from pydantic import BaseModel, Field, ValidationError, field_validator

from deep_sad.config.settings import AppSettings
from deep_sad.data.csv_loader import load_dataset
from deep_sad.data.preprocessing import FittedScaler, Scaling, fit_scaler
from deep_sad.data.scenarios import ScenarioConfig, SemiSupervisedSplit, make_scenario
from deep_sad.eval.metrics import auc_roc
from deep_sad.eval.records import KEY_FIELDS, EvalRecord, RecordStatus, completed_keys
from deep_sad.exceptions import (
    InvalidArgumentError,
    NumericError,
    ScenarioInfeasibleError,
    TrainingError,
)
from deep_sad.experiments.methods import Method, MethodSpec, fit_detector, parse_method
from deep_sad.nn.spec import LayerSpec, mlp_specs, preset_specs

logger = logging.getLogger(__name__)

SWEEP_FIELDS = ("normal_class", "gamma_l", "gamma_p", "k_l", "eta", "rep_dim")


class GridCell(BaseModel):
    """展開後の1セル。"""

    train: Path
    test: Path
    dataset: str = ""
    normal_class: int
    gamma_l: float = Field(default=0.0, ge=0, lt=1)
    gamma_p: float = Field(default=0.0, ge=0, lt=1)
    k_l: int = Field(default=1, ge=0)
    anomaly_classes: tuple[int, ...] | None = None
    eta: float | None = Field(default=None, gt=0)
    rep_dim: int | None = Field(default=None, ge=1)
    architecture: str = "mnist"
    hidden: tuple[int, ...] | None = None
    preprocessing: Scaling = Scaling.MINMAX
    methods: tuple[Method, ...] = (Method.DEEP_SAD,)
    seeds: tuple[int, ...] = (0,)

    model_config = {"frozen": True}

    @field_validator("methods", mode="before")
    @classmethod
    def parse_methods(cls, v: Any) -> Any:
        if isinstance(v, str):
            v = [v]
        return tuple(parse_method(m) if isinstance(m, str) else m for m in v)

    @field_validator("seeds")
    @classmethod
    def check_seeds(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v:
            raise ValueError("シードが1つもありません")
        return v

    @property
    def name(self) -> str:
        return self.dataset or self.train.stem

    def scenario(self, seed: int) -> ScenarioConfig:
        return ScenarioConfig(
            normal_class=self.normal_class,
            gamma_l=self.gamma_l,
            gamma_p=self.gamma_p,
            k_l=self.k_l,
            anomaly_classes=self.anomaly_classes,
            seed=seed,
        )

    def arch(self, input_dim: int, settings: AppSettings) -> list[LayerSpec]:
        if self.hidden is not None:
            rep_dim = self.rep_dim
            if rep_dim is None:
                rep_dim = preset_specs(self.architecture, input_dim)[-1].fan_out
            return mlp_specs(input_dim, self.hidden, rep_dim, leakiness=settings.leakiness)
        return preset_specs(self.architecture, input_dim, self.rep_dim, leakiness=settings.leakiness)


def _expand(raw: dict[str, Any]) -> list[dict[str, Any]]:
    sweeps = {k: v for k, v in raw.items() if k in SWEEP_FIELDS and isinstance(v, list)}
    if not sweeps:
        return [raw]
    names = list(sweeps)
    return [{**raw, **dict(zip(names, combo, strict=True))} for combo in itertools.product(*sweeps.values())]


def load_grid(path: Path) -> list[GridCell]:
    """グリッドファイルを読み、展開済みのセルを返す。相対パスはファイルの場所から解決する。

    Raises
    ------
        InvalidArgumentError: 読めない、セルがない、または値が不正な場合

    """
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise InvalidArgumentError(f"グリッドファイルを読み込めません: {path}: {e}", e) from e

    defaults = raw.get("defaults", {})
    cells = raw.get("cells", [])
    if not cells:
        raise InvalidArgumentError(f"グリッドファイルにセルがありません: {path}")

    expanded: list[GridCell] = []
    for index, cell in enumerate(cells):
        merged = {**defaults, **cell}
        for key in ("train", "test"):
            if key in merged:
                merged[key] = (path.parent / merged[key]).resolve()
        for values in _expand(merged):
            try:
                expanded.append(GridCell(**values))
            except ValidationError as e:
                raise InvalidArgumentError(f"{path}: セル {index} の値が不正です: {e}", e) from e
    return expanded


class Task(Protocol):
    """1件のレコードを生む実験単位。"""

    def key(self) -> tuple[Any, ...]: ...

    def run(self, settings: AppSettings) -> EvalRecord: ...


def scale_split(split: SemiSupervisedSplit, scaler: FittedScaler) -> SemiSupervisedSplit:
    """学習データの両方の集合に同じスケーラを適用する。"""
    return replace(split, unlabeled=scaler.transform(split.unlabeled), labeled=scaler.transform(split.labeled))


def timed_record(fields: dict[str, Any], body: Callable[[], float]) -> EvalRecord:
    """body を実行して AUC を記録する。構成不能はスキップ、発散は失敗として残す。"""
    start = time.perf_counter()
    try:
        auc = body()
    except ScenarioInfeasibleError as e:
        logger.warning("スキップ: %s (%s)", e, fields)
        return EvalRecord(**fields, status=RecordStatus.SKIPPED, reason=str(e), wall_time=time.perf_counter() - start)
    except (TrainingError, NumericError) as e:
        logger.error("失敗: %s (%s)", e, fields)
        return EvalRecord(**fields, status=RecordStatus.FAILED, reason=str(e), wall_time=time.perf_counter() - start)
    return EvalRecord(**fields, auc=auc, wall_time=time.perf_counter() - start)


@dataclass(frozen=True)
class ScenarioTask:
    """グリッドの（セル, 手法, シード）。"""

    cell: GridCell
    method: Method
    seed: int

    def fields(self) -> dict[str, Any]:
        return {
            "method": str(self.method),
            "dataset": self.cell.name,
            "normal_class": self.cell.normal_class,
            "gamma_l": self.cell.gamma_l,
            "gamma_p": self.cell.gamma_p,
            "k_l": self.cell.k_l,
            "anomaly_classes": self.cell.anomaly_classes,
            "eta": self.cell.eta,
            "rep_dim": self.cell.rep_dim,
            "seed": self.seed,
        }

    def key(self) -> tuple[Any, ...]:
        fields = self.fields()
        return tuple(fields[name] for name in KEY_FIELDS)

    def run(self, settings: AppSettings) -> EvalRecord:
        def body() -> float:
            train = load_dataset(self.cell.train, settings.cache_enabled)
            test = load_dataset(self.cell.test, settings.cache_enabled)
            scaler = fit_scaler(self.cell.preprocessing, train.features)
            split, labeled_test = make_scenario(
                train.with_features(scaler.transform(train.features)),
                test.with_features(scaler.transform(test.features)),
                self.cell.scenario(self.seed),
            )
            arch = self.cell.arch(split.input_dim, settings)
            spec = MethodSpec.from_settings(self.method, arch, settings, self.seed, self.cell.eta)
            detector = fit_detector(spec, split).model
            assert labeled_test.anomaly_labels is not None
            return auc_roc(detector.score(labeled_test.features), labeled_test.anomaly_labels)

        return timed_record(self.fields(), body)


def expand_tasks(cells: Sequence[GridCell]) -> list[ScenarioTask]:
    """セル × 手法 × シードの順に並べる。"""
    return [ScenarioTask(cell, method, seed) for cell in cells for method in cell.methods for seed in cell.seeds]


def _run_one(task: Task, settings: AppSettings) -> EvalRecord:
    return task.run(settings)


@dataclass(frozen=True)
class RunSummary:
    """実行結果の件数。"""

    written: int
    already_done: int
    skipped: int
    failed: int


def run_tasks(
    tasks: Iterable[Task],
    records_path: Path,
    settings: AppSettings,
    n_jobs: int = 1,
) -> RunSummary:
    """未完了のタスクを並列に実行し、終わった順ではなくタスク順にレコードを追記する。

    書き込みはこのプロセスだけが行う。記録済みのキーを持つタスクは実行しない。
    """
    done = completed_keys(records_path)
    all_tasks = list(tasks)
    pending = [t for t in all_tasks if t.key() not in done]
    logger.info("タスク %d 件（記録済み %d 件）", len(pending), len(all_tasks) - len(pending))
    records_path.parent.mkdir(parents=True, exist_ok=True)

    written = skipped = failed = 0
    results = Parallel(n_jobs=n_jobs, return_as="generator")(delayed(_run_one)(t, settings) for t in pending)
    with open(records_path, "a", encoding="utf-8") as f:
        for record in results:
            f.write(record.model_dump_json() + "\n")
            f.flush()
            written += 1
            skipped += record.status == RecordStatus.SKIPPED
            failed += record.status == RecordStatus.FAILED
            logger.info(
                "%s %s seed=%d: %s",
                record.method,
                record.dataset,
                record.seed,
                f"AUC {record.auc:.4f}" if record.auc is not None else record.status,
            )
    return RunSummary(written, len(all_tasks) - len(pending), skipped, failed)


def run_grid(path: Path, records_path: Path, settings: AppSettings, n_jobs: int = 1) -> RunSummary:
    """グリッドファイルの全タスクを実行する。"""
    return run_tasks(expand_tasks(load_grid(path)), records_path, settings, n_jobs)

