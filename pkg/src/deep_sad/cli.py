import logging
from dataclasses import replace
from pathlib import Path
from typing import Any

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from deep_sad import __version__
from deep_sad.config.settings import AppSettings, TrainingConfig, load_settings
from deep_sad.data.base import DataLoadError
from deep_sad.data.csv_loader import load_dataset
from deep_sad.data.dataset import Dataset
from deep_sad.data.preprocessing import FittedScaler, Scaling, fit_scaler
from deep_sad.data.scenarios import SemiSupervisedSplit
from deep_sad.eval.metrics import auc_roc
from deep_sad.eval.records import (
    EvalRecord,
    MethodComparison,
    SummaryRow,
    aggregate,
    compare_best_methods,
    read_records,
    summary_to_text,
)
from deep_sad.exceptions import (
    DataFormatError,
    DeepSadError,
    InsufficientDataError,
    InvalidArgumentError,
    ModelFileError,
    ScenarioInfeasibleError,
    ShapeError,
    UndefinedMetricError,
)
from deep_sad.experiments.demo import run_demo
from deep_sad.experiments.grid import RunSummary, run_grid, run_tasks
from deep_sad.experiments.methods import Method, MethodSpec, fit_detector, parse_method
from deep_sad.experiments.odds import DEFAULT_SEEDS, odds_tasks
from deep_sad.models.autoencoder import Autoencoder, pretrain_autoencoder
from deep_sad.models.deep_sad import DeepSadModel
from deep_sad.models.entropy import CovarianceAssumption, class_conditional_entropy
from deep_sad.models.loop import TrainingHistory
from deep_sad.models.registry import load_detector, load_run_metadata, save_detector
from deep_sad.models.trainer import CenterSource
from deep_sad.nn.spec import LayerSpec, mlp_specs, parse_hidden, preset_specs

console = Console()

EXIT_USAGE = 2
EXIT_RUNTIME = 3

USAGE_ERRORS: tuple[type[Exception], ...] = (
    InvalidArgumentError,
    ShapeError,
    DataFormatError,
    DataLoadError,
    ModelFileError,
    ScenarioInfeasibleError,
    UndefinedMetricError,
    InsufficientDataError,
)


def exit_code_for(error: Exception) -> int:
    """例外の種類から終了コードを決める。"""
    return EXIT_USAGE if isinstance(error, USAGE_ERRORS) else EXIT_RUNTIME


class DeepSadGroup(click.Group):
    """パッケージの例外を赤字のメッセージと終了コードに変換するグループ。"""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except DeepSadError as e:
            console.print(f"[bold red]エラー: {e}[/bold red]")
            ctx.exit(exit_code_for(e))


def setup_logging(level: str) -> None:
    """RichHandler でログを標準エラーに出す。"""
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def get_app_settings(ctx: click.Context) -> AppSettings:
    settings: AppSettings = ctx.obj["settings"]
    return settings


def parse_seeds(text: str) -> list[int]:
    """'0,1,2' または '0-9' 形式のシード指定。"""
    seeds: list[int] = []
    try:
        for part in (p.strip() for p in text.split(",")):
            if not part:
                continue
            if "-" in part[1:]:
                start, end = part.split("-", 1)
                seeds.extend(range(int(start), int(end) + 1))
            else:
                seeds.append(int(part))
    except ValueError as e:
        raise InvalidArgumentError(f"シードの指定が不正です: {text!r}", e) from e
    if not seeds:
        raise InvalidArgumentError("シードが1つも指定されていません")
    return seeds


def training_config(
    settings: AppSettings,
    seed: int,
    epochs: int | None,
    search_epochs: int | None,
    finetune_epochs: int | None,
) -> TrainingConfig:
    """設定値から学習設定を作り、エポック数の指定で上書きする。"""
    cfg = TrainingConfig.from_settings(settings, seed)
    update = {
        "search_epochs": search_epochs if search_epochs is not None else epochs,
        "finetune_epochs": finetune_epochs if finetune_epochs is not None else epochs,
    }
    return cfg.model_copy(update={k: v for k, v in update.items() if v is not None})


def architecture(
    input_dim: int, arch: str, hidden: str | None, rep_dim: int | None, settings: AppSettings
) -> list[LayerSpec]:
    if hidden is not None:
        if rep_dim is None:
            rep_dim = preset_specs(arch, input_dim)[-1].fan_out
        return mlp_specs(input_dim, parse_hidden(hidden), rep_dim, leakiness=settings.leakiness)
    return preset_specs(arch, input_dim, rep_dim, leakiness=settings.leakiness)


def load_training_split(
    data: Path, labeled: Path | None, preprocessing: Scaling, settings: AppSettings
) -> tuple[SemiSupervisedSplit, FittedScaler]:
    """ラベルなし・ラベル付きの CSV を読み、学習行全体で当てはめたスケーラを適用する。"""
    unlabeled_set = load_dataset(data, settings.cache_enabled)
    labeled_set = load_dataset(labeled, settings.cache_enabled) if labeled is not None else None
    split = SemiSupervisedSplit.from_datasets(unlabeled_set, labeled_set)
    x, _ = split.training_matrix()
    scaler = fit_scaler(preprocessing, x)
    split = replace(split, unlabeled=scaler.transform(split.unlabeled), labeled=scaler.transform(split.labeled))
    return split, scaler


def display_history(title: str, history: TrainingHistory) -> None:
    """エポックごとの平均損失を表示する。"""
    if not history.epochs:
        console.print(f"[dim]{title}: 学習エポックなし[/dim]")
        return
    table = Table(title=title)
    table.add_column("エポック", justify="right")
    table.add_column("フェーズ", style="cyan")
    table.add_column("平均損失", justify="right", style="green")
    for e in history.epochs:
        table.add_row(str(e.epoch), e.phase, f"{e.mean_loss:.6g}")
    console.print(table)


def display_summary(title: str, rows: list[SummaryRow], group_by: list[str]) -> None:
    table = Table(title=title)
    for name in group_by:
        table.add_column(name, style="cyan")
    table.add_column("AUC (mean ± std)", justify="right", style="green")
    table.add_column("件数", justify="right")
    for row in rows:
        std = f"{row.std_auc:.4f}" + ("*" if row.std_undefined else "")
        table.add_row(*("-" if v is None else str(v) for v in row.group), f"{row.mean_auc:.4f} ± {std}", str(row.count))
    console.print(table)
    if any(row.std_undefined for row in rows):
        console.print("[dim]* 1件のみのため標準偏差は定義できず0と表示[/dim]")


def display_comparisons(comparisons: list[MethodComparison], fields: list[str]) -> None:
    if not comparisons:
        return
    table = Table(title="上位2手法の Wilcoxon 符号順位検定")
    for name in fields:
        table.add_column(name, style="cyan")
    table.add_column("1位")
    table.add_column("2位")
    table.add_column("W", justify="right")
    table.add_column("p", justify="right")
    for c in comparisons:
        cells = ["-" if v is None else str(v) for v in c.group]
        if c.test is None:
            table.add_row(*cells, c.best, c.second, "-", f"[dim]{c.reason}[/dim]")
        else:
            color = "green" if c.test.p_value < 0.05 else "white"
            table.add_row(*cells, c.best, c.second, f"{c.test.statistic:g}", f"[{color}]{c.test.p_value:.4f}[/{color}]")
    console.print(table)


def display_run(summary: RunSummary, out: Path) -> None:
    console.print(
        f"レコード {summary.written} 件を {out} に追記"
        f"（記録済み {summary.already_done} 件, スキップ {summary.skipped} 件, 失敗 {summary.failed} 件）"
    )


arch_options = [
    click.option("--arch", default="cardio", show_default=True, help="アーキテクチャのプリセット名"),
    click.option("--hidden", help="隠れ層のユニット数（例: 32,16）。指定するとプリセットより優先"),
    click.option("--rep-dim", type=click.IntRange(min=1), help="出力次元 d"),
]

epoch_options = [
    click.option("--epochs", type=click.IntRange(min=0), help="両フェーズのエポック数"),
    click.option("--search-epochs", type=click.IntRange(min=0), help="探索フェーズのエポック数"),
    click.option("--finetune-epochs", type=click.IntRange(min=0), help="微調整フェーズのエポック数"),
]


def add_options(options: list[Any]) -> Any:
    def decorator(f: Any) -> Any:
        for option in reversed(options):
            f = option(f)
        return f

    return decorator


input_file = click.Path(exists=True, dir_okay=False, path_type=Path)
output_file = click.Path(dir_okay=False, path_type=Path)


@click.group(cls=DeepSadGroup)
@click.version_option(__version__, prog_name="deep-sad")
@click.option("--config", "config_path", type=input_file, help="TOML 設定ファイル")
@click.option("--preset", type=click.Choice(["full", "desk"]), help="学習スケジュールのプリセット")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.option("--n-jobs", type=click.IntRange(min=1), help="並列ワーカー数")
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: Path | None,
    preset: str | None,
    log_level: str | None,
    n_jobs: int | None,
) -> None:
    """超球面距離に基づく深層半教師あり異常検知"""
    settings = load_settings(config_path, preset=preset, log_level=log_level, n_jobs=n_jobs)
    setup_logging(settings.log_level)
    ctx.ensure_object(dict)
    ctx.obj["settings"] = settings


@cli.command()
@click.option("--data", required=True, type=input_file, help="学習データの CSV")
@click.option("--out", required=True, type=output_file, help="出力するモデルファイル")
@add_options(arch_options)
@add_options(epoch_options)
@click.option("--preprocessing", type=click.Choice([s.value for s in Scaling]), default="none", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--loss-log", type=output_file, help="エポックごとの損失を書き出すファイル")
@click.pass_context
def pretrain(
    ctx: click.Context,
    data: Path,
    out: Path,
    arch: str,
    hidden: str | None,
    rep_dim: int | None,
    epochs: int | None,
    search_epochs: int | None,
    finetune_epochs: int | None,
    preprocessing: str,
    seed: int,
    loss_log: Path | None,
) -> None:
    """自己符号化器を事前学習する"""
    settings = get_app_settings(ctx)
    split, scaler = load_training_split(data, None, Scaling(preprocessing), settings)
    specs = architecture(split.input_dim, arch, hidden, rep_dim, settings)
    cfg = training_config(settings, seed, epochs, search_epochs, finetune_epochs)
    x, _ = split.training_matrix()
    result = pretrain_autoencoder(x, specs, cfg, settings.weight_decay)

    display_history("事前学習の損失", result.history)
    if loss_log is not None:
        result.history.write(loss_log)
    save_detector(
        out,
        result.model,
        {"method": "ae", "data": str(data), "seed": seed, "preprocessing": scaler.to_metadata(), **cfg.model_dump()},
    )
    console.print(f"[green]モデルを保存しました: {out}[/green]")


@cli.command("train")
@click.option("--data", required=True, type=input_file, help="ラベルなし学習データの CSV")
@click.option("--labeled", type=input_file, help="label 列を持つラベル付き学習データの CSV")
@click.option("--method", "method_name", default="deep-sad", show_default=True, help="手法ID")
@click.option("--out", required=True, type=output_file, help="出力するモデルファイル")
@click.option("--pretrained", type=input_file, help="事前学習済み自己符号化器のモデルファイル")
@click.option("--eta", type=click.FloatRange(min=0, min_open=True), help="ラベル付き項の重み η")
@click.option("--nu", type=click.FloatRange(min=0, max=1, min_open=True), help="ソフト境界の ν")
@click.option(
    "--center-source",
    type=click.Choice([c.value for c in CenterSource]),
    default=CenterSource.UNION.value,
    show_default=True,
)
@add_options(arch_options)
@add_options(epoch_options)
@click.option("--preprocessing", type=click.Choice([s.value for s in Scaling]), default="none", show_default=True)
@click.option("--clip-grad-norm", type=click.FloatRange(min=0, min_open=True), help="勾配ノルムの上限")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--loss-log", type=output_file, help="エポックごとの損失を書き出すファイル")
@click.pass_context
def train_command(
    ctx: click.Context,
    data: Path,
    labeled: Path | None,
    method_name: str,
    out: Path,
    pretrained: Path | None,
    eta: float | None,
    nu: float | None,
    center_source: str,
    arch: str,
    hidden: str | None,
    rep_dim: int | None,
    epochs: int | None,
    search_epochs: int | None,
    finetune_epochs: int | None,
    preprocessing: str,
    clip_grad_norm: float | None,
    seed: int,
    loss_log: Path | None,
) -> None:
    """検知器を学習する"""
    settings = get_app_settings(ctx)
    method = parse_method(method_name)
    split, scaler = load_training_split(data, labeled, Scaling(preprocessing), settings)

    autoencoder: Autoencoder | None = None
    if pretrained is not None:
        loaded = load_detector(pretrained)
        if not isinstance(loaded, Autoencoder):
            raise ModelFileError(f"事前学習済み自己符号化器ではありません: {pretrained} ({loaded.kind})")
        autoencoder = loaded
        specs = autoencoder.encoder.specs()
        if specs[0].fan_in != split.input_dim:
            raise ShapeError(
                f"{pretrained} の入力次元 {specs[0].fan_in} がデータの次元 {split.input_dim} と一致しません"
            )
    else:
        specs = architecture(split.input_dim, arch, hidden, rep_dim, settings)

    cfg = training_config(settings, seed, epochs, search_epochs, finetune_epochs)
    spec = MethodSpec.from_settings(method, specs, settings, seed, eta)
    spec = replace(
        spec,
        training=cfg.model_copy(update={"clip_grad_norm": clip_grad_norm}),
        nu=nu if nu is not None else spec.nu,
        center_source=CenterSource(center_source),
    )
    result = fit_detector(spec, split, autoencoder)

    display_history(f"{method} の損失", result.history)
    if loss_log is not None:
        result.history.write(loss_log)
    metadata: dict[str, Any] = {
        "method": str(method),
        "data": str(data),
        "labeled": str(labeled) if labeled is not None else None,
        "pretrained": str(pretrained) if pretrained is not None else None,
        "eta": spec.eta,
        "nu": spec.nu,
        "weight_decay": spec.weight_decay,
        "inverse_eps": spec.inverse_eps,
        "center_source": str(spec.center_source),
        "preprocessing": scaler.to_metadata(),
        **spec.training.model_dump(),
    }
    save_detector(out, result.model, metadata)
    console.print(f"[green]モデルを保存しました: {out}[/green]")


@cli.command()
@click.option("--model", "model_path", required=True, type=input_file, help="モデルファイル")
@click.option("--data", required=True, type=input_file, help="スコアを求める CSV")
@click.option("--out", required=True, type=output_file, help="出力するスコアファイル")
@click.pass_context
def score(ctx: click.Context, model_path: Path, data: Path, out: Path) -> None:
    """行ごとの異常スコアを書き出す（label 列があれば AUC も）"""
    settings = get_app_settings(ctx)
    detector = load_detector(model_path)
    scaler = FittedScaler.from_metadata(load_run_metadata(model_path).get("preprocessing", {}))
    dataset = load_dataset(data, settings.cache_enabled)
    if dataset.n_features != detector.input_dim:
        raise ShapeError(f"{data} の次元 {dataset.n_features} がモデルの入力次元 {detector.input_dim} と一致しません")
    scores = detector.score(scaler.transform(dataset.features))

    lines = [repr(float(s)) for s in scores]
    auc: float | None = None
    if dataset.anomaly_labels is not None:
        auc = auc_roc(scores, dataset.anomaly_labels)
        lines.append(f"auc,{auc!r}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")

    console.print(f"{len(scores)} 行のスコアを {out} に書き出しました")
    if auc is not None:
        console.print(f"AUC: [bold green]{auc:.4f}[/bold green]")


@cli.command()
@click.argument("grid", type=input_file)
@click.option("--out", required=True, type=output_file, help="レコードを追記するファイル（JSON Lines）")
@click.pass_context
def scenario(ctx: click.Context, grid: Path, out: Path) -> None:
    """シナリオグリッドを実行する（記録済みのセルは飛ばす）"""
    settings = get_app_settings(ctx)
    summary = run_grid(grid, out, settings, settings.n_jobs)
    display_run(summary, out)


@cli.command("benchmark-odds")
@click.argument("datasets", nargs=-1, required=True, type=input_file)
@click.option("--method", "methods", multiple=True, default=["deep-sad"], show_default=True, help="手法ID（複数指定可）")
@click.option("--seeds", default=f"{DEFAULT_SEEDS[0]}-{DEFAULT_SEEDS[-1]}", show_default=True, help="シード（例: 0-9, 0,3,5）")
@click.option("--rep-dim", type=click.IntRange(min=1), help="出力次元 d の上書き")
@click.option("--out", required=True, type=output_file, help="レコードを追記するファイル（JSON Lines）")
@click.pass_context
def benchmark_odds(
    ctx: click.Context,
    datasets: tuple[Path, ...],
    methods: tuple[str, ...],
    seeds: str,
    rep_dim: int | None,
    out: Path,
) -> None:
    """表形式ベンチマーク（60:40 分割, γ_l=0.01, γ_p=0）の平均 AUC を求める"""
    settings = get_app_settings(ctx)
    parsed_methods: list[Method] = [parse_method(m) for m in methods]
    tasks = odds_tasks(list(datasets), parsed_methods, parse_seeds(seeds), rep_dim)
    summary = run_tasks(tasks, out, settings, settings.n_jobs)
    display_run(summary, out)

    keys = {t.key() for t in tasks}
    records = [r for r in read_records(out) if r.key() in keys]
    display_summary("ベンチマーク結果", aggregate(records, ["dataset", "method"]), ["dataset", "method"])
    if len(parsed_methods) >= 2:
        display_comparisons(compare_best_methods(records, ["dataset"]), ["dataset"])
    for r in records:
        if r.status != "ok":
            console.print(f"[red]{r.dataset} {r.method} seed={r.seed}: {r.status} ({r.reason})[/red]")


@cli.command("demo-toy")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--steps", type=click.IntRange(min=2), default=51, show_default=True, help="格子の1辺の点数")
@click.option("--out", required=True, type=output_file, help="格子点スコアの CSV")
@click.pass_context
def demo_toy(ctx: click.Context, seed: int, steps: int, out: Path) -> None:
    """2次元トイデータの決定面を格子点スコアとして書き出す"""
    result = run_demo(seed, get_app_settings(ctx), steps)
    result.write(out)

    table = Table(title="トイデータ")
    table.add_column("項目", style="cyan")
    table.add_column("値", justify="right", style="green")
    for name, value in result.test_auc.items():
        table.add_row(f"テスト AUC ({name})", f"{value:.4f}")
    for name, estimate in result.entropy.items():
        table.add_row(f"潜在エントロピー ({name})", f"{estimate.nats:.4f}")
    console.print(table)
    console.print(f"格子点 {len(result.grid)} 行を {out} に書き出しました")


@cli.command()
@click.argument("records", nargs=-1, required=True, type=input_file)
@click.option("--group-by", default="method", show_default=True, help="集計キー（カンマ区切り）")
@click.option("--out", type=output_file, help="集計表を書き出す CSV")
def report(records: tuple[Path, ...], group_by: str, out: Path | None) -> None:
    """レコードを集計し、上位2手法を Wilcoxon 検定で比較する"""
    fields = [f.strip() for f in group_by.split(",") if f.strip()]
    if not fields:
        raise InvalidArgumentError("集計キーが指定されていません")
    loaded: list[EvalRecord] = [r for path in records for r in read_records(path)]
    rows = aggregate(loaded, fields)
    display_summary("集計結果", rows, fields)
    if "method" in fields:
        others = [f for f in fields if f != "method"]
        display_comparisons(compare_best_methods(loaded, fields), others)
    if out is not None:
        out.write_text(summary_to_text(rows, fields), encoding="utf-8")
        console.print(f"集計表を {out} に書き出しました")


@cli.command()
@click.option("--model", "model_path", required=True, type=input_file, help="超球面モデルまたは自己符号化器")
@click.option("--data", required=True, type=input_file, help="label 列を持つ CSV")
@click.option("--assume", type=click.Choice([a.value for a in CovarianceAssumption]), default="full", show_default=True)
@click.pass_context
def entropy(ctx: click.Context, model_path: Path, data: Path, assume: str) -> None:
    """正常・異常それぞれの潜在表現のエントロピー上界を求める"""
    settings = get_app_settings(ctx)
    detector = load_detector(model_path)
    scaler = FittedScaler.from_metadata(load_run_metadata(model_path).get("preprocessing", {}))
    dataset: Dataset = load_dataset(data, settings.cache_enabled)
    if dataset.anomaly_labels is None:
        raise InvalidArgumentError(f"{data} に label 列がありません")
    x = scaler.transform(dataset.features)
    if isinstance(detector, DeepSadModel):
        latents = detector.latents(x)
    elif isinstance(detector, Autoencoder):
        latents = detector.encode(x)
    else:
        raise InvalidArgumentError(f"潜在表現を持たないモデルです: {detector.kind}")

    estimates = class_conditional_entropy(latents, dataset.anomaly_labels, assume)
    table = Table(title=f"潜在エントロピー（{assume}）")
    table.add_column("クラス", style="cyan")
    table.add_column("nats", justify="right", style="green")
    for name, estimate in estimates.items():
        table.add_row(name, "縮退" if estimate.degenerate else f"{estimate.nats:.4f}")
    console.print(table)


if __name__ == "__main__":
    cli()
