"""設定管理モジュール。

Pydantic Settingsを使用して環境変数・設定ファイルとデフォルト設定を管理する。
学習・ベースラインのデフォルト値は表形式ベンチマークの標準設定。
"""

import tomllib
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from deep_sad.exceptions import InvalidArgumentError

ENV_PREFIX = "DEEP_SAD_"

DEFAULT_KDE_BANDWIDTH_GRID = [2.0 ** (k / 2) for k in range(1, 11)]

# desk プリセットのエポック数（探索, 微調整）
DESK_EPOCHS = (20, 40)


class AppSettings(BaseSettings):
    """アプリケーション設定クラス。

    環境変数から設定を読み取り、デフォルト値を提供する。
    設定値の検証機能も含む。
    """

    # Deep SAD 目的関数
    eta: float = Field(default=1.0, description="ラベル付き項の重み η", gt=0)

    weight_decay: float = Field(default=1e-6, description="重み減衰 λ", ge=0)

    inverse_eps: float = Field(
        default=1e-6, description="逆数項の分母に加えるマシンイプシロン", gt=0
    )

    nu: float = Field(default=0.1, description="ソフト境界の ν", gt=0, le=1)

    leakiness: float = Field(default=0.1, description="LeakyReLU の傾き α", gt=0, lt=1)

    # 学習スケジュール
    search_epochs: int = Field(default=50, description="探索フェーズのエポック数", ge=0)

    search_lr: float = Field(default=1e-4, description="探索フェーズの学習率", gt=0)

    finetune_epochs: int = Field(default=100, description="微調整フェーズのエポック数", ge=0)

    finetune_lr: float = Field(default=1e-5, description="微調整フェーズの学習率", gt=0)

    batch_size: int = Field(default=200, description="ミニバッチサイズ", ge=2)

    preset: str = Field(default="full", description="スケジュールのプリセット（full|desk）")

    # 浅いベースライン
    iforest_trees: int = Field(default=100, description="Isolation Forest の木の数", ge=1)

    iforest_subsample: int = Field(
        default=256, description="Isolation Forest のサブサンプルサイズ ψ", ge=2
    )

    kde_bandwidth_grid: list[float] = Field(
        default_factory=lambda: list(DEFAULT_KDE_BANDWIDTH_GRID),
        description="KDE バンド幅の候補",
    )

    kde_folds: int = Field(default=5, description="KDE 交差検証の分割数", ge=2)

    # 実行環境
    n_jobs: int = Field(default=1, description="並列ワーカー数", ge=1, le=64)

    log_level: str = Field(default="INFO", description="ログレベル")

    # データセットキャッシュ
    cache_enabled: bool = Field(default=True, description="キャッシュ機能の有効/無効")

    cache_dir: Path = Field(
        default=Path.home() / ".cache" / "deep-sad",
        description="キャッシュディレクトリのパス",
    )

    cache_ttl_hours: int = Field(
        default=24 * 7, description="キャッシュの有効期限（時間）", ge=1, le=24 * 30
    )

    model_config = SettingsConfigDict(
        env_prefix=ENV_PREFIX,
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """ログレベルの検証。

        Args:
        ----
            v: ログレベル文字列

        Returns:
        -------
            検証済みログレベル

        Raises:
        ------
            ValueError: 無効なログレベルの場合

        """
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if v.upper() not in valid_levels:
            raise ValueError(f"ログレベルは {valid_levels} のいずれかである必要があります")
        return v.upper()

    @field_validator("preset")
    @classmethod
    def validate_preset(cls, v: str) -> str:
        """プリセット名の検証。"""
        valid_presets = {"full", "desk"}
        if v.lower() not in valid_presets:
            raise ValueError(f"プリセットは {valid_presets} のいずれかである必要があります")
        return v.lower()

    @field_validator("kde_bandwidth_grid")
    @classmethod
    def validate_bandwidth_grid(cls, v: list[float]) -> list[float]:
        """バンド幅候補の検証。"""
        if not v:
            raise ValueError("バンド幅の候補が空です")
        if any(h <= 0 for h in v):
            raise ValueError(f"バンド幅は正である必要があります: {v}")
        return v

    def schedule(self) -> tuple[int, int]:
        """プリセットを反映した（探索, 微調整）エポック数を返す。"""
        if self.preset == "desk":
            return DESK_EPOCHS
        return self.search_epochs, self.finetune_epochs


class TrainingConfig(BaseModel):
    """二段階学習率スケジュールとミニバッチ設定。"""

    search_epochs: int = Field(default=50, ge=0)
    search_lr: float = Field(default=1e-4, gt=0)
    finetune_epochs: int = Field(default=100, ge=0)
    finetune_lr: float = Field(default=1e-5, gt=0)
    batch_size: int = Field(default=200, ge=2)
    seed: int = 0
    shuffle: bool = True
    clip_grad_norm: float | None = Field(default=None, gt=0)

    model_config = {"frozen": True}

    @classmethod
    def from_settings(cls, settings: AppSettings, seed: int = 0) -> "TrainingConfig":
        """設定から学習設定を生成。"""
        search_epochs, finetune_epochs = settings.schedule()
        return cls(
            search_epochs=search_epochs,
            search_lr=settings.search_lr,
            finetune_epochs=finetune_epochs,
            finetune_lr=settings.finetune_lr,
            batch_size=settings.batch_size,
            seed=seed,
        )

    def phases(self) -> list[tuple[str, int, float]]:
        """（フェーズ名, エポック数, 学習率）の列を返す。"""
        return [
            ("search", self.search_epochs, self.search_lr),
            ("finetune", self.finetune_epochs, self.finetune_lr),
        ]

    @property
    def total_epochs(self) -> int:
        """全フェーズの合計エポック数。"""
        return self.search_epochs + self.finetune_epochs


def read_config_file(path: Path) -> dict[str, Any]:
    """セクション付きTOML設定ファイルを読み、フィールド名の辞書に平坦化する。

    Args:
    ----
        path: 設定ファイルのパス

    Returns:
    -------
        フィールド名と値の辞書

    Raises:
    ------
        InvalidArgumentError: 読み込みに失敗した場合、または未知のキーを含む場合

    """
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise InvalidArgumentError(f"設定ファイルを読み込めません: {path}: {e}", e) from e

    flat: dict[str, Any] = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            flat.update(value)
        else:
            flat[key] = value

    unknown = set(flat) - set(AppSettings.model_fields)
    if unknown:
        raise InvalidArgumentError(f"設定ファイルに未知のキーがあります: {sorted(unknown)}")
    return flat


# グローバル設定インスタンス
settings = AppSettings()


def get_settings() -> AppSettings:
    """設定インスタンスを取得。

    Returns
    -------
        アプリケーション設定インスタンス

    """
    return settings


def reload_settings() -> AppSettings:
    """設定を再読み込み。

    Returns
    -------
        新しい設定インスタンス

    """
    global settings
    settings = AppSettings()
    return settings


def load_settings(config_path: Path | None = None, **overrides: Any) -> AppSettings:
    """設定ファイルとオーバーライドを反映してグローバル設定を作り直す。

    優先順位は overrides > 設定ファイル > 環境変数 > デフォルト。

    Raises
    ------
        InvalidArgumentError: 設定値が不正な場合

    """
    global settings
    values: dict[str, Any] = {}
    if config_path is not None:
        values.update(read_config_file(config_path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        settings = AppSettings(**values)
    except ValidationError as e:
        raise InvalidArgumentError(f"設定値が不正です: {e}", e) from e
    return settings
