"""データローダー抽象基底クラス。

ファイルから読み込むデータセットに、統一されたキャッシュ機能・エラーハンドリング・
実行時間計測を提供する。キャッシュキーはファイルパス・サイズ・更新時刻から作るため、
元ファイルが変わればキャッシュは自動的に使われなくなる。
"""

import hashlib
import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, ClassVar

from deep_sad.config.settings import get_settings
from deep_sad.exceptions import DeepSadError

logger = logging.getLogger(__name__)


@dataclass
class DataLoadResult:
    """データロード結果を表すデータクラス。

    Attributes
    ----------
        data: ロードされたデータ
        source: データソース（ファイルパス）
        cached: キャッシュから取得されたかどうか
        load_time_seconds: ロード時間（秒）
        cache_path: キャッシュファイルのパス（存在する場合）
        metadata: 追加のメタデータ

    """

    data: Any
    source: str
    cached: bool
    load_time_seconds: float
    cache_path: Path | None = None
    metadata: dict[str, Any] | None = None


class DataLoadError(DeepSadError):
    """データロード時のエラー。"""

    def __init__(self, message: str, source: str, original_error: Exception | None = None):
        """エラーを初期化。

        Args:
        ----
            message: エラーメッセージ
            source: データソース
            original_error: 元の例外

        """
        super().__init__(message, original_error)
        self.source = source


class CacheError(DeepSadError):
    """キャッシュ操作時のエラー。"""


class BaseDataLoader(ABC):
    """ファイルデータローダー抽象基底クラス。

    具象クラスは _load_data_from_source・_save_to_cache・_load_from_cache を実装する。
    """

    cache_suffix: ClassVar[str] = ".cache"

    def __init__(
        self,
        cache_enabled: bool = True,
        cache_ttl_hours: int | None = None,
        cache_dir: Path | None = None,
    ):
        """データローダーを初期化。

        Args:
        ----
            cache_enabled: キャッシュ機能の有効/無効
            cache_ttl_hours: キャッシュ有効期限（時間）。Noneの場合は設定値を使用
            cache_dir: キャッシュディレクトリ。Noneの場合は設定値を使用

        """
        settings = get_settings()
        self.cache_enabled = cache_enabled and settings.cache_enabled
        self.cache_ttl_hours = cache_ttl_hours or settings.cache_ttl_hours
        self.cache_dir = cache_dir or settings.cache_dir

        if self.cache_enabled:
            try:
                self.cache_dir.mkdir(parents=True, exist_ok=True)
            except OSError as e:
                logger.warning("キャッシュディレクトリを作成できないためキャッシュを無効にします: %s", e)
                self.cache_enabled = False

    def load_data(self, source: str | Path) -> DataLoadResult:
        """データをロードする。

        キャッシュが有効で有効期限内のデータが存在する場合はキャッシュから取得。
        そうでなければソースから直接ロードし、キャッシュに保存する。

        Args:
        ----
            source: データファイルのパス

        Returns:
        -------
            データロード結果

        Raises:
        ------
            DataLoadError: ファイルが存在しない・読めない場合
            DeepSadError: ソースの内容が不正な場合（具象クラスの例外をそのまま送出）

        """
        start_time = time.time()
        path = Path(source)
        if not path.is_file():
            raise DataLoadError(f"データファイルが見つかりません: {path}", str(path))

        try:
            cache_path: Path | None = None
            if self.cache_enabled:
                cache_path = self._get_cache_path(path)
                if self._is_cache_valid(cache_path):
                    try:
                        data = self._load_from_cache(cache_path)
                        return DataLoadResult(
                            data=data,
                            source=str(path),
                            cached=True,
                            load_time_seconds=time.time() - start_time,
                            cache_path=cache_path,
                            metadata={"cache_ttl_hours": self.cache_ttl_hours},
                        )
                    except Exception as e:
                        self._handle_cache_error(f"キャッシュ読み込み失敗: {e}", cache_path)

            data = self._load_data_from_source(path)
            load_time = time.time() - start_time

            if cache_path is not None:
                try:
                    self._save_to_cache(data, cache_path)
                except Exception as e:
                    self._handle_cache_error(f"キャッシュ保存失敗: {e}", cache_path)
                    cache_path = None

            return DataLoadResult(
                data=data,
                source=str(path),
                cached=False,
                load_time_seconds=load_time,
                cache_path=cache_path,
                metadata={"cache_ttl_hours": self.cache_ttl_hours},
            )

        except DeepSadError:
            raise
        except Exception as e:
            raise DataLoadError(f"データロードに失敗しました: {path}: {e}", str(path), e) from e

    @abstractmethod
    def _load_data_from_source(self, path: Path) -> Any:
        """ファイルからデータを直接ロードする。"""

    @abstractmethod
    def _save_to_cache(self, data: Any, cache_path: Path) -> None:
        """データをキャッシュに保存する。

        Raises
        ------
            CacheError: 保存に失敗した場合

        """

    @abstractmethod
    def _load_from_cache(self, cache_path: Path) -> Any:
        """キャッシュからデータを読み込む。

        Raises
        ------
            CacheError: 読み込みに失敗した場合

        """

    @property
    def _loader_prefix(self) -> str:
        return self.__class__.__name__.lower().replace("loader", "")

    def _get_cache_path(self, path: Path) -> Path:
        """パス・サイズ・更新時刻のハッシュからキャッシュファイルパスを生成する。"""
        stat = path.stat()
        cache_key = f"{path.resolve()}_{stat.st_size}_{stat.st_mtime_ns}"
        hash_value = hashlib.sha256(cache_key.encode()).hexdigest()[:16]
        return self.cache_dir / f"{self._loader_prefix}_{hash_value}{self.cache_suffix}"

    def _is_cache_valid(self, cache_path: Path) -> bool:
        """キャッシュが存在し有効期限内ならTrue。"""
        if not cache_path.exists():
            return False
        cache_age_hours = (time.time() - cache_path.stat().st_mtime) / 3600
        return cache_age_hours <= self.cache_ttl_hours

    def _handle_cache_error(self, message: str, cache_path: Path | None = None) -> None:
        """キャッシュエラーを警告として記録し、破損したキャッシュファイルを削除する。"""
        logger.warning("%s", message)
        if cache_path and cache_path.exists():
            try:
                cache_path.unlink()
            except OSError:
                pass
