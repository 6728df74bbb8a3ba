"""テスト共通のフィクスチャ。"""

from collections.abc import Iterator

import numpy as np
import pytest
from deep_sad.config.settings import reload_settings


@pytest.fixture(autouse=True)
def キャッシュを無効にする(monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:
    # ホームディレクトリのキャッシュに書き込まない
    monkeypatch.setenv("DEEP_SAD_CACHE_ENABLED", "false")
    reload_settings()
    yield
    monkeypatch.delenv("DEEP_SAD_CACHE_ENABLED", raising=False)
    reload_settings()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
