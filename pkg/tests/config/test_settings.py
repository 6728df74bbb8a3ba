"""設定管理のテスト。"""

import os
import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest
from deep_sad.config import settings as settings_module
from deep_sad.config.settings import (
    DESK_EPOCHS,
    AppSettings,
    TrainingConfig,
    get_settings,
    load_settings,
    read_config_file,
    reload_settings,
)
from deep_sad.exceptions import InvalidArgumentError
from pydantic import ValidationError


def describe_AppSettings():
    """AppSettingsクラスのテスト。"""

    def describe_デフォルト値():
        def ηのデフォルト値は1():
            settings = AppSettings()
            assert settings.eta == 1.0

        def 重み減衰のデフォルト値は1e_6():
            settings = AppSettings()
            assert settings.weight_decay == 1e-6

        def 逆数項のイプシロンのデフォルト値は1e_6():
            settings = AppSettings()
            assert settings.inverse_eps == 1e-6

        def 学習スケジュールのデフォルト値は50と100エポック():
            settings = AppSettings()
            assert settings.search_epochs == 50
            assert settings.search_lr == 1e-4
            assert settings.finetune_epochs == 100
            assert settings.finetune_lr == 1e-5

        def バッチサイズのデフォルト値は200():
            settings = AppSettings()
            assert settings.batch_size == 200

        def Isolation_Forestのデフォルト値は100本と256():
            settings = AppSettings()
            assert settings.iforest_trees == 100
            assert settings.iforest_subsample == 256

        def KDEのバンド幅候補は10個():
            settings = AppSettings()
            assert len(settings.kde_bandwidth_grid) == 10
            assert settings.kde_bandwidth_grid[0] == pytest.approx(2**0.5)
            assert settings.kde_bandwidth_grid[-1] == pytest.approx(32.0)

        def キャッシュディレクトリのデフォルト値が設定される():
            settings = AppSettings()
            expected_path = Path.home() / ".cache" / "deep-sad"
            assert settings.cache_dir == expected_path

        def ログレベルのデフォルト値はINFO():
            settings = AppSettings()
            assert settings.log_level == "INFO"

    def describe_環境変数読み込み():
        def ηを環境変数から読み込む():
            with patch.dict(os.environ, {"DEEP_SAD_ETA": "2.5"}):
                settings = AppSettings()
                assert settings.eta == 2.5

        def キャッシュ有効フラグを環境変数から読み込む():
            with patch.dict(os.environ, {"DEEP_SAD_CACHE_ENABLED": "false"}):
                settings = AppSettings()
                assert settings.cache_enabled is False

        def 並列数を環境変数から読み込む():
            with patch.dict(os.environ, {"DEEP_SAD_N_JOBS": "4"}):
                settings = AppSettings()
                assert settings.n_jobs == 4

        def 環境変数の大文字小文字を区別しない():
            with patch.dict(os.environ, {"deep_sad_log_level": "warning"}):
                settings = AppSettings()
                assert settings.log_level == "WARNING"

    def describe_フィールド検証():
        def η0は無効():
            with pytest.raises(ValidationError):
                AppSettings(eta=0)

        def ν1は有効():
            settings = AppSettings(nu=1.0)
            assert settings.nu == 1.0

        def ν1超は無効():
            with pytest.raises(ValidationError):
                AppSettings(nu=1.5)

        def leakiness1は無効():
            with pytest.raises(ValidationError):
                AppSettings(leakiness=1.0)

        def バッチサイズ1は無効():
            with pytest.raises(ValidationError):
                AppSettings(batch_size=1)

        def 負の重み減衰は無効():
            with pytest.raises(ValidationError):
                AppSettings(weight_decay=-1e-3)

        def 空のバンド幅候補は無効():
            with pytest.raises(ValidationError) as exc_info:
                AppSettings(kde_bandwidth_grid=[])
            assert "バンド幅の候補が空" in str(exc_info.value)

        def 非正のバンド幅は無効():
            with pytest.raises(ValidationError):
                AppSettings(kde_bandwidth_grid=[1.0, 0.0])

    def describe_ログレベル検証():
        def 小文字のdebugが大文字に変換される():
            settings = AppSettings(log_level="debug")
            assert settings.log_level == "DEBUG"

        def 無効なログレベルでエラーが発生する():
            with pytest.raises(ValidationError) as exc_info:
                AppSettings(log_level="INVALID")
            assert "ログレベルは" in str(exc_info.value)

    def describe_プリセット():
        def fullでは設定値のエポック数を使う():
            settings = AppSettings(search_epochs=3, finetune_epochs=4)
            assert settings.schedule() == (3, 4)

        def deskでは短いスケジュールになる():
            settings = AppSettings(preset="DESK")
            assert settings.preset == "desk"
            assert settings.schedule() == DESK_EPOCHS

        def 未知のプリセットは無効():
            with pytest.raises(ValidationError) as exc_info:
                AppSettings(preset="fast")
            assert "プリセットは" in str(exc_info.value)

    def describe_ディレクトリ():
        def 読み込みだけではキャッシュディレクトリを作らない(tmp_path: Path):
            settings = AppSettings(cache_dir=tmp_path / "a" / "cache")

            assert settings.cache_dir == tmp_path / "a" / "cache"
            assert not (tmp_path / "a").exists()


def describe_TrainingConfig():
    def 設定値からシードとスケジュールを引き継ぐ():
        settings = AppSettings(search_epochs=2, finetune_epochs=5, batch_size=16)

        cfg = TrainingConfig.from_settings(settings, seed=7)

        assert cfg.seed == 7
        assert cfg.batch_size == 16
        assert cfg.total_epochs == 7
        assert cfg.phases() == [("search", 2, 1e-4), ("finetune", 5, 1e-5)]

    def 変更できない():
        cfg = TrainingConfig()
        with pytest.raises(ValidationError):
            cfg.seed = 3


def describe_設定ファイル():
    def セクションが平坦化される():
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "settings.toml"
            path.write_text("[deep_sad]\neta = 2.0\n\n[training]\nbatch_size = 64\n", encoding="utf-8")

            values = read_config_file(path)

            assert values == {"eta": 2.0, "batch_size": 64}

    def 未知のキーはエラー():
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "settings.toml"
            path.write_text("[training]\nepochz = 3\n", encoding="utf-8")

            with pytest.raises(InvalidArgumentError) as exc_info:
                read_config_file(path)
            assert "epochz" in str(exc_info.value)

    def 壊れたTOMLはエラー():
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "settings.toml"
            path.write_text("[training\n", encoding="utf-8")

            with pytest.raises(InvalidArgumentError):
                read_config_file(path)

    def オーバーライドが設定ファイルより優先される():
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "settings.toml"
            path.write_text("[runtime]\nn_jobs = 2\nlog_level = \"DEBUG\"\n", encoding="utf-8")

            settings = load_settings(path, n_jobs=3, log_level=None)

            assert settings.n_jobs == 3
            assert settings.log_level == "DEBUG"
            assert get_settings() is settings

    def 不正な値はInvalidArgumentErrorになる():
        with pytest.raises(InvalidArgumentError):
            load_settings(None, n_jobs=0)


def describe_グローバル設定():
    def get_settingsは同じインスタンスを返す():
        assert get_settings() is get_settings()

    def reload_settingsで新しいインスタンスになる():
        before = get_settings()
        after = reload_settings()
        assert after is not before
        assert settings_module.settings is after
