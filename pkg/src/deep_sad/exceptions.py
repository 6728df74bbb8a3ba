"""カスタム例外。

パッケージ全体で送出する例外は DeepSadError を基底とする。
CLI は例外の種類で終了コードを決める（usage系は2、実行時系は3）。
"""


class DeepSadError(Exception):
    """本パッケージの例外基底クラス。"""

    def __init__(self, message: str, original_error: Exception | None = None):
        """エラーを初期化。

        Args:
        ----
            message: エラーメッセージ
            original_error: 元の例外

        """
        super().__init__(message)
        self.original_error = original_error


class InvalidArgumentError(DeepSadError, ValueError):
    """引数が事前条件を満たさない。"""


class ShapeError(DeepSadError, ValueError):
    """行列の次元が一致しない。"""


class InvalidStateError(DeepSadError, RuntimeError):
    """オブジェクトの状態が操作と整合しない（古いテープ等）。"""


class NumericError(DeepSadError, ArithmeticError):
    """非有限値が発生した。"""

    def __init__(
        self,
        message: str,
        parameter: str | None = None,
        original_error: Exception | None = None,
    ):
        """エラーを初期化。

        Args:
        ----
            message: エラーメッセージ
            parameter: 非有限値を含んだパラメータ名
            original_error: 元の例外

        """
        super().__init__(message, original_error)
        self.parameter = parameter


class TrainingError(DeepSadError, RuntimeError):
    """学習が発散した。"""

    def __init__(self, message: str, epoch: int, original_error: Exception | None = None):
        """エラーを初期化。

        Args:
        ----
            message: エラーメッセージ
            epoch: 発散したエポック番号（0始まり）
            original_error: 元の例外

        """
        super().__init__(message, original_error)
        self.epoch = epoch


class DataFormatError(DeepSadError, ValueError):
    """入力ファイルの形式が不正。"""

    def __init__(
        self,
        message: str,
        row: int | None = None,
        column: str | None = None,
        original_error: Exception | None = None,
    ):
        """エラーを初期化。

        Args:
        ----
            message: エラーメッセージ
            row: 問題のある行番号（ヘッダを1行目とする）
            column: 問題のある列名

        """
        super().__init__(message, original_error)
        self.row = row
        self.column = column


class ScenarioInfeasibleError(DeepSadError):
    """要求されたシナリオをデータプールから構成できない。"""

    def __init__(self, message: str, requested: int, available: int):
        """エラーを初期化。

        Args:
        ----
            message: エラーメッセージ
            requested: 要求されたサンプル数
            available: 利用可能なサンプル数

        """
        super().__init__(message)
        self.requested = requested
        self.available = available


class UndefinedMetricError(DeepSadError, ValueError):
    """片方のラベルしか存在せず指標が定義できない。"""


class InsufficientDataError(DeepSadError, ValueError):
    """検定に必要なデータ数が足りない。"""


class ModelFileError(DeepSadError):
    """モデルファイルの読み書きに失敗した。"""
