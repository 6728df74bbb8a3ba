"""全ての検知器のモデルファイル保存・読み込み。"""

import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any

from deep_sad.baselines.hybrid import HybridModel
from deep_sad.baselines.iforest import IsolationForest
from deep_sad.baselines.kde import KdeModel
from deep_sad.exceptions import ModelFileError
from deep_sad.models.autoencoder import Autoencoder
from deep_sad.models.base import Detector
from deep_sad.models.deep_sad import DeepSadModel, HypersphereKind
from deep_sad.models.supervised import SupervisedClassifier
from deep_sad.nn.serialization import Envelope, read_envelope, write_envelope

logger = logging.getLogger(__name__)

_LOADERS: dict[str, Callable[[Envelope], Detector]] = {
    **{str(kind): DeepSadModel.from_envelope for kind in HypersphereKind},
    SupervisedClassifier.kind: SupervisedClassifier.from_envelope,
    Autoencoder.kind: Autoencoder.from_envelope,
    KdeModel.kind: KdeModel.from_envelope,
    IsolationForest.kind: IsolationForest.from_envelope,
    "hybrid-kde": HybridModel.from_envelope,
    "hybrid-iforest": HybridModel.from_envelope,
}


def save_detector(path: Path, detector: Detector, metadata: dict[str, Any] | None = None) -> None:
    """検知器をモデルファイルに書き出す。metadata は付随情報として追記する。"""
    envelope = detector.to_envelope()
    if metadata:
        envelope.metadata = {**envelope.metadata, "run": metadata}
    write_envelope(path, envelope)
    logger.info("モデルを保存しました: %s (%s)", path, envelope.kind)


def load_detector(path: Path) -> Detector:
    """モデルファイルから検知器を復元する。

    Raises
    ------
        ModelFileError: ファイルが不正、または種別が未知の場合

    """
    envelope = read_envelope(path)
    loader = _LOADERS.get(envelope.kind)
    if loader is None:
        raise ModelFileError(f"未知のモデル種別です: {envelope.kind}")
    return loader(envelope)


def load_run_metadata(path: Path) -> dict[str, Any]:
    """save_detector で記録した付随情報。"""
    run = read_envelope(path).metadata.get("run", {})
    return dict(run) if isinstance(run, dict) else {}
