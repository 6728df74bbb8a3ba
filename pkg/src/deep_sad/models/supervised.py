"""二値交差エントロピーで学習する教師あり分類器。"""

from dataclasses import dataclass
from typing import ClassVar

from numpy.typing import ArrayLike
from scipy.special import expit

from deep_sad.exceptions import ModelFileError
from deep_sad.models.base import as_batch
from deep_sad.nn.layers import FloatArray
from deep_sad.nn.network import Network
from deep_sad.nn.serialization import Envelope


@dataclass
class SupervisedClassifier:
    """φ の構造にスカラー出力を足した分類器。

    ロジット z は「正常」のロジットで、異常スコアは σ(−z)（異常である確率）。
    """

    net: Network
    weight_decay: float = 1e-6

    kind: ClassVar[str] = "supervised"

    @property
    def input_dim(self) -> int:
        return self.net.input_dim

    def score(self, x: ArrayLike) -> FloatArray:
        logits = self.net.predict(as_batch(x, self.input_dim))[:, 0]
        return expit(-logits)

    def to_envelope(self) -> Envelope:
        return Envelope(self.kind, {"net": self.net}, {}, {"weight_decay": self.weight_decay})

    @classmethod
    def from_envelope(cls, envelope: Envelope) -> "SupervisedClassifier":
        try:
            return cls(envelope.networks["net"], float(envelope.metadata["weight_decay"]))
        except KeyError as e:
            raise ModelFileError(f"分類器の内容が不足しています: {e}", e) from e
