"""全結合ニューラルネットワークエンジン。"""

from deep_sad.nn.layers import BatchNormScale, DenseLayer, LeakyRelu, Parameter, glorot_init
from deep_sad.nn.network import Mode, Network, Tape
from deep_sad.nn.optim import AdamState, adam_step
from deep_sad.nn.spec import LayerKind, LayerSpec

__all__ = [
    "AdamState",
    "BatchNormScale",
    "DenseLayer",
    "LayerKind",
    "LayerSpec",
    "LeakyRelu",
    "Mode",
    "Network",
    "Parameter",
    "Tape",
    "adam_step",
    "glorot_init",
]
