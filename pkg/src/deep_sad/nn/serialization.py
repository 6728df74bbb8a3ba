"""モデルファイルの入れ物（エンベロープ）。

形式:
    マジック 8 バイト | 形式版数 uint32 LE | ヘッダ長 uint64 LE |
    ヘッダ JSON (UTF-8) | 配列値 float64 LE（ヘッダで宣言した順）

ヘッダには層仕様・配列名と形状・モデル種別・メタデータを持つ。
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ValidationError

from deep_sad.exceptions import ModelFileError
from deep_sad.nn.layers import FloatArray
from deep_sad.nn.network import Network
from deep_sad.nn.spec import LayerSpec

MAGIC = b"DSADMDL\x00"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")
_VALUE_DTYPE = np.dtype("<f8")


class ArrayEntry(BaseModel):
    """ペイロード内の1配列。"""

    name: str
    shape: list[int]


class ModelHeader(BaseModel):
    """モデルファイルのヘッダ。"""

    format_version: int
    kind: str
    networks: dict[str, list[LayerSpec]]
    arrays: list[ArrayEntry]
    metadata: dict[str, Any]


@dataclass
class Envelope:
    """読み書きされるモデルの中身。

    Attributes
    ----------
        kind: モデル種別タグ
        networks: 名前付きネットワーク（"phi", "encoder" など）
        arrays: ネットワーク以外の配列（中心 c など）
        metadata: JSON で表せる付随情報（η, λ など）

    """

    kind: str
    networks: dict[str, Network] = field(default_factory=dict)
    arrays: dict[str, FloatArray] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)


def write_envelope(path: Path, envelope: Envelope) -> None:
    """エンベロープをファイルに書き出す。

    Raises
    ------
        ModelFileError: 書き込みに失敗した場合

    """
    entries: list[ArrayEntry] = []
    payload: list[FloatArray] = []
    for net_name, net in envelope.networks.items():
        for name, value in net.get_state().items():
            entries.append(ArrayEntry(name=f"{net_name}/{name}", shape=list(value.shape)))
            payload.append(value)
    for name, value in envelope.arrays.items():
        array = np.asarray(value, dtype=np.float64)
        entries.append(ArrayEntry(name=name, shape=list(array.shape)))
        payload.append(array)

    header = ModelHeader(
        format_version=FORMAT_VERSION,
        kind=envelope.kind,
        networks={name: net.specs() for name, net in envelope.networks.items()},
        arrays=entries,
        metadata=envelope.metadata,
    )
    header_bytes = header.model_dump_json().encode("utf-8")

    try:
        with open(path, "wb") as f:
            f.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)))
            f.write(header_bytes)
            for array in payload:
                f.write(np.ascontiguousarray(array, dtype=_VALUE_DTYPE).tobytes())
    except OSError as e:
        raise ModelFileError(f"モデルファイルを書き込めません: {path}: {e}", e) from e


def read_envelope(path: Path) -> Envelope:
    """モデルファイルを読み込む。

    Raises
    ------
        ModelFileError: 形式が不正・版数が未対応・長さが不足している場合

    """
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ModelFileError(f"モデルファイルを読み込めません: {path}: {e}", e) from e

    if len(raw) < _PREFIX.size:
        raise ModelFileError(f"モデルファイルが短すぎます: {path}")
    magic, version, header_len = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise ModelFileError(f"モデルファイルではありません: {path}")
    if version != FORMAT_VERSION:
        raise ModelFileError(f"未対応の形式版数です: {version}")

    offset = _PREFIX.size
    try:
        header = ModelHeader.model_validate_json(raw[offset : offset + header_len])
    except ValidationError as e:
        raise ModelFileError(f"モデルファイルのヘッダが不正です: {path}", e) from e
    offset += header_len

    values: dict[str, FloatArray] = {}
    for entry in header.arrays:
        count = int(np.prod(entry.shape, dtype=np.int64))
        end = offset + count * _VALUE_DTYPE.itemsize
        if end > len(raw):
            raise ModelFileError(f"モデルファイルが途中で切れています: {entry.name}")
        array = np.frombuffer(raw, dtype=_VALUE_DTYPE, count=count, offset=offset)
        values[entry.name] = array.astype(np.float64).reshape(entry.shape)
        offset = end

    networks: dict[str, Network] = {}
    rng = np.random.default_rng(0)
    for net_name, specs in header.networks.items():
        net = Network.from_specs(specs, rng)
        prefix = f"{net_name}/"
        net.set_state(
            {name[len(prefix) :]: v for name, v in values.items() if name.startswith(prefix)}
        )
        networks[net_name] = net

    network_prefixes = tuple(f"{name}/" for name in header.networks)
    arrays = {name: v for name, v in values.items() if not name.startswith(network_prefixes)}
    return Envelope(header.kind, networks, arrays, header.metadata)
