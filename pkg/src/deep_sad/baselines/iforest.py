"""Isolation Forest。

各木は ψ 行（データが少なければ全行）を非復元抽出して作り、高さを ⌈log₂ψ⌉ で打ち切る。
打ち切られた葉の経路長には c(葉のサイズ) を加える。
"""

import logging
import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import ArrayLike, NDArray

from deep_sad.exceptions import InvalidArgumentError, ModelFileError, ShapeError
from deep_sad.models.base import as_batch
from deep_sad.nn.layers import FloatArray
from deep_sad.nn.serialization import Envelope

logger = logging.getLogger(__name__)

EXACT_HARMONIC_LIMIT = 512
_HARMONIC = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, EXACT_HARMONIC_LIMIT + 1))])

IntArray = NDArray[np.int64]


def average_path_length(n: ArrayLike) -> FloatArray:
    """サイズ n の二分探索木での失敗探索の平均経路長 c(n)。

    c(n) = 2H(n−1) − 2(n−1)/n、c(n≤1)=0。H は n ≤ 512 で厳密な調和数、
    それより大きい n ではオイラー定数による近似を使う。
    """
    sizes = np.asarray(n, dtype=np.float64)
    out = np.zeros_like(sizes)
    exact = (sizes > 1) & (sizes <= EXACT_HARMONIC_LIMIT)
    approx = sizes > EXACT_HARMONIC_LIMIT
    exact_n = sizes[exact]
    out[exact] = 2.0 * _HARMONIC[exact_n.astype(np.int64) - 1] - 2.0 * (exact_n - 1.0) / exact_n
    approx_n = sizes[approx]
    out[approx] = 2.0 * (np.log(approx_n - 1.0) + np.euler_gamma) - 2.0 * (approx_n - 1.0) / approx_n
    return out


@dataclass
class IsolationTree:
    """配列表現の分離木。葉は feature = −1。"""

    feature: IntArray
    threshold: FloatArray
    left: IntArray
    right: IntArray
    size: IntArray
    depth: IntArray

    def path_lengths(self, x: FloatArray) -> FloatArray:
        """行ごとの経路長 h(x)（葉での c(size) 補正込み）。左は x[f] < 閾値。"""
        node = np.zeros(x.shape[0], dtype=np.int64)
        active = np.nonzero(self.feature[node] >= 0)[0]
        while active.size:
            current = node[active]
            goes_left = x[active, self.feature[current]] < self.threshold[current]
            node[active] = np.where(goes_left, self.left[current], self.right[current])
            active = active[self.feature[node[active]] >= 0]
        return self.depth[node] + average_path_length(self.size[node])

    def arrays(self) -> dict[str, FloatArray]:
        return {
            name: np.asarray(getattr(self, name), dtype=np.float64)
            for name in ("feature", "threshold", "left", "right", "size", "depth")
        }

    @classmethod
    def from_arrays(cls, arrays: dict[str, FloatArray]) -> "IsolationTree":
        ints = {k: np.asarray(arrays[k]).astype(np.int64) for k in ("feature", "left", "right", "size", "depth")}
        return cls(threshold=np.asarray(arrays["threshold"], dtype=np.float64), **ints)


def build_tree(data: FloatArray, subsample: int, rng: np.random.Generator) -> IsolationTree:
    """1本の分離木を作る。

    節点では特徴をランダムな順に試し、最初の非定数特徴で [min, max) から一様に閾値を選ぶ。
    全特徴が定数の節点は葉になる。
    """
    n_rows, n_features = data.shape
    sample_size = min(subsample, n_rows)
    sample = data[rng.choice(n_rows, size=sample_size, replace=False)]
    height_limit = math.ceil(math.log2(sample_size)) if sample_size > 1 else 0

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    size: list[int] = []
    depth: list[int] = []

    def new_node(rows: int, level: int) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        size.append(rows)
        depth.append(level)
        return len(feature) - 1

    stack = [(new_node(sample_size, 0), np.arange(sample_size))]
    while stack:
        node, rows = stack.pop()
        level = depth[node]
        if level >= height_limit or rows.size <= 1:
            continue
        values = sample[rows]
        for f in rng.permutation(n_features):
            lo, hi = float(values[:, f].min()), float(values[:, f].max())
            if hi > lo:
                split = max(float(rng.uniform(lo, hi)), float(np.nextafter(lo, hi)))
                goes_left = values[:, f] < split
                feature[node] = int(f)
                threshold[node] = split
                left[node] = new_node(int(goes_left.sum()), level + 1)
                right[node] = new_node(int((~goes_left).sum()), level + 1)
                stack.append((left[node], rows[goes_left]))
                stack.append((right[node], rows[~goes_left]))
                break

    return IsolationTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        size=np.asarray(size, dtype=np.int64),
        depth=np.asarray(depth, dtype=np.int64),
    )


@dataclass
class IsolationForest:
    """分離木の集合。

    Attributes
    ----------
        trees: 分離木
        subsample: 実際に使ったサブサンプルサイズ min(ψ, n)
        n_features: 入力次元
        seed: 構築に使った乱数シード

    """

    trees: list[IsolationTree]
    subsample: int
    n_features: int
    seed: int = 0

    kind: ClassVar[str] = "iforest"

    @property
    def input_dim(self) -> int:
        return self.n_features

    def mean_path_length(self, x: ArrayLike) -> FloatArray:
        batch = as_batch(x, self.input_dim)
        return np.mean([tree.path_lengths(batch) for tree in self.trees], axis=0)

    def score(self, x: ArrayLike) -> FloatArray:
        """2^{−E[h(x)]/c(ψ)}。値域は (0, 1]。"""
        normalizer = float(average_path_length(self.subsample))
        if normalizer == 0.0:
            normalizer = 1.0
        return np.power(2.0, -self.mean_path_length(x) / normalizer)

    def to_envelope(self) -> Envelope:
        arrays = {
            f"tree/{i}/{name}": value
            for i, tree in enumerate(self.trees)
            for name, value in tree.arrays().items()
        }
        metadata = {
            "n_trees": len(self.trees),
            "subsample": self.subsample,
            "n_features": self.n_features,
            "seed": self.seed,
        }
        return Envelope(self.kind, arrays=arrays, metadata=metadata)

    @classmethod
    def from_envelope(cls, envelope: Envelope) -> "IsolationForest":
        try:
            meta = envelope.metadata
            trees = []
            for i in range(int(meta["n_trees"])):
                prefix = f"tree/{i}/"
                trees.append(
                    IsolationTree.from_arrays(
                        {k[len(prefix) :]: v for k, v in envelope.arrays.items() if k.startswith(prefix)}
                    )
                )
            return cls(trees, int(meta["subsample"]), int(meta["n_features"]), int(meta["seed"]))
        except KeyError as e:
            raise ModelFileError(f"Isolation Forest の内容が不足しています: {e}", e) from e


def iforest_fit(
    data: ArrayLike,
    n_trees: int = 100,
    subsample: int = 256,
    seed: int = 0,
    n_jobs: int = 1,
) -> IsolationForest:
    """Isolation Forest を構築する。木ごとの乱数は seed から派生させる。

    Raises
    ------
        InvalidArgumentError: データが空、または n_trees・subsample が不正な場合

    """
    points = np.asarray(data, dtype=np.float64)
    if points.ndim != 2:
        raise ShapeError(f"学習データは2次元の行列である必要があります: {points.shape}")
    if points.shape[0] == 0:
        raise InvalidArgumentError("学習データが空です")
    if n_trees < 1 or subsample < 1:
        raise InvalidArgumentError(f"木の数とサブサンプルサイズは1以上である必要があります: {n_trees}, {subsample}")

    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    trees = Parallel(n_jobs=n_jobs)(
        delayed(build_tree)(points, subsample, np.random.default_rng(s)) for s in seeds
    )
    logger.info("Isolation Forest を構築: 木 %d 本, ψ=%d", n_trees, min(subsample, points.shape[0]))
    return IsolationForest(list(trees), min(subsample, points.shape[0]), points.shape[1], seed)
