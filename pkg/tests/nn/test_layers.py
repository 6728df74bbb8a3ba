"""層のテスト。"""

import math

import numpy as np
import pytest
from deep_sad.exceptions import InvalidArgumentError, ShapeError
from deep_sad.nn.layers import BatchNormScale, DenseLayer, LeakyRelu, glorot_init


def describe_glorot_init():
    def 形状と範囲が正しい(rng: np.random.Generator):
        weights = glorot_init(3, 5, rng)

        assert weights.shape == (5, 3)
        assert np.abs(weights).max() <= math.sqrt(6.0 / 8.0)

    def 分散はおよそ2割るファンの和(rng: np.random.Generator):
        weights = glorot_init(200, 300, rng)

        assert weights.var() == pytest.approx(2.0 / 500.0, rel=0.05)

    def ファンが0ならエラー(rng: np.random.Generator):
        with pytest.raises(InvalidArgumentError):
            glorot_init(0, 4, rng)


def describe_DenseLayer():
    def バイアスなしでxWᵀを計算する():
        layer = DenseLayer(np.array([[1.0, 2.0], [0.0, -1.0], [3.0, 0.5]]))

        out, _ = layer.forward(np.array([[1.0, 1.0]]), training=True)

        np.testing.assert_array_equal(out, [[3.0, -1.0, 3.5]])
        assert [p.name for p in layer.parameters()] == ["weight"]

    def バイアスは重み減衰の対象外():
        layer = DenseLayer(np.zeros((2, 3)), np.array([1.0, -1.0]))

        out, _ = layer.forward(np.zeros((1, 3)), training=False)

        np.testing.assert_array_equal(out, [[1.0, -1.0]])
        assert [(p.name, p.decay) for p in layer.parameters()] == [("weight", True), ("bias", False)]

    def 形状の合わないバイアスはエラー():
        with pytest.raises(ShapeError):
            DenseLayer(np.zeros((2, 3)), np.zeros(3))

    def 逆伝播の勾配が解析解と一致する():
        weights = np.array([[1.0, 2.0], [3.0, 4.0]])
        layer = DenseLayer(weights)
        x = np.array([[1.0, -1.0]])
        _, cache = layer.forward(x, training=True)

        grad_input, (grad_weight,) = layer.backward(np.array([[1.0, 0.0]]), cache)

        np.testing.assert_array_equal(grad_input, [[1.0, 2.0]])
        np.testing.assert_array_equal(grad_weight, [[1.0, -1.0], [0.0, 0.0]])


def describe_LeakyRelu():
    def 負の入力にα倍を掛ける():
        layer = LeakyRelu(2, 0.1)

        out, cache = layer.forward(np.array([[-2.0, 3.0]]), training=True)
        grad, params = layer.backward(np.ones((1, 2)), cache)

        np.testing.assert_allclose(out, [[-0.2, 3.0]])
        np.testing.assert_allclose(grad, [[0.1, 1.0]])
        assert params == []

    def 零での微分はα():
        layer = LeakyRelu(1, 0.2)
        _, cache = layer.forward(np.zeros((1, 1)), training=True)

        grad, _ = layer.backward(np.ones((1, 1)), cache)

        assert grad[0, 0] == pytest.approx(0.2)

    @pytest.mark.parametrize("leakiness", [0.0, 1.0, -0.1])
    def 範囲外の傾きはエラー(leakiness: float):
        with pytest.raises(InvalidArgumentError):
            LeakyRelu(2, leakiness)


def describe_BatchNormScale():
    def 学習モードでは正規化後の平均が0になる(rng: np.random.Generator):
        layer = BatchNormScale(3)
        x = rng.normal(loc=5.0, scale=2.0, size=(50, 3))

        out, _ = layer.forward(x, training=True)

        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-6)

    def 分散4のバッチは分散1に正規化される():
        layer = BatchNormScale(1)
        x = np.array([[-2.0], [2.0], [-2.0], [2.0]])

        out, _ = layer.forward(x, training=True)

        assert out.var() == pytest.approx(1.0, abs=1e-6)

    def 移動統計はmomentumで更新される():
        layer = BatchNormScale(1)
        x = np.array([[1.0], [3.0]])

        layer.forward(x, training=True)

        assert layer.running_mean[0] == pytest.approx(0.1 * 2.0)
        assert layer.running_var[0] == pytest.approx(0.9 * 1.0 + 0.1 * 1.0)

    def 推論モードは移動統計を使いバッチサイズ1でもよい():
        layer = BatchNormScale(1, running_mean=np.array([2.0]), running_var=np.array([4.0]))

        out, _ = layer.forward(np.array([[6.0]]), training=False)

        assert out[0, 0] == pytest.approx(2.0, rel=1e-6)

    def 学習モードでバッチサイズ1はエラー():
        with pytest.raises(InvalidArgumentError):
            BatchNormScale(2).forward(np.zeros((1, 2)), training=True)

    def スケールのみが学習対象():
        layer = BatchNormScale(2)

        assert [p.name for p in layer.parameters()] == ["scale"]
        assert set(layer.buffers()) == {"running_mean", "running_var"}
