import numpy as np
import pytest
from arenvq import ops
from arenvq import tensor as T
from arenvq.attention import AttentionParams, PixelAttention, attention_matrix, pixel_attention
from arenvq.errors import ContractError, ResourceError
from arenvq.gradcheck import grad_check
from arenvq.params import ParamStore
from arenvq.tensor import Tensor


@pytest.fixture
def attention(rng):
    store = ParamStore(np.float64)
    layer = PixelAttention(store, "attention", 3, 4, rng=rng)
    for conv in (layer.g1, layer.g2):
        conv.bias.data = rng.standard_normal(conv.bias.shape) * 0.1
    return layer


def test_weights_are_strictly_between_zero_and_one(rng):
    xp = Tensor(rng.standard_normal((2, 9, 4)))
    yp = Tensor(rng.standard_normal((2, 9, 4)))
    weights = attention_matrix(xp, yp).data
    assert weights.shape == (2, 9, 9)
    assert np.all(weights > 0) and np.all(weights < 1)


def test_output_shape(attention, rng):
    out = attention(Tensor(rng.standard_normal((2, 3, 3, 3))))
    assert out.shape == (2, 3, 3, 4)


def test_joint_pixel_permutation_is_equivariant(attention, rng):
    x = rng.standard_normal((1, 3, 3, 3))
    perm = rng.permutation(9)
    x_perm = x.reshape(1, 9, 3)[:, perm].reshape(1, 3, 3, 3)
    out = attention(Tensor(x)).data.reshape(1, 9, 4)
    out_perm = attention(Tensor(x_perm)).data.reshape(1, 9, 4)
    np.testing.assert_allclose(out_perm, out[:, perm], atol=1e-6)


def test_zero_projection_leaves_projected_input(attention, rng):
    attention.g2.weight.data = np.zeros_like(attention.g2.weight.data)
    attention.g2.bias.data = np.zeros_like(attention.g2.bias.data)
    x = Tensor(rng.standard_normal((1, 2, 3, 3)))
    expected = ops.conv2d(x, attention.g1.weight, attention.g1.bias)
    np.testing.assert_array_equal(attention(x).data, expected.data)


def test_pixel_budget(rng):
    store = ParamStore(np.float64)
    layer = PixelAttention(store, "attention", 2, 2, max_pixels=8, rng=rng)
    with pytest.raises(ResourceError) as info:
        layer(Tensor(np.zeros((1, 3, 3, 2))))
    assert isinstance(info.value, MemoryError)
    assert layer(Tensor(np.zeros((1, 2, 4, 2)))).shape == (1, 2, 4, 2)


def test_cross_attention_uses_second_input(attention, rng):
    x = Tensor(rng.standard_normal((1, 2, 2, 3)))
    y = Tensor(rng.standard_normal((1, 2, 2, 3)))
    assert not np.allclose(attention(x, y).data, attention(x).data)
    with pytest.raises(ContractError):
        attention(x, Tensor(np.zeros((1, 3, 3, 3))))


def test_gradients(attention, rng):
    x = rng.standard_normal((1, 3, 3, 3)) * 0.5
    r = rng.standard_normal((1, 3, 3, 4))

    def wrt_x(t):
        return T.sum(attention(t) * r)

    def wrt_g1(w):
        params = attention.params
        params.g1_weight, original = w, params.g1_weight
        try:
            return T.sum(pixel_attention(Tensor(x), Tensor(x), params) * r)
        finally:
            params.g1_weight = original

    assert grad_check(wrt_x, x, eps=1e-5) < 1e-4
    assert grad_check(wrt_g1, attention.g1.weight.data, eps=1e-5) < 1e-4


def _sigmoid(v):
    return 1.0 / (1.0 + np.exp(-v))


def test_single_pixel_single_channel():
    params = AttentionParams(Tensor(np.full((1, 1, 1, 1), 2.0)), Tensor(np.zeros(1)),
                             Tensor(np.full((1, 1, 1, 1), 3.0)), Tensor(np.zeros(1)))
    one = Tensor(np.ones((1, 1, 1, 1)))
    out = pixel_attention(one, one, params).item()
    assert out == pytest.approx(2.0 + 3.0 * _sigmoid(6.0))
    assert out == pytest.approx(4.99259, abs=1e-5)


def test_two_pixel_attention_matrix():
    xp = Tensor(np.array([[[1.0], [2.0]]]))
    yp = Tensor(np.array([[[3.0], [4.0]]]))
    expected = _sigmoid(np.array([[[3.0, 4.0], [6.0, 8.0]]]))
    np.testing.assert_allclose(attention_matrix(xp, yp).data, expected, rtol=1e-12)
