import numpy as np
import pytest
from arenvq import tensor as T
from arenvq.blocks import BaseEncoder, BlockConfig, ConvResBlock, IdResBlock, residual_stack
from arenvq.errors import ContractError
from arenvq.gradcheck import grad_check
from arenvq.params import ParamStore
from arenvq.tensor import Tensor


@pytest.fixture
def store():
    return ParamStore(np.float64)


def test_id_block_keeps_shape_and_counts_params(store, rng):
    block = IdResBlock(store, "block", 5, rng=rng)
    assert block(Tensor(rng.standard_normal((2, 4, 4, 5)))).shape == (2, 4, 4, 5)
    assert block.param_count() == 2 * 5 + 3 * 3 * 5 * 5 + 5


def test_id_block_rejects_width_change(store):
    with pytest.raises(ContractError):
        IdResBlock(store, "block", 5, BlockConfig(6))
    block = IdResBlock(store, "other", 5)
    with pytest.raises(ContractError):
        block(Tensor(np.zeros((1, 4, 4, 3))))


@pytest.mark.parametrize("size,expected", [(4, 2), (5, 3)])
def test_conv_block_halves_with_ceiling(store, rng, size, expected):
    block = ConvResBlock(store, "block", 3, BlockConfig(6, stride=(2, 2)), rng=rng)
    out = block(Tensor(rng.standard_normal((2, size, size, 3))))
    assert out.shape == (2, expected, expected, 6)


def test_conv_block_needs_stride_two(store):
    with pytest.raises(ContractError):
        ConvResBlock(store, "block", 3, BlockConfig(6))


def test_residual_stack_names_and_strides(store, rng):
    blocks = residual_stack(store, "encoder.level2", 4, (6, 6, 6), strided=2, rng=rng)
    assert [type(b).__name__ for b in blocks] == ["ConvResBlock", "ConvResBlock", "IdResBlock"]
    assert "encoder.level2.block2.conv.weight" in store
    with pytest.raises(ContractError):
        residual_stack(store, "too.many", 4, (6,), strided=2)


def test_base_encoder_downsamples_by_four(store, rng):
    encoder = BaseEncoder(store, 3, latent_dim=7, filters=(4, 4, 4), rng=rng)
    assert encoder(Tensor(rng.uniform(size=(1, 16, 12, 3)))).shape == (1, 4, 3, 7)
    with pytest.raises(ContractError):
        encoder(Tensor(np.zeros((1, 10, 12, 3))))
    with pytest.raises(ContractError):
        encoder(Tensor(np.zeros((1, 16, 16, 4))))


def test_id_block_gradients(store, rng):
    block = IdResBlock(store, "block", 2, rng=rng)
    r = rng.standard_normal((2, 3, 3, 2))

    def f(t):
        return T.sum(block(t) * r)

    assert grad_check(f, rng.standard_normal((2, 3, 3, 2)), eps=1e-5) < 1e-4


def test_conv_block_gradients(store, rng):
    block = ConvResBlock(store, "block", 2, BlockConfig(3, stride=(2, 2)), rng=rng)
    r = rng.standard_normal((2, 3, 3, 3))

    def f(t):
        return T.sum(block(t) * r)

    def wrt_shortcut(w):
        original = block.shortcut.weight
        block.shortcut.weight = w
        try:
            return T.sum(block(Tensor(x)) * r)
        finally:
            block.shortcut.weight = original

    x = rng.standard_normal((2, 5, 5, 2))
    assert grad_check(f, x, eps=1e-5) < 1e-4
    assert grad_check(wrt_shortcut, block.shortcut.weight.data, eps=1e-5) < 1e-4


def test_zero_weight_blocks(store, rng):
    block = IdResBlock(store, "id", 3, rng=rng)
    strided = ConvResBlock(store, "strided", 3, BlockConfig(4, stride=(2, 2)), rng=rng)
    for conv in (block.conv, strided.conv, strided.shortcut):
        conv.weight.data = np.zeros_like(conv.weight.data)
    x = rng.standard_normal((2, 6, 6, 3))
    np.testing.assert_array_equal(block(Tensor(x)).data, x)
    np.testing.assert_array_equal(strided(Tensor(x)).data, np.zeros((2, 3, 3, 4)))


def test_base_encoder_param_count(store):
    encoder = BaseEncoder(store, 3, latent_dim=8, filters=(4, 6, 6))
    expected = ((2 * 3 + 2 * (9 * 3 * 4 + 4))
        + (2 * 4 + 2 * (9 * 4 * 6 + 6))
        + (2 * 6 + 9 * 6 * 6 + 6)
        + (6 * 8 + 8))
    assert encoder.param_count() == expected == store.count()
