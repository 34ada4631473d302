import numpy as np
import pytest
from arenvq import ops
from arenvq.adversarial import (DiscriminatorSpec, PatchDiscriminator, discriminator_loss,
    gan_losses, generator_loss)
from arenvq.errors import ContractError
from arenvq.gradcheck import grad_check
from arenvq.tensor import Tensor


@pytest.fixture(scope="module")
def discriminator():
    return PatchDiscriminator(dtype=np.float64)


def test_parameter_counts(discriminator):
    assert sum(conv.param_count() for conv in discriminator.convs) == 410049
    assert discriminator.param_count() == 411073
    assert len(discriminator.norms) == 5


def test_running_stats_are_not_trainable(discriminator):
    names = [name for name in discriminator.params if "running" in name]
    assert len(names) == 10
    assert not any(discriminator.params.is_trainable(name) for name in names)


def test_patch_logits_are_one_eighth_size(discriminator, rng):
    logits = discriminator(Tensor(rng.uniform(size=(2, 16, 24, 3))))
    assert logits.shape == (2, 2, 3, 1)


def test_discriminator_spec_rejects_bad_layouts():
    with pytest.raises(ContractError):
        DiscriminatorSpec(filters=(8, 1), strides=(2,))
    with pytest.raises(ContractError):
        DiscriminatorSpec(filters=(8, 2), strides=(2, 1))
    assert DiscriminatorSpec().downsample == 8


def test_gan_losses_at_zero_logits():
    zeros = Tensor(np.zeros((2, 2, 2, 1)))
    d_loss, g_loss = gan_losses(zeros, zeros)
    assert d_loss.item() == pytest.approx(2 * np.log(2.0))
    assert g_loss.item() == pytest.approx(np.log(2.0))


def test_confident_discriminator_has_small_loss():
    real = Tensor(np.full((1, 2, 2, 1), 20.0))
    fake = Tensor(np.full((1, 2, 2, 1), -20.0))
    assert discriminator_loss(real, fake).item() < 1e-6
    assert generator_loss(fake).item() == pytest.approx(20.0, abs=1e-6)


def test_gan_losses_need_matching_shapes():
    with pytest.raises(ContractError):
        gan_losses(Tensor(np.zeros((1, 2, 2, 1))), Tensor(np.zeros((1, 4, 4, 1))))


def test_bce_gradient(rng):
    logits = rng.standard_normal((2, 3, 3, 1)) * 3

    def f(t):
        return ops.bce_with_logits(t, 1.0) + ops.bce_with_logits(t * 0.5, 0.0)

    assert grad_check(f, logits, eps=1e-5) < 1e-4


def test_discriminator_weights_get_gradients(rng):
    disc = PatchDiscriminator(DiscriminatorSpec(filters=(4, 4, 1), strides=(2, 2, 2)),
        dtype=np.float64, seed=7)
    real = disc(Tensor(rng.uniform(size=(2, 16, 16, 3))))
    fake = disc(Tensor(rng.uniform(size=(2, 16, 16, 3))))
    discriminator_loss(real, fake).backward()
    for name, tensor in disc.params.trainable():
        assert tensor.grad is not None, name
