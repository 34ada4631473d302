"""
PatchGAN discriminator and the adversarial losses.

Six 3x3 convolutions with filters (128, 128, 128, 64, 64, 1) and strides
(2, 2, 2, 1, 1, 1); every layer but the last is followed by BatchNorm and a
LeakyReLU(0.1). The output is a grid of raw per-patch logits at 1/8 of the
input resolution.
"""
import numpy as np
from arenvq import ops
from arenvq.blocks import ALPHA
from arenvq.errors import ContractError
from arenvq.layers import BatchNorm, Conv2D
from arenvq.params import ParamStore
from arenvq.util import derive_seed


class DiscriminatorSpec(object):
    def __init__(self, filters=(128, 128, 128, 64, 64, 1), strides=(2, 2, 2, 1, 1, 1),
                 kernel=(3, 3), alpha=ALPHA):
        if len(filters) != len(strides):
            raise ContractError("Discriminator needs one stride per conv layer")
        if filters[-1] != 1:
            raise ContractError("Discriminator must end in a single logit channel")
        self.filters = tuple(filters)
        self.strides = tuple(strides)
        self.kernel = tuple(kernel)
        self.alpha = alpha

    @property
    def downsample(self):
        return int(np.prod(self.strides))


class PatchDiscriminator(object):
    def __init__(self, spec=None, in_channels=3, dtype=np.float32, seed=0):
        self.spec = spec or DiscriminatorSpec()
        self.params = ParamStore(dtype)
        rng = np.random.default_rng(seed)
        self.convs = []
        self.norms = []
        channels = in_channels
        last = len(self.spec.filters) - 1
        for i, (filters, stride) in enumerate(zip(self.spec.filters, self.spec.strides)):
            name = "disc.layer{}".format(i)
            self.convs.append(Conv2D(self.params, name + ".conv", channels, filters,
                self.spec.kernel, (stride, stride), rng=rng))
            if i < last:
                self.norms.append(BatchNorm(self.params, name + ".bn", filters))
            channels = filters

    @classmethod
    def from_run_config(cls, config):
        """The discriminator judges RGB images, whatever the generator input is."""
        return cls(in_channels=3, dtype=config.dtype, seed=derive_seed(config.train.seed, 1))

    def train(self):
        self.params.training = True
        return self

    def eval(self):
        self.params.training = False
        return self

    def param_count(self):
        return self.params.count()

    def __call__(self, img):
        return discriminate(img, self)


def discriminate(img, disc):
    """Raw patch logits (b, h/8, w/8, 1)."""
    h = img
    for i, conv in enumerate(disc.convs):
        h = conv(h)
        if i < len(disc.norms):
            h = ops.leaky_relu(disc.norms[i](h), disc.spec.alpha)
    return h


def discriminator_loss(real_logits, fake_logits):
    return ops.bce_with_logits(real_logits, 1.0) + ops.bce_with_logits(fake_logits, 0.0)


def generator_loss(fake_logits):
    return ops.bce_with_logits(fake_logits, 1.0)


def gan_losses(real_logits, fake_logits):
    """(d_loss, g_loss) as per-patch binary cross-entropy with logits."""
    if real_logits.shape != fake_logits.shape:
        raise ContractError("Real and fake logits differ in shape: {} vs {}"
            .format(real_logits.shape, fake_logits.shape))
    return discriminator_loss(real_logits, fake_logits), generator_loss(fake_logits)
