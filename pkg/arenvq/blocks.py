"""
Residual blocks and the base residual encoder.

Id-ResBlock:   x + Conv3x3(LeakyReLU(BN(x)))                      same shape
Conv-ResBlock: Conv3x3/2(LeakyReLU(BN(x))) + Conv3x3/2(x)         half size
"""
from arenvq import ops
from arenvq.errors import ContractError
from arenvq.layers import BatchNorm, Conv2D

ALPHA = 0.1
BASE_FILTERS = (128, 128, 128)


class BlockConfig(object):
    def __init__(self, filters, alpha=ALPHA, stride=(1, 1), kernel=(3, 3)):
        self.filters = filters
        self.alpha = alpha
        self.stride = tuple(stride)
        self.kernel = tuple(kernel)

    def __repr__(self):
        return "BlockConfig(filters={}, stride={})".format(self.filters, self.stride)


class IdResBlock(object):
    def __init__(self, store, name, channels, cfg=None, rng=None):
        cfg = cfg or BlockConfig(channels)
        if cfg.filters != channels:
            raise ContractError("Id-ResBlock {} needs filters == input channels ({} != {})"
                .format(name, cfg.filters, channels))
        if cfg.stride != (1, 1):
            raise ContractError("Id-ResBlock {} must use stride (1, 1)".format(name))
        self.name = name
        self.cfg = cfg
        self.norm = BatchNorm(store, name + ".bn", channels)
        self.conv = Conv2D(store, name + ".conv", channels, cfg.filters, cfg.kernel,
            rng=rng)

    @property
    def out_channels(self):
        return self.cfg.filters

    def param_count(self):
        return self.norm.param_count() + self.conv.param_count()

    def __call__(self, x):
        if x.shape[3] != self.cfg.filters:
            raise ContractError("Id-ResBlock {} expects {} channels, got {}"
                .format(self.name, self.cfg.filters, x.shape[3]))
        h = ops.leaky_relu(self.norm(x), self.cfg.alpha)
        return self.conv(h) + x


class ConvResBlock(object):
    def __init__(self, store, name, in_channels, cfg, rng=None):
        if cfg.stride != (2, 2):
            raise ContractError("Conv-ResBlock {} must use stride (2, 2)".format(name))
        self.name = name
        self.cfg = cfg
        self.norm = BatchNorm(store, name + ".bn", in_channels)
        self.conv = Conv2D(store, name + ".conv", in_channels, cfg.filters,
            cfg.kernel, cfg.stride, rng=rng)
        self.shortcut = Conv2D(store, name + ".shortcut", in_channels, cfg.filters,
            cfg.kernel, cfg.stride, rng=rng)

    @property
    def out_channels(self):
        return self.cfg.filters

    def param_count(self):
        return (self.norm.param_count() + self.conv.param_count()
            + self.shortcut.param_count())

    def __call__(self, x):
        h = ops.leaky_relu(self.norm(x), self.cfg.alpha)
        return self.conv(h) + self.shortcut(x)


def residual_stack(store, name, in_channels, filters, strided, alpha=ALPHA, rng=None):
    """
    Build len(filters) residual blocks, the first `strided` of them Conv-ResBlocks.

    Every Id-ResBlock keeps its input width, so its filter entry must match it.
    """
    if strided > len(filters):
        raise ContractError("{}: {} strided blocks requested but only {} filter widths given"
            .format(name, strided, len(filters)))
    blocks = []
    channels = in_channels
    for i, width in enumerate(filters):
        block_name = "{}.block{}".format(name, i)
        if i < strided:
            block = ConvResBlock(store, block_name, channels,
                BlockConfig(width, alpha, stride=(2, 2)), rng=rng)
        else:
            block = IdResBlock(store, block_name, channels,
                BlockConfig(width, alpha), rng=rng)
        blocks.append(block)
        channels = block.out_channels
    return blocks


class BaseEncoder(object):
    """
    Two Conv-ResBlocks and one Id-ResBlock, then a 1x1 conv to the latent width.

    Downsamples the image by 4 in each spatial dimension.
    """
    DOWNSAMPLE = 4

    def __init__(self, store, in_channels=3, latent_dim=256, filters=BASE_FILTERS,
                 alpha=ALPHA, rng=None):
        self.in_channels = in_channels
        self.latent_dim = latent_dim
        self.blocks = residual_stack(store, "encoder.base", in_channels, filters,
            strided=2, alpha=alpha, rng=rng)
        self.project = Conv2D(store, "encoder.base.project",
            self.blocks[-1].out_channels, latent_dim, (1, 1), rng=rng)

    def param_count(self):
        return sum(b.param_count() for b in self.blocks) + self.project.param_count()

    def __call__(self, img):
        if img.ndim != 4 or img.shape[3] != self.in_channels:
            raise ContractError("Base encoder expects (b, h, w, {}) images, got {}"
                .format(self.in_channels, img.shape))
        if img.shape[1] % self.DOWNSAMPLE or img.shape[2] % self.DOWNSAMPLE:
            raise ContractError("Image size {}x{} is not divisible by {}"
                .format(img.shape[1], img.shape[2], self.DOWNSAMPLE))
        h = img
        for block in self.blocks:
            h = block(h)
        return self.project(h)
