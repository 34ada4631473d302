"""
Attentive residual encoders (AREN), the multi-level hierarchy and the decoder.

Every level reads the shared base-encoder output. Going from the top (coarsest)
level down, the quantized latent of level k+1 is upscaled x2, concatenated by
channels with the AREN output of level k and merged by a 1x1 convolution; that
merged tensor is level k's latent. The bottom level's quantized latent is what
the decoder sees.
"""
import collections
import logging
import numpy as np
from arenvq import ops
from arenvq import tensor as T
from arenvq.attention import DEFAULT_MAX_PIXELS, PixelAttention
from arenvq.blocks import ALPHA, BaseEncoder, BlockConfig, IdResBlock, residual_stack
from arenvq.errors import ContractError
from arenvq.layers import Conv2D
from arenvq.params import ParamStore
from arenvq.quantizer import VectorQuantizer, active_count

logger = logging.getLogger(__name__)

# Residual filter widths per level, indexed by level id. Level k downsamples
# the base output by 2**k.
LEVEL_FILTERS = {
    1: (128, 128),
    2: (128, 128, 128),
    3: (128, 128, 128, 128),
}


class LevelSpec(object):
    def __init__(self, level, filters, downsample, latent_dim, attention=True):
        if downsample < 1 or downsample & (downsample - 1):
            raise ContractError("Level {} downsample must be a power of two, got {}"
                .format(level, downsample))
        self.level = level
        self.filters = tuple(filters)
        self.downsample = downsample
        self.latent_dim = latent_dim
        self.attention = attention

    @property
    def strided_blocks(self):
        return int(np.log2(self.downsample))

    def __repr__(self):
        return "LevelSpec(level={}, filters={}, downsample={}, c={}, attention={})".format(
            self.level, self.filters, self.downsample, self.latent_dim, self.attention)


def level_spec(level, latent_dim, attention=True, filters=None):
    """Spec of level `level` (0 = the extra level at base resolution)."""
    if filters is None:
        filters = LEVEL_FILTERS.get(level, (latent_dim,))
    return LevelSpec(level, filters, 2 ** level, latent_dim, attention)


def level_specs(count, latent_dim, attention=True, filters=None):
    """Specs for levels 1..count, bottom first."""
    filters = filters or {}
    return [level_spec(k, latent_dim, attention, filters.get(k))
            for k in range(1, count + 1)]


class ArenLevel(object):
    """Residual blocks, then self pixel attention, then a 1x1 conv to c channels."""

    def __init__(self, store, spec, in_channels, alpha=ALPHA,
                 max_pixels=DEFAULT_MAX_PIXELS, rng=None):
        self.spec = spec
        self.name = "encoder.level{}".format(spec.level)
        self.blocks = residual_stack(store, self.name, in_channels, spec.filters,
            spec.strided_blocks, alpha=alpha, rng=rng)
        width = self.blocks[-1].out_channels if self.blocks else in_channels
        if spec.attention:
            self.attention = PixelAttention(store, self.name + ".attention", width,
                spec.latent_dim, max_pixels=max_pixels, rng=rng)
            width = spec.latent_dim
        else:
            self.attention = None
        self.project = Conv2D(store, self.name + ".project", width, spec.latent_dim,
            (1, 1), rng=rng)

    def param_count(self):
        count = sum(b.param_count() for b in self.blocks) + self.project.param_count()
        if self.attention is not None:
            count += self.attention.param_count()
        return count

    def __call__(self, x):
        factor = self.spec.downsample
        if x.shape[1] % factor or x.shape[2] % factor:
            raise ContractError("{}: input {}x{} is not divisible by {}".format(
                self.name, x.shape[1], x.shape[2], factor))
        h = x
        for block in self.blocks:
            h = block(h)
        if self.attention is not None:
            h = self.attention(h)
        return self.project(h)


class HierarchyOutput(object):
    """Per-level results, index 0 being the bottom level."""

    def __init__(self, aren_outputs, latents, indices, quantized,
                 codebook_losses, commitment_losses):
        self.aren_outputs = aren_outputs
        self.latents = latents
        self.indices = indices
        self.quantized = quantized
        self.codebook_losses = codebook_losses
        self.commitment_losses = commitment_losses

    @property
    def bottom(self):
        """The merged bottom latent handed to the bottom quantizer."""
        return self.latents[0]

    @property
    def quantized_bottom(self):
        return self.quantized[0]


class Hierarchy(object):
    """
    Encoder levels from the bottom (finest) to the top, plus their codebooks and
    the 1x1 merge convolutions between neighbouring levels.
    """

    def __init__(self, store, top, in_channels, codebook_size, beta=0.25,
                 alpha=ALPHA, max_pixels=DEFAULT_MAX_PIXELS, rng=None):
        self.store = store
        self.in_channels = in_channels
        self.codebook_size = codebook_size
        self.beta = beta
        self.alpha = alpha
        self.max_pixels = max_pixels
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.levels = [self._level(top)]
        self.quantizers = [self._quantizer(top)]
        # merges[k] folds level k+1 into level k
        self.merges = []

    def _level(self, spec):
        return ArenLevel(self.store, spec, self.in_channels, self.alpha,
            self.max_pixels, self.rng)

    def _quantizer(self, spec):
        return VectorQuantizer(self.store, "codebook{}".format(spec.level),
            self.codebook_size, spec.latent_dim, self.beta, self.rng)

    @property
    def depth(self):
        return len(self.levels)

    @property
    def bottom_spec(self):
        return self.levels[0].spec

    @property
    def codebooks(self):
        return [q.codebook for q in self.quantizers]

    def param_count(self):
        return (sum(level.param_count() for level in self.levels)
            + sum(merge.param_count() for merge in self.merges)
            + sum(q.param_count() for q in self.quantizers))

    def __call__(self, base):
        n = self.depth
        outputs = [level(base) for level in self.levels]
        latents = [None] * n
        results = [None] * n
        for k in reversed(range(n)):
            if k == n - 1:
                z = outputs[k]
            else:
                upscaled = ops.resize_nearest(results[k + 1].quantized, 2)
                if upscaled.shape[:3] != outputs[k].shape[:3]:
                    raise ContractError("Level {} output {} does not match upscaled level {} {}"
                        .format(k, outputs[k].shape, k + 1, upscaled.shape))
                z = self.merges[k](T.concat([upscaled, outputs[k]], axis=3))
            latents[k] = z
            results[k] = self.quantizers[k](z)
        return HierarchyOutput(
            outputs, latents,
            [r.indices for r in results],
            [r.quantized for r in results],
            [r.codebook_loss for r in results],
            [r.commitment_loss for r in results])


def add_lower_level(hierarchy, spec):
    """
    Put a new level below the current bottom one.

    The new level works at twice the bottom resolution; the old bottom's
    quantized output is upscaled and merged into it, and it becomes the bottom.
    """
    bottom = hierarchy.bottom_spec
    if spec.downsample * 2 != bottom.downsample:
        raise ContractError("New level must have half the downsample of level {} ({}), got {}"
            .format(bottom.level, bottom.downsample // 2, spec.downsample))
    if spec.latent_dim != bottom.latent_dim:
        raise ContractError("New level latent width {} does not match {}"
            .format(spec.latent_dim, bottom.latent_dim))
    level = hierarchy._level(spec)
    merge = Conv2D(hierarchy.store, "encoder.merge{}".format(spec.level),
        2 * spec.latent_dim, spec.latent_dim, (1, 1), rng=hierarchy.rng)
    quantizer = hierarchy._quantizer(spec)
    hierarchy.levels.insert(0, level)
    hierarchy.merges.insert(0, merge)
    hierarchy.quantizers.insert(0, quantizer)
    logger.debug("Added level %d below level %d", spec.level, bottom.level)
    return hierarchy


def build_hierarchy(store, specs, in_channels, codebook_size, beta=0.25,
                    alpha=ALPHA, max_pixels=DEFAULT_MAX_PIXELS, rng=None):
    """Build from the top level down; specs are listed bottom first."""
    if not specs:
        raise ContractError("A hierarchy needs at least one level")
    hierarchy = Hierarchy(store, specs[-1], in_channels, codebook_size, beta,
        alpha, max_pixels, rng)
    for spec in reversed(specs[:-1]):
        add_lower_level(hierarchy, spec)
    return hierarchy


class Decoder(object):
    """
    1x1 conv to `width`, then (upscale x2, Id-ResBlock) per stage, then a 1x1
    conv to 3 channels squashed by a sigmoid into [0, 1].
    """

    def __init__(self, store, latent_dim, width, stages, out_channels=3,
                 alpha=ALPHA, rng=None):
        self.stages = stages
        self.entry = Conv2D(store, "decoder.entry", latent_dim, width, (1, 1), rng=rng)
        self.blocks = [IdResBlock(store, "decoder.stage{}".format(i), width,
                                  BlockConfig(width, alpha), rng=rng)
                       for i in range(stages)]
        self.out = Conv2D(store, "decoder.out", width, out_channels, (1, 1), rng=rng)

    def param_count(self):
        return (self.entry.param_count() + self.out.param_count()
            + sum(b.param_count() for b in self.blocks))

    def __call__(self, q):
        h = self.entry(q)
        for block in self.blocks:
            h = block(ops.resize_nearest(h, 2))
        return ops.sigmoid(self.out(h))


class ForwardResult(object):
    def __init__(self, recon, hierarchy):
        self.recon = recon
        self.hierarchy = hierarchy

    @property
    def indices(self):
        return self.hierarchy.indices

    @property
    def codebook_losses(self):
        return self.hierarchy.codebook_losses

    @property
    def commitment_losses(self):
        return self.hierarchy.commitment_losses

    def vq_loss(self):
        total = None
        for loss in self.codebook_losses + self.commitment_losses:
            total = loss if total is None else total + loss
        return total


class AttentiveVQVAE(object):
    """
    Base encoder, AREN hierarchy with one codebook per level, and decoder.

    `model_config` is an arenvq.config.ModelConfig (or anything with the same
    attributes).
    """

    def __init__(self, model_config, in_channels=3, beta=0.25, dtype=np.float32,
                 seed=0):
        self.config = model_config
        self.in_channels = in_channels
        self.rng = np.random.default_rng(seed)
        self.params = ParamStore(dtype)
        cfg = model_config
        self.base = BaseEncoder(self.params, in_channels, cfg.latent_dim,
            tuple(cfg.base_filters), cfg.alpha, self.rng)
        specs = level_specs(cfg.levels, cfg.latent_dim, cfg.attention,
            cfg.level_filters)
        self.hierarchy = build_hierarchy(self.params, specs, cfg.latent_dim,
            cfg.codebook_size, beta, cfg.alpha, cfg.attention_max_pixels, self.rng)
        stages = int(np.log2(BaseEncoder.DOWNSAMPLE * self.hierarchy.bottom_spec.downsample))
        self.decoder = Decoder(self.params, cfg.latent_dim, cfg.decoder_filters,
            stages, alpha=cfg.alpha, rng=self.rng)

    @classmethod
    def from_run_config(cls, config):
        return cls(config.model, config.in_channels, config.train.beta, config.dtype,
            config.train.seed)

    @property
    def codebooks(self):
        return self.hierarchy.codebooks

    def train(self):
        self.params.training = True
        return self

    def eval(self):
        self.params.training = False
        return self

    def encode(self, img):
        return self.hierarchy(self.base(img))

    def decode(self, quantized_bottom):
        return self.decoder(quantized_bottom)

    def forward(self, img):
        encoded = self.encode(img)
        return ForwardResult(self.decode(encoded.quantized_bottom), encoded)

    __call__ = forward

    def reconstruct(self, img):
        """Eval-mode reconstruction of a batch of arrays, without recording."""
        training = self.params.training
        self.eval()
        try:
            with T.no_grad():
                return self.forward(T.Tensor(img, dtype=self.params.dtype)).recon.data
        finally:
            self.params.training = training

    def set_instrumented(self, enabled):
        for codebook in self.codebooks:
            codebook.instrumented = enabled

    def reset_usage(self):
        for codebook in self.codebooks:
            codebook.reset_usage()

    def active_counts(self):
        return [active_count(cb) for cb in self.codebooks]

    def param_counts(self):
        """Trainable parameter counts per module, in build order."""
        counts = collections.OrderedDict()
        counts["base_encoder"] = self.base.param_count()
        for level in reversed(self.hierarchy.levels):
            counts["level{}".format(level.spec.level)] = level.param_count()
        for merge in reversed(self.hierarchy.merges):
            counts[merge.name.split(".")[-1]] = merge.param_count()
        for quantizer in reversed(self.hierarchy.quantizers):
            counts[quantizer.name] = quantizer.param_count()
        counts["decoder"] = self.decoder.param_count()
        return counts
