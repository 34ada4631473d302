"""
Residual pixel attention.

Both inputs are projected to c channels by 1x1 convolutions (g1 for x, g2 for
y), every pixel pair gets a sigmoid affinity W[b,i,j] = sigmoid(x_i . y_j), and
the projected x is updated residually with W . y. Passing y = x gives
self-attention; anything else is cross-attention.

Rows of W are not normalized (sigmoid, not softmax), and there is no 1/sqrt(c)
scaling and no positional encoding.
"""
from arenvq import ops
from arenvq import tensor as T
from arenvq.errors import ContractError, ResourceError
from arenvq.layers import Conv2D

DEFAULT_MAX_PIXELS = 4096


class AttentionParams(object):
    def __init__(self, g1_weight, g1_bias, g2_weight, g2_bias):
        if g1_weight.shape[3] != g2_weight.shape[3]:
            raise ContractError("g1 and g2 must project to the same channel count")
        self.g1_weight = g1_weight
        self.g1_bias = g1_bias
        self.g2_weight = g2_weight
        self.g2_bias = g2_bias

    @property
    def channels(self):
        return self.g1_weight.shape[3]

    def param_count(self):
        return (self.g1_weight.size + self.g1_bias.size
            + self.g2_weight.size + self.g2_bias.size)


def attention_matrix(xp, yp):
    """W[b,i,j] = sigmoid(sum_c xp[b,i,c] * yp[b,j,c]) for (b, n, c) inputs."""
    if xp.shape[0] != yp.shape[0] or xp.shape[2] != yp.shape[2]:
        raise ContractError("attention_matrix needs matching batch and channels, got {} and {}"
            .format(xp.shape, yp.shape))
    return ops.sigmoid(T.matmul(xp, T.swapaxes(yp, 1, 2)))


def pixel_attention(x, y, params, max_pixels=DEFAULT_MAX_PIXELS):
    if x.shape[:3] != y.shape[:3]:
        raise ContractError("pixel_attention needs x and y with the same (b, h, w), got {} and {}"
            .format(x.shape, y.shape))
    batch, height, width, _ = x.shape
    pixels = height * width
    if pixels > max_pixels:
        raise ResourceError(
            "Attention over {}x{} = {} pixels exceeds the budget of {} pixels"
            .format(height, width, pixels, max_pixels))
    c = params.channels

    yp = ops.conv2d(y, params.g2_weight, params.g2_bias)
    xp = ops.conv2d(x, params.g1_weight, params.g1_bias)
    yp = T.reshape(yp, (batch, pixels, c))
    xp = T.reshape(xp, (batch, pixels, c))
    weights = attention_matrix(xp, yp)
    out = xp + T.matmul(weights, yp)
    return T.reshape(out, (batch, height, width, c))


class PixelAttention(object):
    def __init__(self, store, name, in_channels, channels,
                 max_pixels=DEFAULT_MAX_PIXELS, rng=None):
        self.name = name
        self.max_pixels = max_pixels
        self.g1 = Conv2D(store, name + ".g1", in_channels, channels, (1, 1), rng=rng)
        self.g2 = Conv2D(store, name + ".g2", in_channels, channels, (1, 1), rng=rng)
        self.params = AttentionParams(self.g1.weight, self.g1.bias,
            self.g2.weight, self.g2.bias)

    def param_count(self):
        return self.params.param_count()

    def __call__(self, x, y=None):
        return pixel_attention(x, x if y is None else y, self.params, self.max_pixels)
