"""
Layer objects that own their parameters inside a ParamStore.
"""
import numpy as np
from arenvq import ops
from arenvq.params import uniform_fan_in


class Conv2D(object):
    def __init__(self, store, name, in_channels, filters, kernel=(3, 3),
                 stride=(1, 1), padding="same", rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        kh, kw = kernel
        self.name = name
        self.stride = tuple(stride)
        self.padding = padding
        self.weight = store.add(name + ".weight", uniform_fan_in(
            rng, (kh, kw, in_channels, filters), kh * kw * in_channels, store.dtype))
        self.bias = store.add(name + ".bias", np.zeros(filters))

    @property
    def filters(self):
        return self.weight.shape[3]

    def param_count(self):
        return self.weight.size + self.bias.size

    def __call__(self, x):
        return ops.conv2d(x, self.weight, self.bias, self.stride, self.padding)


class BatchNorm(object):
    def __init__(self, store, name, channels):
        self.store = store
        self.name = name
        self.gamma = store.add(name + ".gamma", np.ones(channels))
        self.beta = store.add(name + ".beta", np.zeros(channels))
        self.running_mean = store.add(name + ".running_mean",
            np.zeros(channels), trainable=False)
        self.running_var = store.add(name + ".running_var",
            np.ones(channels), trainable=False)

    def param_count(self):
        return self.gamma.size + self.beta.size

    def __call__(self, x):
        return ops.batch_norm(x, self.gamma, self.beta, self.running_mean.data,
            self.running_var.data, training=self.store.training)
