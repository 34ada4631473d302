"""
Parameter storage and the Adam optimizer.
"""
import collections
import logging
import numpy as np
from arenvq.errors import ContractError
from arenvq.tensor import Tensor

logger = logging.getLogger(__name__)


def uniform_fan_in(rng, shape, fan_in, dtype):
    """Centered uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)]."""
    limit = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class ParamStore(object):
    """
    Named, insertion-ordered collection of tensors.

    Trainable entries are what the optimizer updates and what parameter counts
    add up. Non-trainable entries (batch-norm running statistics) live here so
    they travel with the model into checkpoints.
    """

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self.training = True
        self._entries = collections.OrderedDict()

    def add(self, name, data, trainable=True):
        if name in self._entries:
            raise ContractError('Parameter "{}" already exists'.format(name))
        tensor = Tensor(np.array(data, dtype=self.dtype), requires_grad=trainable)
        if not 1 <= tensor.ndim <= 4:
            raise ContractError('Parameter "{}" must have rank 1-4, got {}'
                .format(name, tensor.ndim))
        self._entries[name] = (tensor, trainable)
        return tensor

    def __getitem__(self, name):
        return self._entries[name][0]

    def __contains__(self, name):
        return name in self._entries

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def is_trainable(self, name):
        return self._entries[name][1]

    def items(self):
        for name, (tensor, _) in self._entries.items():
            yield name, tensor

    def trainable(self):
        for name, (tensor, trainable) in self._entries.items():
            if trainable:
                yield name, tensor

    def count(self, prefix=""):
        """Number of trainable scalars, optionally limited to a name prefix."""
        return int(np.sum([t.size for name, t in self.trainable()
                           if name.startswith(prefix)], dtype=np.int64))

    def zero_grad(self):
        for _, tensor in self.items():
            tensor.grad = None

    def state(self):
        return collections.OrderedDict(
            (name, tensor.data) for name, tensor in self.items())

    def load_state(self, arrays):
        missing = [name for name in self._entries if name not in arrays]
        if missing:
            raise ContractError("State is missing parameters: {}".format(
                ", ".join(missing)))
        for name, tensor in self.items():
            array = np.asarray(arrays[name])
            if array.shape != tensor.shape:
                raise ContractError('Parameter "{}" has shape {}, state has {}'
                    .format(name, tensor.shape, array.shape))
            tensor.data = array.astype(self.dtype).copy()


class AdamState(object):
    """
    Moments and step counter for one Adam optimizer.

    lr_scales maps a parameter-name suffix to a multiplier on lr for the
    parameters whose names end with it.
    """

    def __init__(self, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8, lr_scales=None):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.lr_scales = dict(lr_scales or {})
        self.step = 0
        self.m = collections.OrderedDict()
        self.v = collections.OrderedDict()

    def __repr__(self):
        return "AdamState(lr={}, step={})".format(self.lr, self.step)

    def lr_for(self, name):
        for suffix, scale in self.lr_scales.items():
            if name.endswith(suffix):
                return self.lr * scale
        return self.lr


def adam_step(params, state):
    """
    One bias-corrected Adam update over every trainable parameter.

    All gradients must be populated; they are cleared afterwards.
    """
    trainable = list(params.trainable())
    missing = [name for name, tensor in trainable if tensor.grad is None]
    if missing:
        raise ContractError("Missing gradients for: {}".format(", ".join(missing)))

    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for name, tensor in trainable:
        grad = tensor.grad
        if name not in state.m:
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        update = state.lr_for(name) * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        tensor.data = (tensor.data - update).astype(tensor.dtype, copy=False)
        tensor.grad = None
    logger.debug("Adam step %d over %d parameters", state.step, len(trainable))
