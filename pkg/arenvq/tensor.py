"""
Tensors with a recorded op graph for reverse-mode differentiation.

Every op that touches a tensor requiring a gradient records its parents and a
backward closure on the result. `Tensor.backward()` walks that graph in reverse
topological order and accumulates gradients into `.grad`.
"""
import contextlib
import numpy as np
from arenvq.errors import ContractError

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Evaluate without recording the op graph."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def grad_enabled():
    return _grad_enabled


def _as_array(data, dtype):
    if dtype is not None:
        return np.asarray(data, dtype=dtype)
    array = np.asarray(data)
    if array.dtype.kind != "f":
        array = array.astype(np.float32)
    return array


class Tensor(object):
    def __init__(self, data, requires_grad=False, dtype=None):
        self.data = _as_array(data, dtype)
        self.grad = None
        self.requires_grad = requires_grad
        self.op = "leaf"
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self):
        return self.data.item()

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return "Tensor(shape={}, dtype={}, op={})".format(
            self.shape, self.dtype, self.op)

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ContractError(
                    "backward() without a gradient needs a scalar, got shape {}"
                    .format(self.shape))
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=self.data.dtype)
        if grad.shape != self.shape:
            raise ContractError("Gradient shape {} does not match {}"
                .format(grad.shape, self.shape))

        self.grad = grad if self.grad is None else self.grad + grad
        for node in reversed(_topological_order(self)):
            if node._backward is None or node.grad is None:
                continue
            grads = node._backward(node.grad)
            for parent, parent_grad in zip(node._parents, grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                if parent.grad is None:
                    parent.grad = np.array(parent_grad, dtype=parent.data.dtype)
                else:
                    parent.grad = parent.grad + parent_grad

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ContractError("Only division by a constant is supported")
        return mul(self, 1.0 / other)


def _topological_order(root):
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def trace_ops(root):
    """Op names of the recorded graph below root, parents before children."""
    return [node.op for node in _topological_order(root) if node.op != "leaf"]


def record(data, parents, op, backward):
    """Wrap an op result, recording the graph edge when a gradient is needed."""
    out = Tensor(data, dtype=data.dtype)
    out.op = op
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def as_tensor(value, like=None):
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(value, dtype=dtype)


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b):
    a = as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = as_tensor(b, like=a)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)
    return record(a.data + b.data, (a, b), "add", backward)


def sub(a, b):
    a = as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = as_tensor(b, like=a)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)
    return record(a.data - b.data, (a, b), "sub", backward)


def mul(a, b):
    a = as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = as_tensor(b, like=a)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)
    return record(a.data * b.data, (a, b), "mul", backward)


def square(x):
    def backward(g):
        return (2.0 * x.data * g,)
    return record(x.data * x.data, (x,), "square", backward)


def absolute(x):
    def backward(g):
        return (np.sign(x.data) * g,)
    return record(np.abs(x.data), (x,), "abs", backward)


def sum(x):
    def backward(g):
        return (np.broadcast_to(g, x.shape).copy(),)
    return record(np.asarray(x.data.sum(), dtype=x.dtype), (x,), "sum", backward)


def mean(x):
    n = x.data.size

    def backward(g):
        return (np.full(x.shape, g / n, dtype=x.dtype),)
    return record(np.asarray(x.data.mean(), dtype=x.dtype), (x,), "mean", backward)


def reshape(x, shape):
    def backward(g):
        return (g.reshape(x.shape),)
    return record(x.data.reshape(shape), (x,), "reshape", backward)


def swapaxes(x, axis1, axis2):
    def backward(g):
        return (np.swapaxes(g, axis1, axis2),)
    return record(np.swapaxes(x.data, axis1, axis2), (x,), "swapaxes", backward)


def matmul(a, b):
    """Batched matrix product over the last two axes."""
    def backward(g):
        return (np.matmul(g, np.swapaxes(b.data, -1, -2)),
                np.matmul(np.swapaxes(a.data, -1, -2), g))
    return record(np.matmul(a.data, b.data), (a, b), "matmul", backward)


def concat(tensors, axis):
    tensors = list(tensors)
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))
    data = np.concatenate([t.data for t in tensors], axis=axis)
    return record(data, tensors, "concat", backward)


def take_rows(table, indices):
    """Gather rows of a rank-2 table; the gradient scatters back."""
    indices = np.asarray(indices)

    def backward(g):
        grad = np.zeros_like(table.data)
        np.add.at(grad, indices.reshape(-1), g.reshape(-1, table.shape[1]))
        return (grad,)
    return record(table.data[indices], (table,), "take_rows", backward)


def stop_gradient(x):
    out = Tensor(x.data, dtype=x.dtype)
    out.op = "stop_gradient"
    return out
