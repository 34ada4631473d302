import numpy as np
from arenvq.errors import ContractError
from arenvq.tensor import Tensor, no_grad


def numerical_gradient(f, x, eps):
    """Central differences of the scalar function f at x (x.data is restored)."""
    grad = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            plus = f(x).item()
            flat[i] = original - eps
            minus = f(x).item()
            flat[i] = original
            grad.flat[i] = (plus - minus) / (2.0 * eps)
    return grad


def grad_check(f, x, eps=1e-6, floor=1e-3):
    """
    Compare the reverse-mode gradient of f at x with central differences.

    Returns the worst relative error |a - n| / max(|a|, |n|, floor) over all
    coordinates; floor keeps near-zero gradients from dominating.
    """
    data = x.data if isinstance(x, Tensor) else np.asarray(x)
    if data.dtype != np.float64:
        raise ContractError("grad_check needs float64 inputs, got {}".format(data.dtype))
    if not 1e-6 <= eps <= 1e-3:
        raise ContractError("grad_check eps must be in [1e-6, 1e-3], got {}".format(eps))

    x = Tensor(data.copy(), requires_grad=True)
    out = f(x)
    if out.size != 1:
        raise ContractError("grad_check needs a scalar function, got shape {}"
            .format(out.shape))
    out.backward()
    analytic = x.grad if x.grad is not None else np.zeros_like(x.data)

    numeric = numerical_gradient(f, x, eps)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))
