"""
Differentiable image ops over (batch, height, width, channels) tensors.
"""
import numpy as np
from arenvq.errors import ContractError, NumericError
from arenvq.tensor import record

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.9


def _check_rank4(x, op):
    if x.ndim != 4:
        raise ContractError("{} expects a (b, h, w, f) tensor, got shape {}"
            .format(op, x.shape))


def _same_padding(size, kernel, stride):
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return out, (total // 2, total - total // 2)


def conv2d(x, w, b=None, stride=(1, 1), padding="same"):
    """
    2-D convolution (cross-correlation) with kernel layout (kh, kw, f_in, f_out).

    Same-padding zero-fills so that the output is (b, ceil(h/sh), ceil(w/sw)).
    """
    _check_rank4(x, "conv2d")
    if w.ndim != 4:
        raise ContractError("conv2d kernel must be (kh, kw, f_in, f_out), got {}"
            .format(w.shape))
    kh, kw, f_in, f_out = w.shape
    batch, height, width, channels = x.shape
    if f_in != channels:
        raise ContractError("conv2d kernel expects {} input channels, got {}"
            .format(f_in, channels))
    if b is not None and b.shape != (f_out,):
        raise ContractError("conv2d bias must have shape ({},), got {}"
            .format(f_out, b.shape))
    sh, sw = stride
    if sh < 1 or sw < 1 or kh < 1 or kw < 1:
        raise ContractError("conv2d needs kernel and stride >= 1")
    if not np.isfinite(x.data).all():
        raise NumericError("conv2d received non-finite input")

    if padding == "same":
        out_h, (top, bottom) = _same_padding(height, kh, sh)
        out_w, (left, right) = _same_padding(width, kw, sw)
    elif padding == "valid":
        out_h = (height - kh) // sh + 1
        out_w = (width - kw) // sw + 1
        top = bottom = left = right = 0
        if out_h < 1 or out_w < 1:
            raise ContractError("conv2d valid padding: kernel {}x{} larger than input {}x{}"
                .format(kh, kw, height, width))
    else:
        raise ContractError('Unknown padding "{}"'.format(padding))

    padded = np.pad(x.data, ((0, 0), (top, bottom), (left, right), (0, 0)))
    span_h = sh * (out_h - 1) + 1
    span_w = sw * (out_w - 1) + 1
    # im2col: (b, out_h, out_w, kh, kw, f_in), one contiguous copy per tap
    cols = np.empty((batch, out_h, out_w, kh, kw, f_in), dtype=padded.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i, j, :] = padded[:, i:i + span_h:sh, j:j + span_w:sw, :]
    cols = cols.reshape(batch * out_h * out_w, kh * kw * f_in)
    kernel = w.data.reshape(kh * kw * f_in, f_out)
    out = cols @ kernel
    if b is not None:
        out += b.data
    out = out.reshape(batch, out_h, out_w, f_out).astype(x.dtype, copy=False)

    def backward(g):
        g2 = g.reshape(-1, f_out)
        grad_x = grad_w = None
        if x.requires_grad:
            grad_cols = (g2 @ kernel.T).reshape(batch, out_h, out_w, kh, kw, f_in)
            grad_padded = np.zeros_like(padded)
            for i in range(kh):
                for j in range(kw):
                    grad_padded[:, i:i + span_h:sh, j:j + span_w:sw, :] += grad_cols[:, :, :, i, j, :]
            grad_x = grad_padded[:, top:top + height, left:left + width, :]
        if w.requires_grad:
            grad_w = (cols.T @ g2).reshape(kh, kw, f_in, f_out)
        if b is None:
            return grad_x, grad_w
        return grad_x, grad_w, g2.sum(axis=0)

    parents = (x, w) if b is None else (x, w, b)
    return record(out, parents, "conv2d", backward)


def batch_norm(x, gamma, beta, running_mean, running_var, training,
               momentum=BN_MOMENTUM, eps=BN_EPSILON):
    """
    Per-channel batch normalization.

    In training mode the batch statistics over (b, h, w) are used and the
    running statistics (plain arrays) are updated in place by an exponential
    moving average. In eval mode the running statistics are used.
    """
    _check_rank4(x, "batch_norm")
    channels = x.shape[3]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ContractError("batch_norm gamma/beta must have length {}"
            .format(channels))

    if training:
        mean = x.data.mean(axis=(0, 1, 2))
        var = x.data.var(axis=(0, 1, 2))
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mean
        running_var *= momentum
        running_var += (1.0 - momentum) * var
    else:
        mean = running_mean
        var = running_var

    inv_std = (1.0 / np.sqrt(var + eps)).astype(x.dtype)
    x_hat = (x.data - mean.astype(x.dtype)) * inv_std
    out = gamma.data * x_hat + beta.data
    n = x.data.size // channels

    def backward(g):
        grad_gamma = (g * x_hat).sum(axis=(0, 1, 2))
        grad_beta = g.sum(axis=(0, 1, 2))
        grad_x = None
        if x.requires_grad:
            g_hat = g * gamma.data
            if training:
                grad_x = inv_std / n * (n * g_hat
                    - g_hat.sum(axis=(0, 1, 2))
                    - x_hat * (g_hat * x_hat).sum(axis=(0, 1, 2)))
            else:
                grad_x = g_hat * inv_std
        return grad_x, grad_gamma, grad_beta

    return record(out.astype(x.dtype, copy=False), (x, gamma, beta),
        "batch_norm", backward)


def leaky_relu(x, alpha):
    """max(x, alpha*x); the gradient at exactly 0 is alpha."""
    if not 0.0 <= alpha < 1.0:
        raise ContractError("leaky_relu slope must be in [0, 1), got {}".format(alpha))
    positive = x.data > 0
    slope = np.where(positive, 1.0, alpha).astype(x.dtype)

    def backward(g):
        return (g * slope,)
    return record(x.data * slope, (x,), "leaky_relu", backward)


def _stable_sigmoid(values):
    e = np.exp(-np.abs(values))
    return np.where(values >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(values.dtype)


def sigmoid(x):
    out = _stable_sigmoid(x.data)

    def backward(g):
        return (g * out * (1.0 - out),)
    return record(out, (x,), "sigmoid", backward)


def resize_nearest(x, factor):
    """Replicate every pixel factor x factor times."""
    _check_rank4(x, "resize_nearest")
    if int(factor) != factor or factor < 1:
        raise ContractError("resize factor must be a positive integer, got {}"
            .format(factor))
    factor = int(factor)
    batch, height, width, channels = x.shape
    out = np.repeat(np.repeat(x.data, factor, axis=1), factor, axis=2)

    def backward(g):
        g = g.reshape(batch, height, factor, width, factor, channels)
        return (g.sum(axis=(2, 4)),)
    return record(out, (x,), "resize_nearest", backward)


def bce_with_logits(logits, target):
    """
    Mean binary cross-entropy of logits against a constant target in [0, 1].

    Uses max(x, 0) - x*t + log(1 + exp(-|x|)) so saturated logits stay finite.
    """
    x = logits.data
    loss = np.maximum(x, 0) - x * target + np.log1p(np.exp(-np.abs(x)))
    n = x.size

    def backward(g):
        return (g * (_stable_sigmoid(x) - target) / n,)
    return record(np.asarray(loss.mean(), dtype=x.dtype), (logits,),
        "bce_with_logits", backward)
