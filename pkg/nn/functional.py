"""Differentiable primitives built on ``Tensor``.

Forward passes reuse the stable kernels from ``mi.stablemath``; each function
registers its own backward rule.
"""
import numpy as np
from typing import Optional, Sequence, Tuple

from mi.stablemath import DomainError, _log_sigmoid, _logsumexp, complement_index
from .tensor import Tensor, as_tensor


def relu(x: Tensor) -> Tensor:
    out = x._result(np.maximum(x.data, 0.0), (x,), "relu")

    def _backward():
        x._accumulate(out.grad * (x.data > 0))
    out._backward = _backward
    return out


def leaky_relu(x: Tensor, slope: float = 0.01) -> Tensor:
    out = x._result(np.where(x.data > 0, x.data, slope * x.data), (x,), "leaky_relu")

    def _backward():
        x._accumulate(out.grad * np.where(x.data > 0, 1.0, slope))
    out._backward = _backward
    return out


def sigmoid(x: Tensor) -> Tensor:
    out = x._result(np.exp(_log_sigmoid(x.data)), (x,), "sigmoid")

    def _backward():
        x._accumulate(out.grad * out.data * (1.0 - out.data))
    out._backward = _backward
    return out


def silu(x: Tensor) -> Tensor:
    s = np.exp(_log_sigmoid(x.data))
    out = x._result(x.data * s, (x,), "silu")

    def _backward():
        x._accumulate(out.grad * s * (1.0 + x.data * (1.0 - s)))
    out._backward = _backward
    return out


def log_sigmoid(x: Tensor) -> Tensor:
    out = x._result(_log_sigmoid(x.data), (x,), "log_sigmoid")

    def _backward():
        # d/dx log sigma(x) = sigma(-x)
        x._accumulate(out.grad * np.exp(_log_sigmoid(-x.data)))
    out._backward = _backward
    return out


def logsumexp(x: Tensor, axis: int = -1, keepdims: bool = False) -> Tensor:
    lse = _logsumexp(x.data, axis=axis, keepdims=True)
    out = x._result(lse if keepdims else np.squeeze(lse, axis=axis), (x,), "logsumexp")

    def _backward():
        grad = out.grad if keepdims else np.expand_dims(out.grad, axis)
        x._accumulate(grad * np.exp(x.data - lse))
    out._backward = _backward
    return out


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    lsm = x.data - _logsumexp(x.data, axis=axis, keepdims=True)
    out = x._result(lsm, (x,), "log_softmax")

    def _backward():
        g = out.grad
        x._accumulate(g - np.exp(lsm) * np.sum(g, axis=axis, keepdims=True))
    out._backward = _backward
    return out


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    y = np.exp(x.data - _logsumexp(x.data, axis=axis, keepdims=True))
    out = x._result(y, (x,), "softmax")

    def _backward():
        g = out.grad
        x._accumulate(y * (g - np.sum(g * y, axis=axis, keepdims=True)))
    out._backward = _backward
    return out


def log_softmax_complement(x: Tensor) -> Tensor:
    """``log(1 - softmax(x)_c)`` along the last axis, differentiable."""
    n_classes = x.shape[-1]
    rows = x.reshape(-1, n_classes)
    others = rows[:, complement_index(n_classes)]
    result = logsumexp(others, axis=-1) - logsumexp(rows, axis=-1, keepdims=True)
    return result.reshape(x.shape)


def dropout(x: Tensor, p: float, rng: Optional[np.random.Generator], training: bool) -> Tensor:
    """Inverted dropout; identity outside training or for ``p == 0``."""
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs a seeded generator")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * mask.astype(x.dtype)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    out = tensors[0]._result(data, tensors, "concat")
    tracked = [t.requires_grad for t in tensors]
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def _backward():
        for t, flag, g in zip(tensors, tracked, np.split(out.grad, bounds, axis=axis)):
            if flag:
                t._accumulate(g)
    out._backward = _backward
    return out


def chunk(x: Tensor, n: int, axis: int = -1) -> Tuple[Tensor, ...]:
    size = x.shape[axis]
    if size % n:
        raise ValueError(f"cannot split axis of size {size} into {n} equal chunks")
    step = size // n
    index = [slice(None)] * x.ndim
    parts = []
    for i in range(n):
        index[axis] = slice(i * step, (i + 1) * step)
        parts.append(x[tuple(index)])
    return tuple(parts)


def l2_normalize(x: Tensor, axis: int = -1) -> Tensor:
    """Scale rows to unit Euclidean norm.

    Raises:
        DomainError: if any row has zero norm.
    """
    norm = np.sqrt(np.sum(x.data * x.data, axis=axis, keepdims=True))
    if np.any(norm == 0.0):
        raise DomainError("cannot normalise a zero-norm vector")
    y = x.data / norm
    out = x._result(y, (x,), "l2_normalize")

    def _backward():
        g = out.grad
        x._accumulate((g - y * np.sum(g * y, axis=axis, keepdims=True)) / norm)
    out._backward = _backward
    return out


def mean_pool(x: Tensor, axis: int = 1) -> Tensor:
    return x.mean(axis=axis)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    out = x @ weight
    return out + bias if bias is not None else out


def single_head_self_attention(x: Tensor, w_query: Tensor, w_key: Tensor,
                               w_value: Tensor) -> Tuple[Tensor, Tensor]:
    """Scaled dot-product self-attention over the token axis of ``(N, T, D)``.

    Returns the attended tokens and the ``(N, T, T)`` attention weights.
    """
    if x.ndim != 3:
        raise ValueError(f"attention expects (batch, tokens, dim), got {x.shape}")
    q, k, v = x @ w_query, x @ w_key, x @ w_value
    scores = (q @ k.swapaxes(-1, -2)) * (1.0 / np.sqrt(q.shape[-1]))
    weights = softmax(scores, axis=-1)
    return weights @ v, weights


def swiglu(x: Tensor, w_in: Tensor, w_out: Tensor) -> Tensor:
    """Linear (two chunks) -> SiLU on the first -> product -> Linear."""
    gate, value = chunk(x @ w_in, 2, axis=-1)
    return (silu(gate) * value) @ w_out
