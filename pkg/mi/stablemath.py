"""Numerically stable log-domain kernels.

Every density and loss in the project goes through these functions. They work
on numpy arrays of any shape; reductions take an ``axis`` argument. Sums use
``np.sum``, which is pairwise for contiguous float arrays, so accumulation
error stays bounded on long vectors.
"""
import numpy as np
from typing import Optional, Union

ArrayLike = Union[float, np.ndarray, list, tuple]

# Below this input log_sigmoid switches to its linear asymptote.
LOG_SIGMOID_LINEAR_BRANCH = -30.0


class DomainError(ValueError):
    """Raised when a kernel receives input outside its domain."""


def _as_array(x: ArrayLike) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64) if not isinstance(x, np.ndarray) else x
    if arr.size == 0:
        raise DomainError("empty input: at least one element is required")
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite input: every element must be finite")
    return arr


def _logsumexp(x: np.ndarray, axis=None, keepdims: bool = False) -> np.ndarray:
    """Unchecked logsumexp used by the autodiff engine."""
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    if not keepdims:
        out = np.squeeze(out, axis=axis) if axis is not None else out.reshape(())
    return out


def logsumexp(x: ArrayLike, axis: Optional[int] = None, keepdims: bool = False):
    """Return ``max(x) + log sum exp(x - max(x))`` along ``axis``.

    Raises:
        DomainError: if ``x`` is empty or contains non-finite values.
    """
    arr = _as_array(x)
    out = _logsumexp(arr, axis=axis, keepdims=keepdims)
    return float(out) if np.ndim(out) == 0 else out


def logmeanexp(x: ArrayLike, axis: Optional[int] = None, keepdims: bool = False):
    """``logsumexp(x) - log n`` where n is the number of reduced elements."""
    arr = _as_array(x)
    n = arr.size if axis is None else arr.shape[axis]
    out = _logsumexp(arr, axis=axis, keepdims=keepdims) - np.log(n)
    return float(out) if np.ndim(out) == 0 else out


def log_softmax(x: ArrayLike, axis: int = -1) -> np.ndarray:
    arr = _as_array(x)
    return arr - _logsumexp(arr, axis=axis, keepdims=True)


def softmax(x: ArrayLike, axis: int = -1) -> np.ndarray:
    return np.exp(log_softmax(x, axis=axis))


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    linear = x < LOG_SIGMOID_LINEAR_BRANCH
    # log sigma(x) = x - log(1 + e^x) ~ x - e^x on the linear branch
    safe = np.where(linear, 0.0, x)
    out = np.where(linear, x - np.exp(np.minimum(x, 0.0)), -np.log1p(np.exp(-safe)))
    return out


def log_sigmoid(x: ArrayLike):
    """Stable ``-log(1 + e^-x)``; linear in ``x`` below the branch threshold."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite input: every element must be finite")
    out = _log_sigmoid(arr)
    return float(out) if out.ndim == 0 else out


def log_one_minus_sigmoid(x: ArrayLike):
    """``log(1 - sigmoid(x))``, i.e. ``log_sigmoid(-x)``."""
    return log_sigmoid(-np.asarray(x, dtype=np.float64))


def sigmoid(x: ArrayLike):
    out = np.exp(log_sigmoid(x))
    return float(out) if np.ndim(out) == 0 else out


def complement_index(n_classes: int) -> np.ndarray:
    """Row c lists every class index except c, shape ``(C, C - 1)``."""
    if n_classes < 2:
        raise DomainError(f"at least two classes are required, got {n_classes}")
    full = np.tile(np.arange(n_classes), (n_classes, 1))
    keep = ~np.eye(n_classes, dtype=bool)
    return full[keep].reshape(n_classes, n_classes - 1)


def log_softmax_complement(x: ArrayLike) -> np.ndarray:
    """``log(1 - softmax(x)_c)`` for every class c along the last axis.

    Computed as the logsumexp of the other logits minus the logsumexp of all
    of them, so it stays finite even when softmax(x)_c rounds to 1.
    """
    arr = _as_array(x)
    others = arr[..., complement_index(arr.shape[-1])]
    return _logsumexp(others, axis=-1) - _logsumexp(arr, axis=-1, keepdims=True)
