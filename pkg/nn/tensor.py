"""Reverse-mode automatic differentiation over numpy arrays.

A ``Tensor`` wraps an ndarray, remembers the tensors it was computed from and
a closure that pushes its gradient back to them. ``backward`` walks the graph
in reverse topological order and accumulates gradients additively.
"""
import contextlib
import threading
import numpy as np
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union


class _GradMode(threading.local):
    # Per thread: concurrent runs must not switch each other's graphs off.
    enabled = True


_grad_mode = _GradMode()


@contextlib.contextmanager
def no_grad():
    """Disable graph construction inside the block, for the calling thread only."""
    previous = _grad_mode.enabled
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


def is_grad_enabled() -> bool:
    return _grad_mode.enabled


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """Dense real array with an optional accumulated gradient."""

    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False,
                 _parents: Sequence["Tensor"] = (), _op: str = "", name: str = ""):
        arr = np.asarray(data)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        self.data: np.ndarray = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: Tuple["Tensor", ...] = tuple(_parents)
        self._backward: Callable[[], None] = lambda: None
        self._op = _op

    # -- bookkeeping -----------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def __len__(self) -> int:
        return len(self.data)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, op={self._op or 'leaf'!r}{label})"

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        grad = _unbroadcast(grad, self.shape)
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad = self.grad + grad

    def _result(self, data: np.ndarray, parents: Iterable["Tensor"], op: str) -> "Tensor":
        parents = tuple(parents)
        track = _grad_mode.enabled and any(p.requires_grad for p in parents)
        return Tensor(data, requires_grad=track, _parents=parents if track else (), _op=op)

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """Accumulate d(self)/d(leaf) into every leaf that requires grad."""
        if not self.requires_grad:
            raise RuntimeError("backward called on a tensor that is not part of a gradient graph")
        if grad is None:
            if self.data.size != 1:
                raise RuntimeError(f"backward needs an explicit gradient for shape {self.shape}")
            grad = np.ones_like(self.data)

        order = []
        visited = set()
        stack = [(self, False)]
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
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))

        self.grad = (self.grad if self.grad is not None else 0) + np.asarray(grad, dtype=self.dtype)
        for node in reversed(order):
            if node._parents and node.grad is not None:
                node._backward()

    # -- elementwise arithmetic -----------------------------------------

    def __add__(self, other) -> "Tensor":
        other = as_tensor(other, like=self)
        out = self._result(self.data + other.data, (self, other), "add")
        # Leaves frozen at forward time stay out of the gradient.
        track_self, track_other = self.requires_grad, other.requires_grad

        def _backward():
            if track_self:
                self._accumulate(out.grad)
            if track_other:
                other._accumulate(out.grad)
        out._backward = _backward
        return out

    def __radd__(self, other) -> "Tensor":
        return self + other

    def __neg__(self) -> "Tensor":
        out = self._result(-self.data, (self,), "neg")

        def _backward():
            self._accumulate(-out.grad)
        out._backward = _backward
        return out

    def __sub__(self, other) -> "Tensor":
        return self + (-as_tensor(other, like=self))

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other, like=self) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other, like=self)
        out = self._result(self.data * other.data, (self, other), "mul")
        track_self, track_other = self.requires_grad, other.requires_grad

        def _backward():
            if track_self:
                self._accumulate(out.grad * other.data)
            if track_other:
                other._accumulate(out.grad * self.data)
        out._backward = _backward
        return out

    def __rmul__(self, other) -> "Tensor":
        return self * other

    def __truediv__(self, other) -> "Tensor":
        other = as_tensor(other, like=self)
        out = self._result(self.data / other.data, (self, other), "div")
        track_self, track_other = self.requires_grad, other.requires_grad

        def _backward():
            if track_self:
                self._accumulate(out.grad / other.data)
            if track_other:
                other._accumulate(-out.grad * self.data / (other.data ** 2))
        out._backward = _backward
        return out

    def __rtruediv__(self, other) -> "Tensor":
        return as_tensor(other, like=self) / self

    def __pow__(self, power: float) -> "Tensor":
        out = self._result(self.data ** power, (self,), f"pow{power}")

        def _backward():
            self._accumulate(out.grad * power * self.data ** (power - 1))
        out._backward = _backward
        return out

    def exp(self) -> "Tensor":
        out = self._result(np.exp(self.data), (self,), "exp")

        def _backward():
            self._accumulate(out.grad * out.data)
        out._backward = _backward
        return out

    def log(self) -> "Tensor":
        out = self._result(np.log(self.data), (self,), "log")

        def _backward():
            self._accumulate(out.grad / self.data)
        out._backward = _backward
        return out

    def sqrt(self) -> "Tensor":
        return self ** 0.5

    # -- linear algebra and reductions ---------------------------------

    def __matmul__(self, other) -> "Tensor":
        other = as_tensor(other, like=self)
        if self.ndim < 2 or other.ndim < 2:
            raise ValueError(f"matmul needs operands with ndim >= 2, got {self.shape} and {other.shape}")
        if self.shape[-1] != other.shape[-2]:
            raise ValueError(f"matmul shape mismatch: {self.shape} @ {other.shape}")
        out = self._result(self.data @ other.data, (self, other), "matmul")
        track_self, track_other = self.requires_grad, other.requires_grad

        def _backward():
            if track_self:
                self._accumulate(out.grad @ np.swapaxes(other.data, -1, -2))
            if track_other:
                other._accumulate(np.swapaxes(self.data, -1, -2) @ out.grad)
        out._backward = _backward
        return out

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        out = self._result(np.sum(self.data, axis=axis, keepdims=keepdims), (self,), "sum")

        def _backward():
            grad = out.grad
            if axis is not None and not keepdims:
                grad = np.expand_dims(grad, axis)
            self._accumulate(np.broadcast_to(grad, self.shape))
        out._backward = _backward
        return out

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        n = self.data.size if axis is None else np.prod([self.shape[a] for a in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = self._result(self.data.reshape(shape), (self,), "reshape")

        def _backward():
            self._accumulate(out.grad.reshape(self.shape))
        out._backward = _backward
        return out

    def transpose(self, *axes) -> "Tensor":
        axes = axes or tuple(reversed(range(self.ndim)))
        out = self._result(np.transpose(self.data, axes), (self,), "transpose")
        inverse = np.argsort(axes)

        def _backward():
            self._accumulate(np.transpose(out.grad, inverse))
        out._backward = _backward
        return out

    def swapaxes(self, a: int, b: int) -> "Tensor":
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return self.transpose(*axes)

    @property
    def T(self) -> "Tensor":
        return self.swapaxes(-1, -2)

    def __getitem__(self, index) -> "Tensor":
        out = self._result(self.data[index], (self,), "getitem")

        def _backward():
            grad = np.zeros_like(self.data)
            np.add.at(grad, index, out.grad)
            self._accumulate(grad)
        out._backward = _backward
        return out


def as_tensor(value: Union[Tensor, np.ndarray, float], like: Optional[Tensor] = None) -> Tensor:
    """Wrap ``value`` as a constant tensor unless it already is one."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value, dtype=dtype))


def parameter(data: np.ndarray, name: str = "") -> Tensor:
    """A leaf tensor that collects gradients."""
    return Tensor(np.array(data, copy=True), requires_grad=True, name=name)
