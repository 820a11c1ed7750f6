import contextlib
import numpy as np
from abc import ABC, abstractmethod
from typing import Dict, Iterator, List, Optional, Tuple

from . import functional as F
from .tensor import Tensor, parameter


class Module(ABC):
    """Abstract base class for every layer and network.

    Parameters are the ``Tensor`` attributes of a module; child modules are
    attributes (or lists of attributes) that are themselves modules. Both
    are discovered in attribute definition order.
    """

    def __init__(self):
        self.training = True

    @abstractmethod
    def forward(self, *args, **kwargs):
        pass

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def _children(self) -> Iterator[Tuple[str, "Module"]]:
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield f"{name}.{i}", item

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, value in vars(self).items():
            if isinstance(value, Tensor):
                yield prefix + name, value
        for name, child in self._children():
            yield from child.named_parameters(prefix + name + ".")

    def parameters(self, trainable_only: bool = True) -> List[Tensor]:
        return [p for _, p in self.named_parameters() if p.requires_grad or not trainable_only]

    def zero_grad(self) -> None:
        for _, p in self.named_parameters():
            p.zero_grad()

    def train(self, mode: bool = True) -> "Module":
        self.training = mode
        for _, child in self._children():
            child.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def freeze(self) -> None:
        for _, p in self.named_parameters():
            p.requires_grad = False

    @contextlib.contextmanager
    def frozen(self):
        """Withhold gradients from this module's parameters inside the block."""
        params = [p for _, p in self.named_parameters()]
        flags = [p.requires_grad for p in params]
        for p in params:
            p.requires_grad = False
        try:
            yield self
        finally:
            for p, flag in zip(params, flags):
                p.requires_grad = flag

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = set(own) - set(state)
        unexpected = set(state) - set(own)
        if missing or unexpected:
            raise KeyError(f"state mismatch: missing={sorted(missing)} unexpected={sorted(unexpected)}")
        for name, p in own.items():
            if state[name].shape != p.shape:
                raise ValueError(f"shape mismatch for {name}: {state[name].shape} vs {p.shape}")
            p.data = np.array(state[name], dtype=p.dtype)

    def to(self, dtype) -> "Module":
        for _, p in self.named_parameters():
            p.data = p.data.astype(dtype)
        return self


def he_uniform(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...]) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.weight = parameter(he_uniform(rng, in_features, (in_features, out_features)))
        self.bias = parameter(np.zeros(out_features)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)


class LeakyReLU(Module):
    def __init__(self, slope: float = 0.01):
        super().__init__()
        self.slope = slope

    def forward(self, x: Tensor) -> Tensor:
        return F.leaky_relu(x, self.slope)


class ReLU(Module):
    def forward(self, x: Tensor) -> Tensor:
        return F.relu(x)


class Dropout(Module):
    def __init__(self, p: float, rng: Optional[np.random.Generator]):
        super().__init__()
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout probability must lie in [0, 1), got {p}")
        self.p = p
        self.rng = rng

    def forward(self, x: Tensor) -> Tensor:
        return F.dropout(x, self.p, self.rng, self.training)


class Sequential(Module):
    def __init__(self, *layers: Module):
        super().__init__()
        self.layers = list(layers)

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x


class SelfAttention(Module):
    """Single-headed self-attention without output projection."""

    def __init__(self, dim: int, rng: np.random.Generator):
        super().__init__()
        self.w_query = parameter(he_uniform(rng, dim, (dim, dim)))
        self.w_key = parameter(he_uniform(rng, dim, (dim, dim)))
        self.w_value = parameter(he_uniform(rng, dim, (dim, dim)))
        self.last_weights: Optional[np.ndarray] = None

    def forward(self, x: Tensor) -> Tensor:
        out, weights = F.single_head_self_attention(x, self.w_query, self.w_key, self.w_value)
        self.last_weights = weights.data
        return out


class SwiGLU(Module):
    def __init__(self, dim: int, rng: np.random.Generator, hidden: Optional[int] = None):
        super().__init__()
        hidden = hidden or dim
        self.w_in = parameter(he_uniform(rng, dim, (dim, 2 * hidden)))
        self.w_out = parameter(he_uniform(rng, hidden, (hidden, dim)))

    def forward(self, x: Tensor) -> Tensor:
        return F.swiglu(x, self.w_in, self.w_out)


class TransformerLayer(Module):
    """One attention block followed by a SwiGLU network."""

    def __init__(self, dim: int, rng: np.random.Generator):
        super().__init__()
        self.attention = SelfAttention(dim, rng)
        self.feed_forward = SwiGLU(dim, rng)

    def forward(self, tokens: Tensor) -> Tensor:
        return self.feed_forward(self.attention(tokens))
