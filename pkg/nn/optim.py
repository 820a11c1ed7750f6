import numpy as np
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from .tensor import Tensor


class NonFiniteGradientError(FloatingPointError):
    """Raised when an optimiser step would consume a NaN or infinite gradient."""


@dataclass
class AdamState:
    step: int = 0
    exp_avg: List[np.ndarray] = field(default_factory=list)
    exp_avg_sq: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls(0, [np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adamw_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState,
               lr: float, betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
               weight_decay: float = 0.0) -> Tuple[List[np.ndarray], AdamState]:
    """One AdamW update with bias correction and decoupled weight decay.

    Returns new parameter arrays and the advanced state; inputs are not
    modified.

    Raises:
        NonFiniteGradientError: if any gradient holds NaN or inf. Nothing is
            updated in that case.
    """
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(f"non-finite gradient in parameter #{i}")

    beta1, beta2 = betas
    step = state.step + 1
    bias_correction1 = 1.0 - beta1 ** step
    bias_correction2 = 1.0 - beta2 ** step

    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.exp_avg, state.exp_avg_sq):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / bias_correction1
        v_hat = v / bias_correction2
        p = p * (1.0 - lr * weight_decay) - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_params.append(p)
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(step, new_m, new_v)


class AdamW:
    """AdamW over a list of parameter tensors; the learning rate is set per step."""

    def __init__(self, params: Sequence[Tensor], lr: float = 5e-5,
                 betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.01):
        if lr < 0.0:
            raise ValueError(f"Invalid learning rate: {lr} - should be >= 0.0")
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.state = AdamState.zeros_like([p.data for p in self.params])

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self, lr: float = None) -> None:
        lr = self.lr if lr is None else lr
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        new_params, self.state = adamw_step(
            [p.data for p in self.params], grads, self.state,
            lr=lr, betas=self.betas, eps=self.eps, weight_decay=self.weight_decay)
        for p, value in zip(self.params, new_params):
            p.data = value.astype(p.dtype, copy=False)


def warmup_lr(step: int, base_lr: float, warmup_steps: int = 150, initial_factor: float = 0.001) -> float:
    """Linear warm-up from ``base_lr * initial_factor`` to ``base_lr``."""
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    if warmup_steps <= 0 or step >= warmup_steps:
        return base_lr
    return base_lr * (initial_factor + (1.0 - initial_factor) * step / warmup_steps)
