"""Parametric conditional and marginal densities, in log domain only.

Classifier outputs ``f(x)`` become densities through a rescaling ``sigma``:
softmax (globally normalised, rows sum to one) or sigmoid (self-normalised,
each output in (0, 1) with no constraint on the row sum). The batched
functions take and return ``Tensor`` so every loss is differentiable; the
scalar functions take plain vectors and return floats.
"""
import numpy as np
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

from nn import functional as F
from nn.tensor import Tensor, as_tensor, no_grad
from .stablemath import DomainError, _as_array, _logsumexp


class RescaleKind(str, Enum):
    SOFTMAX = "softmax"
    SIGMOID = "sigmoid"


class NormalisationKind(str, Enum):
    SCALED = "scaled"
    GLOBAL = "global"
    SELF = "self"


@dataclass(frozen=True)
class OneHot:
    class_index: int
    n_classes: int

    def __post_init__(self):
        if self.n_classes < 1:
            raise ValueError(f"n_classes must be positive, got {self.n_classes}")
        if not 0 <= self.class_index < self.n_classes:
            raise ValueError(f"class index {self.class_index} out of range [0, {self.n_classes})")

    def vector(self) -> np.ndarray:
        v = np.zeros(self.n_classes)
        v[self.class_index] = 1.0
        return v


Label = Union[OneHot, int]


def one_hot(labels: Sequence[int], n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels outside [0, {n_classes})")
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def _class_index(y: Label, n_classes: int) -> int:
    if isinstance(y, OneHot):
        if y.n_classes != n_classes:
            raise ValueError(f"one-hot has {y.n_classes} classes, logits have {n_classes}")
        return y.class_index
    return OneHot(int(y), n_classes).class_index


def _check_labels(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"class index out of range [0, {n_classes})")
    return labels


# -- batched, differentiable --------------------------------------------

def log_conditionals(logits: Tensor, kind: RescaleKind) -> Tensor:
    """``log sigma(f)_c`` for every row and class, shape ``(N, C)``."""
    logits = as_tensor(logits)
    if kind == RescaleKind.SOFTMAX:
        return F.log_softmax(logits, axis=-1)
    return F.log_sigmoid(logits)


def log_complements(logits: Tensor, kind: RescaleKind) -> Tensor:
    """``log(1 - sigma(f)_c)`` for every row and class, shape ``(N, C)``."""
    logits = as_tensor(logits)
    if kind == RescaleKind.SOFTMAX:
        return F.log_softmax_complement(logits)
    return F.log_sigmoid(-logits)


def rescale(logits: Tensor, kind: RescaleKind) -> Tensor:
    """Model outputs mapped to (0, 1) by the chosen rescaling."""
    logits = as_tensor(logits)
    if kind == RescaleKind.SOFTMAX:
        return F.softmax(logits, axis=-1)
    return F.sigmoid(logits)


def log_conditional_batch(logits: Tensor, labels: np.ndarray, kind: RescaleKind) -> Tensor:
    logits = as_tensor(logits)
    n, c = logits.shape
    if c < 2:
        raise DomainError(f"at least two classes are required, got {c}")
    labels = _check_labels(labels, c)
    return log_conditionals(logits, kind)[np.arange(n), labels]


def log_binary_conditional_batch(logits: Tensor, labels: np.ndarray, kind: RescaleKind) -> Tensor:
    """Per-row ``sum_c y_c log sigma_c + (1 - y_c) log(1 - sigma_c)``."""
    logits = as_tensor(logits)
    n, c = logits.shape
    if c < 2:
        raise DomainError(f"at least two classes are required, got {c}")
    y = one_hot(_check_labels(labels, c), c).astype(logits.dtype)
    terms = log_conditionals(logits, kind) * y + log_complements(logits, kind) * (1.0 - y)
    return terms.sum(axis=1)


def log_marginal_batch(denom_logits: Tensor, labels: np.ndarray, kind: RescaleKind) -> Tensor:
    """Empirical ``log p(y)`` as the log-mean over every row of ``denom_logits``."""
    denom_logits = as_tensor(denom_logits)
    m, c = denom_logits.shape
    if m < 1:
        raise DomainError("empty denominator batch")
    labels = _check_labels(labels, c)
    per_class = F.logsumexp(log_conditionals(denom_logits, kind), axis=0) - np.log(m)
    return per_class[labels]


def cosine_scores(anchors: Tensor, targets: Tensor) -> Tensor:
    """Cosine similarity of every anchor row with every target row, ``(N, M)``."""
    a = F.l2_normalize(as_tensor(anchors), axis=1)
    b = F.l2_normalize(as_tensor(targets), axis=1)
    return a @ b.T


# -- scalar ---------------------------------------------------------------

def _row(logits) -> Tensor:
    arr = _as_array(logits)
    if arr.ndim != 1:
        raise ValueError(f"expected a logit vector, got shape {arr.shape}")
    return Tensor(arr.reshape(1, -1))


def log_conditional(logits, y: Label, kind: RescaleKind) -> float:
    row = _row(logits)
    with no_grad():
        return float(log_conditional_batch(row, [_class_index(y, row.shape[1])], kind).data[0])


def log_binary_conditional(logits, y: Label, kind: RescaleKind) -> float:
    row = _row(logits)
    with no_grad():
        return float(log_binary_conditional_batch(row, [_class_index(y, row.shape[1])], kind).data[0])


def log_marginal(batch, y: Label, kind: RescaleKind) -> float:
    arr = np.asarray(batch, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise DomainError(f"expected a non-empty (N, C) logit batch, got shape {arr.shape}")
    with no_grad():
        return float(log_marginal_batch(Tensor(arr), [_class_index(y, arr.shape[1])], kind).data[0])


def log_partition_scaled(scores, prior) -> float:
    """``log sum_y p(y) e^{s(y)}``, the log partition of the scaled density."""
    s = _as_array(scores)
    p = np.asarray(prior, dtype=np.float64)
    if s.shape != p.shape:
        raise ValueError(f"length mismatch: {s.shape} scores vs {p.shape} prior")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"prior must be a probability vector, sums to {p.sum()}")
    support = p > 0
    return float(_logsumexp(s[support] + np.log(p[support])))


def log_normalised_density(scores, kind: NormalisationKind, prior: Optional[Sequence[float]] = None) -> np.ndarray:
    """``log p(y|x)`` over all candidates y under one of the three normalisations.

    SCALED needs ``prior``; SELF returns the scores unchanged and leaves
    normalisation to the score function.
    """
    s = _as_array(scores)
    if kind == NormalisationKind.SCALED:
        if prior is None:
            raise ValueError("the scaled-normalised density needs a prior")
        p = np.asarray(prior, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return np.log(p) + s - log_partition_scaled(s, p)
    if kind == NormalisationKind.GLOBAL:
        return s - _logsumexp(s)
    return s.copy()


def cosine_score(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DomainError("cosine score of a zero-norm vector is undefined")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))
