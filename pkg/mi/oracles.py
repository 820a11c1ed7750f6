"""Exact, enumeration-based ground truth for mutual information and divergences.

These functions work only on small enumerable supports and exist to check the
estimators and losses, not to estimate anything themselves. All values are in
nats, with the convention ``0 log 0 = 0``.
"""
import numpy as np
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

MAX_SUPPORT = 64
LOG2 = float(np.log(2.0))


class OracleError(ValueError):
    """Raised for invalid tables, conditionals or discriminator outputs."""


def _probability_vector(p, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise OracleError(f"{name} must be a non-empty vector, got shape {p.shape}")
    if np.any(p < 0) or not np.all(np.isfinite(p)) or abs(p.sum() - 1.0) > 1e-12 * max(1, p.size):
        raise OracleError(f"{name} is not a probability vector (sum {p.sum()!r})")
    return p


def _xlogy_ratio(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise ``p log(p / q)`` with ``0 log 0 = 0``."""
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = p[mask] * (np.log(p[mask]) - np.log(q[mask]))
    return out


@dataclass(frozen=True)
class DiscreteJoint:
    """An ``|X| x |Y|`` table of joint probabilities."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.float64)
        if t.ndim != 2 or min(t.shape) == 0:
            raise OracleError(f"joint table must be 2-D and non-empty, got shape {t.shape}")
        if max(t.shape) > MAX_SUPPORT:
            raise OracleError(f"joint support {t.shape} exceeds the enumerable limit {MAX_SUPPORT}")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise OracleError("joint table must be finite and non-negative")
        if abs(t.sum() - 1.0) > 1e-12:
            raise OracleError(f"joint table sums to {t.sum()!r}, expected 1")
        object.__setattr__(self, "table", t)

    @property
    def px(self) -> np.ndarray:
        return self.table.sum(axis=1)

    @property
    def py(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def conditional(self) -> np.ndarray:
        """Rows ``p(y|x)``; rows with ``p(x) = 0`` are uniform."""
        px = self.px[:, None]
        ny = self.table.shape[1]
        safe = np.where(px > 0, px, 1.0)
        return np.where(px > 0, self.table / safe, 1.0 / ny)


def _check_conditional(joint: DiscreteJoint, q_cond) -> np.ndarray:
    q = np.asarray(q_cond, dtype=np.float64)
    if q.shape != joint.table.shape:
        raise OracleError(f"conditional shape {q.shape} does not match joint {joint.table.shape}")
    if np.any(q < 0) or not np.all(np.isfinite(q)) or np.any(np.abs(q.sum(axis=1) - 1.0) > 1e-9):
        raise OracleError("every row of the conditional must be a probability vector")
    if np.any((joint.table > 0) & (q == 0)):
        raise OracleError("conditional assigns zero mass where the joint does not")
    return q


def exact_mi(joint: DiscreteJoint) -> float:
    """``sum p(x,y) log p(x,y) / (p(x) p(y))``."""
    t = joint.table
    product = np.outer(joint.px, joint.py)
    return max(float(_xlogy_ratio(t, np.where(product > 0, product, 1.0)).sum()), 0.0)


def exact_kld(p, q) -> float:
    p = _probability_vector(p, "p")
    q = _probability_vector(q, "q")
    if p.shape != q.shape:
        raise OracleError(f"support mismatch: {p.shape} vs {q.shape}")
    if np.any((q == 0) & (p > 0)):
        raise OracleError("KL divergence undefined: p is not absolutely continuous w.r.t. q")
    return float(_xlogy_ratio(p, np.where(q > 0, q, 1.0)).sum())


def exact_jsd(p, q) -> float:
    p = _probability_vector(p, "p")
    q = _probability_vector(q, "q")
    if p.shape != q.shape:
        raise OracleError(f"support mismatch: {p.shape} vs {q.shape}")
    m = 0.5 * (p + q)
    value = 0.5 * _xlogy_ratio(p, np.where(m > 0, m, 1.0)).sum() + 0.5 * _xlogy_ratio(q, np.where(m > 0, m, 1.0)).sum()
    return float(min(max(value, 0.0), LOG2))


def ba_bound(joint: DiscreteJoint, q_cond) -> float:
    """``E_p(x,y)[log q(y|x) / p(y)]``, a lower bound on the mutual information."""
    q = _check_conditional(joint, q_cond)
    t, py = joint.table, joint.py
    mask = t > 0
    ratio = np.log(q[mask]) - np.log(np.broadcast_to(py, t.shape)[mask])
    return float(np.sum(t[mask] * ratio))


def parametric_marginal(joint: DiscreteJoint, q_cond) -> np.ndarray:
    """``q(y) = E_p(x)[q(y|x)]``."""
    q = _check_conditional(joint, q_cond)
    return joint.px @ q


def twin_bound(joint: DiscreteJoint, q_cond) -> float:
    """``E_p(x,y)[log q(y|x) / q(y)] - KL(p(y) || q(y))`` with ``q(y) = E_p(x)[q(y|x)]``."""
    q = _check_conditional(joint, q_cond)
    t = joint.table
    qy = joint.px @ q
    mask = t > 0
    contrast = np.sum(t[mask] * (np.log(q[mask]) - np.log(np.broadcast_to(qy, t.shape)[mask])))
    py = joint.py
    penalty = _xlogy_ratio(py, np.where(qy > 0, qy, 1.0)).sum()
    return float(contrast - penalty)


def optimal_discriminator(p, q) -> np.ndarray:
    """``D*(y) = p(y) / (p(y) + q(y))`` on the joint support; 0.5 where both vanish."""
    p = _probability_vector(p, "p")
    q = _probability_vector(q, "q")
    total = p + q
    return np.where(total > 0, p / np.where(total > 0, total, 1.0), 0.5)


def _check_discriminator(d: np.ndarray, weights: np.ndarray, allow_zero: bool, allow_one: bool) -> None:
    live = d[weights > 0]
    if np.any(live < 0) or np.any(live > 1):
        raise OracleError("discriminator output outside [0, 1]")
    if (not allow_zero and np.any(live == 0)) or (not allow_one and np.any(live == 1)):
        raise OracleError("discriminator output must lie strictly inside (0, 1)")


def jsd_from_discriminator(p, q, d) -> float:
    """``1/2 E_p[log D] + 1/2 E_q[log(1 - D)] + log 2`` by enumeration."""
    p = _probability_vector(p, "p")
    q = _probability_vector(q, "q")
    d = np.asarray(d, dtype=np.float64)
    _check_discriminator(d, p, allow_zero=False, allow_one=True)
    _check_discriminator(d, q, allow_zero=True, allow_one=False)
    on_p, on_q = p > 0, q > 0
    return float(0.5 * np.sum(p[on_p] * np.log(d[on_p]))
                 + 0.5 * np.sum(q[on_q] * np.log1p(-d[on_q])) + LOG2)


def kld_from_discriminator(p, d) -> float:
    """``E_p[log D] - E_p[log(1 - D)]`` by enumeration."""
    p = _probability_vector(p, "p")
    d = np.asarray(d, dtype=np.float64)
    _check_discriminator(d, p, allow_zero=False, allow_one=False)
    on_p = p > 0
    return float(np.sum(p[on_p] * (np.log(d[on_p]) - np.log1p(-d[on_p]))))


def kld_via_discriminator(p_samples: Sequence[int], q_samples: Sequence[int],
                          discriminator: Optional[Union[Callable, np.ndarray]] = None,
                          support_size: Optional[int] = None) -> float:
    """Sample estimate ``mean log D(p) - mean log(1 - D(p))`` over ``p_samples``.

    Samples are category indices. Without an explicit ``discriminator`` the
    plug-in optimal one is fitted from the empirical frequencies of both
    sample sets. A callable discriminator receives the index array.
    """
    p_samples = np.asarray(p_samples, dtype=np.int64)
    q_samples = np.asarray(q_samples, dtype=np.int64)
    if p_samples.size == 0 or q_samples.size == 0:
        raise OracleError("both sample sets must be non-empty")
    k = support_size or int(max(p_samples.max(), q_samples.max())) + 1
    if discriminator is None:
        p_hat = np.bincount(p_samples, minlength=k) / p_samples.size
        q_hat = np.bincount(q_samples, minlength=k) / q_samples.size
        d = optimal_discriminator(p_hat, q_hat)[p_samples]
    elif callable(discriminator):
        d = np.asarray(discriminator(p_samples), dtype=np.float64)
    else:
        d = np.asarray(discriminator, dtype=np.float64)[p_samples]
    if np.any(d <= 0) or np.any(d >= 1):
        raise OracleError("discriminator output must lie strictly inside (0, 1)")
    return float(np.mean(np.log(d)) - np.mean(np.log1p(-d)))


def random_joint(rng: np.random.Generator, nx: int, ny: int, concentration: float = 1.0) -> DiscreteJoint:
    table = rng.dirichlet(np.full(nx * ny, concentration)).reshape(nx, ny)
    return DiscreteJoint(table / table.sum())


def random_conditional(rng: np.random.Generator, nx: int, ny: int, concentration: float = 1.0) -> np.ndarray:
    q = rng.dirichlet(np.full(ny, concentration), size=nx)
    q = np.clip(q, 1e-300, None)
    return q / q.sum(axis=1, keepdims=True)


def bound_order_record(rng: np.random.Generator, trials: int = 1000, max_support: int = 8,
                       tol: float = 1e-12) -> dict:
    """How often ``twin_bound >= ba_bound`` on random instances, and the worst slacks.

    Comparisons use ``tol`` so that ties in floating point count as ordered.
    """
    twin_above = 0
    worst_ba = worst_twin = np.inf
    widest_gap = 0.0
    for _ in range(trials):
        nx, ny = rng.integers(2, max_support + 1, size=2)
        joint = random_joint(rng, nx, ny)
        q = random_conditional(rng, nx, ny)
        mi = exact_mi(joint)
        ba, tw = ba_bound(joint, q), twin_bound(joint, q)
        twin_above += tw >= ba - tol
        worst_ba = min(worst_ba, mi - ba)
        worst_twin = min(worst_twin, mi - tw)
        widest_gap = max(widest_gap, abs(tw - ba))
    return {
        "trials": trials,
        "twin_above_ba_fraction": twin_above / trials,
        "min_mi_minus_ba": float(worst_ba),
        "min_mi_minus_twin": float(worst_twin),
        "max_abs_twin_minus_ba": float(widest_gap),
    }
