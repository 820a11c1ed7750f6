"""Finite outputs at extreme inputs and shift invariance of the log-domain kernels."""
import numpy as np

from mi.stablemath import log_sigmoid, log_softmax, log_softmax_complement, logsumexp
from .base import VerificationSuite, at_most


class StabilitySuite(VerificationSuite):
    name = "stability"

    def __init__(self, seed: int = 0, extreme: float = 1e6, trials: int = 200):
        super().__init__(seed)
        self.extreme = extreme
        self.trials = trials

    def _finite(self):
        rng = self.rng(0)
        cases = [np.array([1000.0, 0.0]), np.array([-self.extreme, self.extreme]),
                 np.array([self.extreme, self.extreme, -self.extreme])]
        cases += [rng.uniform(-self.extreme, self.extreme, size=int(rng.integers(2, 12)))
                  for _ in range(self.trials)]
        bad = 0
        for x in cases:
            outputs = [log_softmax(x), log_sigmoid(x), np.atleast_1d(logsumexp(x)), log_softmax_complement(x)]
            bad += sum(int(not np.all(np.isfinite(out))) for out in outputs)
        return [at_most(self.name, f"finite kernels for |x| <= {self.extreme:g}", bad, 0,
                        f"{len(cases)} vectors, 4 kernels")]

    def _shift_invariance(self):
        rng = self.rng(1)
        worst = 0.0
        for _ in range(self.trials):
            x = rng.normal(0.0, 10.0, size=int(rng.integers(2, 12)))
            c = rng.uniform(-1e3, 1e3)
            worst = max(worst,
                        np.max(np.abs(log_softmax(x + c) - log_softmax(x))),
                        abs(logsumexp(x + c) - c - logsumexp(x)))
        return [at_most(self.name, "shift invariance", worst, 1e-10)]

    def run(self):
        return self._finite() + self._shift_invariance()
