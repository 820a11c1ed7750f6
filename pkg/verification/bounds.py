"""Bounds and divergences against brute-force enumeration."""
import numpy as np

from losses.contrastive import DenominatorAxis, loss_infonce
from mi.oracles import (ba_bound, exact_jsd, exact_kld, exact_mi, jsd_from_discriminator,
                        kld_from_discriminator, optimal_discriminator, random_conditional,
                        random_joint, twin_bound)
from nn.tensor import no_grad
from .base import VerificationSuite, at_least, at_most


class BoundsSuite(VerificationSuite):
    name = "bounds"

    def __init__(self, seed: int = 0, trials: int = 1000, max_support: int = 8,
                 infonce_trials: int = 10000, infonce_max_n: int = 16):
        super().__init__(seed)
        self.trials = trials
        self.max_support = max_support
        self.infonce_trials = infonce_trials
        self.infonce_max_n = infonce_max_n

    def _bounds(self):
        rng = self.rng(0)
        worst_ba = worst_twin = np.inf
        worst_equality = 0.0
        for _ in range(self.trials):
            nx, ny = rng.integers(2, self.max_support + 1, size=2)
            joint = random_joint(rng, nx, ny)
            q = random_conditional(rng, nx, ny)
            mi = exact_mi(joint)
            worst_ba = min(worst_ba, mi - ba_bound(joint, q))
            worst_twin = min(worst_twin, mi - twin_bound(joint, q))
            truth = joint.conditional()
            worst_equality = max(worst_equality, abs(ba_bound(joint, truth) - mi),
                                 abs(twin_bound(joint, truth) - mi))
        detail = f"{self.trials} random joints up to {self.max_support}x{self.max_support}"
        return [
            at_least(self.name, "ba_bound <= exact_mi", worst_ba, -1e-10, detail),
            at_least(self.name, "twin_bound <= exact_mi", worst_twin, -1e-10, detail),
            at_most(self.name, "equality at the true conditional", worst_equality, 1e-12, detail),
        ]

    def _divergences(self):
        rng = self.rng(1)
        worst_jsd = worst_kld = 0.0
        for _ in range(self.trials):
            k = int(rng.integers(2, self.max_support + 1))
            p, q = rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))
            d = optimal_discriminator(p, q)
            worst_jsd = max(worst_jsd, abs(jsd_from_discriminator(p, q, d) - exact_jsd(p, q)))
            worst_kld = max(worst_kld, abs(kld_from_discriminator(p, d) - exact_kld(p, q)))
        return [
            at_most(self.name, "JSD from the optimal discriminator", worst_jsd, 1e-12),
            at_most(self.name, "KLD from the optimal discriminator", worst_kld, 1e-12),
        ]

    def _infonce_floor(self):
        rng = self.rng(2)
        worst = np.inf
        with no_grad():
            for _ in range(self.infonce_trials):
                n = int(rng.integers(1, self.infonce_max_n + 1))
                scores = rng.normal(0.0, 5.0, size=(n, n))
                for axis in DenominatorAxis:
                    worst = min(worst, float(loss_infonce(scores, axis).data) + np.log(n))
        return [at_least(self.name, "InfoNCE >= -log N", worst, -1e-12,
                         f"{self.infonce_trials} random score matrices, both axes")]

    def run(self):
        return self._bounds() + self._divergences() + self._infonce_floor()
