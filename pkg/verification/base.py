from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional

import numpy as np


@dataclass
class PropertyResult:
    """One checked property: the measured value against its threshold.

    ``margin`` is positive when the property holds with room to spare.
    Properties with ``required=False`` are reported but never fail a suite.
    """

    suite: str
    name: str
    passed: bool
    value: float
    threshold: float
    margin: float
    required: bool = True
    detail: str = ""

    def as_dict(self) -> Dict:
        return asdict(self)


def at_most(suite: str, name: str, value: float, threshold: float, detail: str = "",
            required: bool = True) -> PropertyResult:
    value = float(value)
    return PropertyResult(suite, name, bool(value <= threshold), value, threshold,
                          threshold - value, required, detail)


def at_least(suite: str, name: str, value: float, threshold: float, detail: str = "",
             required: bool = True) -> PropertyResult:
    value = float(value)
    return PropertyResult(suite, name, bool(value >= threshold), value, threshold,
                          value - threshold, required, detail)


class VerificationSuite(ABC):
    """A named group of properties checked against exact or numerical references."""

    name: str = ""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, stream])

    @abstractmethod
    def run(self) -> List[PropertyResult]:
        pass


def suite_passed(results: List[PropertyResult]) -> bool:
    return all(r.passed for r in results if r.required)


def get_suite(name: str, seed: int = 0) -> VerificationSuite:
    from .bounds import BoundsSuite
    from .collapse import CollapseSuite
    from .gradcheck import GradcheckSuite
    from .stability import StabilitySuite

    if name == "gradcheck":
        return GradcheckSuite(seed)
    elif name == "bounds":
        return BoundsSuite(seed)
    elif name == "stability":
        return StabilitySuite(seed)
    elif name == "collapse":
        return CollapseSuite(seed)
    else:
        raise ValueError(f"Unknown verification suite: {name}")


SUITE_NAMES = ("gradcheck", "bounds", "stability", "collapse")


def run_suites(names: Optional[List[str]] = None, seed: int = 0) -> List[PropertyResult]:
    results = []
    for name in names or SUITE_NAMES:
        results.extend(get_suite(name, seed).run())
    return results
