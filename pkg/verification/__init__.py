from .base import (PropertyResult, VerificationSuite, SUITE_NAMES, get_suite, run_suites,
                   suite_passed, at_least, at_most)
from .bounds import BoundsSuite
from .collapse import CollapseConfig, CollapseSuite, run_collapse
from .gradcheck import GradcheckSuite
from .stability import StabilitySuite
