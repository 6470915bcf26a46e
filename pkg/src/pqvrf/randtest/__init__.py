"""Statistical evaluation of generated bit streams."""

from .nist import TESTS, TITLES, TestResult, as_bits, run_test
from .report import RandReport, run_suite
from .special import igamc
from .stats import empirical_entropy, ones_ratio, theoretical_entropy

__all__ = [
    "TESTS",
    "TITLES",
    "TestResult",
    "RandReport",
    "as_bits",
    "run_test",
    "run_suite",
    "igamc",
    "ones_ratio",
    "empirical_entropy",
    "theoretical_entropy",
]
