"""Discrepancy of {S_k alpha} for integer random walks S_k.

Continued fractions with exact convergents, integer step distributions,
certified walk traces, discrepancy, exponential-sum moments and
Diophantine sums, plus a config-driven experiment runner.
"""

__version__ = "0.1.0"

from .alpha import (AlphaHandle, Convergent, DepthExhaustedError, DiophantineProfile,
                    InvalidSourceError, PartialQuotientSource, dist_nearest_int,
                    estimate_strong_type, make_alpha, parse_alpha)
from .discrepancy import (DiscrepancyValue, discrepancy, extreme_discrepancy, gap_diagnostic,
                          star_discrepancy)
from .steps import (ConditionCertificate, IntegerStepDistribution, char_fn, parse_dist, sample,
                    support_gcd_diff, verify_first_condition, verify_second_condition)
from .walk import FracPartTrace, WalkConfig, simulate

__all__ = [
    "AlphaHandle", "Convergent", "DepthExhaustedError", "DiophantineProfile",
    "InvalidSourceError", "PartialQuotientSource", "dist_nearest_int", "estimate_strong_type",
    "make_alpha", "parse_alpha", "DiscrepancyValue", "discrepancy", "extreme_discrepancy",
    "gap_diagnostic", "star_discrepancy", "ConditionCertificate", "IntegerStepDistribution",
    "char_fn", "parse_dist", "sample", "support_gcd_diff", "verify_first_condition",
    "verify_second_condition", "FracPartTrace", "WalkConfig", "simulate",
]
