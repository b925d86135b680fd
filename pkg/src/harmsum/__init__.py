"""harmsum: construct sign sequences with astronomically small signed
harmonic sums and completely multiplicative functions with tiny logarithmic
means, and rigorously verify every achieved bound."""

__version__ = "0.1.0"

from .numerics import (
    BigFixed,
    Comparison,
    compare_to_threshold,
    exact_rational_sum,
    signed_harmonic_sum,
    unit_fraction,
)
from .support import SignSequence, SupportSet

__all__ = [
    "BigFixed",
    "Comparison",
    "SignSequence",
    "SupportSet",
    "compare_to_threshold",
    "exact_rational_sum",
    "signed_harmonic_sum",
    "unit_fraction",
    "__version__",
]
