"""Rigorous fixed-point and exact rational arithmetic for harmonic sums.

Every approximate quantity is a BigFixed: an integer mantissa at a fixed
binary scale together with an integer ulp error bound. The true value is
guaranteed to lie in [mantissa - err, mantissa + err] * 2^-scale_bits.
Exact values are plain fractions.Fraction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

from .support import SignSequence

# Denominator-size guard for exact sums; lcm(1..200000) is ~288 kbit, so this
# leaves generous headroom while still catching runaway requests.
DEFAULT_LCM_BIT_BUDGET = 8_000_000


class ResourceBudgetError(Exception):
    """Raised when an exact computation would exceed its memory budget."""


class Comparison(enum.Enum):
    BELOW = "below"
    ABOVE = "above"
    INDETERMINATE = "indeterminate"


def _round_nearest(num: int, den: int) -> tuple[int, int]:
    """Round num/den to the nearest integer (half away from zero).

    Returns (value, inexact) where inexact is 1 iff rounding occurred.
    """
    if den <= 0:
        raise ValueError("denominator must be positive")
    if num >= 0:
        q, r = divmod(num, den)
        if 2 * r >= den:
            q += 1
        return q, (0 if r == 0 else 1)
    q, r = _round_nearest(-num, den)
    return -q, r


@dataclass(frozen=True)
class BigFixed:
    """Fixed-point value mantissa * 2^-scale_bits with error <= err_ulps ulps."""

    mantissa: int
    scale_bits: int
    err_ulps: int = 0

    def __post_init__(self):
        if self.scale_bits < 1:
            raise ValueError("scale_bits must be >= 1")
        if self.err_ulps < 0:
            raise ValueError("err_ulps must be >= 0")

    @classmethod
    def zero(cls, scale_bits: int) -> "BigFixed":
        return cls(0, scale_bits, 0)

    @classmethod
    def from_fraction(cls, value: Fraction, scale_bits: int) -> "BigFixed":
        value = Fraction(value)
        m, inexact = _round_nearest(value.numerator << scale_bits, value.denominator)
        return cls(m, scale_bits, inexact)

    def rescale(self, scale_bits: int) -> "BigFixed":
        """Move to a higher precision exactly (lowering is not supported)."""
        if scale_bits < self.scale_bits:
            raise ValueError("rescale only raises precision")
        shift = scale_bits - self.scale_bits
        return BigFixed(self.mantissa << shift, scale_bits, self.err_ulps << shift)

    def value_fraction(self) -> Fraction:
        return Fraction(self.mantissa, 1 << self.scale_bits)

    def err_fraction(self) -> Fraction:
        return Fraction(self.err_ulps, 1 << self.scale_bits)

    def interval(self) -> tuple[Fraction, Fraction]:
        one = Fraction(1, 1 << self.scale_bits)
        return (self.mantissa - self.err_ulps) * one, (self.mantissa + self.err_ulps) * one

    def contains(self, value: Fraction) -> bool:
        lo, hi = self.interval()
        return lo <= value <= hi

    def _aligned(self, other: "BigFixed") -> tuple["BigFixed", "BigFixed"]:
        p = max(self.scale_bits, other.scale_bits)
        return self.rescale(p), other.rescale(p)

    def __add__(self, other: "BigFixed") -> "BigFixed":
        a, b = self._aligned(other)
        return BigFixed(a.mantissa + b.mantissa, a.scale_bits, a.err_ulps + b.err_ulps)

    def __sub__(self, other: "BigFixed") -> "BigFixed":
        return self + (-other)

    def __neg__(self) -> "BigFixed":
        return BigFixed(-self.mantissa, self.scale_bits, self.err_ulps)

    def __abs__(self) -> "BigFixed":
        return BigFixed(abs(self.mantissa), self.scale_bits, self.err_ulps)

    def mul_int(self, k: int) -> "BigFixed":
        return BigFixed(self.mantissa * k, self.scale_bits, self.err_ulps * abs(k))

    def mul_fraction(self, q: Fraction) -> "BigFixed":
        """Multiply by an exact rational, rounding to nearest (err +1 ulp)."""
        q = Fraction(q)
        m, inexact = _round_nearest(self.mantissa * q.numerator, q.denominator)
        err = -((-self.err_ulps * abs(q.numerator)) // q.denominator)  # ceil
        return BigFixed(m, self.scale_bits, err + inexact)

    def to_decimal_string(self, sig: int = 15) -> str:
        val = _sci(self.value_fraction(), sig)
        if self.err_ulps == 0:
            return f"{val} (exact)"
        return f"{val} ± {_sci_ceil(self.err_fraction(), 2)}"

    def to_obj(self) -> dict:
        return {
            "decimal": self.to_decimal_string(),
            "mantissa": str(self.mantissa),
            "scale_bits": self.scale_bits,
            "err_ulps": str(self.err_ulps),
        }


def _digits10(n: int) -> int:
    """Number of decimal digits of a positive integer, without str()."""
    if n <= 0:
        raise ValueError("needs a positive integer")
    approx = max(1, int(n.bit_length() * 0.30102999566398114))
    while 10**approx <= n:
        approx += 1
    while 10 ** (approx - 1) > n:
        approx -= 1
    return approx


def _sci(value: Fraction, sig: int) -> str:
    """Exact scientific-notation rendering of a rational, `sig` digits."""
    if value == 0:
        return "0"
    sign = "-" if value < 0 else ""
    num, den = abs(value).numerator, abs(value).denominator
    # Decimal exponent via digit counts, then correct by comparison.
    e10 = _digits10(num) - _digits10(den)
    if num * 10 ** max(0, -e10) < den * 10 ** max(0, e10):
        e10 -= 1
    shift = sig - 1 - e10
    if shift >= 0:
        digits = num * 10**shift // den
    else:
        digits = num // (den * 10**-shift)
    s = str(digits)
    if len(s) > sig:  # rare carry from the floor above
        e10 += len(s) - sig
        s = s[:sig]
    mant = s[0] + ("." + s[1:].rstrip("0") if s[1:].rstrip("0") else "")
    return f"{sign}{mant}e{e10:+d}"


def _sci_ceil(value: Fraction, sig: int) -> str:
    """Like _sci but rounds the magnitude up (safe for error bounds)."""
    if value == 0:
        return "0"
    num, den = abs(value).numerator, abs(value).denominator
    e10 = _digits10(num) - _digits10(den)
    if num * 10 ** max(0, -e10) < den * 10 ** max(0, e10):
        e10 -= 1
    shift = sig - 1 - e10
    if shift >= 0:
        digits = -(-num * 10**shift // den)
    else:
        digits = -(-num // (den * 10**-shift))
    s = str(digits)
    if len(s) > sig:
        e10 += len(s) - sig
        s = s[:sig]
    mant = s[0] + ("." + s[1:] if s[1:] else "")
    return f"{mant}e{e10:+d}"


def fraction_str(value: Fraction | None, max_digits: int = 60, sig: int = 24) -> str | None:
    """Render a rational as "p/q" when small, scientific notation when huge.

    Keeps report JSON readable and deterministic even when denominators are
    lcm-sized (thousands of digits).
    """
    if value is None:
        return None
    value = Fraction(value)
    if value == 0:
        return "0"
    num_d = _digits10(abs(value.numerator)) if value.numerator else 1
    den_d = _digits10(value.denominator)
    if num_d <= max_digits and den_d <= max_digits:
        return str(value)
    return _sci(value, sig)


def unit_fraction(n: int, scale_bits: int) -> BigFixed:
    """1/n as a BigFixed with at most one ulp of error."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if scale_bits < 1:
        raise ValueError("precision must be >= 1 bit")
    m, inexact = _round_nearest(1 << scale_bits, n)
    return BigFixed(m, scale_bits, inexact)


def signed_harmonic_sum(signs: SignSequence, scale_bits: int) -> BigFixed:
    """Sum of sign(n)/n over the support, with err <= |support| ulps."""
    total = 0
    err = 0
    one = 1 << scale_bits
    for n, s in zip(signs.support.values, signs.signs):
        q, r = divmod(one, int(n))
        if 2 * r >= n:
            q += 1
        if r:
            err += 1
        total += q if s > 0 else -q
    return BigFixed(total, scale_bits, err)


def exact_rational_sum(signs: SignSequence, lcm_bit_budget: int = DEFAULT_LCM_BIT_BUDGET) -> Fraction:
    """Exact value of the signed harmonic sum as a reduced rational."""
    den = 1
    for n in signs.support.values:
        den = math.lcm(den, int(n))
        if den.bit_length() > lcm_bit_budget:
            raise ResourceBudgetError(
                f"common denominator exceeds {lcm_bit_budget} bits"
            )
    num = 0
    for n, s in zip(signs.support.values, signs.signs):
        w = den // int(n)
        num += w if s > 0 else -w
    return Fraction(num, den)


def compare_to_threshold(value: BigFixed, eta: BigFixed) -> Comparison:
    """Compare |value| against eta, honoring both error intervals.

    BELOW iff |value| + err < eta - err_eta; ABOVE iff |value| - err >
    eta + err_eta; otherwise INDETERMINATE (raise precision and retry).
    """
    v, e = value._aligned(eta)
    mag = abs(v.mantissa)
    if mag + v.err_ulps < e.mantissa - e.err_ulps:
        return Comparison.BELOW
    if mag - v.err_ulps > e.mantissa + e.err_ulps:
        return Comparison.ABOVE
    return Comparison.INDETERMINATE


def default_precision(support_size: int, eta_target: Fraction) -> int:
    """Working precision: enough bits that |support| ulps stay below eta/2."""
    if eta_target <= 0:
        raise ValueError("eta_target must be positive")
    ratio = Fraction(max(support_size, 1)) / Fraction(eta_target)
    return max(1, math.ceil(math.log2(float(ratio)))) + 16


class VerificationLog:
    """Records every threshold comparison so suites can audit outcomes."""

    def __init__(self):
        self.entries: list[tuple[str, Comparison, int]] = []

    def record(self, label: str, outcome: Comparison, bits: int):
        self.entries.append((label, outcome, bits))

    def indeterminate_accepts(self) -> list[str]:
        return [lbl for lbl, out, _ in self.entries if out is Comparison.INDETERMINATE]


def verify_abs_below(
    value: Fraction,
    eta: Fraction,
    start_bits: int = 64,
    max_bits: int = 4096,
    label: str = "",
    log: VerificationLog | None = None,
) -> tuple[Comparison, BigFixed, int]:
    """Decide |value| vs eta through BigFixed intervals, escalating precision.

    Both inputs are exact, so the loop terminates with a determinate answer
    unless |value| equals eta, in which case BELOW is returned (the contract
    everywhere in this package is a non-strict bound).
    """
    value = Fraction(value)
    eta = Fraction(eta)
    bits = start_bits
    while bits <= max_bits:
        v = BigFixed.from_fraction(value, bits)
        e = BigFixed.from_fraction(eta, bits)
        outcome = compare_to_threshold(v, e)
        if outcome is not Comparison.INDETERMINATE:
            if log is not None:
                log.record(label, outcome, bits)
            return outcome, v, bits
        bits *= 2
    outcome = Comparison.BELOW if abs(value) <= eta else Comparison.ABOVE
    if log is not None:
        log.record(label, outcome, bits)
    return outcome, BigFixed.from_fraction(value, max_bits), max_bits
