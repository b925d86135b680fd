"""Completely multiplicative +/-1 functions: evaluation, partial and
logarithmic means, the modified quadratic character mod 3, crossing search,
and the two-block inductive pipeline that drives logarithmic means small at a
chain of scales."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .constructor import (
    ConstructionReport,
    FlipResult,
    _spread_indices,
    flip_to_target,
    mitm_optimize,
)
from .numerics import (
    BigFixed,
    Comparison,
    VerificationLog,
    default_precision,
    fraction_str,
    verify_abs_below,
)
from .sieve import SieveTable
from .support import SignSequence, SupportSet


def _rule_liouville(p: int) -> int:
    return -1


def _rule_one(p: int) -> int:
    return 1


def _rule_chi3_star(p: int) -> int:
    # Quadratic character mod 3 at primes, with the gap at p = 3 filled by -1.
    if p == 3:
        return -1
    return 1 if p % 3 == 1 else -1


SEED_RULES = {
    "liouville": _rule_liouville,
    "one": _rule_one,
    "chi3_star": _rule_chi3_star,
}


class MultiplicativeFn:
    """A completely multiplicative function n -> {-1, +1}.

    Values at primes come from a named default rule plus a finite override
    map (overrides allowed at primes only); composites follow by complete
    multiplicativity. Instances are immutable: use with_overrides to derive
    modified functions.
    """

    def __init__(self, sieve: SieveTable, default_rule: str = "liouville", overrides=None):
        if default_rule not in SEED_RULES:
            raise ValueError(f"unknown default rule {default_rule!r}")
        self.sieve = sieve
        self.default_rule = default_rule
        self.limit = sieve.limit
        self._rule = SEED_RULES[default_rule]
        self.overrides: dict[int, int] = {}
        for p, s in (overrides or {}).items():
            p = int(p)
            if p > sieve.limit or sieve.spf_of(p) != p:
                raise ValueError(f"override at non-prime {p}")
            if s not in (-1, 1):
                raise ValueError("override values must be +1 or -1")
            self.overrides[p] = int(s)
        self._values: np.ndarray | None = None
        self._cumsum: np.ndarray | None = None

    def with_overrides(self, extra: dict[int, int]) -> "MultiplicativeFn":
        merged = dict(self.overrides)
        merged.update(extra)
        return MultiplicativeFn(self.sieve, self.default_rule, merged)

    def sign_at_prime(self, p: int) -> int:
        if p in self.overrides:
            return self.overrides[p]
        return self._rule(p)

    def evaluate(self, n: int) -> int:
        """f(n) via the prime factorization (f(1) = 1)."""
        if n < 1 or n > self.limit:
            raise ValueError(f"{n} outside supported range [1, {self.limit}]")
        out = 1
        for p, e in self.sieve.factorize(n):
            if e & 1 and self.sign_at_prime(p) < 0:
                out = -out
        return out

    def _negative_primes(self) -> np.ndarray:
        ps = self.sieve.primes
        if self.default_rule == "liouville":
            mask = np.ones(len(ps), dtype=bool)
        elif self.default_rule == "one":
            mask = np.zeros(len(ps), dtype=bool)
        else:  # chi3_star
            mask = (ps == 3) | (ps % 3 == 2)
        for p, s in self.overrides.items():
            i = int(np.searchsorted(ps, p))
            mask[i] = s < 0
        return ps[mask]

    def values_range(self) -> np.ndarray:
        """f(n) for 0..limit as an int8 array (index 0 unused, set to 0)."""
        if self._values is not None:
            return self._values
        n = self.limit
        acc = np.zeros(n + 1, dtype=np.int8)
        for p in self._negative_primes():
            q = int(p)
            while q <= n:
                acc[q::q] += 1
                q *= int(p)
        vals = (1 - 2 * (acc & 1)).astype(np.int8)
        vals[0] = 0
        self._values = vals
        return vals

    def _partial_sums(self) -> np.ndarray:
        if self._cumsum is None:
            self._cumsum = np.cumsum(self.values_range(), dtype=np.int64)
        return self._cumsum

    def partial_sum(self, n: int) -> int:
        """M(f, n) = sum of f(m) for m <= n, exact."""
        if n < 0 or n > self.limit:
            raise ValueError("n outside supported range")
        if n == 0:
            return 0
        return int(self._partial_sums()[n])

    def log_mean(self, n: int, scale_bits: int) -> BigFixed:
        """L(f, n) = sum of f(m)/m for m <= n, with err <= n ulps."""
        if n < 1 or n > self.limit:
            raise ValueError("n outside supported range")
        vals = self.values_range()
        if scale_bits <= 40:
            ms = np.arange(1, n + 1, dtype=np.int64)
            terms = (np.int64(1) << scale_bits) // ms
            total = int(np.sum(np.where(vals[1 : n + 1] > 0, terms, -terms), dtype=np.int64))
            return BigFixed(total, scale_bits, n)
        total = 0
        err = 0
        one = 1 << scale_bits
        for m in range(1, n + 1):
            q, r = divmod(one, m)
            if 2 * r >= m:
                q += 1
            if r:
                err += 1
            total += q if vals[m] > 0 else -q
        return BigFixed(total, scale_bits, err)

    def log_mean_exact(self, n: int) -> Fraction:
        """Exact L(f, n); denominator is lcm(1..n), so keep n moderate."""
        if n < 1 or n > self.limit:
            raise ValueError("n outside supported range")
        vals = self.values_range()
        den = 1
        for m in range(2, n + 1):
            den = math.lcm(den, m)
        num = 0
        for m in range(1, n + 1):
            w = den // m
            num += w if vals[m] > 0 else -w
        return Fraction(num, den)

    def to_sign_sequence(self, support: SupportSet) -> SignSequence:
        vals = self.values_range()
        return SignSequence(support, vals[support.values])

    def __repr__(self) -> str:
        return (
            f"MultiplicativeFn(rule={self.default_rule!r}, "
            f"overrides={len(self.overrides)}, limit={self.limit})"
        )


@dataclass
class Chi3Report:
    """Partial-sum identity checks for the modified character mod 3."""

    k_max: int
    values: list[tuple[int, int, int]]  # (K, M(f, 3^K + 1), expected)
    ok: bool
    witness: int | None

    def to_obj(self) -> dict:
        return {
            "k_max": self.k_max,
            "values": [list(v) for v in self.values],
            "ok": self.ok,
            "witness": self.witness,
        }


def chi3_star_check(k_max: int, sieve: SieveTable) -> Chi3Report:
    """Check M(chi3*, 3^K + 1) = (-1)^K + 1 for K = 1..k_max."""
    top = 3**k_max + 1
    if top > sieve.limit:
        raise ValueError(f"sieve limit {sieve.limit} below 3^{k_max}+1 = {top}")
    fn = MultiplicativeFn(sieve, "chi3_star")
    rows: list[tuple[int, int, int]] = []
    witness = None
    for k in range(1, k_max + 1):
        m = fn.partial_sum(3**k + 1)
        expected = (-1) ** k + 1
        rows.append((k, m, expected))
        if m != expected and witness is None:
            witness = k
    return Chi3Report(k_max=k_max, values=rows, ok=witness is None, witness=witness)


class PrecisionExhausted(Exception):
    """Interval arithmetic could not certify a sign at the working precision."""


def first_negative_crossing(fn: MultiplicativeFn, limit: int, scale_bits: int = 48):
    """Smallest C <= limit with sum_{n<=C} f(n)/n < 0, or None.

    Decided by integer interval arithmetic: terms are floor(2^P / n) so the
    accumulated error after n terms is below n ulps, and a partial sum is
    certified negative iff cum + n < 0 in ulps. Inconclusive prefixes raise
    PrecisionExhausted rather than guessing.
    """
    if limit > fn.limit:
        raise ValueError("limit exceeds the function's supported range")
    if scale_bits > 48:
        raise ValueError("scale_bits above 48 risks int64 overflow")
    vals = fn.values_range()[1 : limit + 1]
    ms = np.arange(1, limit + 1, dtype=np.int64)
    terms = (np.int64(1) << scale_bits) // ms
    cum = np.cumsum(np.where(vals > 0, terms, -terms))
    certain_neg = cum + ms < 0
    uncertain = np.abs(cum) <= ms
    if certain_neg.any():
        first = int(np.argmax(certain_neg)) + 1
        if uncertain[: first - 1].any():
            witness = int(np.argmax(uncertain)) + 1
            raise PrecisionExhausted(
                f"sign of the partial sum at n={witness} is below the error bound"
            )
        return first
    if uncertain.any():
        witness = int(np.argmax(uncertain)) + 1
        raise PrecisionExhausted(
            f"sign of the partial sum at n={witness} is below the error bound"
        )
    return None


@dataclass
class ScaleReport:
    """One inductive step of the pipeline at scale N."""

    n_scale: int
    mid_interval: tuple[int, int]
    top_interval: tuple[int, int]
    mid_primes: int
    top_primes: int
    e_value: Fraction
    identity_ok: bool
    flip: FlipResult
    mid_report: ConstructionReport | None
    top_report: ConstructionReport | None
    achieved_exact: Fraction
    achieved: BigFixed
    eta_target: Fraction
    met: bool
    feasible: bool
    c0_hat: float | None
    cube_root_bound_ok: bool
    notes: list[str] = field(default_factory=list)

    def to_obj(self) -> dict:
        return {
            "n": self.n_scale,
            "mid_interval": list(self.mid_interval),
            "top_interval": list(self.top_interval),
            "mid_primes": self.mid_primes,
            "top_primes": self.top_primes,
            "e_value": fraction_str(self.e_value),
            "identity_ok": self.identity_ok,
            "flip": self.flip.to_obj(),
            "mid_report": self.mid_report.to_obj() if self.mid_report else None,
            "top_report": self.top_report.to_obj() if self.top_report else None,
            "achieved_exact": fraction_str(self.achieved_exact),
            "achieved": self.achieved.to_obj(),
            "eta_target": fraction_str(self.eta_target),
            "met": self.met,
            "feasible": self.feasible,
            "c0_hat": self.c0_hat,
            "cube_root_bound_ok": self.cube_root_bound_ok,
            "notes": self.notes,
        }


@dataclass
class PipelineState:
    """Cross-scale state of the two-block construction."""

    scales: list[int]
    c_cross: int
    delta: Fraction
    modified_intervals: list[list[list[int]]]
    scale_reports: list[ScaleReport]
    seed_rule: str
    seed_overrides: dict[int, int]
    rng_seed: int
    feasible: bool
    wall_time: float = 0.0
    verification: VerificationLog | None = None

    def to_obj(self) -> dict:
        return {
            "scales": self.scales,
            "c_cross": self.c_cross,
            "delta": fraction_str(self.delta),
            "modified_intervals": self.modified_intervals,
            "scale_reports": [r.to_obj() for r in self.scale_reports],
            "seed_rule": self.seed_rule,
            "seed_overrides": {str(k): v for k, v in sorted(self.seed_overrides.items())},
            "rng_seed": self.rng_seed,
            "feasible": self.feasible,
            "wall_time": self.wall_time,
        }


class PipelineError(Exception):
    """A pipeline precondition failed outright."""


def make_scales(n0: int, factor: int, count: int) -> list[int]:
    return [n0 * factor**i for i in range(count)]


def _block_intervals(n: int, c: int) -> tuple[tuple[int, int], tuple[int, int]]:
    return (n // (c + 1), n // c), (n // 2, n)


def log_mean_pipeline(
    sieve: SieveTable,
    seed_rule: str = "liouville",
    seed_overrides: dict[int, int] | None = None,
    c_cross: int = 6,
    scales: list[int] | None = None,
    c0: float = 1.0 / 1000,
    rng_seed: int = 0,
    target_eta: Fraction = Fraction(1, 10**10),
    max_free: int = 48,
    allow_nonpositive_delta: bool = False,
    verification: VerificationLog | None = None,
) -> tuple[MultiplicativeFn, PipelineState]:
    """Drive |L(f, N_i)| small by reassigning f at primes in two blocks per
    scale: J_i = [N_i/2, N_i] united with [N_i/(C+1), N_i/C].

    Per scale: (a) split L(f, N) = sum_top f(p)/p + L(f, C) * sum_mid f(p)/p
    + E and assert the split against a direct evaluation, (b) flip signs on
    the top block toward -E, (c) meet-in-the-middle on the mid block with
    target (E + sum_top)/Delta, then refine a free subset of the top block,
    and (d) re-verify |L(f, N)| exactly against the target. The function
    agrees with the seed at every prime outside the union of the blocks.

    Delta = -L(seed, C) must be positive for the asymptotic argument; pass
    allow_nonpositive_delta=True to run best-effort when it is not.
    """
    t_start = time.perf_counter()
    scales = list(scales) if scales is not None else [2000, 16000]
    if sorted(scales) != scales:
        raise PipelineError("scales must be increasing")
    if c_cross < 2:
        raise PipelineError("block constant must be >= 2")
    if scales[0] <= (c_cross + 1) ** 2:
        raise PipelineError(
            f"first scale must exceed (C+1)^2 = {(c_cross + 1) ** 2} for a valid block split"
        )
    for a, b in zip(scales, scales[1:]):
        if b < 8 * a or b <= (c_cross + 1) * a:
            raise PipelineError("each scale must be >= 8x and > (C+1)x the previous one")
    if scales[-1] > sieve.limit:
        raise PipelineError("sieve limit below the top scale")
    fn = MultiplicativeFn(sieve, seed_rule, seed_overrides)
    seed_fn = fn
    l_c = seed_fn.log_mean_exact(c_cross)
    delta = -l_c
    if delta <= 0 and not allow_nonpositive_delta:
        raise PipelineError(
            f"Delta = -L(seed, {c_cross}) = {delta} is not positive; "
            "no admissible crossing at this constant"
        )
    if verification is None:
        verification = VerificationLog()
    reports: list[ScaleReport] = []
    intervals: list[list[list[int]]] = []
    feasible_all = True
    for n in scales:
        notes: list[str] = []
        (mid_lo, mid_hi), (top_lo, top_hi) = _block_intervals(n, c_cross)
        mid_primes = SupportSet(
            [int(p) for p in sieve.primes_in(mid_lo, mid_hi) if n // int(p) == c_cross]
        )
        top_primes = sieve.primes_in(top_lo, top_hi)
        intervals.append([[mid_lo, mid_hi], [top_lo, top_hi]])
        if not len(top_primes):
            raise PipelineError(f"no primes in the top block at scale {n}")
        den = 1
        for m in range(2, n + 1):
            den = math.lcm(den, m)
        weights = [0] + [den // m for m in range(1, n + 1)]

        def l_exact(values: np.ndarray) -> Fraction:
            num = 0
            for m in range(1, n + 1):
                num += weights[m] if values[m] > 0 else -weights[m]
            return Fraction(num, den)

        def block_sum(values: np.ndarray, block: SupportSet) -> Fraction:
            num = 0
            for p in block.values:
                p = int(p)
                num += weights[p] if values[p] > 0 else -weights[p]
            return Fraction(num, den)

        vals = fn.values_range()
        l_total = l_exact(vals)
        s_top = block_sum(vals, top_primes)
        s_mid = block_sum(vals, mid_primes)
        e_value = l_total - s_top - l_c * s_mid
        # Independent evaluation: sum over n <= N untouched by block primes.
        mask = np.ones(n + 1, dtype=bool)
        mask[0] = False
        for p in list(mid_primes) + list(top_primes):
            mask[p::p] = False
        num = 0
        for m in np.nonzero(mask)[0]:
            num += weights[m] if vals[m] > 0 else -weights[m]
        identity_ok = Fraction(num, den) == e_value
        if not identity_ok:
            notes.append("block decomposition identity failed")
        # (b) flip the top block toward -(E + L_C * current mid sum).
        flip = flip_to_target(top_primes, -(e_value + l_c * s_mid))
        if flip.feasible:
            fn = fn.with_overrides(dict(flip.signs.items()))
        else:
            fn = fn.with_overrides({int(p): fn.sign_at_prime(int(p)) for p in top_primes})
            notes.append(
                f"top-block flip infeasible (deficit {float(flip.deficit):.3e}); "
                "keeping seed signs"
            )
        vals = fn.values_range()
        s_top = block_sum(vals, top_primes)
        # (c) mid block toward x0 = (E + sum_top)/Delta, when it has leverage.
        mid_report = None
        if len(mid_primes) and delta != 0:
            x0_mid = (e_value + s_top) / delta
            mid_report = mitm_optimize(
                mid_primes, x0_mid, max_free=min(max_free, len(mid_primes)), seed=rng_seed
            )
            fn = fn.with_overrides(dict(mid_report.signs.items()))
            vals = fn.values_range()
        elif not len(mid_primes):
            notes.append("mid block contains no primes at this scale")
        s_mid = block_sum(vals, mid_primes) if len(mid_primes) else Fraction(0)
        # (c') refine a free subset of the top block for the final target.
        top_report = None
        if len(top_primes) > 1:
            free_idx = _spread_free_top(len(top_primes), max_free)
            free_sup = SupportSet(top_primes.values[free_idx])
            fixed_mask = np.ones(len(top_primes), dtype=bool)
            fixed_mask[free_idx] = False
            fixed_sup = SupportSet(top_primes.values[fixed_mask])
            s_top_fixed = block_sum(vals, fixed_sup)
            x0_top = -(e_value + l_c * s_mid + s_top_fixed)
            top_report = mitm_optimize(
                free_sup, x0_top, max_free=max_free, seed=rng_seed, target_eta=target_eta
            )
            fn = fn.with_overrides(dict(top_report.signs.items()))
            vals = fn.values_range()
            s_top = block_sum(vals, top_primes)
        # (d) exact re-verification at this scale.
        achieved_exact = abs(l_exact(vals))
        identity_final = l_exact(vals) == e_value + s_top + l_c * s_mid
        if not identity_final:
            notes.append("post-construction decomposition identity failed")
        outcome, achieved_bf, _ = verify_abs_below(
            achieved_exact,
            target_eta,
            start_bits=default_precision(n, target_eta),
            label=f"pipeline scale {n}",
            log=verification,
        )
        met = outcome is Comparison.BELOW
        af = float(achieved_exact) if achieved_exact else 0.0
        c0_hat = (
            -math.log(af) / (n / math.log(n)) ** (1.0 / 3) if 0.0 < af < 1.0 else None
        )
        cube_root_bound_ok = bool(
            achieved_exact
            <= Fraction(math.exp(-c0 * (n / math.log(n)) ** (1.0 / 3)))
        )
        scale_feasible = flip.feasible and identity_ok and identity_final
        feasible_all = feasible_all and scale_feasible and met
        reports.append(
            ScaleReport(
                n_scale=n,
                mid_interval=(mid_lo, mid_hi),
                top_interval=(top_lo, top_hi),
                mid_primes=len(mid_primes),
                top_primes=len(top_primes),
                e_value=e_value,
                identity_ok=identity_ok,
                flip=flip,
                mid_report=mid_report,
                top_report=top_report,
                achieved_exact=achieved_exact,
                achieved=achieved_bf,
                eta_target=target_eta,
                met=met,
                feasible=scale_feasible,
                c0_hat=c0_hat,
                cube_root_bound_ok=cube_root_bound_ok,
                notes=notes,
            )
        )
    state = PipelineState(
        scales=scales,
        c_cross=c_cross,
        delta=delta,
        modified_intervals=intervals,
        scale_reports=reports,
        seed_rule=seed_rule,
        seed_overrides=dict(seed_overrides or {}),
        rng_seed=rng_seed,
        feasible=feasible_all,
        wall_time=time.perf_counter() - t_start,
        verification=verification,
    )
    return fn, state


def _spread_free_top(count: int, max_free: int) -> np.ndarray:
    return _spread_indices(count, min(max_free, count))


def locality_check(
    fn: MultiplicativeFn, seed_fn: MultiplicativeFn, intervals, limit: int
) -> bool:
    """True iff fn agrees with the seed at every prime <= limit outside the
    given intervals."""
    ps = fn.sieve.primes[fn.sieve.primes <= limit]
    outside = np.ones(len(ps), dtype=bool)
    for blocks in intervals:
        for lo, hi in blocks:
            outside &= ~((ps > lo) & (ps <= hi))
    for p in ps[outside]:
        if fn.sign_at_prime(int(p)) != seed_fn.sign_at_prime(int(p)):
            return False
    return True


def multiplicativity_check(fn: MultiplicativeFn, pairs: int, seed: int) -> bool:
    """f(mn) == f(m) f(n) on `pairs` random pairs with mn within range."""
    rng = np.random.default_rng(seed)
    vals = fn.values_range()
    limit = fn.limit
    top = int(math.isqrt(limit))
    m = rng.integers(1, top + 1, size=pairs)
    n = rng.integers(1, limit // np.maximum(m, 1) + 1, size=pairs)
    prod = m * n
    return bool(np.all(vals[prod] == vals[m] * vals[n]))
