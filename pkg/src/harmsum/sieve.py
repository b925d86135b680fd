"""Arithmetic-function infrastructure: smallest-prime-factor tables, prime
counting helpers, smooth/rough decompositions, smooth-number counts and the
Dickman density function."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .numerics import BigFixed, ResourceBudgetError
from .support import SupportSet

# Hard cap on sieve size; beyond this the spf table alone is >0.8 GB.
MAX_SIEVE_LIMIT = 200_000_000


class SieveRangeError(Exception):
    """Raised when a query lies outside the sieve's tabulated range."""


@dataclass(frozen=True)
class RoughSmoothSplit:
    """Unique factorization n = rough * smooth with P-(rough) > y >= P+(smooth)."""

    n: int
    y: int
    rough: int
    smooth: int


class SieveTable:
    """Smallest-prime-factor table for 2..limit with derived query helpers.

    Immutable after construction; all queries are read-only.
    """

    def __init__(self, limit: int):
        if limit < 2:
            raise ValueError("sieve limit must be >= 2")
        if limit > MAX_SIEVE_LIMIT:
            raise ResourceBudgetError(f"sieve limit {limit} exceeds budget")
        self.limit = int(limit)
        self.spf = self._build(self.limit)
        idx = np.arange(self.limit + 1, dtype=np.int64)
        self.primes = idx[(idx >= 2) & (self.spf == idx)]
        self._omega_mult: np.ndarray | None = None
        self._omega_distinct: np.ndarray | None = None
        self._lpf: np.ndarray | None = None

    @staticmethod
    def _build(limit: int) -> np.ndarray:
        spf = np.zeros(limit + 1, dtype=np.int64)
        spf[1] = 1
        for p in range(2, math.isqrt(limit) + 1):
            if spf[p] == 0:
                spf[p] = p
                seg = spf[p * p :: p]
                seg[seg == 0] = p
        rest = np.nonzero(spf == 0)[0]
        rest = rest[rest >= 2]
        spf[rest] = rest
        return spf

    def _check(self, n: int):
        if n < 1 or n > self.limit:
            raise SieveRangeError(f"{n} outside sieve range [1, {self.limit}]")

    def spf_of(self, n: int) -> int:
        self._check(n)
        return int(self.spf[n])

    def factorize(self, n: int) -> list[tuple[int, int]]:
        """Prime factorization as (p, exponent) pairs, ascending."""
        self._check(n)
        out: list[tuple[int, int]] = []
        while n > 1:
            p = int(self.spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out

    def big_omega(self, n: int) -> int:
        return sum(e for _, e in self.factorize(n))

    def small_omega(self, n: int) -> int:
        return len(self.factorize(n))

    def liouville(self, n: int) -> int:
        return -1 if self.big_omega(n) & 1 else 1

    def omega_table(self, with_multiplicity: bool = True) -> np.ndarray:
        """Table of Omega(n) (or omega(n)) for 0..limit; Omega(0)=Omega(1)=0."""
        cached = self._omega_mult if with_multiplicity else self._omega_distinct
        if cached is not None:
            return cached
        table = np.zeros(self.limit + 1, dtype=np.int8)
        for p in self.primes:
            p = int(p)
            q = p
            while q <= self.limit:
                table[q::q] += 1
                if not with_multiplicity:
                    break
                q *= p
        if with_multiplicity:
            self._omega_mult = table
        else:
            self._omega_distinct = table
        return table

    def liouville_table(self) -> np.ndarray:
        om = self.omega_table(with_multiplicity=True)
        return np.where(om & 1, -1, 1).astype(np.int8)

    def lpf_table(self) -> np.ndarray:
        """Largest prime factor for 0..limit (lpf(1) = 1)."""
        if self._lpf is not None:
            return self._lpf
        lpf = np.zeros(self.limit + 1, dtype=np.int64)
        lpf[1] = 1
        for p in self.primes:
            p = int(p)
            lpf[p::p] = p  # ascending primes: last write is the largest factor
        self._lpf = lpf
        return lpf

    def primes_in(self, a: int, b: int) -> SupportSet:
        """Primes p with a < p <= b."""
        if not (1 <= a <= b <= self.limit):
            if a > b:
                return SupportSet(np.empty(0, dtype=np.int64))
            raise SieveRangeError(f"interval ({a}, {b}] outside sieve range")
        i = np.searchsorted(self.primes, a, side="right")
        j = np.searchsorted(self.primes, b, side="right")
        return SupportSet(self.primes[i:j])

    def prime_count(self, n: int) -> int:
        self._check(max(n, 1))
        return int(np.searchsorted(self.primes, n, side="right"))

    def prime_reciprocal_sum(self, a: int, b: int, scale_bits: int) -> BigFixed:
        """Error-bounded sum of 1/p over primes in (a, b]."""
        ps = self.primes_in(a, b)
        total = 0
        err = 0
        one = 1 << scale_bits
        for p in ps.values:
            q, r = divmod(one, int(p))
            if 2 * r >= p:
                q += 1
            if r:
                err += 1
            total += q
        return BigFixed(total, scale_bits, err)

    def rough_smooth_split(self, n: int, y: int) -> RoughSmoothSplit:
        """Split n into its y-rough and y-smooth parts."""
        self._check(n)
        if y < 1:
            raise ValueError("threshold y must be >= 1")
        rough, smooth = 1, 1
        m = n
        while m > 1:
            p = int(self.spf[m])
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            if p > y:
                rough *= p**e
            else:
                smooth *= p**e
        return RoughSmoothSplit(n=n, y=y, rough=rough, smooth=smooth)

    def rough_part_set(self, a: SupportSet, eps1: float, n_scale: int) -> SupportSet:
        """Deduplicated set of rough parts of A at threshold y = n_scale^eps1."""
        if not 0 < eps1 < 1:
            raise ValueError("eps1 must be in (0, 1)")
        y = int(n_scale**eps1)
        return SupportSet(sorted({self.rough_smooth_split(int(x), y).rough for x in a.values}))

    def psi_count(self, x: int, y: int) -> int:
        """Number of y-smooth integers in [1, x] (n = 1 counts)."""
        if x < 1 or y < 1:
            raise ValueError("x and y must be >= 1")
        self._check(x)
        lpf = self.lpf_table()
        return int(np.count_nonzero(lpf[1 : x + 1] <= y))

    def select_low_omega_subset(self, a: SupportSet, n_scale: int) -> SupportSet:
        """Elements of A with Omega(n) <= 2 log log n_scale (natural logs)."""
        if n_scale < 16:
            raise ValueError("scale must be >= 16 for a meaningful log log")
        bound = 2.0 * math.log(math.log(n_scale))
        om = self.omega_table(with_multiplicity=True)
        vals = a.values
        if len(vals) and int(vals[-1]) > self.limit:
            raise SieveRangeError("support exceeds sieve range")
        mask = om[vals] <= bound
        return SupportSet(vals[mask])


def build_sieve(limit: int) -> SieveTable:
    return SieveTable(limit)


_RHO_CACHE: dict[float, tuple[np.ndarray, float]] = {}


def _rho_grid(u_max: float, step: float) -> np.ndarray:
    """Grid of Dickman rho on [0, u_max] by the mean-value recursion.

    rho(u) = (1/u) * integral of rho over [u-1, u], advanced one step at a
    time with composite Simpson weights; the unknown right endpoint appears
    linearly and is solved for explicitly.
    """
    per_unit = round(1.0 / step)
    if per_unit < 2 or per_unit % 2:
        raise ValueError("step must divide 1 into an even number of pieces")
    h = 1.0 / per_unit
    n_pts = int(math.ceil(u_max / h)) + per_unit + 1
    rho = np.empty(n_pts, dtype=np.float64)
    rho[: per_unit + 1] = 1.0
    weights = np.full(per_unit + 1, 2.0, dtype=np.float64)
    weights[1::2] = 4.0
    weights[0] = weights[-1] = 1.0
    weights *= h / 3.0
    w_last = weights[-1]
    for j in range(per_unit + 1, n_pts):
        u = j * h
        window = rho[j - per_unit : j]
        known = float(np.dot(weights[:-1], window))
        rho[j] = known / (u - w_last)
    return rho


def dickman_rho(u: float, step: float = 1e-3) -> float:
    """Dickman's rho function (1 on [0,1], delay-integrated beyond)."""
    if u < 0:
        raise ValueError("u must be >= 0")
    if u <= 1:
        return 1.0
    key = step
    grid, cached_max = _RHO_CACHE.get(key, (None, -1.0))
    if grid is None or u > cached_max:
        new_max = max(u * 1.25, 12.0)
        grid = _rho_grid(new_max, step)
        _RHO_CACHE[key] = (grid, new_max)
    per_unit = round(1.0 / step)
    pos = u * per_unit
    i = int(pos)
    frac = pos - i
    if i + 1 >= len(grid):
        return float(grid[-1])
    return float(grid[i] * (1 - frac) + grid[i + 1] * frac)


def dickman_rho_grid(u_max: float, coarse: float = 0.1, step: float = 1e-3):
    """(u, rho(u)) pairs on a coarse grid, for CSV dumps."""
    us = np.arange(0.0, u_max + coarse / 2, coarse)
    return [(float(u), dickman_rho(float(u), step)) for u in us]


def harmonic_number(n: int) -> Fraction:
    out = Fraction(0)
    for k in range(1, n + 1):
        out += Fraction(1, k)
    return out
