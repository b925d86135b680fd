"""Sign-sequence construction: bounded greedy, target flipping, alternating
prefixes, meet-in-the-middle refinement, rough-basis subset extraction and the
dense-set pipelines that chain them together."""

from __future__ import annotations

import bisect
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import density as density_mod
from .numerics import (
    BigFixed,
    ResourceBudgetError,
    _round_nearest,
    default_precision,
    exact_rational_sum,
    fraction_str,
)
from .sieve import SieveTable
from .support import SignSequence, SupportSet

EXACT_MITM_LIMIT = 26  # half enumerations stay <= 2^13 exact big integers
MAX_FREE_LIMIT = 52
SHORTLIST_CAP = 65536


class InfeasibleError(Exception):
    """Raised when a construction's stated precondition cannot be met."""


class DensityRequirementError(ValueError):
    """The input set is not dense enough for the requested construction."""


@dataclass(frozen=True)
class FlipResult:
    """Outcome of flip_to_target; infeasible outcomes carry the deficit."""

    feasible: bool
    signs: SignSequence | None
    error: Fraction | None
    deficit: Fraction | None = None

    def to_obj(self) -> dict:
        return {
            "feasible": self.feasible,
            "signs": self.signs.to_obj() if self.signs else None,
            "error": fraction_str(self.error),
            "deficit": fraction_str(self.deficit),
        }


def _clean_detail(v):
    if isinstance(v, Fraction):
        return fraction_str(v)
    if isinstance(v, BigFixed):
        return v.to_obj()
    if isinstance(v, FlipResult):
        return v.to_obj()
    if isinstance(v, ConstructionReport):
        return v.to_obj()
    if isinstance(v, dict):
        return {k: _clean_detail(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean_detail(x) for x in v]
    if isinstance(v, (np.integer, np.floating)):
        return v.item()
    return v


@dataclass
class ConstructionReport:
    """A constructed sign assignment with its re-verified achievement.

    `achieved_exact` is always recomputed from the signs by exact rational
    arithmetic, never trusted from the search path.
    """

    signs: SignSequence
    achieved: BigFixed
    achieved_exact: Fraction
    target_eta: Fraction | None
    target_met: bool | None
    method: str
    rng_seed: int | None
    wall_time: float
    details: dict = field(default_factory=dict)

    def to_obj(self) -> dict:
        return {
            "signs": self.signs.to_obj(),
            "achieved": self.achieved.to_obj(),
            "achieved_exact": fraction_str(self.achieved_exact),
            "target_eta": fraction_str(self.target_eta),
            "target_met": self.target_met,
            "method": self.method,
            "rng_seed": self.rng_seed,
            "wall_time": self.wall_time,
            "details": _clean_detail(self.details),
        }


def _bits_for(count: int, target: Fraction | None, achieved: Fraction) -> int:
    ref = target if target is not None and target > 0 else Fraction(1, 10**15)
    if 0 < achieved < ref:
        ref = achieved
    return default_precision(count, ref)


def _scaled_weights(ns: list[int], extra_den: int = 1) -> tuple[int, list[int]]:
    den = extra_den
    for n in ns:
        den = math.lcm(den, n)
    return den, [den // n for n in ns]


def _greedy_signs(weights: list[int], start_err: int, trace: list[int] | None = None):
    """Greedy signs minimizing |err| step by step; ties resolve to +1."""
    e = start_err
    signs: list[int] = []
    for w in weights:
        s = -1 if e > 0 else 1
        e += s * w
        signs.append(s)
        if trace is not None:
            trace.append(e)
    return signs, e


def greedy_bounded(a: SupportSet, with_trace: bool = False):
    """Greedy signs over A in increasing order; every prefix sum stays in [-1, 1].

    Returns (SignSequence, exact sum); with_trace appends the list of exact
    partial sums.
    """
    if not len(a):
        raise ValueError("support must be nonempty")
    ns = [int(n) for n in a.values]
    den, weights = _scaled_weights(ns)
    trace_scaled: list[int] | None = [] if with_trace else None
    signs, e = _greedy_signs(weights, 0, trace_scaled)
    seq = SignSequence(a, np.asarray(signs, dtype=np.int8))
    total = Fraction(e, den)
    if with_trace:
        return seq, total, [Fraction(t, den) for t in trace_scaled]
    return seq, total


def greedy_toward(a: SupportSet, target) -> tuple[SignSequence, Fraction]:
    """Greedy signs over A driving the sum toward an exact rational target.

    Returns (SignSequence, exact achieved sum).
    """
    if not len(a):
        return SignSequence(a, np.empty(0, dtype=np.int8)), Fraction(0)
    target = Fraction(target)
    ns = [int(n) for n in a.values]
    den, weights = _scaled_weights(ns, target.denominator)
    t_scaled = target.numerator * (den // target.denominator)
    signs, e = _greedy_signs(weights, -t_scaled)
    seq = SignSequence(a, np.asarray(signs, dtype=np.int8))
    return seq, Fraction(e + t_scaled, den)


def flip_to_target(s: SupportSet, alpha) -> FlipResult:
    """Signs b on S with |sum b_n/n - alpha| <= 1/min(S).

    Requires the reciprocal sum over S to exceed |alpha|; otherwise returns
    an infeasible outcome carrying the deficit. Algorithm: +1 prefix until
    the partial sum first exceeds |alpha| (all signs negated afterwards when
    alpha < 0), then greedy on the remainder.
    """
    alpha = Fraction(alpha)
    if not len(s):
        return FlipResult(feasible=False, signs=None, error=None, deficit=abs(alpha))
    total = s.reciprocal_sum()
    if total <= abs(alpha):
        return FlipResult(feasible=False, signs=None, error=None, deficit=abs(alpha) - total)
    a = abs(alpha)
    ns = [int(n) for n in s.values]
    den, weights = _scaled_weights(ns, a.denominator)
    a_scaled = a.numerator * (den // a.denominator)
    cum = 0
    j0 = None
    for i, w in enumerate(weights):
        cum += w
        if cum > a_scaled:
            j0 = i
            break
    assert j0 is not None
    signs = [1] * (j0 + 1)
    tail, e = _greedy_signs(weights[j0 + 1 :], cum - a_scaled)
    signs.extend(tail)
    if alpha < 0:
        signs = [-x for x in signs]
        e = -e
    seq = SignSequence(s, np.asarray(signs, dtype=np.int8))
    return FlipResult(feasible=True, signs=seq, error=Fraction(e, den))


def alternating_prefix(n_scale: int) -> tuple[SignSequence, Fraction]:
    """Alternating +,- signs on [1, 2J] with J = floor(N / 4e^2).

    Returns (SignSequence, exact alternating sum); the sum lies in (1/2, 1].
    """
    j = int(n_scale / (4.0 * math.e**2))
    if j < 1:
        raise ValueError("scale too small: alternating prefix needs J >= 1")
    sup = SupportSet.interval(1, 2 * j)
    signs = np.where(sup.values % 2 == 1, 1, -1).astype(np.int8)
    seq = SignSequence(sup, signs)
    return seq, exact_rational_sum(seq)


def small_prefix_construction(n_scale: int) -> ConstructionReport:
    """Signs on [1, N/2] with exact-verified |sum| <= 2/N.

    Alternating prefix on [1, 2J], then a target flip on (2J, N/2] aimed at
    cancelling the prefix value.
    """
    if n_scale < 64:
        raise ValueError("scale must be >= 64")
    t0 = time.perf_counter()
    prefix, alpha = alternating_prefix(n_scale)
    rest = SupportSet.interval(prefix.support.max() + 1, n_scale // 2)
    flip = flip_to_target(rest, -alpha)
    if not flip.feasible:
        raise InfeasibleError(f"flip deficit {flip.deficit} at scale {n_scale}")
    seq = prefix.merge(flip.signs)
    achieved = abs(exact_rational_sum(seq))
    bound = Fraction(2, n_scale)
    assert achieved <= bound, f"prefix construction violated 2/N at N={n_scale}"
    return ConstructionReport(
        signs=seq,
        achieved=BigFixed.from_fraction(achieved, _bits_for(len(seq), bound, achieved)),
        achieved_exact=achieved,
        target_eta=bound,
        target_met=True,
        method="Flip",
        rng_seed=None,
        wall_time=time.perf_counter() - t0,
        details={"alternating_sum": alpha, "flip_error": flip.error},
    )


def _spread_indices(n_items: int, count: int) -> np.ndarray:
    """`count` indices spread evenly across range(n_items)."""
    if count >= n_items:
        return np.arange(n_items, dtype=np.int64)
    idx = np.unique(np.round(np.linspace(0, n_items - 1, count)).astype(np.int64))
    if len(idx) < count:
        have = set(idx.tolist())
        extra = [j for j in range(n_items - 1, -1, -1) if j not in have]
        idx = np.sort(
            np.concatenate((idx, np.asarray(extra[: count - len(idx)], dtype=np.int64)))
        )
    return idx


def _enumerate_half_int64(units: np.ndarray) -> np.ndarray:
    """All 2^m signed sums of `units`; index bit j set means sign -1 on unit j."""
    out = np.zeros(1 << len(units), dtype=np.int64)
    size = 1
    for u in units:
        u = int(u)
        out[size : 2 * size] = out[:size] - u
        out[:size] += u
        size *= 2
    return out


def _half_sums_exact(weights: list[int]) -> list[int]:
    out = [0]
    for w in weights:
        out = [s + w for s in out] + [s - w for s in out]
    return out


def _signs_from_index(index: int, count: int) -> list[int]:
    return [-1 if (index >> j) & 1 else 1 for j in range(count)]


def _zip_halves(free_ns, signs_l, signs_r) -> dict[int, int]:
    out: dict[int, int] = {}
    out.update(zip(free_ns[0::2], signs_l))
    out.update(zip(free_ns[1::2], signs_r))
    return out


def _mitm_exact(free_ns: list[int], tau: Fraction):
    """Exact meet-in-the-middle: globally optimal signs for the free elements."""
    den, _ = _scaled_weights(free_ns, tau.denominator)
    t_scaled = tau.numerator * (den // tau.denominator)
    left_ns, right_ns = free_ns[0::2], free_ns[1::2]
    left = _half_sums_exact([den // n for n in left_ns])
    right = _half_sums_exact([den // n for n in right_ns])
    order = sorted(range(len(right)), key=lambda i: (right[i], i))
    rvals = [right[i] for i in order]
    best = None
    for li, lv in enumerate(left):
        need = t_scaled - lv
        pos = bisect.bisect_left(rvals, need)
        for jj in (pos - 1, pos):
            if 0 <= jj < len(rvals):
                key = (abs(lv + rvals[jj] - t_scaled), li, order[jj])
                if best is None or key < best:
                    best = key
    _, li, ri = best
    signs = _zip_halves(
        free_ns, _signs_from_index(li, len(left_ns)), _signs_from_index(ri, len(right_ns))
    )
    return signs, {"mode": "exact", "half_sizes": [len(left), len(rvals)]}


def _scan_chunk(left, rs, order, tau_fp, c0, chunk):
    seg = left[c0 : c0 + chunk]
    pos = np.searchsorted(rs, tau_fp - seg)
    best = None
    for off in (-1, 0):
        jj = np.clip(pos + off, 0, len(rs) - 1)
        d = np.abs(seg + rs[jj] - tau_fp)
        i = int(np.argmin(d))
        cand = (int(d[i]), c0 + i, int(order[jj[i]]))
        if best is None or cand < best:
            best = cand
    return best


def _mitm_fixed_point(free_ns: list[int], tau: Fraction, threads: int = 1):
    """Int64 fixed-point meet-in-the-middle with an exact shortlist re-check.

    Rounding costs at most half an ulp per reciprocal, so any pair whose true
    distance beats the fixed-point winner sits within 2*(m+2) ulps of it;
    every such pair is collected and compared exactly.
    """
    bound = float(sum(Fraction(1, n) for n in free_ns)) + abs(float(tau)) + 1.0
    p_bits = 61 - max(0, math.ceil(math.log2(bound)))
    if p_bits < 40:
        raise ResourceBudgetError("free set too heavy for int64 fixed point")
    units = np.asarray([_round_nearest(1 << p_bits, n)[0] for n in free_ns], dtype=np.int64)
    tau_fp = _round_nearest(tau.numerator << p_bits, tau.denominator)[0]
    left_ns, right_ns = free_ns[0::2], free_ns[1::2]
    left = _enumerate_half_int64(units[0::2])
    right = _enumerate_half_int64(units[1::2])
    order = np.argsort(right, kind="stable")
    rs = right[order]
    del right
    chunk = 1 << 20
    starts = range(0, len(left), chunk)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            candidates = list(
                pool.map(lambda c0: _scan_chunk(left, rs, order, tau_fp, c0, chunk), starts)
            )
    else:
        candidates = [_scan_chunk(left, rs, order, tau_fp, c0, chunk) for c0 in starts]
    best = min(candidates)
    margin = len(free_ns) + 2
    thr = best[0] + 2 * margin
    flagged: list[int] = []
    for c0 in range(0, len(left), chunk):
        seg = left[c0 : c0 + chunk]
        pos = np.searchsorted(rs, tau_fp - seg)
        hit = np.zeros(len(seg), dtype=bool)
        for off in (-1, 0):
            jj = np.clip(pos + off, 0, len(rs) - 1)
            hit |= np.abs(seg + rs[jj] - tau_fp) <= thr
        flagged.extend((c0 + np.nonzero(hit)[0]).tolist())
    den, _ = _scaled_weights(free_ns, tau.denominator)
    t_scaled = tau.numerator * (den // tau.denominator)
    wl = [den // n for n in left_ns]
    wr = [den // n for n in right_ns]
    rs_list = rs.tolist()
    order_list = order.tolist()
    best_exact = None
    n_pairs = 0
    for li in flagged:
        need_i = tau_fp - int(left[li])
        lv_exact = sum(w if s > 0 else -w for w, s in zip(wl, _signs_from_index(li, len(wl))))
        pos = bisect.bisect_left(rs_list, need_i)
        lo_j = pos
        while lo_j > 0 and need_i - rs_list[lo_j - 1] <= thr:
            lo_j -= 1
        hi_j = pos
        while hi_j < len(rs_list) and rs_list[hi_j] - need_i <= thr:
            hi_j += 1
        n_pairs += hi_j - lo_j
        if n_pairs > SHORTLIST_CAP:
            raise ResourceBudgetError("meet-in-the-middle shortlist exploded")
        for jj in range(lo_j, hi_j):
            ri = order_list[jj]
            rv_exact = sum(
                w if s > 0 else -w for w, s in zip(wr, _signs_from_index(ri, len(wr)))
            )
            key = (abs(lv_exact + rv_exact - t_scaled), li, ri)
            if best_exact is None or key < best_exact:
                best_exact = key
    assert best_exact is not None
    _, li, ri = best_exact
    signs = _zip_halves(free_ns, _signs_from_index(li, len(wl)), _signs_from_index(ri, len(wr)))
    info = {
        "mode": "fixed_point",
        "scale_bits": p_bits,
        "shortlist_pairs": n_pairs,
        "fp_best_ulps": best[0],
    }
    return signs, info


def mitm_optimize(
    a: SupportSet,
    x0,
    max_free: int = 48,
    seed: int | None = None,
    target_eta: Fraction | None = None,
    threads: int = 1,
) -> ConstructionReport:
    """Minimize |sum a_n/n - x0| by meet-in-the-middle over free elements.

    Signs outside a spread subset of `max_free` elements are fixed greedily
    toward the target; the free elements are optimized exactly (small sets,
    globally optimal) or in int64 fixed point with an exact shortlist
    re-check. The achieved value is re-verified from the signs.
    """
    if not len(a):
        raise ValueError("support must be nonempty")
    if max_free > MAX_FREE_LIMIT:
        raise ResourceBudgetError(f"max_free capped at {MAX_FREE_LIMIT}")
    if max_free < 1:
        raise ValueError("max_free must be >= 1")
    t_start = time.perf_counter()
    x0 = Fraction(x0)
    ns_all = [int(n) for n in a.values]
    free_idx = _spread_indices(len(ns_all), min(max_free, len(ns_all)))
    free_mask = np.zeros(len(ns_all), dtype=bool)
    free_mask[free_idx] = True
    free_ns = [ns_all[i] for i in free_idx]
    fixed_sup = SupportSet(a.values[~free_mask])
    if len(fixed_sup):
        fixed_seq, fixed_sum = greedy_toward(fixed_sup, x0)
    else:
        fixed_seq, fixed_sum = None, Fraction(0)
    tau = x0 - fixed_sum
    if len(free_ns) <= EXACT_MITM_LIMIT:
        free_signs, info = _mitm_exact(free_ns, tau)
    else:
        free_signs, info = _mitm_fixed_point(free_ns, tau, threads=threads)
    free_seq = SignSequence.from_pairs(free_signs.items())
    seq = fixed_seq.merge(free_seq) if fixed_seq is not None else free_seq
    achieved_exact = abs(exact_rational_sum(seq) - x0)
    return ConstructionReport(
        signs=seq,
        achieved=BigFixed.from_fraction(
            achieved_exact, _bits_for(len(seq), target_eta, achieved_exact)
        ),
        achieved_exact=achieved_exact,
        target_eta=target_eta,
        target_met=(achieved_exact <= target_eta) if target_eta is not None else None,
        method="MITM",
        rng_seed=seed,
        wall_time=time.perf_counter() - t_start,
        details={
            "free_count": len(free_ns),
            "fixed_count": len(fixed_sup),
            "fixed_residual": x0 - fixed_sum,
            **info,
        },
    )


def randomized_search(
    a: SupportSet,
    x0,
    eta,
    seed: int = 0,
    max_iters: int = 100_000,
) -> ConstructionReport:
    """Seeded rejection sampling over uniform signs, keeping the best found.

    Stops early once the float distance falls within eta; the final value is
    re-verified exactly. May return a best-found value above eta.
    """
    eta = Fraction(eta)
    if eta <= 0:
        raise ValueError("eta must be positive")
    x0 = Fraction(x0)
    t_start = time.perf_counter()
    rng = np.random.default_rng(seed)
    inv = 1.0 / a.values.astype(np.float64)
    x0f, etaf = float(x0), float(eta)
    best_d = math.inf
    best_signs: np.ndarray | None = None
    found_at = 0
    done = 0
    while done < max_iters:
        chunk = min(max_iters - done, 4096)
        bits = rng.integers(0, 2, size=(chunk, len(inv)))
        x = (bits.astype(np.float64) * 2.0 - 1.0) @ inv
        d = np.abs(x - x0f)
        i = int(np.argmin(d))
        if d[i] < best_d:
            best_d = float(d[i])
            best_signs = (bits[i].astype(np.int8) * 2 - 1).copy()
            found_at = done + i + 1
        done += chunk
        if best_d <= etaf:
            break
    seq = SignSequence(a, best_signs)
    achieved_exact = abs(exact_rational_sum(seq) - x0)
    return ConstructionReport(
        signs=seq,
        achieved=BigFixed.from_fraction(achieved_exact, _bits_for(len(seq), eta, achieved_exact)),
        achieved_exact=achieved_exact,
        target_eta=eta,
        target_met=achieved_exact <= eta,
        method="Randomized",
        rng_seed=seed,
        wall_time=time.perf_counter() - t_start,
        details={"samples_drawn": done, "best_found_at": found_at},
    )


@dataclass
class RoughBasis:
    """Subset B of A built from distinct rough parts.

    Every b in B factors uniquely as b = r * smooth_of[r] with r in R; k is
    the maximum number of prime factors (with multiplicity) over R.
    """

    b: SupportSet
    r: SupportSet
    smooth_of: dict[int, int]
    eps1: float
    k: int
    feasible: bool
    note: str = ""

    def to_obj(self) -> dict:
        return {
            "b_size": len(self.b),
            "r_size": len(self.r),
            "eps1": self.eps1,
            "k": self.k,
            "feasible": self.feasible,
            "note": self.note,
        }


def rough_basis_subset(
    a: SupportSet,
    n_scale: int,
    eps0: float,
    sieve: SieveTable,
    eps1_floor: float = 1.0 / 64,
) -> RoughBasis:
    """Search eps1 over {1/2, 1/4, ...} until |R_eps1(A)| >= N^(1-eps0).

    Pairs every rough part with its minimal smooth companion present in A;
    returns an infeasible outcome when the grid is exhausted.
    """
    if not 0 < eps0 < 1:
        raise ValueError("eps0 must be in (0, 1)")
    # |R| can never exceed |A|, so for sparse inputs the density-backed
    # threshold N^(1-eps0) is capped by the set size itself.
    target = min(n_scale ** (1.0 - eps0), float(len(a)))
    eps1 = 0.5
    while eps1 >= eps1_floor:
        y = int(n_scale**eps1)
        pairs: dict[int, int] = {}
        for x in a.values:
            split = sieve.rough_smooth_split(int(x), y)
            cur = pairs.get(split.rough)
            if cur is None or split.smooth < cur:
                pairs[split.rough] = split.smooth
        if len(pairs) >= target:
            k = max((sieve.big_omega(r) for r in pairs if r > 1), default=1)
            note = "" if target == n_scale ** (1.0 - eps0) else "target capped at |A|"
            return RoughBasis(
                b=SupportSet(sorted(r * s for r, s in pairs.items())),
                r=SupportSet(sorted(pairs)),
                smooth_of=pairs,
                eps1=eps1,
                k=max(k, 1),
                feasible=True,
                note=note,
            )
        eps1 /= 2.0
    return RoughBasis(
        b=SupportSet([]),
        r=SupportSet([]),
        smooth_of={},
        eps1=eps1,
        k=1,
        feasible=False,
        note=f"no eps1 >= {eps1_floor} reaches |R| >= N^(1-{eps0})",
    )


def _default_dense_target(n_scale: int) -> Fraction:
    log_sq = math.log(n_scale) ** 2
    strong = Fraction(math.exp(-log_sq)) if log_sq < 700 else Fraction(0)
    return max(strong, Fraction(1, 10**11))


def achieved_exponent(achieved: Fraction, n_scale: int) -> float | None:
    """theta-hat = log(-log achieved)/log N for a sub-1 achievement."""
    if achieved <= 0:
        return math.inf
    af = float(achieved)
    if af >= 1.0:
        return None
    return math.log(-math.log(af)) / math.log(n_scale)


def dense_set_signs(
    a0: SupportSet,
    n_scale: int,
    delta: float,
    eps0: float,
    seed: int,
    sieve: SieveTable,
    target_eta: Fraction | None = None,
    max_free: int = 48,
    n_min: int = 256,
    escalate: bool = True,
    threads: int = 1,
) -> ConstructionReport:
    """Full small-sum pipeline on a dense set restricted to [1, N].

    Greedy prefix on A0 up to delta*N/2, then meet-in-the-middle on the rest
    targeting the negated prefix value; the rough basis and eta budget that
    frame the admissible window are computed and recorded.
    """
    if n_scale < n_min:
        raise ValueError(f"scale must be >= {n_min}")
    if not 0 < delta <= 1:
        raise ValueError("delta must be in (0, 1]")
    if n_scale <= 2.0 / -math.log1p(-delta / 2.0):
        raise ValueError("scale too small for this density parameter")
    t_start = time.perf_counter()
    a0n = a0.restrict(1, n_scale)
    if len(a0n) < delta * n_scale:
        raise DensityRequirementError(
            f"|A0 cap [N]| = {len(a0n)} < delta*N = {delta * n_scale}"
        )
    m = int(delta * n_scale / 2)
    prefix_sup = a0n.restrict(1, m - 1)
    if not len(prefix_sup):
        raise InfeasibleError("prefix range is empty at this scale")
    prefix_seq, prefix_sum = greedy_bounded(prefix_sup)
    main_sup = a0n.restrict(m, n_scale)
    if not len(main_sup):
        raise InfeasibleError("main range is empty at this scale")
    basis = rough_basis_subset(main_sup, n_scale, eps0, sieve)
    budget = density_mod.eta_budget(
        n_scale,
        max(len(basis.b), 1),
        basis.k,
        x0=abs(float(prefix_sum)),
        c=delta / 2.0,
    )
    if target_eta is None:
        target_eta = _default_dense_target(n_scale)
    x0 = -prefix_sum
    attempts: list[int] = []
    free = min(max_free, MAX_FREE_LIMIT)
    while True:
        attempts.append(free)
        rep = mitm_optimize(
            main_sup, x0, max_free=free, seed=seed, target_eta=target_eta, threads=threads
        )
        if rep.target_met or not escalate or free >= MAX_FREE_LIMIT:
            break
        free = min(free + 2, MAX_FREE_LIMIT)
    seq = prefix_seq.merge(rep.signs)
    achieved_exact = abs(exact_rational_sum(seq))
    assert achieved_exact == rep.achieved_exact, "pipeline bookkeeping mismatch"
    return ConstructionReport(
        signs=seq,
        achieved=BigFixed.from_fraction(
            achieved_exact, _bits_for(len(seq), target_eta, achieved_exact)
        ),
        achieved_exact=achieved_exact,
        target_eta=target_eta,
        target_met=achieved_exact <= target_eta,
        method="Pipeline",
        rng_seed=seed,
        wall_time=time.perf_counter() - t_start,
        details={
            "prefix_sum": prefix_sum,
            "prefix_bound": 2.0 / (delta * n_scale),
            "prefix_size": len(prefix_sup),
            "rough_basis": basis.to_obj(),
            "eta_budget": budget.to_obj(),
            "mitm": rep.to_obj(),
            "max_free_attempts": attempts,
            "theta_hat": achieved_exponent(achieved_exact, n_scale),
        },
    )


@dataclass
class ScaleChainResult:
    """Per-scale reports for an upper-density set; signs are never reassigned."""

    scales: list[int]
    reports: list[ConstructionReport]
    signs: SignSequence
    exhausted: bool
    note: str = ""

    def to_obj(self) -> dict:
        return {
            "scales": self.scales,
            "reports": [r.to_obj() for r in self.reports],
            "signs": self.signs.to_obj(),
            "exhausted": self.exhausted,
            "note": self.note,
        }


def upper_density_scales(
    a0: SupportSet,
    delta0: float,
    max_scales: int,
    seed: int,
    sieve: SieveTable,
    n_min: int = 256,
    max_free: int = 48,
) -> ScaleChainResult:
    """Qualifying-scale chain for sets of positive upper density.

    Scans forward for scales P_i >= ceil((2/delta0) P_{i-1}) at which the
    density holds, then extends the sign assignment (never reassigning an
    emitted sign) so the partial sum over A0 cap [P_i] is small. A0 must be
    materialized up to the largest scale scanned.
    """
    if not 0 < delta0 < 1:
        raise ValueError("delta0 must be in (0, 1)")
    if not len(a0):
        raise ValueError("support must be nonempty")
    limit = a0.max()
    scales: list[int] = []
    reports: list[ConstructionReport] = []
    assigned: SignSequence | None = None
    running = Fraction(0)
    prev = 0
    exhausted = False
    note = ""
    for _ in range(max_scales):
        scan = n_min if prev == 0 else math.ceil(2 * prev / delta0)
        p_i = None
        while scan <= limit:
            if a0.count_upto(scan) >= delta0 * scan:
                p_i = scan
                break
            scan += 1
        if p_i is None:
            exhausted = True
            note = f"no qualifying scale beyond {prev} within the materialized range"
            break
        m = int(delta0 * p_i / 2)
        ext_sup = a0.restrict(prev + 1, max(m - 1, prev))
        if len(ext_sup):
            ext_seq, ext_sum = greedy_toward(ext_sup, -running)
            assigned = ext_seq if assigned is None else assigned.merge(ext_seq)
            running += ext_sum
        block = a0.restrict(max(m, prev + 1), p_i)
        if not len(block):
            exhausted = True
            note = f"scale {p_i} has an empty refinement block"
            break
        rep = mitm_optimize(
            block,
            -running,
            max_free=max_free,
            seed=seed,
            target_eta=_default_dense_target(p_i),
        )
        assigned = rep.signs if assigned is None else assigned.merge(rep.signs)
        running += exact_rational_sum(rep.signs)
        assert abs(running) == rep.achieved_exact
        coarse = Fraction(2) / Fraction(delta0 * p_i)
        rep.details["scale"] = p_i
        rep.details["coarse_bound_met"] = bool(abs(running) <= coarse)
        reports.append(rep)
        scales.append(p_i)
        prev = p_i
    return ScaleChainResult(
        scales=scales,
        reports=reports,
        signs=assigned if assigned is not None else SignSequence(SupportSet([]), []),
        exhausted=exhausted,
        note=note,
    )
