import math
from fractions import Fraction

import numpy as np
import pytest

from harmsum import density as dens
from harmsum.support import SupportSet


def test_char_fn_examples():
    assert dens.char_fn_log_abs(SupportSet([1]), 7) == pytest.approx(0.0, abs=1e-12)
    assert dens.char_fn_log_abs(SupportSet([4]), 1) == -math.inf
    got = dens.char_fn_log_abs(SupportSet([2, 3]), 1)
    assert got == pytest.approx(math.log(0.5), abs=1e-12)


def test_char_fn_even_and_at_zero():
    a = SupportSet([3, 7, 11, 19])
    assert dens.char_fn_log_abs(a, 0) == pytest.approx(0.0, abs=1e-15)
    rng = np.random.default_rng(7)
    for t in rng.uniform(0.1, 50.0, size=25):
        assert dens.char_fn_log_abs(a, float(t)) == pytest.approx(
            dens.char_fn_log_abs(a, float(-t)), abs=1e-9
        )


def test_monotone_domination():
    rng = np.random.default_rng(8)
    a = SupportSet(np.sort(rng.choice(np.arange(10, 300), size=40, replace=False)))
    b = SupportSet(np.sort(rng.choice(a.values, size=15, replace=False)))
    for t in rng.uniform(1.0, 500.0, size=30):
        la = dens.char_fn_log_abs(a, float(t))
        lb = dens.char_fn_log_abs(b, float(t))
        assert la <= lb + 1e-9


def test_gaussian_cos_bound_examples():
    lhs, rhs = dens.gaussian_cos_bound(0.0)
    assert (lhs, rhs) == (1.0, 1.0)
    lhs, rhs = dens.gaussian_cos_bound(0.25)
    assert lhs == pytest.approx(0.0, abs=1e-12)
    assert rhs == pytest.approx(math.exp(-math.pi**2 / 8), rel=1e-12)
    # at distance 1/2 the bound genuinely fails (|cos pi| = 1)
    lhs, rhs = dens.gaussian_cos_bound(0.5)
    assert lhs == pytest.approx(1.0) and rhs < 1.0


def test_gaussian_cos_bound_valid_range():
    # dense scan: the inequality holds up to the documented limit and first
    # fails shortly after (near 0.283)
    for i in range(1, 2801):
        th = i / 10000.0
        lhs, rhs = dens.gaussian_cos_bound(th)
        assert lhs <= rhs + 1e-12, th
    violations = [
        th
        for th in np.linspace(dens.GAUSSIAN_BOUND_VALID_LIMIT, 0.5, 500)
        if dens.gaussian_cos_bound(float(th))[0] > dens.gaussian_cos_bound(float(th))[1]
    ]
    assert violations and min(violations) < 0.29


def test_s_count_examples():
    b = SupportSet([10, 11])
    assert dens.s_count(b, 10.5, 0.06) == 2
    assert dens.s_count(b, 10.5, 0.5) == 2
    assert dens.s_count(b, 0.0, 0.01) == 2
    assert dens.s_count(SupportSet([7, 9, 13]), 1.2, 0.0) == 0
    with pytest.raises(ValueError):
        dens.s_count(b, 1.0, 0.6)


def test_s_count_monotone_in_delta():
    rng = np.random.default_rng(9)
    b = SupportSet(np.sort(rng.choice(np.arange(5, 500), size=60, replace=False)))
    t = 123.456
    counts = [dens.s_count(b, t, d) for d in np.linspace(0.0, 0.5, 26)]
    assert counts == sorted(counts)
    assert counts[-1] == len(b)


def test_delta_choice():
    assert dens.delta_choice(100, 100, 1, math.exp(math.e)) == pytest.approx(
        1 / (4 * math.e), rel=1e-12
    )
    base = dens.delta_choice(50, 10_000, 1, 300.0)
    assert dens.delta_choice(100, 10_000, 1, 300.0) == pytest.approx(2 * base, rel=1e-12)
    expect = (math.log(math.log(1e6)) / math.log(1e6)) ** 2 * 1e3 / (8 * 1e4)
    assert dens.delta_choice(1000, 10_000, 2, 1e6) == pytest.approx(expect, rel=1e-12)
    with pytest.raises(ValueError):
        dens.delta_choice(10, 100, 1, 2.0)


def test_eta_budget():
    b = dens.eta_budget(256, 256, 1)
    assert b.c_local == pytest.approx(1.0, rel=1e-12)
    b = dens.eta_budget(256, int(round(256 ** (2 / 3))), 1)
    assert not b.feasible
    b = dens.eta_budget(256, 128, 1)
    expected_c = (3 * math.log(128) - 2 * math.log(256)) / math.log(256)
    assert b.c_local == pytest.approx(expected_c, rel=1e-12)
    core = (expected_c**2 / 100 * 128**3 / 256**2) ** (1 / 3)
    assert b.log_eta_min == pytest.approx(-core * math.log(256) ** (2 / 3), rel=1e-10)
    assert b.eta_min.contains(Fraction(math.exp(b.log_eta_min)).limit_denominator(10**30)) or abs(
        float(b.eta_min.value_fraction()) - math.exp(b.log_eta_min)
    ) < 1e-12


def test_density_profile_bound_holds():
    rng = np.random.default_rng(10)
    a = SupportSet(np.sort(rng.choice(np.arange(50, 2000), size=120, replace=False)))
    ts = rng.uniform(10.0, 5000.0, size=50)
    prof = dens.density_profile(a, ts)
    assert np.all(prof.log_abs_rho <= prof.bound_log + 1e-9)


def test_certificate_small_scale(sieve_small):
    n = 2000
    a = SupportSet.interval(n // 2, n)
    b = sieve_small.primes_in(n // 2, n)
    t0, t_up, fallback = dens.certificate_window(n, len(b), 1, c=0.5)
    assert fallback  # the asymptotic cutoff is far below T0 at desk scale
    ts = dens.sample_t_values(t0, t_up, 200, seed=5)
    assert np.all(ts > t0) and np.all(ts <= t_up)
    cert = dens.decay_certificate(a, b, n, 1, ts)
    assert cert.ok and not cert.violations
    obj = cert.to_obj()
    assert obj["samples"] == 200 and obj["ok"]


def test_certificate_degenerate_b(sieve_small):
    a = SupportSet.interval(100, 200)
    cert = dens.decay_certificate(a, SupportSet([150]), 200, 1, [])
    assert not cert.feasible
    with pytest.raises(ValueError):
        dens.decay_certificate(a, SupportSet([7]), 200, 1, [])  # B not inside A


def test_mc_probability_examples():
    p, se = dens.mc_probability(SupportSet([1]), 0.0, 0.5, 20_000, seed=1)
    assert p == 0.0 and se == 0.0
    p, _ = dens.mc_probability(SupportSet([1]), 1.0, 0.1, 20_000, seed=1)
    assert p == pytest.approx(0.5, abs=0.02)
    p, _ = dens.mc_probability(SupportSet([2, 3]), 0.0, 0.2, 20_000, seed=2)
    assert p == pytest.approx(0.5, abs=0.02)


def test_mc_reproducible_and_worker_split():
    a = SupportSet([2, 3, 5, 7, 11])
    r1 = dens.mc_probability(a, 0.1, 0.3, 30_000, seed=9)
    r2 = dens.mc_probability(a, 0.1, 0.3, 30_000, seed=9)
    assert r1 == r2
    r3 = dens.mc_probability(a, 0.1, 0.3, 30_000, seed=9, workers=3)
    assert abs(r3[0] - r1[0]) <= 4 * (r1[1] + 1e-4)


def test_exhaustive_probability_examples():
    a = SupportSet([2, 3])
    assert dens.exhaustive_probability(a, Fraction(0), Fraction(1, 5)) == Fraction(1, 2)
    total = Fraction(1, 2) + Fraction(1, 3)
    assert dens.exhaustive_probability(a, Fraction(0), total) == 1
    assert dens.exhaustive_probability(a, Fraction(1, 7), Fraction(0)) == 0
    assert dens.exhaustive_probability(a, Fraction(1, 6), Fraction(0)) == Fraction(1, 4)
    with pytest.raises(ValueError):
        dens.exhaustive_probability(SupportSet.interval(1, 30), Fraction(0), Fraction(1))


def test_mc_matches_exhaustive():
    rng = np.random.default_rng(12)
    agree = 0
    runs = 100
    for _ in range(runs):
        size = int(rng.integers(3, 13))
        ns = np.sort(rng.choice(np.arange(2, 80), size=size, replace=False))
        a = SupportSet(ns)
        eta = Fraction(int(rng.integers(1, 40)), 100)
        x0 = Fraction(int(rng.integers(0, 20)), 100)
        exact = dens.exhaustive_probability(a, x0, eta)
        est, _ = dens.mc_probability(a, float(x0), float(eta), 20_000, seed=int(rng.integers(1 << 30)))
        se_exact = math.sqrt(float(exact) * (1 - float(exact)) / 20_000)
        if abs(est - float(exact)) <= 3 * max(se_exact, 1e-9):
            agree += 1
    assert agree >= 0.99 * runs


def test_small_ball_lower_bound_sanity(sieve_small):
    # Exhaustive probability is positive on random instances meeting the
    # budget's structural preconditions, with eta at the budget threshold;
    # the hidden constant kappa is recorded and must be positive.
    rng = np.random.default_rng(13)
    kappas = []
    built = 0
    while built < 50:
        n = int(rng.integers(24, 44))
        half = n // 2
        pool = np.arange(half, n + 1)
        size = int(rng.integers(12, min(21, len(pool) + 1)))
        a = SupportSet(np.sort(rng.choice(pool, size=size, replace=False)))
        if len(a) <= n ** (2 / 3):  # |B| must exceed N^(2/3)
            continue
        budget = dens.eta_budget(n, len(a), 1, c=0.5)
        if budget.c_local <= 0:
            continue
        # admissible window [eta_min, 1/N] is empty at desk scale, so use the
        # budget threshold itself as eta (see the decisions ledger)
        eta = Fraction(math.exp(budget.log_eta_min)).limit_denominator(10**12)
        x0 = Fraction(1, int(rng.integers(n, 4 * n)))
        p = dens.exhaustive_probability(a, x0, eta)
        assert p > 0
        kappas.append(float(p) / (n / math.sqrt(len(a)) * float(eta)))
        built += 1
    assert min(kappas) > 0
