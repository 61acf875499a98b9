"""Nine end-to-end acceptance checks; each prints a PASS/FAIL line."""
import json
import math
import random
import subprocess
import sys
import time
from fractions import Fraction
from functools import lru_cache

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import conftest
from period_balance import (MPoly, Monotonicity, PolyFamily, Quintic, RationalFamily, Series, TrigPoly,
                            beta, critical_periods, exact_tail, hbm_series, lindstedt_series,
                            monotonicity_criterion, order3_curve, order3_series, period_quadrature,
                            resultant, tail_fit, trig_reduce)
from period_balance.compare import hbm_critical_periods, hbm_periods, hbm_taylor, local_match_order
from period_balance.duffing import (Order3Branch, order2_eliminant, order2_limit_delta, order2_limit_from_cubic,
                                    order2_sextic, order3_limit_delta, solve_order2_duffing)
from period_balance.hbm import solve_numeric, t1_closed_form
from period_balance.period import duffing_period, elliptic_K, elliptic_K_series_bounds
from period_balance.potentials import GeneralPoly
from period_balance.polyalg import parse_poly

F = Fraction
DUFFING = PolyFamily(2)
EXACT_8 = [2, 0, F(-3, 4), 0, F(57, 128), 0, F(-315, 1024), 0, F(30345, 131072)]


def record(n, ok, text, enforce=True):
    conftest.ACCEPTANCE[n] = (bool(ok), text)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {text}")
    if enforce:
        assert ok, text


def near4(x, ref):
    """Agreement to four significant figures."""
    return abs(x - ref) <= 5e-4 * 10 ** math.floor(math.log10(abs(ref)))


def test_criterion_1_duffing_exact_series():
    t0 = time.perf_counter()
    out = subprocess.run([sys.executable, "-m", "period_balance.cli", "taylor", "poly:m=2", "--order", "8"],
                         capture_output=True, text=True, check=True)
    elapsed = time.perf_counter() - t0
    got = Series.from_json(json.loads(out.stdout)["series"])
    ok = list(got.coeffs) == EXACT_8 and elapsed < 5
    record(1, ok, f"taylor poly:m=2 --order 8 exact, {elapsed:.2f}s")


def _closed_general(k2, k3, k4, k5):
    return [2, 0, F(5, 6) * k2 ** 2 - F(3, 4) * k3, F(5, 9) * k2 ** 3 - F(1, 2) * k2 * k3,
            F(385, 288) * k2 ** 4 - F(275, 96) * k2 ** 2 * k3 + F(7, 4) * k2 * k4
            + F(57, 128) * k3 ** 2 - F(5, 8) * k5]


def test_criterion_2_general_potential_series():
    rng = random.Random(20240611)
    tuples = [tuple(F(rng.randint(-9, 9), rng.randint(1, 6)) for _ in range(4)) for _ in range(20)]
    exact_ok = True
    for ks in tuples:
        s = lindstedt_series(GeneralPoly({i + 2: k for i, k in enumerate(ks)}), 4)
        exact_ok &= list(s.coeffs) == _closed_general(*ks)

    ks = (F(1, 2), F(1, 3), F(-1, 4), F(1, 5))
    p = GeneralPoly({2: ks[0], 3: ks[1], 4: ks[2], 5: ks[3]})
    A = np.linspace(1e-3, 1e-2, 25)
    y = np.array([period_quadrature(p, a, 1e-14) / math.pi - 2 for a in A])
    powers = range(2, 9)
    V = np.column_stack([A ** k for k in powers])
    fit = np.linalg.lstsq(V, y, rcond=None)[0]
    ref = [float(c) for c in _closed_general(*ks)[2:]]
    rel = [abs(fit[i] / ref[i] - 1) for i in range(2)]
    ok = exact_ok and max(rel) < 1e-4
    record(2, ok, f"20 tuples exact through A^4; fit rel err A^2,A^3 = {rel[0]:.1e},{rel[1]:.1e}")


def test_criterion_3_order2_resultant():
    t0 = time.perf_counter()
    elim = order2_eliminant()
    reference = parse_poly("1058*w^6 - 3*(219*A^2+322)*w^4 - 9/4*(21*A^4+80*A^2+40)*w^2"
                         " - 27/64*A^2*(7*A^2+8)^2 - 2", ["A", "w"])
    s2 = hbm_series(DUFFING, 2, 6)
    elapsed = time.perf_counter() - t0
    ok = (elim == reference and order2_sextic() == reference
          and list(s2.coeffs) == [2, 0, F(-3, 4), 0, F(57, 128), 0, F(-633, 2048)] and elapsed < 10)
    record(3, ok, f"eliminant equals reference sextic; T2 series through A^6; {elapsed:.2f}s")


def test_criterion_4_order3_cascade():
    t0 = time.perf_counter()
    curve = order3_curve()
    elapsed = time.perf_counter() - t0
    s = order3_series(8)
    delta = order3_limit_delta()
    want = EXACT_8[:8] + [F(30339, 131072)]
    ok = elapsed < 300 and list(s.coeffs) == want and abs(delta - 7.4156) <= 5e-4 and not curve.PQR.is_zero()
    record(4, ok, f"cascade {elapsed:.1f}s, A^8 coefficient {s[8]}, limit {delta:.6f}")


def test_criterion_5_infinity_constants():
    big = list(np.logspace(3, 6, 10))
    rows = []
    exact = exact_tail(DUFFING).M
    fit = tail_fit((a, period_quadrature(DUFFING, a, 1e-13)) for a in big).C
    rows.append(("exact", 7.4163, exact, fit))
    t1 = 4 * math.pi / math.sqrt(3)
    rows.append(("T1", 7.2551, t1, tail_fit(zip(big, [s.T_N for s in solve_numeric(DUFFING, 1, big)])).C))
    delta = order2_limit_delta()
    digits6 = abs(delta - order2_limit_from_cubic()) < 5e-6 * 10
    rows.append(("T2", 7.4018, delta, tail_fit(zip(big, hbm_periods(DUFFING, 2, big))).C))
    q = Quintic(F(-1))
    rows.append(("quintic", 8.4131, exact_tail(q).M, tail_fit((a, period_quadrature(q, a, 1e-13)) for a in big).C))
    qt1 = 8 * math.pi / math.sqrt(10)
    rows.append(("quintic T1", 7.9477, qt1, tail_fit((a, float(t1_closed_form(q, a))) for a in big).C))
    ok = digits6 and all(near4(c, ref) and near4(f, ref) for _, ref, c, f in rows)
    record(5, ok, "; ".join(f"{n} {c:.5f}/{f:.5f}" for n, _, c, f in rows))


@lru_cache(maxsize=1)
def _duffing_errors():
    exact = lindstedt_series(DUFFING, 10)
    orders = [local_match_order(exact, hbm_taylor(DUFFING, N, 10)) for N in (1, 2, 3)]
    grid = np.logspace(-3, -1, 9)
    branch = Order3Branch(dps=60)
    slopes = []
    with mp.workdps(60):
        T = [duffing_period(mp.mpf(a)) for a in grid]
        approx = {
            1: [t1_closed_form(DUFFING, mp.mpf(a)) for a in grid],
            2: [solve_order2_duffing(mp.mpf(a)).T_N for a in grid],
            3: [branch.period(mp.mpf(a)) for a in grid],
        }
        for N in (1, 2, 3):
            err = [float(mp.log(abs(t - tn))) for t, tn in zip(T, approx[N])]
            slopes.append(float(np.polyfit(np.log(grid), err, 1)[0]))
    return orders, slopes


def test_criterion_6_local_match_orders():
    # A nonzero A^(2N+2) coefficient in T - T_N fixes the small-A slope at 2N+2,
    # so the slope must equal the first mismatch order.
    orders, slopes = _duffing_errors()
    consistent = orders == [4, 6, 8] and all(abs(s - k) <= 0.1 for k, s in zip(orders, slopes))
    stated = all(abs(s - (2 * N + 4)) <= 0.1 for N, s in zip((1, 2, 3), slopes))
    record(6, stated, f"first mismatch {orders}; slopes {[round(s, 3) for s in slopes]} equal the mismatch "
                      f"orders; the 2N+4 slope target (6, 8, 10) is unattainable", enforce=False)
    assert consistent


@pytest.mark.xfail(strict=True, reason="error exponent is 2N+2, contradicting the 2N+4 slope target")
def test_criterion_6_slopes_2n_plus_4():
    _, slopes = _duffing_errors()
    assert all(abs(s - (2 * N + 4)) <= 0.1 for N, s in zip((1, 2, 3), slopes))


def _monotone(values, sign):
    d = np.diff(values)
    return bool(np.all(sign * d > 0))


def test_criterion_7_monotonicity():
    verdicts = [monotonicity_criterion(PolyFamily(m)) for m in (2, 3, 4)]
    verdicts_rat = [monotonicity_criterion(RationalFamily(F(1), m)) for m in (1, 2, 3)]
    grid = np.linspace(0.01, 100, 2000)
    dec = all(_monotone([float(t1_closed_form(PolyFamily(m), a)) for a in grid], -1) for m in (2, 3, 4))
    inc = all(_monotone([float(t1_closed_form(RationalFamily(F(1), m), a)) for a in grid], 1) for m in (1, 2, 3))
    ok = (all(v is Monotonicity.DECREASING for v in verdicts)
          and all(v is Monotonicity.INCREASING for v in verdicts_rat) and dec and inc)
    record(7, ok, f"poly {[v.name for v in verdicts]}, rat {[v.name for v in verdicts_rat]}, "
                  f"T1 decreasing={dec}, increasing={inc}")


def test_criterion_8_quintic_critical_period():
    lines, ok = [], True
    for k in (-1.5, -1.0, -0.5):
        q = Quintic(F(k))
        exact = critical_periods(q, (0.01, 3.0))
        hbm = hbm_critical_periods(q, 1, (0.01, 3.0), tol=1e-13)
        err = abs(hbm[0][0] - math.sqrt(-3 * k / 5)) if len(hbm) == 1 else math.inf
        ok &= [c for _, c in exact] == ["max"] and [c for _, c in hbm] == ["max"] and err < 1e-10
        lines.append(f"k={k}: T max at {exact[0][0]:.4f}" if exact else f"k={k}: none")
    for k in (0, 1):
        q = Quintic(F(k))
        ok &= critical_periods(q, (0.01, 3.0)) == [] and hbm_critical_periods(q, 1, (0.01, 3.0)) == []
    record(8, ok, "; ".join(lines) + "; k=0,1 empty")


# criterion 9: the four property suites, each a hypothesis test plus a summary check

_coef = st.floats(-2, 2, allow_nan=False, allow_infinity=False)


@st.composite
def trig_polys(draw, max_degree=3):
    d = draw(st.integers(0, max_degree))
    a = {k: draw(_coef) for k in range(d + 1)}
    b = {k: draw(_coef) for k in range(1, d + 1)}
    return TrigPoly(a, b)


def _sampled_coeffs(fn, degree):
    M = 4 * degree + 5
    t = 2 * np.pi * np.arange(M) / M
    v = fn(t)
    a = {0: float(np.mean(v))}
    b = {}
    for k in range(1, degree + 1):
        a[k] = float(2 * np.mean(v * np.cos(k * t)))
        b[k] = float(2 * np.mean(v * np.sin(k * t)))
    return a, b


def _eval(p, t):
    return sum(c * np.cos(k * t) for k, c in p.a.items()) + sum(c * np.sin(k * t) for k, c in p.b.items()) + 0 * t


_suite_9 = {}


@settings(max_examples=200)
@given(trig_polys(), trig_polys(), st.integers(1, 2))
def test_property_trig_reduce_oracle(p, q, n):
    r = trig_reduce(p, q, powers=(n, 1))
    degree = n * p.degree + q.degree
    a, b = _sampled_coeffs(lambda t: _eval(p, t) ** n * _eval(q, t), max(degree, 1))
    for k in range(degree + 1):
        assert abs(float(r.cos_coeff(k)) - a[k]) < 1e-12 * 10 ** n
        if k:
            assert abs(float(r.sin_coeff(k)) - b[k]) < 1e-12 * 10 ** n
    _suite_9["trig"] = _suite_9.get("trig", 0) + 1


_frac = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@settings(max_examples=100)
@given(st.lists(_frac, min_size=1, max_size=3), st.lists(_frac, min_size=0, max_size=3),
       st.lists(_frac, min_size=0, max_size=3))
def test_property_resultant_planted_root(root_poly, cofactor_p, cofactor_q):
    x = MPoly.gen(["x", "v"], "x")
    v = MPoly.gen(["x", "v"], "v")
    r = sum((c * x ** i for i, c in enumerate(root_poly)), MPoly.const(["x", "v"], 0))
    common = v - r
    p = common * (sum((c * v ** i for i, c in enumerate(cofactor_p)), MPoly.const(["x", "v"], 0)) + v ** 2 + 1)
    q = common * (sum((c * x ** i * v for i, c in enumerate(cofactor_q)), MPoly.const(["x", "v"], 0)) + 3)
    assert resultant(p, q, "v").is_zero()
    _suite_9["resultant"] = _suite_9.get("resultant", 0) + 1


@settings(max_examples=100)
@given(st.floats(-0.5, 0.5, allow_nan=False), st.integers(2, 12))
def test_property_elliptic_bracketing(kappa, terms):
    lo, hi = elliptic_K_series_bounds(kappa, terms)
    K = elliptic_K(kappa)
    assert lo - 1e-15 <= K <= hi + 1e-15
    _suite_9["elliptic"] = _suite_9.get("elliptic", 0) + 1


@settings(max_examples=100)
@given(st.floats(0.05, 20), st.floats(0.05, 20))
def test_property_beta_identities(x, y):
    assert beta(x, y) == pytest.approx(beta(y, x), rel=1e-12)
    assert beta(x + 1, y) == pytest.approx(beta(x, y) * x / (x + y), rel=1e-12)
    assert beta(x, 1) == pytest.approx(1 / x, rel=1e-12)
    assert beta(x, y) == pytest.approx(math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y)), rel=1e-12)
    _suite_9["beta"] = _suite_9.get("beta", 0) + 1


def test_criterion_9_property_suites():
    # run after the property tests above; when invoked alone, run them here
    if len(_suite_9) < 4:
        test_property_trig_reduce_oracle()
        test_property_resultant_planted_root()
        test_property_elliptic_bracketing()
        test_property_beta_identities()
    ok = (_suite_9.get("trig", 0) >= 200 and _suite_9.get("resultant", 0) >= 100
          and _suite_9.get("elliptic", 0) >= 1 and _suite_9.get("beta", 0) >= 1)
    record(9, ok, f"trig {_suite_9.get('trig')} cases, resultant {_suite_9.get('resultant')} cases, "
                  f"elliptic {_suite_9.get('elliptic')}, beta {_suite_9.get('beta')}")
