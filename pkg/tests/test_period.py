import math
from fractions import Fraction as F

import mpmath as mp
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.special import ellipk

from period_balance import (AnnulusError, DomainError, GeneralPoly, PolyFamily, Quintic, RationalFamily,
                            cherkas_series, critical_periods, duffing_period, elliptic_K, lindstedt_series,
                            period, period_quadrature)
from period_balance.period import cherkas_terms, critical_points, elliptic_K_series


@given(st.floats(-50, 0.999))
def test_elliptic_K_against_scipy(kappa):
    assert elliptic_K(kappa) == pytest.approx(float(ellipk(kappa)), rel=1e-13)


def test_elliptic_K_mp_and_series():
    with mp.workdps(40):
        assert abs(elliptic_K(mp.mpf("-0.3")) - mp.ellipk(mp.mpf("-0.3"))) < mp.mpf(10) ** -38
    assert elliptic_K_series(0.25, 60) == pytest.approx(elliptic_K(0.25), rel=1e-15)
    with pytest.raises(DomainError):
        elliptic_K(1.0)


@pytest.mark.parametrize("A", [0.1, 1.0, 10.0, 100.0])
def test_duffing_closed_form_vs_quadrature(A):
    p = PolyFamily(2)
    for method in ("trig", "tanh"):
        assert period_quadrature(p, A, 1e-13, method=method) == pytest.approx(duffing_period(A), rel=1e-10)


def _ode_period(force, A):
    def hit_zero(t, y):
        return y[0]
    hit_zero.terminal = True
    hit_zero.direction = -1
    sol = solve_ivp(lambda t, y: [y[1], -force(y[0])], (0, 100), [A, 0.0], method="DOP853",
                    rtol=1e-13, atol=1e-14, events=hit_zero)
    return 4 * sol.t_events[0][0]


def test_quintic_against_ode_return_time():
    T_ode = _ode_period(lambda x: x + x ** 5, 2.0)
    assert period(Quintic(0), 2.0) == pytest.approx(T_ode, abs=1e-7)


def test_asymmetric_quadrature_against_ode():
    p = GeneralPoly({2: F(1, 2)})
    A = 0.4

    def back_at_right_turn(t, y):
        return y[1]
    back_at_right_turn.direction = -1
    sol = solve_ivp(lambda t, y: [y[1], -(y[0] + 0.5 * y[0] ** 2)], (0, 20), [A, 0.0], method="DOP853",
                    rtol=1e-13, atol=1e-14, events=back_at_right_turn)
    T_ode = next(t for t in sol.t_events[0] if t > 1)
    assert period(p, A) == pytest.approx(T_ode, rel=1e-8)


def test_rational_period_grows():
    p = RationalFamily(1, 1)
    Ts = [period(p, a) for a in (0.1, 1.0, 3.0, 10.0)]
    assert all(b > a for a, b in zip(Ts, Ts[1:]))
    assert Ts[0] == pytest.approx(2 * math.pi, rel=1e-2)


def test_domain_errors():
    with pytest.raises(DomainError):
        period(PolyFamily(2), 1.0, tol=0.5)
    with pytest.raises(DomainError):
        period(PolyFamily(2), -1.0)
    with pytest.raises(AnnulusError):
        period(Quintic(-3), 2.0)


def test_lindstedt_duffing():
    s = lindstedt_series(PolyFamily(2), 8)
    assert list(s.coeffs) == [2, 0, F(-3, 4), 0, F(57, 128), 0, F(-315, 1024), 0, F(30345, 131072)]


@pytest.mark.parametrize("m", [2, 3, 4])
def test_lindstedt_vs_cherkas(m):
    ch = cherkas_series(m, 3)
    ls = lindstedt_series(PolyFamily(m), min(ch.order, 12))
    n = min(ch.order, ls.order)
    assert ch.truncate(n) == ls.truncate(n)


def test_cherkas_leading_terms():
    # first coefficient is the (2m-1)!!/(2m)!! ratio
    for m in (2, 3, 5):
        ratio = F(math.prod(range(1, 2 * m, 2)), math.prod(range(2, 2 * m + 1, 2)))
        assert cherkas_series(m, 1)[2 * m - 2] == -2 * ratio
    _, S = cherkas_terms(2, 2)
    assert S[1] == F(3, 4) * 2 / 2
    assert cherkas_series(3, 2)[4] == F(-5, 8)


def test_lindstedt_m3_fourth_order_term():
    assert lindstedt_series(PolyFamily(3), 8)[8] == F(515, 1536)


def test_critical_points_on_a_known_function():
    # f' = (a - 1)(a - 4); the difference step 1e-4 A limits the location to ~1e-7
    found = critical_points(lambda a: a ** 3 / 3 - 2.5 * a ** 2 + 4 * a, (0.1, 5.0), tol=1e-10)
    assert [k for _, k in found] == ["max", "min"]
    assert found[0][0] == pytest.approx(1.0, abs=1e-7)
    assert found[1][0] == pytest.approx(4.0, abs=1e-7)


def test_quintic_critical_periods():
    assert [k for _, k in critical_periods(Quintic(F(-1)), (0.01, 3.0))] == ["max"]
    assert critical_periods(Quintic(F(1)), (0.01, 3.0)) == []
    assert critical_periods(PolyFamily(2), (0.01, 3.0)) == []


def _ratio(m):
    return F(math.prod(range(1, 2 * m, 2)), math.prod(range(2, 2 * m + 1, 2)))


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_poly_family_closed_form_coefficients(m):
    # T = 2 pi (1 - r A^(2m-2) + S A^(4m-4) + ...), r = (2m-1)!!/(2m)!!
    dfact = lambda n: math.prod(range(n, 0, -2))
    S = F((2 * m - 1) * dfact(4 * m - 1), m * dfact(4 * m)) - F((m - 1) * dfact(2 * m - 1), m * dfact(2 * m))
    s = lindstedt_series(PolyFamily(m), 4 * m - 4) if 4 * m - 4 <= 12 else cherkas_series(m, 2)
    assert s[2 * m - 2] == -2 * _ratio(m)
    assert s[4 * m - 4] == 2 * S
