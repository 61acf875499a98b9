import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from period_balance import (DomainError, GeneralPoly, PolyFamily, Quintic, RationalFamily, TrigPoly,
                            build_system, hbm_series, period, project, solve_numeric, solve_order1)
from period_balance.duffing import solve_order2_duffing
from period_balance.errors import NoRealSolutionError
from period_balance.hbm import is_odd_force, residual, t1_closed_form
from period_balance.polyalg import parse_poly

DUFFING = PolyFamily(2)


def test_projection_picks_coefficients():
    f = TrigPoly({0: F(2), 3: F(5)}, {2: F(-1)})
    assert project(f, 0) == 2 and project(f, 3) == 5 and project(f, 1) == 0
    assert project(f, 2, "sin") == -1
    with pytest.raises(DomainError):
        project(f, 0, "sin")


def test_order2_system_matches_reference_equations():
    s = build_system(DUFFING, 2)
    V = list(s.vars)
    eq1 = parse_poly("-4*w^2 + 6*a3^2 - 3*a3*A + 3*A^2 + 4", V)
    eq2 = parse_poly("-9*w^2*a3 + 2*a3^3 - 9/4*a3^2*A + 3/4*a3*A^2 + a3 + 1/4*A^3", V)
    assert 4 * s.equations[0] == eq1
    assert s.equations[1] == eq2


def test_order3_system_matches_reference_equations():
    s = build_system(DUFFING, 3)
    V = list(s.vars)
    P = parse_poly("A - w^2*A + 3/4*A^3 + (w^2 - 3/2*A^2 - 1)*a3 + (w^2 - 9/4*A^2 - 1)*a5 + 9/2*a3*a5*A"
                   " + 9/4*A*a3^2 + 15/4*a5^2*A - 9/4*a5^3 - 3*a3^2*a5 - 9/2*a3*a5^2 - 3/2*a3^3", V)
    Q = parse_poly("1/4*A^3 + (1 + 3/4*A^2 - 9*w^2)*a3 - 3/2*a3*a5*A - 3/4*a5^2*A - 9/4*A*a3^2"
                   " + 3/2*a3^2*a5 + 9/4*a3*a5^2 + 2*a3^3 + 1/2*a5^3", V)
    R = parse_poly("3/4*A^2*a3 + (-25*w^2 + 3/2*A^2 + 1)*a5 - 3*a5^2*A - 9/2*a3*a5*A - 3/4*A*a3^2"
                   " + 15/4*a3^2*a5 + 9/4*a5^3 + 15/4*a3*a5^2", V)
    assert list(s.equations) == [P, Q, R]


def test_odd_force_gives_odd_harmonics_only():
    assert is_odd_force(DUFFING) and is_odd_force(Quintic(1)) and not is_odd_force(GeneralPoly({2: 1}))
    x = TrigPoly({1: F(3, 2), 3: F(-1, 5), 5: F(1, 7)})
    r = residual(DUFFING, x, F(6, 5))
    assert all(k % 2 == 1 for k in r.a) and not r.b
    # the even-harmonic equations of the full ansatz vanish on the odd subspace
    s = build_system(DUFFING, 2, odd=False)
    for e in (s.equations[0], s.equations[2]):
        assert e.subs({"a0": 0, "a2": 0}).is_zero()


def test_t1_closed_forms():
    for A in (0.1, 1.0, 7.0):
        assert t1_closed_form(DUFFING, A) == pytest.approx(4 * math.pi / math.sqrt(3 * A * A + 4))
        assert t1_closed_form(Quintic(F(-1)), A) == pytest.approx(
            8 * math.pi / math.sqrt(16 - 12 * A * A + 10 * A ** 4))
        assert t1_closed_form(RationalFamily(1, 1), A) == pytest.approx(2 * math.pi * math.sqrt(1 + 0.75 * A * A))
    with pytest.raises(NoRealSolutionError):
        t1_closed_form(Quintic(-3), 1.1)


@pytest.mark.parametrize("p", [PolyFamily(2), PolyFamily(3), Quintic(F(-1, 2)), RationalFamily(1, 2)])
def test_numeric_order1_matches_closed_form(p):
    grid = [0.05, 0.5, 1.0, 2.0]
    sols = solve_numeric(p, 1, grid)
    for s, A in zip(sols, grid):
        assert s.T_N == pytest.approx(float(t1_closed_form(p, A)), rel=1e-11)
        assert solve_order1(p, A).T_N == pytest.approx(s.T_N, rel=1e-12)


def test_numeric_order2_matches_sextic_root():
    grid = list(np.geomspace(0.05, 50, 12))
    for s, A in zip(solve_numeric(DUFFING, 2, grid), grid):
        ref = solve_order2_duffing(A)
        assert s.T_N == pytest.approx(ref.T_N, rel=1e-11)
        assert s.coeffs.cos_coeff(3) == pytest.approx(ref.coeffs.cos_coeff(3), rel=1e-8, abs=1e-12)


def test_solution_satisfies_initial_condition():
    s = solve_numeric(Quintic(F(1)), 3, [1.5])[0]
    assert sum(s.coeffs.a.values()) == pytest.approx(1.5, rel=1e-13)
    assert s.to_json()["N"] == 3


def test_errors_decrease_with_order_at_unit_amplitude():
    T = period(DUFFING, 1.0, 1e-14)
    errs = [abs(T - solve_numeric(DUFFING, N, [1.0])[0].T_N) for N in (1, 2, 3, 4)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_hbm_series_duffing():
    F_ = F
    assert list(hbm_series(DUFFING, 1, 6).coeffs) == [2, 0, F_(-3, 4), 0, F_(27, 64), 0, F_(-135, 512)]
    assert hbm_series(DUFFING, 3, 8)[8] == F_(30339, 131072)


def test_hbm_series_general_order2_matches_exact_through_cubic():
    s = hbm_series(GeneralPoly({2: 1, 3: 1}), 2, 3)
    assert s[2] == F(1, 12) and s[3] == F(1, 18)


_k = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@settings(max_examples=15)
@given(st.integers(3, 7), st.lists(_k, min_size=6, max_size=6))
def test_first_order_quadratic_term_independent_of_degree(M, ks):
    coeffs = {i: ks[i - 2] for i in range(2, M + 1)}
    s = hbm_series(GeneralPoly(coeffs), 1, 2)
    k2, k3 = coeffs.get(2, 0), coeffs.get(3, 0)
    assert s[2] == F(k2) ** 2 - F(3, 4) * k3


def test_bad_amplitude():
    with pytest.raises(DomainError):
        solve_order1(DUFFING, 0.0)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_first_order_poly_series_closed_form(m):
    r = F(math.prod(range(1, 2 * m, 2)), math.prod(range(2, 2 * m + 1, 2)))
    s = hbm_series(PolyFamily(m), 1, 4 * m - 4)
    assert s[2 * m - 2] == -2 * r
    assert s[4 * m - 4] == 3 * r * r
