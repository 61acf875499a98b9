import json
from fractions import Fraction as F

import numpy as np
import pytest

from period_balance import PolyFamily, Quintic, RationalFamily, Series, compare, lindstedt_series
from period_balance.compare import (hbm_critical_periods, hbm_periods, hbm_taylor, local_match_order,
                                    tail_constant_hbm)

DUFFING = PolyFamily(2)


def test_local_match_order():
    a = Series.from_list([2, 0, F(-3, 4), 0, F(1, 2)])
    b = Series.from_list([2, 0, F(-3, 4), 0, F(1, 3)])
    assert local_match_order(a, b) == 4
    assert local_match_order(a, a) is None
    assert local_match_order(a, b.truncate(2)) is None


def test_duffing_match_orders():
    exact = lindstedt_series(DUFFING, 10)
    assert [local_match_order(exact, hbm_taylor(DUFFING, N, 10)) for N in (1, 2, 3)] == [4, 6, 8]


def test_quintic_match_order_first_approximation():
    # T1 already differs at A^4 for the quintic
    q = Quintic(F(-1))
    assert local_match_order(lindstedt_series(q, 6), hbm_taylor(q, 1, 6)) == 4


@pytest.mark.parametrize("N, C", [(1, 7.25519), (2, 7.40178), (3, 7.41564)])
def test_hbm_tail_constants(N, C):
    assert tail_constant_hbm(DUFFING, N) == pytest.approx(C, abs=1e-4)


def test_periods_routes_agree():
    grid = [0.3, 1.0, 4.0]
    from period_balance import solve_numeric
    for N in (1, 2, 3):
        routed = hbm_periods(DUFFING, N, grid)
        numeric = [s.T_N for s in solve_numeric(DUFFING, N, grid)]
        assert routed == pytest.approx(numeric, rel=1e-10)


def test_quintic_hbm_critical_period():
    crit = hbm_critical_periods(Quintic(F(-1)), 1, (0.01, 3.0), tol=1e-13)
    assert [k for _, k in crit] == ["max"]
    assert crit[0][0] == pytest.approx(np.sqrt(3 / 5), abs=1e-10)
    crit2 = hbm_critical_periods(Quintic(F(-1)), 2, (0.01, 3.0))
    assert [k for _, k in crit2] == ["max"]


def test_report_roundtrip_and_determinism():
    grid = [0.1, 0.5, 1.0]
    r1 = compare(DUFFING, [1, 2], grid, series_order=8)
    r2 = compare(DUFFING, [1, 2], grid, series_order=8)
    assert r1.dumps() == r2.dumps()
    data = json.loads(r1.dumps())
    assert data["family"] == "poly:m=2"
    assert [rec["local_match_order"] for rec in data["records"]] == [4, 6]
    assert data["records"][0]["tail_C_exact"] == pytest.approx(7.4163, abs=1e-4)
    errs = [e for _, e in r1.records[0].error_curve]
    assert all(b > a for a, b in zip(errs, errs[1:]))
    csv_lines = r1.error_csv(1).splitlines()
    assert csv_lines[0] == "A,abs_error" and len(csv_lines) == 4


def test_rational_report_skips_series():
    r = compare(RationalFamily(1, 1), [1], [0.5, 1.0], tails=False)
    rec = r.records[0]
    assert rec.local_match_order is None and rec.tail_C_hbm is None
    assert len(rec.error_curve) == 2


def test_failures_become_notes():
    r = compare(Quintic(F(-3)), [1], [0.5, 1.5], tails=False)
    assert r.records[0].notes
