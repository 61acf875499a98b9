"""Side-by-side analysis of the exact period T and its harmonic balance approximations T_N."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .asymptotics import exact_tail, tail_fit
from .duffing import order3_branch, order3_series, solve_order2_duffing
from .errors import NoRealSolutionError, PeriodBalanceError, UnsupportedError
from .hbm import hbm_series, solve_numeric, t1_closed_form, t1_closed_form_derivative
from .period import critical_points, critical_periods, lindstedt_series, period
from .potentials import PolyFamily, Potential, Quintic, RationalFamily, is_global_center
from .series import Series


def _is_duffing(p: Potential) -> bool:
    return isinstance(p, PolyFamily) and p.m == 2


def hbm_periods(p: Potential, N: int, A_grid: Sequence[float]) -> List[float]:
    """T_N on an increasing grid, routed to the most exact solver available."""
    grid = [float(a) for a in A_grid]
    if N == 1 and (isinstance(p, (PolyFamily, Quintic))
                   or (isinstance(p, RationalFamily) and p.is_integer_m)):
        return [float(t1_closed_form(p, a)) for a in grid]
    if _is_duffing(p) and N == 2:
        return [float(solve_order2_duffing(a).T_N) for a in grid]
    if _is_duffing(p) and N == 3:
        return order3_branch().periods(grid)
    return [s.T_N for s in solve_numeric(p, N, grid)]


def hbm_taylor(p: Potential, N: int, order: int) -> Series:
    """Exact Taylor series of T_N; the order-3 Duffing case comes from the eliminated curve."""
    if _is_duffing(p) and N == 3 and order % 2 == 0:
        return order3_series(order)
    return hbm_series(p, N, order)


def local_match_order(s_exact: Series, s_hbm: Series) -> Optional[int]:
    """Smallest k with different A^k coefficients, or ``None`` if none differ up to the shorter order."""
    n = min(s_exact.order, s_hbm.order)
    for k in range(n + 1):
        if s_exact[k] != s_hbm[k]:
            return k
    return None


def error_curve(p: Potential, N: int, A_grid: Sequence[float], tol: float = 1e-13) -> List[Tuple[float, float]]:
    """Samples (A, |T(A) - T_N(A)|)."""
    grid = [float(a) for a in A_grid]
    approx = hbm_periods(p, N, grid)
    return [(a, abs(period(p, a, tol) - t)) for a, t in zip(grid, approx)]


def tail_constant_hbm(p: Potential, N: int, A_grid: Sequence[float] | None = None) -> float:
    """C in T_N ~ C A^e from a log-log fit at large amplitude."""
    grid = list(A_grid) if A_grid is not None else list(np.logspace(3, 6, 10))
    return tail_fit(zip(grid, hbm_periods(p, N, grid))).C


def hbm_critical_periods(p: Potential, N: int, a_range: Tuple[float, float], tol: float = 1e-8):
    if N == 1 and isinstance(p, Quintic):
        return critical_points(lambda A: float(t1_closed_form(p, A)), a_range, tol,
                               derivative=lambda A: t1_closed_form_derivative(p, A))
    return critical_points(lambda A: hbm_periods(p, N, [A])[0], a_range, tol,
                           batch=lambda grid: hbm_periods(p, N, grid))


@dataclass
class OrderRecord:
    N: int
    local_match_order: Optional[int]
    tail_C_exact: Optional[float]
    tail_C_hbm: Optional[float]
    critical_periods_exact: List[Tuple[float, str]] = field(default_factory=list)
    critical_periods_hbm: List[Tuple[float, str]] = field(default_factory=list)
    error_curve: List[Tuple[float, float]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)


@dataclass
class ComparisonReport:
    family: str
    records: List[OrderRecord]

    def to_json(self) -> dict:
        return {"family": self.family, "records": [asdict(r) for r in self.records]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)

    def error_csv(self, N: int) -> str:
        rec = next(r for r in self.records if r.N == N)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["A", "abs_error"])
        for a, e in rec.error_curve:
            w.writerow([f"{a:.17g}", f"{e:.17g}"])
        return buf.getvalue()


def compare(p: Potential, orders: Sequence[int], A_grid: Sequence[float],
            series_order: int = 10, crit_range: Tuple[float, float] | None = None,
            tails: bool = True) -> ComparisonReport:
    """Build a report for each requested order; solver failures become notes."""
    exact_series = None
    if not isinstance(p, RationalFamily):
        exact_series = lindstedt_series(p, min(series_order, 12))
    tail_exact = None
    global_center = not isinstance(p, RationalFamily) and is_global_center(p)
    if tails and global_center:
        try:
            tail_exact = exact_tail(p).M
        except UnsupportedError:
            tail_exact = tail_fit((a, period(p, a)) for a in np.logspace(3, 6, 10)).C
    crit_exact = critical_periods(p, crit_range) if crit_range else []
    records = []
    for N in orders:
        rec = OrderRecord(N, None, tail_exact, None, crit_exact)
        try:
            if exact_series is not None:
                rec.local_match_order = local_match_order(exact_series, hbm_taylor(p, N, exact_series.order))
            if tails and global_center:
                rec.tail_C_hbm = tail_constant_hbm(p, N)
            if crit_range:
                rec.critical_periods_hbm = hbm_critical_periods(p, N, crit_range)
            rec.error_curve = error_curve(p, N, A_grid)
        except (PeriodBalanceError, NoRealSolutionError) as exc:
            rec.notes.append(f"{type(exc).__name__}: {exc}")
        records.append(rec)
    return ComparisonReport(p.spec, records)
