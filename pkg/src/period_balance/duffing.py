"""Exact elimination for the harmonic balance of x'' + x + x^3 = 0 at orders 2 and 3."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .errors import ConsistencyError, ConvergenceError, DomainError
from .hbm import HbmSolution, build_system, hbm_series
from .polyalg import MPoly, parse_poly, resultant, sturm_count
from .potentials import PolyFamily
from .series import Series, period_from_omega_squared, ps_mul
from .trig import TrigPoly

DUFFING = PolyFamily(2)

SEXTIC_TEXT = ("1058*w^6 - 3*(219*A^2 + 322)*w^4 - 9/4*(21*A^4 + 80*A^2 + 40)*w^2"
               " - 27/64*A^2*(7*A^2 + 8)^2 - 2")


def _mp(x):
    return isinstance(x, mpmath.mpf)


# -------------------------------------------------------------------- order 2
@lru_cache(maxsize=1)
def order2_eliminant() -> MPoly:
    """Res(eq1, eq2; a3) of the order-2 system, scaled to match the sextic.

    Raises :class:`ConsistencyError` unless it is a rational multiple of the
    reference sextic in (A, w).
    """
    sysm = build_system(DUFFING, 2)
    e1, e2 = sysm.equations
    res = resultant(e1, e2, "a3").in_ring(("A", "w"))
    ref = order2_sextic()
    lead = max(ref.terms)
    if lead not in res.terms:
        raise ConsistencyError("eliminant and sextic have different supports")
    scale = Fraction(ref.terms[lead]) / Fraction(res.terms[lead])
    scaled = res * scale
    if scaled != ref:
        raise ConsistencyError("eliminant differs from the reference sextic")
    return scaled


def order2_sextic() -> MPoly:
    return parse_poly(SEXTIC_TEXT, ("A", "w"))


def order2_cubic_coeffs(A) -> list:
    """Coefficients (highest first) of the sextic as a cubic in W = omega^2."""
    A2 = A * A
    return [1058 + 0 * A2, -3 * (219 * A2 + 322), -(9 * (21 * A2 * A2 + 80 * A2 + 40)) / 4,
            -(27 * A2 * (7 * A2 + 8) ** 2) / 64 - 2]


def order2_positive_roots(A: Fraction | int) -> int:
    """Number of distinct positive roots omega of the sextic at a rational A (Sturm)."""
    A = Fraction(A)
    c = order2_cubic_coeffs(A)
    # roots in omega: W = omega^2 > 0, each positive W gives exactly one positive omega
    return sturm_count([Fraction(x) for x in reversed(c)], Fraction(0), None)


def _polish(coeffs, x, tol, max_iter=100):
    for _ in range(max_iter):
        p = dp = 0 * x
        for c in coeffs:
            dp = dp * x + p
            p = p * x + c
        if dp == 0:
            break
        step = p / dp
        x = x - step
        if abs(step) <= tol * abs(x):
            return x
    return x


def _order2_W(A):
    """Unique positive root W = omega_2^2 (one sign change, so Descartes gives uniqueness)."""
    if A == 0:
        return mpmath.mpf(1) if _mp(A) else 1.0
    big = A >= 1
    Af = float(A)
    # solve in c = W / A^2 for large A to keep the coefficients bounded
    if big:
        s = Af ** -2
        cf = [1058.0, -3 * (219 + 322 * s), -9 * (21 + 80 * s + 40 * s * s) / 4,
              -27 * (7 + 8 * s) ** 2 / 64 - 2 * s ** 3]
    else:
        cf = [float(x) for x in order2_cubic_coeffs(Af)]
    roots = np.roots(cf)
    pos = [r.real for r in roots if abs(r.imag) <= 1e-9 * abs(r) and r.real > 0]
    if len(pos) != 1:
        raise ConsistencyError(f"expected one positive root, found {len(pos)}")
    guess = pos[0] * (Af * Af if big else 1.0)
    if _mp(A):
        coeffs = order2_cubic_coeffs(A)
        return _polish(coeffs, mpmath.mpf(guess), mpmath.mpf(10) ** (-mpmath.mp.dps + 3))
    return float(_polish([float(x) for x in order2_cubic_coeffs(Af)], guess, 1e-15))


def solve_order2_duffing(A) -> HbmSolution:
    """T_2 from the positive root of the sextic, with a3 recovered from the first equation."""
    if not A > 0:
        raise DomainError("amplitude must be positive")
    W = _order2_W(A)
    omega = mpmath.sqrt(W) if _mp(A) else math.sqrt(W)
    # 6 a3^2 - 3 A a3 + 3 A^2 + 4 - 4 W = 0; keep the root that also solves eq2
    sysm = build_system(DUFFING, 2)
    e2 = sysm.equations[1]
    disc = 9 * A * A - 24 * (3 * A * A + 4 - 4 * W)
    sq = mpmath.sqrt(disc) if _mp(A) else math.sqrt(max(float(disc), 0.0))
    cands = [(3 * A + sq) / 12, (3 * A - sq) / 12]
    a3 = min(cands, key=lambda a: abs(e2.evaluate({"A": A, "w": omega, "a3": a})))
    sol = HbmSolution(2, A, omega, TrigPoly({1: A - a3, 3: a3}))
    return sol


def order2_limit_delta():
    """lim A T_2(A) from the cube-root closed form of omega_2.

    With Delta = lim R^(1/3), omega_2 / A tends to
    sqrt(2) sqrt(1033992 + 876 Delta + Delta^2) / (92 sqrt(Delta)).
    """
    Delta = (1763014086 + 71386434 * math.sqrt(393)) ** (1 / 3)
    return 92 * math.sqrt(2) * math.pi * math.sqrt(Delta) / math.sqrt(1033992 + 876 * Delta + Delta ** 2)


def order2_limit_from_cubic() -> float:
    """Same constant from the top-degree part 1058c^3 - 657c^2 - 189/4 c - 1323/64 of the sextic."""
    roots = np.roots([1058.0, -657.0, -189 / 4, -1323 / 64])
    c = [r.real for r in roots if abs(r.imag) < 1e-12 and r.real > 0]
    if len(c) != 1:
        raise ConsistencyError("top part should have one positive root")
    return 2 * math.pi / math.sqrt(c[0])


# -------------------------------------------------------------------- order 3
@dataclass(frozen=True)
class Order3Curve:
    """The eliminated curve PQR(A, W) = 0 with W = omega_3^2, plus its factors of the cascade."""

    P: MPoly
    Q: MPoly
    R: MPoly
    PQ: MPoly
    QR: MPoly
    PQR: MPoly

    def to_text(self) -> str:
        return self.PQR.to_text()

    @property
    def degree(self) -> int:
        """Total degree in (A, omega)."""
        return max(a + 2 * b for a, b in self.PQR.terms)


@lru_cache(maxsize=1)
def order3_curve() -> Order3Curve:
    """Run the resultant cascade for the order-3 system in exact arithmetic.

    PQ = Res(P, Q; a3) / (A - a5), QR = Res(Q, R; a3),
    PQR = Res(PQ, QR; a5) / (3A^2 + 4 - 36W); both divisions are checked exact.
    """
    sysm = build_system(DUFFING, 3)
    vars = ("A", "W", "a3", "a5")
    P, Q, R = (e.halve_exponent("w") for e in sysm.equations)
    P, Q, R = (MPoly(vars, e.terms) for e in (P, Q, R))
    A, W, a3, a5 = (MPoly.gen(vars, v) for v in vars)
    PQ = resultant(P, Q, "a3").exact_div(A - a5)
    QR = resultant(Q, R, "a3")
    PQR = resultant(PQ, QR, "a5").exact_div(3 * A * A + 4 - 36 * W).in_ring(("A", "W"))
    return Order3Curve(P, Q, R, PQ.in_ring(("A", "W", "a5")), QR.in_ring(("A", "W", "a5")), PQR)


def _weighted_top(poly: MPoly) -> List[Fraction]:
    """Coefficients (lowest first) in c = W/A^2 of the top weighted part (A: 1, W: 2)."""
    top = max(a + 2 * b for a, b in poly.terms)
    deg = max(b for a, b in poly.terms)
    out = [Fraction(0)] * (deg + 1)
    for (a, b), coef in poly.terms.items():
        if a + 2 * b == top:
            out[b] += coef
    return out


def order3_infinity_polynomial() -> List[Fraction]:
    """Polynomial in c = lim omega_3^2 / A^2 (lowest coefficient first)."""
    return _weighted_top(order3_curve().PQR)


def order3_limit_delta(reference: Optional[float] = None) -> float:
    """lim A T_3(A) = 2 pi / sqrt(c) for the positive root c on the tracked branch.

    The branch is picked as the positive root nearest the order-2 limit, or
    nearest ``reference`` (a value of A T_3 at large A) when given.
    """
    coeffs = order3_infinity_polynomial()
    ref = reference if reference is not None else order2_limit_delta()
    c_ref = (2 * math.pi / ref) ** 2
    with mpmath.workdps(40):
        roots = mpmath.polyroots([mpmath.mpf(Fraction(x).numerator) / Fraction(x).denominator
                                  for x in reversed(coeffs)], maxsteps=400, extraprec=400)
    pos = [float(mpmath.re(r)) for r in roots if abs(mpmath.im(r)) < 1e-20 and mpmath.re(r) > 0]
    if not pos:
        raise ConsistencyError("no positive root at infinity")
    c = min(pos, key=lambda x: abs(x - c_ref))
    return 2 * math.pi / math.sqrt(c)


def _edge_polynomial(poly: MPoly) -> Tuple[int, List[Fraction]]:
    """Lowest-order coefficient of PQR(s, 1 + v s) in s, as a polynomial in v."""
    # terms: coef * s^i * (1 + v s)^j  with s = A^2
    best = None
    by_order: Dict[int, List[Fraction]] = {}
    for (a, b), coef in poly.terms.items():
        i = a // 2
        for r in range(b + 1):
            o = i + r
            lst = by_order.setdefault(o, [Fraction(0)] * (b + 1))
            if len(lst) <= r:
                lst.extend([Fraction(0)] * (r + 1 - len(lst)))
            lst[r] += coef * comb(b, r)
    for o in sorted(by_order):
        if any(by_order[o]):
            best = o
            break
    return best, by_order[best]


def _peval(coeffs_low_first, x):
    out = 0
    for c in reversed(coeffs_low_first):
        out = out * x + c
    return out


def _pderiv(coeffs_low_first):
    return [k * c for k, c in enumerate(coeffs_low_first)][1:]


def order3_series(order: int = 8) -> Series:
    """Exact Taylor series of the tracked branch of T_3 at A = 0.

    W = 1 is a multiple root of PQR(0, W), so the branch is isolated first on
    the Newton-polygon edge: W = 1 + v1 A^2 + ..., where v1 is the simple
    root of the edge polynomial that matches the order-2 approximation.
    Higher coefficients then follow linearly.
    """
    if order < 2 or order % 2:
        raise DomainError("order must be a positive even integer")
    pqr = order3_curve().PQR
    if any(a % 2 for a, _ in pqr.terms):
        raise ConsistencyError("PQR should be even in A")
    d, edge = _edge_polynomial(pqr)
    s2 = hbm_series(DUFFING, 2, 2)
    # order-2 W coefficient: T/pi = 2(1+W)^(-1/2) => W_1 = -c_2
    v1 = -s2[2]
    if _peval(edge, v1) != 0:
        raise ConsistencyError(f"edge polynomial does not vanish at v1 = {v1}")
    dedge = _peval(_pderiv(edge), v1)
    if dedge == 0:
        raise ConsistencyError("v1 is not a simple root of the edge polynomial")
    K = order // 2
    s_poly = pqr.halve_exponent("A")
    n = d + K
    V = [Fraction(0), v1]
    for k in range(2, K + 1):
        Vser = V + [Fraction(0)] * (n + 1 - len(V))
        G = _series_in_s(s_poly, Vser, n)
        if any(G[: k + d - 1]):
            raise ConsistencyError("lower-order residual did not vanish")
        V.append(-G[k + d - 1] / dedge)
    Vser = V + [Fraction(0)] * (n + 1 - len(V))
    G = _series_in_s(s_poly, Vser, n)
    if any(G[: K + d]):
        raise ConsistencyError("series does not lie on the curve")
    T_s = period_from_omega_squared(V, K)
    coeffs = [Fraction(0)] * (order + 1)
    for j, c in enumerate(T_s):
        coeffs[2 * j] = c
    return Series(tuple(coeffs), order)


def _series_in_s(poly_sW: MPoly, V: List[Fraction], n: int) -> List[Fraction]:
    """PQR(s, 1 + V(s)) truncated at s^n."""
    Wser = [Fraction(1) + (V[0] if V else 0)] + list(V[1: n + 1])
    Wser += [Fraction(0)] * (n + 1 - len(Wser))
    maxb = max(b for _, b in poly_sW.terms)
    powers = [[Fraction(1)] + [Fraction(0)] * n]
    for _ in range(maxb):
        powers.append(ps_mul(powers[-1], Wser, n))
    out = [Fraction(0)] * (n + 1)
    for (a, b), coef in poly_sW.terms.items():
        if a > n:
            continue
        pw = powers[b]
        for j in range(n + 1 - a):
            if pw[j]:
                out[a + j] += coef * pw[j]
    return out


class Order3Branch:
    """Evaluator for the branch of PQR(A, W) = 0 continuous with omega_2 at small A."""

    def __init__(self, dps: int = 60, start: float = 0.05, max_ratio: float = 1.1):
        self.curve = order3_curve()
        self.terms = [(a, b, int(c)) for (a, b), c in self.curve.PQR.primitive().terms.items()]
        self.deg = max(b for _, b, _ in self.terms)
        self.dps = dps
        self.start = start
        self.max_ratio = max_ratio

    def _coeffs(self, A):
        out = [mpmath.mpf(0)] * (self.deg + 1)
        for a, b, c in self.terms:
            out[b] += mpmath.mpf(c) * A ** a
        return out

    def _newton(self, A, W0, max_iter=60):
        # guard digits: near A = 0 the branch sits next to a double root of g
        tol = mpmath.mpf(10) ** (-self.dps)
        with mpmath.workdps(self.dps + 30):
            cf = list(reversed(self._coeffs(A)))
            W = mpmath.mpf(W0)
            for _ in range(max_iter):
                p, dp = mpmath.polyval(cf, W, derivative=True)
                if dp == 0:
                    return None
                step = p / dp
                W -= step
                if abs(step) <= tol * abs(W):
                    return W
        return None

    def omega_squared(self, A):
        """W = omega_3^2 at one amplitude (float or mpf); result has the input's type."""
        as_mp = _mp(A)
        with mpmath.workdps(self.dps):
            Am = mpmath.mpf(A)
            if Am <= 0:
                raise DomainError("amplitude must be positive")
            if Am <= self.start:
                W = self._newton(Am, _order2_W(Am))
                if W is None:
                    raise ConvergenceError("root tracking failed near A = 0", last_good=None)
            else:
                W = self._track(Am)
            return +W if as_mp else float(W)

    def _track(self, target, cur=None, W=None):
        if cur is None:
            cur = mpmath.mpf(self.start)
            W = self._newton(cur, _order2_W(cur))
            if W is None:
                raise ConvergenceError("root tracking failed at the start", last_good=None)
        while cur < target:
            ratio = min(mpmath.mpf(self.max_ratio), target / cur)
            for _ in range(11):
                nxt = cur * ratio if ratio * cur < target else target
                # W3 / W2 varies slowly, so the order-2 root carries the prediction
                pred = W * _order2_W(nxt) / _order2_W(cur)
                Wn = self._newton(nxt, pred)
                if Wn is not None and abs(Wn / pred - 1) < 1e-2:
                    break
                ratio = 1 + (ratio - 1) / 2
            else:
                raise ConvergenceError(f"lost the order-3 branch after A={float(cur):.17g}",
                                       last_good=float(cur))
            cur, W = nxt, Wn
        return W

    def periods(self, A_grid: Sequence[float]) -> List[float]:
        """T_3 along an increasing grid, continuing the branch between points."""
        grid = [float(a) for a in A_grid]
        if any(b <= a for a, b in zip(grid, grid[1:])) or (grid and grid[0] <= 0):
            raise DomainError("A_grid must be positive and strictly increasing")
        out = []
        cur = W = None
        with mpmath.workdps(self.dps):
            for A in grid:
                Am = mpmath.mpf(A)
                if Am <= self.start:
                    Wa = self._newton(Am, _order2_W(Am))
                    if Wa is None:
                        raise ConvergenceError("root tracking failed near A = 0", last_good=None)
                else:
                    Wa = self._track(Am, cur, W)
                    cur, W = Am, Wa
                out.append(2 * math.pi / math.sqrt(float(Wa)))
        return out

    def period(self, A):
        W = self.omega_squared(A)
        if _mp(A):
            with mpmath.workdps(self.dps):
                return 2 * mpmath.pi / mpmath.sqrt(W)
        return 2 * math.pi / math.sqrt(W)


@lru_cache(maxsize=4)
def order3_branch(dps: int = 60) -> Order3Branch:
    return Order3Branch(dps)


def solve_order3_duffing(A, dps: int = 60) -> HbmSolution:
    """T_3 on the tracked branch, with a3, a5 recovered by Newton on the system."""
    if not A > 0:
        raise DomainError("amplitude must be positive")
    W = order3_branch(dps).omega_squared(A)
    omega = mpmath.sqrt(W) if _mp(A) else math.sqrt(W)
    from .hbm import solve_numeric

    try:
        coeffs = solve_numeric(DUFFING, 3, [float(A)])[0].coeffs
    except ConvergenceError:
        coeffs = TrigPoly({1: float(A)})
    return HbmSolution(3, A, omega, coeffs)
