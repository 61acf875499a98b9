"""N-th order harmonic balance: system assembly, closed forms and numeric solves.

The ansatz is x_N = sum a_k cos(k tau) with tau = omega t.  Sine terms are
omitted because x(0) = A, x'(0) = 0 makes every solution even in t; for odd
potentials only odd harmonics 1, 3, ..., 2N-1 are kept.  ``a0`` is the mean
value itself.  The ring variable ``w`` stands for omega.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .errors import ConsistencyError, ConvergenceError, DomainError, NoRealSolutionError, UnsupportedError
from .polyalg import MPoly
from .potentials import PolyFamily, Potential, Quintic, RationalFamily
from .series import Series, period_from_omega_squared
from .trig import TrigPoly

TWO_PI = 2 * math.pi


# ------------------------------------------------------------------ solution
@dataclass(frozen=True)
class HbmSolution:
    N: int
    A: float
    omega: float
    coeffs: TrigPoly = field(compare=False)

    @property
    def T_N(self) -> float:
        if isinstance(self.omega, mpmath.mpf):
            return 2 * mpmath.pi / self.omega
        return TWO_PI / self.omega

    T = T_N

    def to_json(self) -> dict:
        deg = self.coeffs.degree
        return {
            "N": self.N,
            "A": float(self.A),
            "omega": float(self.omega),
            "T": float(self.T_N),
            "coeffs": {
                "a": [float(self.coeffs.cos_coeff(k, 0.0)) for k in range(deg + 1)],
                "b": [float(self.coeffs.sin_coeff(k, 0.0)) for k in range(1, deg + 1)],
            },
        }


# ------------------------------------------------------------- projections
def project(Fn: TrigPoly, k: int, kind: str = "cos"):
    """Fourier coefficient of ``cos(k tau)`` or ``sin(k tau)`` in ``Fn``.

    For ``k >= 1`` this is (1/pi) * int_0^{2pi} Fn cos(k tau); for ``k = 0`` it
    is the mean.  Absent harmonics give 0.
    """
    if kind == "cos":
        return Fn.cos_coeff(k, 0)
    if kind == "sin":
        if k < 1:
            raise DomainError("sine projections start at k = 1")
        return Fn.sin_coeff(k, 0)
    raise DomainError("kind must be 'cos' or 'sin'")


def _exact_k(k: float) -> Fraction:
    return Fraction(k).limit_denominator(10 ** 12) if isinstance(k, float) else Fraction(k)


def residual(p: Potential, x: TrigPoly, w) -> TrigPoly:
    """Fourier form of w^2 x'' + F'(x) (cleared denominators for rational F')."""
    xdd = x.derivative(2) * (w * w)
    if isinstance(p, RationalFamily):
        if not p.is_integer_m:
            raise UnsupportedError("harmonic balance for the rational family needs integer m")
        k2 = _exact_k(p.k) ** 2
        weight = (x * x + k2) ** int(round(p.m))
        return weight * xdd + x
    coeffs = p.force_coeffs
    if coeffs is None:
        raise UnsupportedError(f"no polynomial force for {p.spec}")
    out = xdd
    power = None
    for i in range(1, max(coeffs) + 1):
        power = x if power is None else power * x
        c = coeffs.get(i)
        if c:
            out = out + power * Fraction(c)
    return out


def is_odd_force(p: Potential) -> bool:
    if isinstance(p, RationalFamily):
        return True
    coeffs = p.force_coeffs
    return coeffs is not None and all(i % 2 for i in coeffs)


@dataclass(frozen=True)
class HbmSystem:
    """Polynomial system for one potential and order."""

    spec: str
    N: int
    odd: bool
    harmonics: Tuple[int, ...]
    vars: Tuple[str, ...]        # ("A", "w", unknown coefficients...)
    unknowns: Tuple[str, ...]    # coefficient names solved for (w excluded)
    equations: Tuple[MPoly, ...]
    a1: MPoly                    # a1 in terms of A and the unknowns

    def ansatz(self, A, values: Dict[str, float]) -> TrigPoly:
        pt = {"A": A, "w": 0.0, **values}
        a = {int(n[1:]): values[n] for n in self.unknowns}
        a[1] = self.a1.evaluate([pt[v] for v in self.vars])
        return TrigPoly(a)


def _coef_names(N: int, odd: bool) -> List[int]:
    return [2 * j - 1 for j in range(1, N + 1)] if odd else list(range(0, N + 1))


def _raw_projections(p: Potential, N: int, odd: bool):
    ks = _coef_names(N, odd)
    names = [f"a{k}" for k in ks]
    vars = ("A", "w", *names)
    gens = {n: MPoly.gen(vars, n) for n in vars}
    x = TrigPoly({k: gens[f"a{k}"] for k in ks})
    Fn = residual(p, x, gens["w"])
    return ks, vars, gens, Fn


@lru_cache(maxsize=64)
def _build_system_cached(p: Potential, N: int, odd: bool) -> HbmSystem:
    ks, vars, gens, Fn = _raw_projections(p, N, odd)
    others = [gens[f"a{k}"] for k in ks if k != 1]
    a1 = gens["A"] - sum(others, MPoly.const(vars, 0))
    eqs = []
    for k in ks:
        e = project(Fn, k)
        if not e:
            continue
        # strip powers of a1: they only encode the trivial solution a1 = 0
        ia = vars.index("a1")
        lo = min(t[ia] for t in e.terms)
        if lo:
            e = MPoly(vars, {t[:ia] + (t[ia] - lo,) + t[ia + 1:]: c for t, c in e.terms.items()})
        eqs.append(e.subs({"a1": a1}))
    if odd:
        # even harmonics and all sine terms vanish identically under the ansatz
        for k in range(0, 2 * Fn.degree + 1, 2):
            if project(Fn, k):
                raise ConsistencyError("odd force produced an even harmonic")
    new_vars = tuple(v for v in vars if v != "a1")
    eqs = tuple(e.in_ring(new_vars) for e in eqs)
    unknowns = tuple(v for v in new_vars if v not in ("A", "w"))
    return HbmSystem(p.spec, N, odd, tuple(ks), new_vars, unknowns, eqs, a1.in_ring(new_vars))


def build_system(p: Potential, N: int, odd: Optional[bool] = None) -> HbmSystem:
    """Harmonic balance equations after imposing x_N(0) = A.

    ``odd=None`` picks the odd-harmonic fast path when F' is odd.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    if odd is None:
        odd = is_odd_force(p)
    elif odd and not is_odd_force(p):
        raise DomainError("odd-harmonic ansatz needs an odd force")
    return _build_system_cached(p, N, odd)


# ------------------------------------------------------------ order one
def t1_closed_form(p: Potential, A):
    """Closed-form T_1(A) for PolyFamily, integer-m RationalFamily and Quintic.

    Works with floats and mpmath numbers.
    """
    mp = isinstance(A, mpmath.mpf)
    pi = mpmath.pi if mp else math.pi
    sqrt = mpmath.sqrt if mp else math.sqrt
    if isinstance(p, PolyFamily):
        m = p.m
        rad = comb(2 * m - 1, m) * A ** (2 * m - 2) + 2 ** (2 * m - 2)
        return 2 ** m * pi / sqrt(rad)
    if isinstance(p, RationalFamily):
        if not p.is_integer_m:
            raise UnsupportedError("closed-form T1 needs integer m")
        m = int(round(p.m))
        k = p.k
        s = sum(comb(m, j) * comb(2 * j + 1, j) / 4 ** j * k ** (2 * (m - j)) * A ** (2 * j)
                for j in range(m + 1))
        return 2 * pi * sqrt(s)
    if isinstance(p, Quintic):
        k = mpmath.mpf(p.k.numerator) / p.k.denominator if mp else float(p.k)
        rad = 16 + 12 * k * A ** 2 + 10 * A ** 4
        if rad <= 0:
            raise NoRealSolutionError(f"T1 undefined: 16 + 12kA^2 + 10A^4 = {float(rad):.3g} <= 0")
        return 8 * pi / sqrt(rad)
    raise UnsupportedError(f"no closed-form T1 for {p.spec}")


def t1_closed_form_derivative(p: Quintic, A: float) -> float:
    """dT_1/dA for the quintic family."""
    k = float(p.k)
    rad = 16 + 12 * k * A ** 2 + 10 * A ** 4
    return -8 * math.pi * (24 * k * A + 40 * A ** 3) / (2 * rad ** 1.5)


def solve_order1(p: Potential, A: float) -> HbmSolution:
    if not A > 0:
        raise DomainError("amplitude must be positive")
    if isinstance(p, (PolyFamily, Quintic)) or (isinstance(p, RationalFamily) and p.is_integer_m):
        T = t1_closed_form(p, A)
        return HbmSolution(1, A, TWO_PI / T, TrigPoly({1: A}))
    return solve_numeric(p, 1, [A])[0]


# ------------------------------------------------------ numeric continuation
class _Compiled:
    def __init__(self, system: HbmSystem):
        self.system = system
        self.unknowns = system.unknowns + ("w",)
        idx = [system.vars.index(u) for u in self.unknowns]
        self.idx = idx
        self.f = [e.compile() for e in system.equations]
        self.scale = [e.abs_terms() for e in system.equations]
        self.J = [[e.diff(u).compile() for u in self.unknowns] for e in system.equations]

    def point(self, A, u):
        pt = np.zeros(len(self.system.vars))
        pt[0] = A
        pt[self.idx] = u
        return pt

    def residual(self, A, u):
        pt = self.point(A, u)
        r = np.array([f(pt) for f in self.f])
        s = np.array([max(g(pt), 1e-300) for g in self.scale])
        return r, s

    def jacobian(self, A, u):
        pt = self.point(A, u)
        return np.array([[d(pt) for d in row] for row in self.J])


def _newton(cs: _Compiled, A, u0, tol, max_steps=50, max_halvings=10):
    u = np.array(u0, dtype=float)
    r, s = cs.residual(A, u)
    norm = float(np.max(np.abs(r / s)))
    for _ in range(max_steps):
        if norm <= tol:
            return u, norm
        J = cs.jacobian(A, u)
        try:
            du = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None, norm
        lam = 1.0
        for _ in range(max_halvings + 1):
            un = u + lam * du
            rn, sn = cs.residual(A, un)
            nn = float(np.max(np.abs(rn / sn)))
            if nn < norm or nn <= tol:
                break
            lam /= 2
        else:
            return None, norm
        u, r, s, norm = un, rn, sn, nn
    return (u, norm) if norm <= tol else (None, norm)


def _to_scaled(A, u):
    v = np.array(u, dtype=float)
    v[:-1] /= A
    v[-1] = math.log(v[-1])
    return v


def _from_scaled(A, v):
    u = np.array(v, dtype=float)
    u[:-1] *= A
    u[-1] = math.exp(u[-1])
    return u


def solve_numeric(p: Potential, N: int, A_grid: Sequence[float], *, odd: Optional[bool] = None,
                  tol: float = 1e-12, max_ratio: float = 1.25, start: float = 0.02) -> List[HbmSolution]:
    """Harmonic balance solutions along an increasing amplitude grid.

    Newton's method with the exact Jacobian, warm-started by secant
    extrapolation in (log A, a/A, log omega).  Steps that fail are halved up
    to ten times before a :class:`ConvergenceError` reports the last good A.
    """
    if N < 1 or N > 8:
        raise DomainError("N must lie in 1..8")
    grid = [float(a) for a in A_grid]
    if not grid or any(a <= 0 for a in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("A_grid must be positive and strictly increasing")
    system = build_system(p, N, odd)
    cs = _Compiled(system)
    n = len(cs.unknowns)

    # initial point: harmonic oscillator limit
    A0 = min(start, grid[0])
    guess = np.zeros(n)
    guess[-1] = 1.0
    u, _ = _newton(cs, A0, guess, tol)
    if u is None:
        raise ConvergenceError(f"Newton failed at the starting amplitude {A0}", last_good=None)
    hist = [(math.log(A0), _to_scaled(A0, u))]
    cur_A = A0
    out = []
    for target in grid:
        while cur_A < target:
            step = min(math.log(target) - math.log(cur_A), math.log(max_ratio))
            for _ in range(11):
                s_new = math.log(cur_A) + step
                A_new = target if abs(math.exp(s_new) - target) <= 1e-14 * target else math.exp(s_new)
                if len(hist) >= 2:
                    (s0, v0), (s1, v1) = hist[-2], hist[-1]
                    pred = v1 + (v1 - v0) * (s_new - s1) / (s1 - s0)
                else:
                    pred = hist[-1][1]
                u_new, _ = _newton(cs, A_new, _from_scaled(A_new, pred), tol)
                if u_new is not None and u_new[-1] > 0:
                    break
                step /= 2
            else:
                raise ConvergenceError(f"continuation lost the branch after A={cur_A:.17g}", last_good=cur_A)
            cur_A = A_new
            hist = hist[-1:] + [(math.log(cur_A), _to_scaled(cur_A, u_new))]
            u = u_new
        if cur_A == target or abs(cur_A - target) <= 1e-14 * target:
            values = {name: float(u[i]) for i, name in enumerate(system.unknowns)}
            out.append(HbmSolution(N, target, float(u[-1]), system.ansatz(target, values)))
    return out


# ------------------------------------------------------------- exact series
def _series_eval(poly: MPoly, series: Dict[str, List[Fraction]], order: int) -> List[Fraction]:
    """Evaluate ``poly`` with each variable replaced by a truncated power series."""
    from .series import ps_mul

    names = poly.vars
    cache: Dict[Tuple[int, int], List[Fraction]] = {}

    def pw(i, k):
        key = (i, k)
        if key not in cache:
            if k == 1:
                cache[key] = series[names[i]]
            else:
                h = k // 2
                sq = ps_mul(pw(i, h), pw(i, h), order)
                cache[key] = ps_mul(sq, pw(i, 1), order) if k % 2 else sq
        return cache[key]

    total = [Fraction(0)] * (order + 1)
    for e, c in poly.terms.items():
        term = [Fraction(0)] * (order + 1)
        term[0] = Fraction(c)
        for i, k in enumerate(e):
            if k:
                term = ps_mul(term, pw(i, k), order)
        for j in range(order + 1):
            total[j] += term[j]
    return total


def _solve_linear(M: List[List[Fraction]], b: List[Fraction]) -> List[Fraction]:
    n = len(b)
    M = [row[:] + [b[i]] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col]), None)
        if piv is None:
            raise ConsistencyError("singular linearisation at A = 0")
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col]:
                f = M[r][col] / M[col][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]


def hbm_series(p: Potential, N: int, order: int, odd: Optional[bool] = None) -> Series:
    """Exact Taylor series of T_N(A) at A = 0.

    With a_k = A alpha_k the balance equations divided by A are regular at
    A = 0 (alpha_1 = 1, omega^2 = 1), so the coefficients of (alpha, omega^2)
    follow order by order from one fixed rational linear system.
    """
    if isinstance(p, RationalFamily):
        raise UnsupportedError("exact HBM series need a polynomial force with F''(0) = 1")
    if odd is None:
        odd = is_odd_force(p)
    ks, vars, gens, Fn = _raw_projections(p, N, odd)
    others = [k for k in ks if k != 1]
    # x = A (alpha_1 cos + ...), alpha_1 = 1 - sum alpha_j; W = w^2
    A = gens["A"]
    sub = {f"a{k}": A * gens[f"a{k}"] for k in others}
    sub["a1"] = A * (1 - sum((gens[f"a{k}"] for k in others), MPoly.const(vars, 0)))
    eqs = []
    for k in ks:
        e = project(Fn, k)
        if e:
            eqs.append(e.subs(sub).exact_div(A).halve_exponent("w"))
    unknowns = [f"a{k}" for k in others] + ["w"]
    if len(eqs) != len(unknowns):
        raise ConsistencyError("equation count does not match the unknowns")
    series = {u: [Fraction(0)] * (order + 1) for u in unknowns}
    series["w"][0] = Fraction(1)
    series["A"] = [Fraction(0)] * (order + 1)
    if order >= 1:
        series["A"][1] = Fraction(1)
    base = {v: (Fraction(1) if v == "w" else Fraction(0)) for v in vars}
    J0 = [[Fraction(e.diff(u).evaluate(base)) for u in unknowns] for e in eqs]
    for e in eqs:
        if e.evaluate(base) != 0:
            raise ConsistencyError("A = 0 is not a solution of the scaled system")
    for n in range(1, order + 1):
        r = [_series_eval(e, series, order)[n] for e in eqs]
        delta = _solve_linear(J0, [-x for x in r])
        for u, d in zip(unknowns, delta):
            series[u][n] = d
    for e in eqs:
        if any(_series_eval(e, series, order)):
            raise ConsistencyError("series does not annihilate the system")
    W = series["w"][:]
    W[0] = Fraction(0)
    return Series(tuple(period_from_omega_squared(W, order)), order)
