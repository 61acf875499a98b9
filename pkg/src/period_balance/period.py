"""Exact period function T(A): quadrature, elliptic closed form and Taylor series."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .errors import AnnulusError, ConsistencyError, ConvergenceError, DomainError, UnsupportedError
from .potentials import GeneralPoly, PolyFamily, Potential, Quintic, RationalFamily, inverse_branch
from .series import Series, period_from_omega_squared, ps_mul
from .trig import TrigPoly, cos_power

SQRT2 = math.sqrt(2.0)


# ------------------------------------------------------------ elliptic K
def _is_mp(x) -> bool:
    return isinstance(x, (mpmath.mpf, mpmath.mpc))


def agm(a, b):
    """Arithmetic-geometric mean of two positive numbers (float or mpf)."""
    if _is_mp(a) or _is_mp(b):
        a, b = mpmath.mpf(a), mpmath.mpf(b)
        sqrt, eps = mpmath.sqrt, mpmath.mpf(2) ** (-mpmath.mp.prec + 2)
    else:
        a, b = float(a), float(b)
        sqrt, eps = math.sqrt, 4e-16
    for _ in range(200):
        if abs(a - b) <= eps * abs(a):
            return (a + b) / 2
        a, b = (a + b) / 2, sqrt(a * b)
    raise ConvergenceError("AGM did not converge")


def elliptic_K(kappa):
    """K(kappa) = int_0^1 dz / sqrt((1 - z^2)(1 - kappa z^2)) for kappa < 1.

    ``kappa`` is the parameter (it multiplies z^2), so negative values are
    allowed.  Accepts floats or mpmath numbers.
    """
    if kappa >= 1:
        raise DomainError("elliptic_K needs kappa < 1")
    if _is_mp(kappa):
        return mpmath.pi / (2 * agm(mpmath.mpf(1), mpmath.sqrt(1 - kappa)))
    return math.pi / (2 * agm(1.0, math.sqrt(1.0 - kappa)))


def elliptic_K_series(kappa: float, terms: int) -> float:
    """Partial sum ``pi/2 * sum_{n<terms} ((2n-1)!!/(2n)!!)^2 kappa^n``."""
    total = 0.0
    c = 1.0
    for n in range(terms):
        if n:
            c *= ((2 * n - 1) / (2 * n)) ** 2
        total += c * kappa ** n
    return math.pi / 2 * total


def elliptic_K_series_bounds(kappa: float, terms: int) -> Tuple[float, float]:
    """Rigorous bracket of K(kappa) from the binomial series, |kappa| < 1."""
    if not -1 < kappa < 1:
        raise DomainError("series bracket needs |kappa| < 1")
    s_n = elliptic_K_series(kappa, terms)
    s_n1 = elliptic_K_series(kappa, terms + 1)
    if kappa >= 0:
        c = 1.0
        for n in range(1, terms + 1):
            c *= ((2 * n - 1) / (2 * n)) ** 2
        # coefficients decrease, so the tail is below the geometric majorant
        tail = math.pi / 2 * c * kappa ** terms / (1 - kappa)
        return s_n, s_n + tail
    # alternating with decreasing magnitude: consecutive partial sums bracket
    return min(s_n, s_n1), max(s_n, s_n1)


def duffing_period(A):
    """Exact period of x'' + x + x^3 = 0 through (A, 0); float or mpmath input."""
    if A < 0:
        raise DomainError("amplitude must be positive")
    if A == 0:
        return 2 * (mpmath.pi if _is_mp(A) else math.pi)
    if _is_mp(A):
        A2 = A * A
        return 4 / mpmath.sqrt(1 + A2 / 2) * elliptic_K(-A2 / (2 + A2))
    A2 = float(A) ** 2
    return 4.0 / math.sqrt(1.0 + 0.5 * A2) * elliptic_K(-A2 / (2.0 + A2))


# --------------------------------------------------------------- quadrature
def _tanh_sinh(f_of_gaps, tol: float, max_level: int = 12) -> float:
    """Integrate over [-1, 1] with f given the gaps (1+u, 1-u) to the endpoints."""
    h = 1.0
    prev = None
    for level in range(max_level):
        k = np.arange(-int(6.0 / h), int(6.0 / h) + 1)
        t = k * h
        z = 0.5 * math.pi * np.sinh(t)
        one_minus = 2.0 / (1.0 + np.exp(2.0 * z))
        one_plus = 2.0 / (1.0 + np.exp(-2.0 * z))
        w = 0.5 * math.pi * np.cosh(t) / np.cosh(z) ** 2
        ok = (one_minus > 0) & (one_plus > 0) & (w > 1e-300)
        val = h * float(np.sum(w[ok] * f_of_gaps(one_plus[ok], one_minus[ok])))
        if prev is not None and abs(val - prev) <= tol:
            return val
        prev = val
        h /= 2
    raise ConvergenceError("tanh-sinh refinement stalled")


def _annulus_endpoints(p: Potential, A: float) -> Tuple[float, float, float]:
    if not A > 0:
        raise DomainError("amplitude must be positive")
    lo, hi = p.domain
    if A >= hi:
        raise AnnulusError(f"A={A} outside the domain of {p.spec}")
    xs = np.linspace(A / 256, A, 256)
    if np.any(p.dF(xs) <= 0):
        raise AnnulusError(f"F' vanishes on (0, A]; A={A} is outside the period annulus")
    h = float(p.F(A))
    if isinstance(p, RationalFamily) and h >= p.energy_sup:
        raise AnnulusError(f"A={A} outside the period annulus")
    if p.is_even:
        xm = -A
    else:
        try:
            xm = inverse_branch(p, h, -1)
        except DomainError as exc:
            raise AnnulusError(f"no turning point on x<0 for A={A}: {exc}") from exc
        xs = np.linspace(xm, xm / 256, 256)
        if np.any(p.dF(xs) >= 0):
            raise AnnulusError(f"F' vanishes on [x-, 0); A={A} is outside the period annulus")
    return xm, A, h


def _second_difference(p: Potential, xm: float, xp: float, x):
    """(h - F(x)) / ((xp - x)(x - xm)) computed from the nearer endpoint."""
    x = np.asarray(x, dtype=float)
    mid = 0.5 * (xm + xp)
    right = x >= mid
    out = np.empty_like(x)
    if np.any(right):
        xr = x[right]
        out[right] = p.drop(xp, xr) / (xr - xm)
    if np.any(~right):
        xl = x[~right]
        out[~right] = -p.drop(xm, xl) / (xp - xl)
    return out


def period_quadrature(p: Potential, A: float, tol: float = 1e-12, *, method: str = "auto") -> float:
    """Period of the orbit through (A, 0) with absolute error about ``tol``.

    The substitution x = x- + (x+ - x-) sin^2(phi/2) turns the integral
    sqrt(2) * int dx / sqrt(h - F(x)) into sqrt(2) * int_0^pi dphi / sqrt(E),
    where E is the second divided difference of F through the turning points.
    The integrand is smooth, even and periodic, so the trapezoid rule converges
    geometrically; tanh-sinh on the original integral is the fallback.
    """
    if not 1e-15 < tol < 1e-3:
        raise DomainError("tol must lie in (1e-15, 1e-3)")
    xm, xp, _ = _annulus_endpoints(p, A)
    L = xp - xm
    if method in ("auto", "trig"):
        n = 16
        prev = None
        while n <= 1 << 16:
            phi = np.linspace(0.0, math.pi, n + 1)
            x = xm + L * 0.5 * (1.0 - np.cos(phi))
            g = 1.0 / np.sqrt(_second_difference(p, xm, xp, x))
            val = SQRT2 * (math.pi / n) * (g.sum() - 0.5 * (g[0] + g[-1]))
            if prev is not None and abs(val - prev) <= 0.1 * tol:
                return float(val)
            prev = val
            n *= 2
        if method == "trig":
            raise ConvergenceError("trapezoid refinement stalled")

    def integrand(one_plus, one_minus):
        d_left = 0.5 * L * one_plus
        d_right = 0.5 * L * one_minus
        x = xm + d_left
        x = np.where(one_plus <= one_minus, x, xp - d_right)
        E = _second_difference(p, xm, xp, x)
        return 0.5 * L / np.sqrt(E * d_left * d_right)

    return SQRT2 * _tanh_sinh(integrand, 0.1 * tol)


def period(p: Potential, A: float, tol: float = 1e-12) -> float:
    """Exact period, via the elliptic closed form for the Duffing oscillator."""
    if not 1e-15 < tol < 1e-3:
        raise DomainError("tol must lie in (1e-15, 1e-3)")
    if isinstance(p, PolyFamily) and p.m == 2:
        return duffing_period(A)
    return period_quadrature(p, A, tol)


# ---------------------------------------------------------------- series
def _force_coeffs_exact(p: Potential):
    if not isinstance(p, (GeneralPoly, Quintic, PolyFamily)):
        raise UnsupportedError("exact series need a polynomial potential with rational coefficients")
    coeffs = p.force_coeffs
    if coeffs.get(1) != 1:
        raise UnsupportedError("linear coefficient of F' must be 1")
    return {i: c for i, c in coeffs.items() if i >= 2}


def lindstedt_series(p: Potential, order: int) -> Series:
    """Exact Taylor series of T(A) at A = 0 by the Lindstedt-Poincare method.

    Solves w^2 x'' + F'(x) = 0 with x = sum A^n x_n(tau), x(0) = A, x'(0) = 0,
    w^2 = 1 + sum A^n w_n, removing the resonant cos(tau) term order by order.
    """
    if order < 0 or order > 12:
        raise DomainError("order must lie in 0..12")
    nonlin = _force_coeffs_exact(p)
    xs: List[Optional[TrigPoly]] = [None, TrigPoly.cos(1, Fraction(1))]
    w: List[Fraction] = [Fraction(0)]  # w[0] unused (w^2 = 1 at A = 0)
    powers = {}

    def pw(i: int, n: int) -> TrigPoly:
        # [A^n] x^i
        key = (i, n)
        if key in powers:
            return powers[key]
        if i == 1:
            val = xs[n] if n < len(xs) else TrigPoly()
        elif n < i:
            val = TrigPoly()
        else:
            val = TrigPoly()
            for j in range(1, n - i + 2):
                val = val + xs[j] * pw(i - 1, n - j)
        powers[key] = val
        return val

    for n in range(2, order + 2):
        known = TrigPoly()
        for j in range(1, n - 1):
            if w[j]:
                known = known - xs[n - j].derivative(2).scale(w[j])
        for i, c in nonlin.items():
            if i <= n:
                known = known - pw(i, n).scale(c)
        if known.b:
            raise ConsistencyError("sine terms in an even solution")
        wn = -known.cos_coeff(1, Fraction(0))
        w.append(wn)
        rhs = known + TrigPoly.cos(1, wn)
        a = {}
        for k, c in rhs.a.items():
            if k == 1:
                if c:
                    raise ConsistencyError("secular term survived")
                continue
            a[k] = c / (1 - k * k)
        a[1] = -sum(a.values(), Fraction(0))
        xs.append(TrigPoly(a))
    coeffs = period_from_omega_squared([Fraction(0)] + w[1:order + 1], order)
    return Series(tuple(coeffs), order)


def cherkas_terms(m: int, terms: int = 2):
    """Functions u_k and integrals S_k of the Abel-equation expansion.

    Returns ``(u, S)`` with ``u[k]`` a :class:`TrigPoly` in theta and ``S[k]``
    the integral over [0, 2 pi] of cos^(2m) u_k, as a rational multiple of pi.
    """
    if int(m) != m or m < 2:
        raise DomainError("m must be an integer >= 2")
    if terms < 1:
        raise DomainError("terms must be >= 1")
    s = TrigPoly.sin(1, Fraction(1))
    P = s * cos_power(4 * m - 1) * (2 - 2 * m)
    Q = s * cos_power(2 * m - 1) * (2 * (2 * m - 1))
    u = {1: TrigPoly.const(Fraction(1))}
    # r = sum u_i rho^i solves r' = P r^3 + Q r^2
    for k in range(2, terms + 1):
        sq = TrigPoly()
        for i in range(1, k):
            sq = sq + u[i] * u[k - i]
        cube = TrigPoly()
        for i in range(1, k - 1):
            for j in range(1, k - i):
                cube = cube + u[i] * u[j] * u[k - i - j]
        u[k] = (Q * sq + P * cube).integral()
    c2m = cos_power(2 * m)
    S = {k: 2 * (c2m * u[k]).mean(Fraction(0)) for k in u}
    return u, S


def cherkas_series(m: int, terms: int = 2) -> Series:
    """T(A) for PolyFamily(m) from the Cherkas/Abel expansion.

    T = 2 pi - sum_k S_k rho^k with rho = A^(2m-2) / (1 + A^(2m-2)); the result
    is exact through order (2m-2)(terms+1) - 1.
    """
    _, S = cherkas_terms(m, terms)
    step = 2 * m - 2
    # rho as a series in s = A^step
    rho = [Fraction(0)] + [Fraction((-1) ** (j + 1)) for j in range(1, terms + 1)]
    total = [Fraction(0)] * (terms + 1)
    total[0] = Fraction(2)
    rk = [Fraction(1)] + [Fraction(0)] * terms
    for k in range(1, terms + 1):
        rk = ps_mul(rk, rho, terms)
        for j in range(terms + 1):
            total[j] -= S[k] * rk[j]
    order = step * (terms + 1) - 1
    coeffs = [Fraction(0)] * (order + 1)
    for j, c in enumerate(total):
        coeffs[j * step] = c
    return Series(tuple(coeffs), order)


# ----------------------------------------------------------- critical periods
def _centered(func: Callable[[float], float], A: float) -> float:
    h = _step(A)
    return (func(A + h) - func(A - h)) / (2 * h)


def _step(A: float) -> float:
    return max(1e-5, 1e-4 * A)


def critical_points(func: Callable[[float], float], a_range: Tuple[float, float], tol: float = 1e-8,
                    derivative: Callable[[float], float] | None = None,
                    batch: Callable[[Sequence[float]], Sequence[float]] | None = None,
                    points: int = 100, max_points: int = 1600) -> List[Tuple[float, str]]:
    """Zeros of T'(A) on an open interval, classified as ``max`` or ``min``.

    Sign changes are sought on a uniform grid that is doubled until the count
    is stable; each bracket is then bisected down to ``tol``.  ``batch`` maps
    an increasing amplitude list to values in one sweep, which lets
    continuation-based solvers scan the grid cheaply.
    """
    lo, hi = a_range
    if not 0 <= lo < hi:
        raise DomainError("bad amplitude range")
    d = derivative or (lambda A: _centered(func, A))
    margin = _step(hi) * 1.5

    def derivs(grid):
        if derivative is not None or batch is None:
            return [d(float(a)) for a in grid]
        h = np.array([_step(a) for a in grid])
        pts = np.ravel(np.column_stack([grid - h, grid + h]))
        if np.any(np.diff(pts) <= 0):
            return [d(float(a)) for a in grid]
        v = np.asarray(batch(list(pts)), dtype=float).reshape(-1, 2)
        return list((v[:, 1] - v[:, 0]) / (2 * h))

    def brackets(n):
        grid = np.linspace(lo + margin, hi - margin, n)
        vals = derivs(grid)
        out = []
        for i in range(n - 1):
            if vals[i] == 0:
                continue
            if vals[i] * vals[i + 1] < 0 or (vals[i + 1] == 0 and i + 2 < n and vals[i] * vals[i + 2] < 0):
                out.append((float(grid[i]), float(grid[i + 1]), vals[i]))
        return out

    n = points
    found = brackets(n)
    while n * 2 <= max_points:
        n *= 2
        again = brackets(n)
        if len(again) == len(found):
            found = again
            break
        found = again
    result = []
    for a, b, da in found:
        while b - a > tol:
            mid = 0.5 * (a + b)
            dm = d(mid)
            if dm == 0:
                a = b = mid
                break
            if (dm > 0) == (da > 0):
                a = mid
            else:
                b = mid
        result.append((0.5 * (a + b), "max" if da > 0 else "min"))
    return result


def critical_periods(p: Potential, a_range: Tuple[float, float], tol: float = 1e-8,
                     quad_tol: float = 1e-13) -> List[Tuple[float, str]]:
    """Critical periods of the exact period function on ``a_range``.

    T'(A) is a centered difference with step max(1e-5, 1e-4 A).
    """
    return critical_points(lambda A: period(p, A, quad_tol), a_range, tol)
