"""Potentials F(x) of planar systems x' = -y, y' = F'(x) and their geometry.

Every potential has a nondegenerate minimum at the origin.  The built-in
families are

``PolyFamily(m)``      F = x^2/2 + x^(2m)/(2m)
``RationalFamily(k, m)``  F' = x / (x^2 + k^2)^m
``Quintic(k)``         F = x^2/2 + k x^4/4 + x^6/6
``GeneralPoly(coeffs)``   F' = x + sum k_i x^i  (exact rational k_i)
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, EnergyRangeError, ParseError, UnsupportedError
from .polyalg import sturm_count

_REAL_LINE = (-math.inf, math.inf)


@dataclass(frozen=True)
class AsymptoticTerm:
    """Dominant term ``M * x**a`` of a function at ``x -> at``."""

    M: float
    a: float
    at: str = "infinity"

    def __post_init__(self):
        if self.at not in ("zero", "infinity"):
            raise ValueError("at must be 'zero' or 'infinity'")

    def __call__(self, x):
        return self.M * x ** self.a

    def to_json(self):
        return {"M": self.M, "a": self.a, "at": self.at}


class Potential:
    """Base class: subclasses provide F, F', F'' and a stable divided difference."""

    domain: Tuple[float, float] = _REAL_LINE
    spec: str = ""

    # subclasses override -------------------------------------------------
    def F(self, x):
        raise NotImplementedError

    def dF(self, x):
        raise NotImplementedError

    def d2F(self, x):
        raise NotImplementedError

    def drop(self, a, x):
        """``(F(a) - F(x)) / (a - x)`` evaluated without cancellation."""
        raise NotImplementedError

    @property
    def is_even(self) -> bool:
        return False

    @property
    def force_coeffs(self) -> Optional[Dict[int, Fraction]]:
        """Exact coefficients of F'(x) for polynomial kinds, else ``None``."""
        return None

    # shared ---------------------------------------------------------------
    @property
    def is_polynomial(self) -> bool:
        return self.force_coeffs is not None

    def check_domain(self, x):
        lo, hi = self.domain
        xs = np.asarray(x, dtype=float)
        if np.any(xs <= lo) or np.any(xs >= hi):
            raise DomainError(f"x outside the domain ({lo}, {hi}) of {self.spec}")

    def __str__(self):
        return self.spec


def _poly_drop(coeffs: Mapping[int, Fraction], a, x):
    """Divided difference of F where F' = sum c_i x^i, i.e. F = sum c_i x^(i+1)/(i+1)."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    total = np.zeros(np.broadcast(a, x).shape)
    for i, c in coeffs.items():
        j = i + 1
        # (a^j - x^j)/(a - x) = sum_{r=0}^{j-1} a^r x^(j-1-r)
        h = np.zeros_like(total)
        ap = np.ones_like(total)
        for r in range(j):
            h = h + ap * x ** (j - 1 - r)
            ap = ap * a
        total = total + float(c) / j * h
    return total


class _PolyPotential(Potential):
    def F(self, x):
        x = np.asarray(x, dtype=float)
        return sum(float(c) / (i + 1) * x ** (i + 1) for i, c in self.force_coeffs.items())

    def dF(self, x):
        x = np.asarray(x, dtype=float)
        return sum(float(c) * x ** i for i, c in self.force_coeffs.items())

    def d2F(self, x):
        x = np.asarray(x, dtype=float)
        return sum(float(c) * i * x ** (i - 1) for i, c in self.force_coeffs.items())

    def drop(self, a, x):
        return _poly_drop(self.force_coeffs, a, x)

    @property
    def is_even(self):
        return all(i % 2 == 1 for i in self.force_coeffs)


@dataclass(frozen=True)
class PolyFamily(_PolyPotential):
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise DomainError("PolyFamily needs an integer m >= 2")

    @property
    def spec(self):
        return f"poly:m={self.m}"

    @property
    def force_coeffs(self):
        return {1: Fraction(1), 2 * self.m - 1: Fraction(1)}


@dataclass(frozen=True)
class Quintic(_PolyPotential):
    k: Fraction

    def __post_init__(self):
        object.__setattr__(self, "k", Fraction(self.k))

    @property
    def spec(self):
        return f"quintic:k={_fmt(self.k)}"

    @property
    def force_coeffs(self):
        return {1: Fraction(1), 3: self.k, 5: Fraction(1)}


@dataclass(frozen=True)
class GeneralPoly(_PolyPotential):
    """F'(x) = x + sum k_i x^i with exact rational ``k_i`` (``i >= 2``)."""

    coeffs: Tuple[Tuple[int, Fraction], ...]

    def __post_init__(self):
        items = dict(self.coeffs) if not isinstance(self.coeffs, Mapping) else dict(self.coeffs)
        clean = []
        for i, c in sorted(items.items()):
            if int(i) != i or i < 2:
                raise DomainError("GeneralPoly indices must be integers >= 2")
            c = Fraction(c)
            if c:
                clean.append((int(i), c))
        object.__setattr__(self, "coeffs", tuple(clean))

    @property
    def spec(self):
        if not self.coeffs:
            return "gen:"
        return "gen:" + ",".join(f"{i}={_fmt(c)}" for i, c in self.coeffs)

    @property
    def force_coeffs(self):
        out = {1: Fraction(1)}
        out.update(dict(self.coeffs))
        return out


@dataclass(frozen=True)
class RationalFamily(Potential):
    """F'(x) = x / (x^2 + k^2)^m, the normal form of x'' (x^2+k^2)^m + x = 0."""

    k: float
    m: float
    log_switch: float = field(default=1e-12, repr=False, compare=False)

    def __post_init__(self):
        if self.k == 0:
            raise DomainError("RationalFamily needs k != 0")
        if self.m < 1:
            raise DomainError("RationalFamily needs m >= 1")

    @property
    def spec(self):
        return f"rat:k={_fmt(self.k)},m={_fmt(self.m)}"

    @property
    def _log_case(self):
        return abs(self.m - 1) < self.log_switch

    @property
    def is_even(self):
        return True

    @property
    def is_integer_m(self):
        return float(self.m).is_integer()

    def F(self, x):
        x = np.asarray(x, dtype=float)
        k2 = float(self.k) ** 2
        if self._log_case:
            return 0.5 * np.log1p(x * x / k2)
        m = float(self.m)
        # (k^2)^(1-m) - (x^2+k^2)^(1-m), written to keep accuracy near 0
        u = (1 - m) * np.log1p(x * x / k2)
        return -(k2 ** (1 - m)) * np.expm1(u) / (2 * (m - 1))

    def dF(self, x):
        x = np.asarray(x, dtype=float)
        return x / (x * x + float(self.k) ** 2) ** float(self.m)

    def d2F(self, x):
        x = np.asarray(x, dtype=float)
        k2 = float(self.k) ** 2
        m = float(self.m)
        return (k2 + (1 - 2 * m) * x * x) / (x * x + k2) ** (m + 1)

    def drop(self, a, x):
        a = np.asarray(a, dtype=float)
        x = np.asarray(x, dtype=float)
        k2 = float(self.k) ** 2
        base = x * x + k2
        s = (a - x) * (a + x) / base
        slope = (a + x) / base  # s / (a - x)
        with np.errstate(invalid="ignore", divide="ignore"):
            if self._log_case:
                ratio = np.where(s == 0, 1.0, np.log1p(s) / np.where(s == 0, 1.0, s))
                return 0.5 * ratio * slope
            m = float(self.m)
            g = np.expm1((1 - m) * np.log1p(s))
            ratio = np.where(s == 0, 1 - m, g / np.where(s == 0, 1.0, s))
        return -base ** (1 - m) * ratio * slope / (2 * (m - 1))

    @property
    def energy_sup(self) -> float:
        """Supremum of F on the real line (the energy bound of the annulus)."""
        if self._log_case:
            return math.inf
        m = float(self.m)
        return float(self.k) ** (2 * (1 - m)) / (2 * (m - 1))


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def duffing() -> PolyFamily:
    return PolyFamily(2)


# ------------------------------------------------------------------- parsing
_SPEC = re.compile(r"^\s*(poly|rat|quintic|gen)\s*:\s*(.*?)\s*$")


def _num(text: str, exact: bool):
    try:
        v = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad number {text!r}") from exc
    return v if exact else float(v)


def parse_potential(text: str) -> Potential:
    """Parse ``poly:m=2``, ``rat:k=1,m=2``, ``quintic:k=-1`` or ``gen:2=1,3=-1/2``."""
    mt = _SPEC.match(text or "")
    if not mt:
        raise ParseError(f"unrecognised potential spec {text!r}")
    kind, body = mt.groups()
    pairs = []
    if body:
        for item in body.split(","):
            if "=" not in item:
                raise ParseError(f"expected key=value in {text!r}")
            key, val = item.split("=", 1)
            pairs.append((key.strip(), val.strip()))
    try:
        if kind == "gen":
            coeffs = {}
            for key, val in pairs:
                if not key.isdigit():
                    raise ParseError(f"gen: index must be an integer, got {key!r}")
                coeffs[int(key)] = _num(val, True)
            return GeneralPoly(tuple(coeffs.items()))
        kv = dict(pairs)
        if kind == "poly":
            m = _num(kv.pop("m"), True)
            if m.denominator != 1:
                raise ParseError("poly: m must be an integer")
            pot = PolyFamily(int(m))
        elif kind == "quintic":
            pot = Quintic(_num(kv.pop("k"), True))
        else:
            pot = RationalFamily(_num(kv.pop("k"), False), _num(kv.pop("m", "1"), False))
    except KeyError as exc:
        raise ParseError(f"missing parameter {exc.args[0]!r} in {text!r}") from exc
    except DomainError as exc:
        raise ParseError(str(exc)) from exc
    if kind != "gen" and kv:
        raise ParseError(f"unexpected parameters {sorted(kv)} in {text!r}")
    return pot


# ---------------------------------------------------------------- operations
def eval_potential(p: Potential, x, order: int = 0):
    """F(x), F'(x) or F''(x)."""
    p.check_domain(x)
    if order == 0:
        v = p.F(x)
    elif order == 1:
        v = p.dF(x)
    elif order == 2:
        v = p.d2F(x)
    else:
        raise ValueError("order must be 0, 1 or 2")
    return float(v) if np.ndim(v) == 0 else v


def is_global_center(p: Potential) -> bool:
    """Whether the origin is a global center (F' != 0 off 0 and F -> inf)."""
    if p.domain != _REAL_LINE:
        raise UnsupportedError("global-center test needs the whole real line as domain")
    if isinstance(p, RationalFamily):
        # F' has the sign of x; F is unbounded only in the logarithmic case
        return p._log_case
    coeffs = p.force_coeffs
    deg = max(coeffs)
    # F'(x)/x = 1 + sum c_i x^(i-1) must have no real root
    reduced = [Fraction(0)] * deg
    for i, c in coeffs.items():
        reduced[i - 1] += c
    if sturm_count(reduced) > 0:
        return False
    # F has degree deg+1: needs even degree and positive leading coefficient
    return (deg + 1) % 2 == 0 and coeffs[deg] > 0


class Monotonicity(enum.Enum):
    INCREASING = "Increasing"
    DECREASING = "Decreasing"
    INCONCLUSIVE = "Inconclusive"


def criterion_function(p: Potential, x):
    """G(x) = F'(x)^2 - 2 F(x) F''(x)."""
    x = np.asarray(x, dtype=float)
    return p.dF(x) ** 2 - 2 * p.F(x) * p.d2F(x)


def default_grid(p: Potential, points: int = 4001) -> np.ndarray:
    lo, hi = p.domain
    half = 10.0
    if math.isfinite(hi):
        half = min(half, hi)
    if math.isfinite(lo):
        half = min(half, -lo)
    s = np.linspace(-1.0, 1.0, points)
    return half * np.sign(s) * np.abs(s) ** 2  # denser near the origin


def monotonicity_criterion(p: Potential, grid=None, tol: float | None = None) -> Monotonicity:
    """Sampled sign test of G(x) = F'^2 - 2 F F'' (a numerical certificate).

    ``grid`` is an array of sample points, a ``(half_width, points)`` pair or
    ``None`` for the default symmetric grid on [-10, 10].
    """
    if grid is None:
        xs = default_grid(p)
    elif isinstance(grid, tuple) and len(grid) == 2:
        half, n = grid
        s = np.linspace(-1.0, 1.0, int(n))
        xs = float(half) * np.sign(s) * np.abs(s) ** 2
    else:
        xs = np.asarray(grid, dtype=float)
    if xs.size < 1000:
        raise DomainError("monotonicity grid needs at least 1000 points")
    G = criterion_function(p, xs)
    scale = float(np.max(np.abs(G)))
    if scale == 0:
        return Monotonicity.INCONCLUSIVE
    if tol is None:
        tol = 1e-12 * scale
    if np.all(G >= -tol) and np.any(G > tol):
        return Monotonicity.INCREASING
    if np.all(G <= tol) and np.any(G < -tol):
        return Monotonicity.DECREASING
    return Monotonicity.INCONCLUSIVE


def inverse_branch(p: Potential, h: float, side: int, rtol: float = 1e-14) -> float:
    """Solution of F(x) = h with ``sign(x) == side``, bracketed by doubling from 1."""
    if h <= 0:
        raise EnergyRangeError("energy must be positive")
    lo_dom, hi_dom = p.domain
    limit = hi_dom if side > 0 else -lo_dom

    def g(t):
        return float(p.F(side * t)) - h

    prev, x = 0.0, 1.0
    steps = 0
    while True:
        if x >= limit:
            x = prev + 0.5 * (limit - prev)
        if g(x) >= 0:
            break
        prev = x
        x = 2 * x
        steps += 1
        if steps > 1100 or x > 1e300:
            raise EnergyRangeError(f"F never reaches h={h} on side {side:+d}")
    root = brentq(g, prev, x, xtol=1e-300, rtol=max(rtol, 8.9e-16), maxiter=500)
    return side * root


def lf_length(p: Potential, h: float) -> float:
    """Length l_F(h) = F_+^{-1}(h) - F_-^{-1}(h) of the x-projection of {H = h}."""
    if isinstance(p, RationalFamily) and h >= p.energy_sup:
        raise EnergyRangeError(f"h={h} is above the period annulus (sup F = {p.energy_sup})")
    xp = inverse_branch(p, h, +1)
    if p.is_even:
        return 2 * xp
    return xp - inverse_branch(p, h, -1)
