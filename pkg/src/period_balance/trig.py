"""Truncated Fourier polynomials in a single angle with exact linearization.

A :class:`TrigPoly` stores ``a[k]`` (coefficient of ``cos(k*t)``, ``k >= 0``)
and ``b[k]`` (coefficient of ``sin(k*t)``, ``k >= 1``).  ``a[0]`` is the mean
value itself, not half of it.  Coefficients can be any ring elements that
support ``+``, ``-``, ``*`` and multiplication by ``Fraction``: rationals,
floats or :class:`~period_balance.polyalg.MPoly`.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Dict, Mapping

from .errors import ConsistencyError

_HALF = Fraction(1, 2)


def _nonzero(c) -> bool:
    return bool(c)


class TrigPoly:
    """Immutable trigonometric polynomial ``sum a_k cos(kt) + b_k sin(kt)``."""

    __slots__ = ("a", "b")

    def __init__(self, a: Mapping[int, object] | None = None, b: Mapping[int, object] | None = None):
        self.a: Dict[int, object] = {k: c for k, c in (a or {}).items() if _nonzero(c)}
        self.b: Dict[int, object] = {k: c for k, c in (b or {}).items() if _nonzero(c)}
        if any(k < 0 for k in self.a) or any(k < 1 for k in self.b):
            raise ValueError("harmonic indices must be a: k>=0, b: k>=1")

    @classmethod
    def cos(cls, k: int = 1, coeff=1) -> "TrigPoly":
        return cls({k: coeff})

    @classmethod
    def sin(cls, k: int = 1, coeff=1) -> "TrigPoly":
        return cls(b={k: coeff})

    @classmethod
    def const(cls, c) -> "TrigPoly":
        return cls({0: c})

    @property
    def degree(self) -> int:
        return max(list(self.a) + list(self.b) + [0])

    def cos_coeff(self, k: int, zero=0):
        return self.a.get(k, zero)

    def sin_coeff(self, k: int, zero=0):
        return self.b.get(k, zero)

    def __repr__(self):
        return f"TrigPoly(a={self.a!r}, b={self.b!r})"

    def __eq__(self, other):
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self.a == other.a and self.b == other.b

    # -------------------------------------------------------------- arithmetic
    @staticmethod
    def _acc(d, k, c):
        if k in d:
            d[k] = d[k] + c
        else:
            d[k] = c

    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.const(other)
        a = dict(self.a)
        b = dict(self.b)
        for k, c in other.a.items():
            self._acc(a, k, c)
        for k, c in other.b.items():
            self._acc(b, k, c)
        return TrigPoly(a, b)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly({k: -c for k, c in self.a.items()}, {k: -c for k, c in self.b.items()})

    def __sub__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> "TrigPoly":
        return TrigPoly({k: c * s for k, c in self.a.items()}, {k: c * s for k, c in self.b.items()})

    def __mul__(self, other):
        if not isinstance(other, TrigPoly):
            return self.scale(other)
        a: Dict[int, object] = {}
        b: Dict[int, object] = {}
        acc = self._acc
        for i, ci in self.a.items():
            for j, cj in other.a.items():
                p = ci * cj
                if i == 0 or j == 0:
                    acc(a, i + j, p)
                else:
                    h = p * _HALF
                    acc(a, i + j, h)
                    acc(a, abs(i - j), h)
            for j, cj in other.b.items():
                # cos(i) sin(j) = (sin(j+i) + sin(j-i)) / 2
                p = ci * cj
                if i == 0:
                    acc(b, j, p)
                    continue
                h = p * _HALF
                acc(b, i + j, h)
                if j > i:
                    acc(b, j - i, h)
                elif j < i:
                    acc(b, i - j, -h)
        for i, ci in self.b.items():
            for j, cj in other.a.items():
                p = ci * cj
                if j == 0:
                    acc(b, i, p)
                    continue
                h = p * _HALF
                acc(b, i + j, h)
                if i > j:
                    acc(b, i - j, h)
                elif i < j:
                    acc(b, j - i, -h)
            for j, cj in other.b.items():
                # sin(i) sin(j) = (cos(i-j) - cos(i+j)) / 2
                h = ci * cj * _HALF
                acc(a, abs(i - j), h)
                acc(a, i + j, -h)
        return TrigPoly(a, b)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "TrigPoly":
        if n < 0:
            raise ValueError("negative power")
        result = TrigPoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # ---------------------------------------------------------------- calculus
    def derivative(self, order: int = 1, freq=1) -> "TrigPoly":
        """d^order/dt^order when the angle is ``freq * t``."""
        out = self
        for _ in range(order):
            a = {k: c * (k * freq) for k, c in out.b.items()}
            b = {k: -c * (k * freq) for k, c in out.a.items() if k}
            out = TrigPoly(a, b)
        return out

    def integral(self) -> "TrigPoly":
        """Antiderivative vanishing at 0; the mean must be zero."""
        if 0 in self.a:
            raise ConsistencyError("integrand has a nonzero mean (secular term)")
        a: Dict[int, object] = {}
        b: Dict[int, object] = {}
        for k, c in self.a.items():
            b[k] = c * Fraction(1, k)
        for k, c in self.b.items():
            # int_0^t sin(ks) ds = (1 - cos(kt)) / k
            c = c * Fraction(1, k)
            self._acc(a, 0, c)
            self._acc(a, k, -c)
        return TrigPoly(a, b)

    def mean(self, zero=0):
        """Average over one period, i.e. ``(1/2pi) * integral over [0, 2pi]``."""
        return self.a.get(0, zero)

    def at_zero(self, zero=0):
        total = zero
        for c in self.a.values():
            total = total + c
        return total

    def __call__(self, t):
        import math

        return (sum(c * math.cos(k * t) for k, c in self.a.items())
                + sum(c * math.sin(k * t) for k, c in self.b.items()))

    def map(self, fn) -> "TrigPoly":
        return TrigPoly({k: fn(c) for k, c in self.a.items()}, {k: fn(c) for k, c in self.b.items()})


def trig_reduce(*factors, powers=None) -> TrigPoly:
    """Linearize a product of trigonometric polynomials (optionally with powers).

    ``trig_reduce(p, q, powers=(3, 1))`` returns the Fourier form of ``p**3 * q``.
    """
    if powers is None:
        powers = (1,) * len(factors)
    if len(powers) != len(factors):
        raise ValueError("one power per factor")
    out = TrigPoly.const(1)
    for f, n in zip(factors, powers):
        out = out * (f ** n)
    return out


def cos_power(n: int) -> TrigPoly:
    """``cos(t)**n`` in closed form via the binomial theorem."""
    a: Dict[int, Fraction] = {}
    scale = Fraction(1, 2 ** n)
    for k in range(n + 1):
        h = abs(n - 2 * k)
        a[h] = a.get(h, 0) + comb(n, k) * scale
    return TrigPoly(a)
