"""Exact multivariate polynomials over the rationals.

Polynomials are sparse maps from exponent vectors to ``Fraction`` (or ``int``)
coefficients over a fixed, ordered tuple of variable names.  Two polynomials
can only be combined when they live in the same ring (same variable tuple);
use :meth:`MPoly.in_ring` to move between rings.

Determinants of polynomial matrices, and therefore resultants, are computed
with fraction-free Bareiss elimination.  The polynomial entries are packed into
single big integers by Kronecker substitution at ``X = 2**b``: evaluation is a
ring homomorphism, so the elimination runs on plain integers and the exact
polynomial determinant is recovered by unpacking balanced base-``2**b`` digits.
``b`` and the per-variable degree strides come from a priori bounds, so the
unpacking is exact rather than heuristic.
"""
from __future__ import annotations

import ast
import heapq
import math
from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np

from .errors import ConsistencyError, ParseError

try:  # GMP integers make the packed determinants much faster
    from gmpy2 import mpz as _bigint
except ImportError:  # pragma: no cover
    _bigint = int

Exponent = Tuple[int, ...]


def _norm(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


def _coerce(c):
    if isinstance(c, (int, Fraction)):
        return c
    if isinstance(c, Rational):
        return Fraction(c.numerator, c.denominator)
    if isinstance(c, float):
        return Fraction(c)
    if isinstance(c, str):
        return _norm(Fraction(c))
    raise TypeError(f"cannot use {type(c).__name__} as an exact coefficient")


def _coefficient_converter(point):
    for x in point:
        if isinstance(x, (int, Fraction)):
            continue
        if isinstance(x, (float, np.floating)):
            return float
        mod = type(x).__module__
        if mod.startswith("mpmath"):
            import mpmath

            return lambda c: mpmath.mpf(Fraction(c).numerator) / Fraction(c).denominator
        return lambda c: c
    return lambda c: c


class MPoly:
    """Immutable sparse polynomial with exact rational coefficients."""

    __slots__ = ("vars", "terms", "_hash")

    def __init__(self, vars: Sequence[str], terms: Mapping[Exponent, object] = ()):
        self.vars = tuple(vars)
        n = len(self.vars)
        clean = {}
        for e, c in dict(terms).items():
            if len(e) != n:
                raise ValueError(f"exponent {e} does not match variables {self.vars}")
            c = _norm(_coerce(c))
            if c:
                clean[tuple(e)] = c
        self.terms: Dict[Exponent, object] = clean
        self._hash = None

    @classmethod
    def _raw(cls, vars, terms):
        obj = cls.__new__(cls)
        obj.vars = vars
        obj.terms = terms
        obj._hash = None
        return obj

    @classmethod
    def const(cls, vars: Sequence[str], c) -> "MPoly":
        return cls(vars, {(0,) * len(tuple(vars)): c})

    @classmethod
    def gen(cls, vars: Sequence[str], name: str) -> "MPoly":
        vars = tuple(vars)
        e = [0] * len(vars)
        e[vars.index(name)] = 1
        return cls(vars, {tuple(e): 1})

    # ------------------------------------------------------------------ basics
    def _lift(self, other) -> "MPoly":
        if isinstance(other, MPoly):
            if other.vars != self.vars:
                raise ValueError(f"ring mismatch: {self.vars} vs {other.vars}")
            return other
        return MPoly.const(self.vars, other)

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self):
        return self.terms.get((0,) * len(self.vars), 0)

    def __eq__(self, other):
        if isinstance(other, MPoly):
            return self.vars == other.vars and self.terms == other.terms
        try:
            return self == self._lift(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.vars, frozenset(self.terms.items())))
        return self._hash

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = _norm(v)
            else:
                out.pop(e, None)
        return MPoly._raw(self.vars, out)

    __radd__ = __add__

    def __neg__(self):
        return MPoly._raw(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, MPoly):
            c = _coerce(other)
            if not c:
                return MPoly._raw(self.vars, {})
            return MPoly._raw(self.vars, {e: _norm(v * c) for e, v in self.terms.items()})
        other = self._lift(other)
        out: Dict[Exponent, object] = {}
        get = out.get
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = get(e, 0) + c1 * c2
        return MPoly._raw(self.vars, {e: _norm(c) for e, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, MPoly):
            return self.exact_div(other)
        return self * (Fraction(1) / _coerce(other))

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = MPoly.const(self.vars, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -------------------------------------------------------------- structure
    def degree(self, var: str | None = None) -> int:
        """Total degree, or the degree in ``var``; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        if var is None:
            return max(sum(e) for e in self.terms)
        i = self.vars.index(var)
        return max(e[i] for e in self.terms)

    def coeffs_in(self, var: str) -> Dict[int, "MPoly"]:
        """Split as ``sum_k c_k * var**k``; the ``c_k`` stay in the same ring."""
        i = self.vars.index(var)
        parts: Dict[int, Dict[Exponent, object]] = {}
        for e, c in self.terms.items():
            k = e[i]
            parts.setdefault(k, {})[e[:i] + (0,) + e[i + 1:]] = c
        return {k: MPoly._raw(self.vars, t) for k, t in parts.items()}

    def diff(self, var: str) -> "MPoly":
        i = self.vars.index(var)
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                out[e[:i] + (e[i] - 1,) + e[i + 1:]] = c * e[i]
        return MPoly._raw(self.vars, out)

    def in_ring(self, vars: Sequence[str]) -> "MPoly":
        """Re-express in another ring; dropped variables must not occur."""
        vars = tuple(vars)
        idx = []
        for i, v in enumerate(self.vars):
            if v in vars:
                idx.append((i, vars.index(v)))
            elif any(e[i] for e in self.terms):
                raise ValueError(f"variable {v} occurs and cannot be dropped")
        out = {}
        for e, c in self.terms.items():
            ne = [0] * len(vars)
            for i, j in idx:
                ne[j] = e[i]
            out[tuple(ne)] = c
        return MPoly._raw(vars, out)

    def subs(self, values: Mapping[str, object]) -> "MPoly":
        """Substitute numbers or same-ring polynomials for variables."""
        vals = {}
        for name, v in values.items():
            i = self.vars.index(name)
            vals[i] = v
        out = MPoly._raw(self.vars, {})
        cache: Dict[Tuple[int, int], object] = {}

        def power(i, k):
            key = (i, k)
            if key not in cache:
                v = vals[i]
                cache[key] = (v ** k) if isinstance(v, MPoly) else _coerce(v) ** k
            return cache[key]

        acc: Dict[Exponent, object] = {}
        poly_parts = []
        for e, c in self.terms.items():
            scalar = c
            polyf = None
            ne = list(e)
            for i in vals:
                k = e[i]
                ne[i] = 0
                if k:
                    p = power(i, k)
                    if isinstance(p, MPoly):
                        polyf = p if polyf is None else polyf * p
                    else:
                        scalar = scalar * p
            if polyf is None:
                t = tuple(ne)
                acc[t] = acc.get(t, 0) + scalar
            else:
                poly_parts.append((tuple(ne), scalar, polyf))
        out = MPoly._raw(self.vars, {e: _norm(c) for e, c in acc.items() if c})
        for ne, scalar, polyf in poly_parts:
            mono = MPoly._raw(self.vars, {ne: scalar})
            out = out + mono * polyf
        return out

    def halve_exponent(self, var: str) -> "MPoly":
        """Rewrite a polynomial even in ``var`` as a polynomial in ``var**2``."""
        i = self.vars.index(var)
        out = {}
        for e, c in self.terms.items():
            if e[i] % 2:
                raise ValueError(f"{var} occurs with an odd power")
            out[e[:i] + (e[i] // 2,) + e[i + 1:]] = c
        return MPoly._raw(self.vars, out)

    def double_exponent(self, var: str) -> "MPoly":
        i = self.vars.index(var)
        return MPoly._raw(self.vars, {e[:i] + (2 * e[i],) + e[i + 1:]: c
                                      for e, c in self.terms.items()})

    def evaluate(self, values: Mapping[str, object] | Sequence[object]):
        """Evaluate at a point; values may be floats, Fractions or mpmath numbers."""
        if isinstance(values, Mapping):
            point = [values[v] for v in self.vars]
        else:
            point = list(values)
        conv = _coefficient_converter(point)
        total = 0
        powers: Dict[Tuple[int, int], object] = {}
        for e, c in self.terms.items():
            t = conv(c)
            for i, k in enumerate(e):
                if k:
                    key = (i, k)
                    p = powers.get(key)
                    if p is None:
                        p = powers[key] = point[i] ** k
                    t = t * p
            total = total + t
        return total

    def compile(self):
        """Return a fast numpy evaluator ``f(point) -> float``."""
        if not self.terms:
            return lambda point: 0.0
        exps = np.array(list(self.terms.keys()), dtype=float)
        coefs = np.array([float(c) for c in self.terms.values()])

        def f(point):
            x = np.asarray(point, dtype=float)
            return float(coefs @ np.prod(x ** exps, axis=1))

        return f

    def abs_terms(self):
        """Evaluator for the sum of absolute term magnitudes (residual scaling)."""
        if not self.terms:
            return lambda point: 0.0
        exps = np.array(list(self.terms.keys()), dtype=float)
        coefs = np.abs(np.array([float(c) for c in self.terms.values()]))

        def f(point):
            x = np.abs(np.asarray(point, dtype=float))
            return float(coefs @ np.prod(x ** exps, axis=1))

        return f

    # -------------------------------------------------------------- division
    def content(self) -> Fraction:
        """Positive rational c with ``self / c`` primitive with integer coefficients."""
        if not self.terms:
            return Fraction(0)
        nums = 0
        den = 1
        for c in self.terms.values():
            c = Fraction(c)
            nums = math.gcd(nums, c.numerator)
            den = den * c.denominator // math.gcd(den, c.denominator)
        return Fraction(nums, den)

    def primitive(self) -> "MPoly":
        """Integer-coefficient primitive part with positive leading coefficient."""
        if not self.terms:
            return self
        c = self.content()
        lead = self.terms[max(self.terms)]
        if lead < 0:
            c = -c
        return self * (1 / c)

    def divmod(self, other: "MPoly") -> Tuple["MPoly", "MPoly"]:
        """Multivariate division by lexicographic leading term."""
        other = self._lift(other)
        if not other.terms:
            raise ZeroDivisionError("division by the zero polynomial")
        lead_e = max(other.terms)
        lead_c = Fraction(other.terms[lead_e])
        rest = [(e, c) for e, c in other.terms.items() if e != lead_e]
        rem = dict(self.terms)
        heap = [tuple(-x for x in e) for e in rem]
        heapq.heapify(heap)
        quot: Dict[Exponent, object] = {}
        remainder: Dict[Exponent, object] = {}
        while heap:
            key = heapq.heappop(heap)
            e = tuple(-x for x in key)
            c = rem.pop(e, 0)
            while heap and heap[0] == key:
                heapq.heappop(heap)
            if not c:
                continue
            if all(a >= b for a, b in zip(e, lead_e)):
                qe = tuple(a - b for a, b in zip(e, lead_e))
                qc = _norm(Fraction(c) / lead_c)
                quot[qe] = qc
                for re_, rc in rest:
                    ne = tuple(a + b for a, b in zip(qe, re_))
                    v = rem.get(ne, 0) - qc * rc
                    if ne not in rem:
                        heapq.heappush(heap, tuple(-x for x in ne))
                    if v:
                        rem[ne] = _norm(v)
                    else:
                        rem[ne] = 0
            else:
                remainder[e] = c
        return MPoly._raw(self.vars, quot), MPoly._raw(self.vars, remainder)

    def exact_div(self, other) -> "MPoly":
        """Exact quotient; raises :class:`ConsistencyError` on a nonzero remainder."""
        if not isinstance(other, MPoly):
            return self * (Fraction(1) / _coerce(other))
        q, r = self.divmod(other)
        if r.terms:
            raise ConsistencyError(f"inexact division: remainder has {len(r.terms)} terms")
        return q

    # ------------------------------------------------------------ formatting
    def __repr__(self):
        return f"MPoly({self.vars!r}, {self.to_string()!r})"

    def to_string(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            mono = "*".join(f"{v}^{k}" if k > 1 else v for v, k in zip(self.vars, e) if k)
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if mono:
                body = mono if a == 1 else f"{a}*{mono}"
            else:
                body = str(a)
            parts.append((sign, body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    __str__ = to_string

    def to_text(self) -> str:
        """Canonical integer text form: header line, then ``exponents : coeff``.

        The polynomial is scaled to its primitive integer part; terms are sorted
        by exponent vector in descending lexicographic order.
        """
        p = self.primitive()
        lines = ["vars " + " ".join(p.vars)]
        for e in sorted(p.terms, reverse=True):
            lines.append(" ".join(map(str, e)) + " : " + str(p.terms[e]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MPoly":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        vars = tuple(lines[0].split()[1:])
        terms = {}
        for ln in lines[1:]:
            lhs, rhs = ln.split(":")
            terms[tuple(int(x) for x in lhs.split())] = int(rhs)
        return cls(vars, terms)


def ring(*names: str):
    """Generators of the polynomial ring in ``names`` (in order)."""
    return tuple(MPoly.gen(names, n) for n in names)


def parse_poly(text: str, vars: Sequence[str]) -> MPoly:
    """Parse a polynomial written with ``+ - * / ^ **`` and parentheses."""
    gens = {n: MPoly.gen(vars, n) for n in vars}
    expr = text.replace("^", "**")
    try:
        node = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse polynomial {text!r}") from exc
    for sub in ast.walk(node):
        if isinstance(sub, ast.Name) and sub.id not in gens:
            raise ParseError(f"unknown symbol {sub.id!r}")
        if isinstance(sub, (ast.Call, ast.Attribute, ast.Subscript)):
            raise ParseError("only arithmetic expressions are allowed")
    env = {"__builtins__": {}}
    env.update(gens)
    # integer literals become Fractions so that '/' stays exact

    class _Exact(ast.NodeTransformer):
        def visit_Constant(self, n):
            if isinstance(n.value, int):
                return ast.Call(func=ast.Name("Fraction", ast.Load()), args=[n], keywords=[])
            return n

        def visit_BinOp(self, n):
            if isinstance(n.op, ast.Pow):
                n.left = self.visit(n.left)
                return n
            return self.generic_visit(n)

    node = ast.fix_missing_locations(_Exact().visit(node))
    env["Fraction"] = Fraction
    value = eval(compile(node, "<poly>", "eval"), env)
    if not isinstance(value, MPoly):
        value = MPoly.const(vars, value)
    return value


# ---------------------------------------------------------------- determinants
def _one_norm(p: MPoly) -> int:
    return sum(abs(int(c)) for c in p.terms.values())


def _bareiss(M):
    """Determinant of a square integer matrix by fraction-free elimination."""
    n = len(M)
    M = [list(row) for row in M]
    sign = 1
    prev = _bigint(1)
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return _bigint(0)
        pivot = M[k][k]
        rowk = M[k]
        for i in range(k + 1, n):
            rowi = M[i]
            mik = rowi[k]
            for j in range(k + 1, n):
                rowi[j] = (pivot * rowi[j] - mik * rowk[j]) // prev
            rowi[k] = 0
        prev = pivot
    return sign * M[n - 1][n - 1]


def det(matrix: Sequence[Sequence[MPoly]], vars: Sequence[str] | None = None) -> MPoly:
    """Exact determinant of a square matrix of polynomials (or rationals)."""
    n = len(matrix)
    if n == 0:
        raise ValueError("empty matrix")
    if vars is None:
        for row in matrix:
            for x in row:
                if isinstance(x, MPoly):
                    vars = x.vars
                    break
            if vars is not None:
                break
        else:
            vars = ()
    vars = tuple(vars)
    rows = [[x if isinstance(x, MPoly) else MPoly.const(vars, x) for x in row] for row in matrix]
    # clear denominators row by row
    scale = Fraction(1)
    int_rows = []
    for row in rows:
        den = 1
        for p in row:
            for c in p.terms.values():
                if isinstance(c, Fraction):
                    den = den * c.denominator // math.gcd(den, c.denominator)
        int_rows.append([p * den if den != 1 else p for p in row])
        scale /= den
    nv = len(vars)
    # degree bound per variable: min of row-wise and column-wise sums of maxima
    bounds = []
    for v in range(nv):
        rowsum = sum(max((max((e[v] for e in p.terms), default=0) for p in row), default=0)
                     for row in int_rows)
        colsum = sum(max((max((e[v] for e in int_rows[i][j].terms), default=0)
                          for i in range(n)), default=0) for j in range(n))
        bounds.append(min(rowsum, colsum) + 1)
    # coefficient bound: product of row 1-norm sums (also column-wise)
    hr = 1
    for row in int_rows:
        hr *= sum(_one_norm(p) for p in row)
    hc = 1
    for j in range(n):
        hc *= sum(_one_norm(int_rows[i][j]) for i in range(n))
    height = min(hr, hc)
    if height == 0:
        return MPoly(vars, {})
    b = height.bit_length() + 2
    b = (b + 7) // 8 * 8
    strides = []
    s = 1
    for d in bounds:
        strides.append(s)
        s *= d
    slots = s
    packed = []
    for row in int_rows:
        prow = []
        for p in row:
            v = _bigint(0)
            for e, c in p.terms.items():
                idx = sum(a * st for a, st in zip(e, strides))
                v += _bigint(c) << (b * idx)
            prow.append(v)
        packed.append(prow)
    value = int(_bareiss(packed))
    # unpack balanced digits: add the half-offset so every digit is non-negative
    half = 1 << (b - 1)
    offset = int.from_bytes(bytes([0x80] + [0] * (b // 8 - 1)) * slots, "big") if b >= 8 else 0
    shifted = value + offset
    if shifted < 0 or shifted.bit_length() > b * slots:
        raise ConsistencyError("determinant exceeded its a priori bounds")
    raw = shifted.to_bytes(b // 8 * slots, "little")
    width = b // 8
    terms = {}
    for idx in range(slots):
        chunk = raw[idx * width:(idx + 1) * width]
        d = int.from_bytes(chunk, "little") - half
        if d:
            e = []
            r = idx
            for bd in bounds:
                e.append(r % bd)
                r //= bd
            terms[tuple(e)] = d
    out = MPoly(vars, terms)
    return out * scale if scale != 1 else out


def sylvester_matrix(p: MPoly, q: MPoly, var: str):
    """Sylvester matrix of ``p`` and ``q`` viewed as univariate in ``var``."""
    cp = p.coeffs_in(var)
    cq = q.coeffs_in(var)
    m = p.degree(var)
    n = q.degree(var)
    zero = MPoly(p.vars, {})
    size = m + n
    rows = []
    for i in range(n):
        row = [zero] * size
        for k in range(m + 1):
            row[i + m - k] = cp.get(k, zero)
        rows.append(row)
    for i in range(m):
        row = [zero] * size
        for k in range(n + 1):
            row[i + n - k] = cq.get(k, zero)
        rows.append(row)
    return rows


def resultant(p: MPoly, q: MPoly, var: str) -> MPoly:
    """Resultant of ``p`` and ``q`` with respect to ``var`` (Sylvester determinant)."""
    q = p._lift(q)
    m = p.degree(var)
    n = q.degree(var)
    if m < 0 or n < 0:
        return MPoly(p.vars, {})
    if m == 0 and n == 0:
        return MPoly.const(p.vars, 1)
    if m == 0:
        return p ** n
    if n == 0:
        return q ** m
    return det(sylvester_matrix(p, q, var), p.vars)


# ------------------------------------------------------- univariate utilities
def upoly(p: MPoly, var: str) -> list:
    """Dense coefficient list (lowest degree first) of a univariate polynomial."""
    i = p.vars.index(var)
    for e in p.terms:
        if any(k for j, k in enumerate(e) if j != i):
            raise ValueError("polynomial is not univariate in " + var)
    d = p.degree(var)
    out = [Fraction(0)] * (d + 1)
    for e, c in p.terms.items():
        out[e[i]] = Fraction(c)
    return out


def _trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _prem(a, b):
    """Remainder of exact division of dense rational polynomials."""
    a = _trim(a)
    b = _trim(b)
    while len(a) >= len(b) and a:
        f = a[-1] / b[-1]
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[shift + i] -= f * c
        a = _trim(a)
    return a


def _peval(a, x):
    v = Fraction(0) if isinstance(x, (int, Fraction)) else 0.0
    for c in reversed(a):
        v = v * x + c
    return v


def sturm_count(coeffs: Sequence, lo=None, hi=None) -> int:
    """Number of distinct real roots in ``(lo, hi]`` (``None`` means infinite).

    ``coeffs`` is a dense rational coefficient list, lowest degree first.
    """
    a = _trim([Fraction(c) for c in coeffs])
    if len(a) <= 1:
        return 0
    da = [i * c for i, c in enumerate(a)][1:]
    seq = [a, da]
    while True:
        r = _prem(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-c for c in r])

    def changes(x, at_inf):
        signs = []
        for s in seq:
            if at_inf == 0:
                v = _peval(s, Fraction(x))
            else:
                deg = len(s) - 1
                v = s[-1] * (1 if (at_inf > 0 or deg % 2 == 0) else -1)
            if v != 0:
                signs.append(v > 0)
        return sum(1 for u, w in zip(signs, signs[1:]) if u != w)

    v_lo = changes(lo, 0) if lo is not None else changes(0, -1)
    v_hi = changes(hi, 0) if hi is not None else changes(0, 1)
    return v_lo - v_hi


def descartes_sign_changes(coeffs: Iterable) -> int:
    """Sign changes in the coefficient sequence (upper bound on positive roots)."""
    signs = [c > 0 for c in coeffs if c != 0]
    return sum(1 for u, w in zip(signs, signs[1:]) if u != w)
