"""Truncated power series with exact rational coefficients."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

from .errors import ParseError


@dataclass(frozen=True)
class Series:
    """``T(A) = pi * sum(coeffs[k] * A**k)`` truncated after ``order``.

    Coefficients are stored in units of pi; ``coeffs`` has exactly
    ``order + 1`` entries.
    """

    coeffs: Tuple[Fraction, ...]
    order: int

    def __post_init__(self):
        c = tuple(Fraction(x) for x in self.coeffs)
        if len(c) != self.order + 1:
            raise ValueError(f"expected {self.order + 1} coefficients, got {len(c)}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_list(cls, coeffs: Sequence) -> "Series":
        return cls(tuple(coeffs), len(coeffs) - 1)

    def __getitem__(self, k: int) -> Fraction:
        if k > self.order:
            raise IndexError(f"coefficient A^{k} is beyond the truncation order {self.order}")
        return self.coeffs[k]

    def truncate(self, order: int) -> "Series":
        if order > self.order:
            raise ValueError("cannot extend a truncated series")
        return Series(self.coeffs[: order + 1], order)

    def __call__(self, A: float) -> float:
        import math

        return math.pi * sum(float(c) * A ** k for k, c in enumerate(self.coeffs))

    def to_json(self) -> dict:
        return {"order": self.order, "coeffs": [_rat_str(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, data: dict) -> "Series":
        try:
            coeffs = [Fraction(s) for s in data["coeffs"]]
            return cls(tuple(coeffs), int(data["order"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise ParseError(f"bad series record: {exc}") from exc

    def __str__(self):
        parts = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "pi" if k == 0 else ("pi*A" if k == 1 else f"pi*A^{k}")
            sign = "-" if c < 0 else "+"
            a = abs(c)
            body = mono if a == 1 else f"{a}*{mono}"
            parts.append((sign, body))
        if not parts:
            return f"0 + O(A^{self.order + 1})"
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s + f" + O(A^{self.order + 1})"


def _rat_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# Dense helpers on coefficient lists (lowest order first), all truncated at n.
def ps_mul(a: Sequence, b: Sequence, n: int) -> List:
    out = [Fraction(0)] * (n + 1)
    for i, x in enumerate(a[: n + 1]):
        if not x:
            continue
        for j, y in enumerate(b[: n + 1 - i]):
            if y:
                out[i + j] += x * y
    return out


def ps_pow(a: Sequence, k: int, n: int) -> List:
    out = [Fraction(1)] + [Fraction(0)] * n
    base = list(a[: n + 1]) + [Fraction(0)] * max(0, n + 1 - len(a))
    while k:
        if k & 1:
            out = ps_mul(out, base, n)
        k >>= 1
        if k:
            base = ps_mul(base, base, n)
    return out


def ps_binomial(a: Sequence, alpha: Fraction, n: int) -> List:
    """``(1 + a)**alpha`` for a series ``a`` with zero constant term."""
    a = list(a[: n + 1]) + [Fraction(0)] * max(0, n + 1 - len(a))
    if a[0]:
        raise ValueError("series must have a zero constant term")
    alpha = Fraction(alpha)
    # y = (1+a)^alpha satisfies (1+a) y' = alpha a' y
    y = [Fraction(0)] * (n + 1)
    y[0] = Fraction(1)
    for k in range(1, n + 1):
        # k y_k + sum_{j=1}^{k-1} a_j (k-j) y_{k-j} = alpha * sum_{j=1}^{k} j a_j y_{k-j}
        s = Fraction(0)
        for j in range(1, k + 1):
            if a[j]:
                s += alpha * j * a[j] * y[k - j]
                if j < k:
                    s -= a[j] * (k - j) * y[k - j]
        y[k] = s / k
    return y


def period_from_omega_squared(w: Sequence, n: int) -> List[Fraction]:
    """Coefficients (units of pi) of ``2 pi / sqrt(1 + w)`` where ``w(0) = 0``."""
    return [2 * c for c in ps_binomial(w, Fraction(-1, 2), n)]
