"""Dominant terms of the period function at infinity, exact and fitted."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .errors import DomainError, IllConditionedError, UnsupportedError
from .potentials import AsymptoticTerm, PolyFamily, Potential, Quintic


def beta(x: float, y: float) -> float:
    """Euler Beta function via log-gamma."""
    if not (x > 0 and y > 0):
        raise DomainError("beta needs positive arguments")
    return math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y))


def period_tail_in_energy(M: float, a: float) -> Tuple[float, float]:
    """(C, exponent) with T(h) ~ C h^exponent when l_F'(h) ~ M h^a.

    Writing the half period as an Abel transform of l_F',
    T(h) = sqrt(2) * int_0^h l_F'(u) du / sqrt(h - u), and inserting the power
    law gives C = sqrt(2) M B(a + 1, 1/2).
    """
    if not (a > -1 and M > 0):
        raise DomainError("need a > -1 and M > 0")
    return math.sqrt(2.0) * M * beta(a + 1, 0.5), a + 0.5


def lf_derivative_tail(m: int) -> Tuple[float, float]:
    """(M, a) with l_F'(h) ~ M h^a for F = x^2/2 + x^(2m)/(2m)."""
    return (2 * m) ** (1.0 / (2 * m)) / m, -(2 * m - 1) / (2 * m)


def _poly_tail(m: int) -> AsymptoticTerm:
    C, e = period_tail_in_energy(*lf_derivative_tail(m))
    # h = F(A) ~ A^(2m) / (2m)
    return AsymptoticTerm(C * (2 * m) ** (-e), 2 * m * e, "infinity")


def exact_tail(p: Potential) -> AsymptoticTerm:
    """Dominant term of T(A) as A -> infinity for globally centred families."""
    if isinstance(p, PolyFamily):
        return _poly_tail(p.m)
    if isinstance(p, Quintic):
        if p.k <= -2:
            raise UnsupportedError("quintic center is not global for k <= -2")
        return AsymptoticTerm(2 * beta(1 / 6, 0.5) / math.sqrt(3.0), -2.0, "infinity")
    raise UnsupportedError(f"no exact tail for {p.spec}")


@dataclass(frozen=True)
class TailFit:
    """Power law ``T ~ C * A**exponent`` with its worst relative deviation."""

    C: float
    exponent: float
    residual: float
    accepted: bool = True
    samples_used: int = 0

    def to_json(self):
        return {"C": self.C, "exponent": self.exponent, "residual": self.residual}


def _fit(logA, logT):
    slope, intercept = np.polyfit(logA, logT, 1)
    model = np.exp(intercept + slope * logA)
    res = float(np.max(np.abs(model / np.exp(logT) - 1.0)))
    return float(math.exp(intercept)), float(slope), res


def tail_fit(samples: Iterable[Tuple[float, float]], max_residual: float = 0.05) -> TailFit:
    """Least-squares line through (log A, log T).

    If the worst relative deviation exceeds ``max_residual`` the smaller-A
    half is discarded and the fit repeated once.  A second failure is
    returned with ``accepted=False`` rather than raised.
    """
    pts = sorted((float(a), float(t)) for a, t in samples)
    if len(pts) < 6:
        raise DomainError("tail_fit needs at least 6 samples")
    A = np.array([p[0] for p in pts])
    T = np.array([p[1] for p in pts])
    if np.any(A <= 0) or np.any(T <= 0):
        raise DomainError("samples must have A > 0 and T > 0")
    if math.log10(A[-1] / A[0]) < 1:
        raise IllConditionedError("amplitudes span less than one decade")
    logA, logT = np.log(A), np.log(T)
    C, e, r = _fit(logA, logT)
    used = len(A)
    if r > max_residual:
        half = len(A) // 2
        C, e, r = _fit(logA[half:], logT[half:])
        used = len(A) - half
    return TailFit(C, e, r, r <= max_residual, used)
