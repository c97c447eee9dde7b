"""Continued fractions of rotation numbers.

Convergents are kept as exact Python integers so that frequencies with very
large partial quotients (Liouville-type schedules) can be represented without
loss.  A numeric input is expanded only as far as its precision supports:
both ends of the uncertainty interval ``[x - tol, x + tol]`` are expanded in
exact rational arithmetic and terms are emitted while the two expansions
agree.  Every emitted term is then a term of every real number the input could
stand for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import mpmath
import numpy as np

__all__ = [
    "FrequencyCF",
    "BetaEstimate",
    "DenominatorSubsequence",
    "cf_expand",
    "cf_from_terms",
    "dist_to_Z",
    "estimate_beta",
    "select_subsequence",
    "liouville_terms",
    "golden_mean",
    "frac_mod1",
]

MACHINE_EPS = np.finfo(float).eps
# A rational p/q inside the uncertainty interval with q below this fraction of
# tol**-1/2 means the input is a rational number to working precision.
RATIONAL_DENOMINATOR_FRACTION = 1e-3


@dataclass(frozen=True)
class FrequencyCF:
    """Continued-fraction data of a frequency alpha in (0, 1).

    ``terms[m]`` is the partial quotient a_{m+1} and ``convergents[m]`` the
    pair (p_{m+1}, q_{m+1}); list position ``m`` is the index used by every
    other function in this module.  ``exact`` is the rational representative
    used for exact checks (the float itself in numeric mode, the last
    convergent in explicit-terms mode).
    """

    value: float
    terms: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]
    source: str
    exact: Fraction = field(repr=False)

    @property
    def denominators(self) -> list[int]:
        return [q for _, q in self.convergents]

    def __len__(self) -> int:
        return len(self.convergents)

    def q(self, m: int) -> int:
        return self.convergents[m][1]

    def p(self, m: int) -> int:
        return self.convergents[m][0]

    def check_bounds(self) -> list[int]:
        """Return the indices m violating 1/(2q_{m+1}) <= ||q_m alpha|| <= 1/q_{m+1}.

        Evaluated in exact rational arithmetic against ``exact``.
        """
        bad = []
        for m in range(len(self.convergents) - 1):
            qm, qn = self.q(m), self.q(m + 1)
            d = dist_to_Z(qm * self.exact)
            if not (Fraction(1, 2 * qn) <= d <= Fraction(1, qn)):
                bad.append(m)
        return bad


@dataclass(frozen=True)
class BetaEstimate:
    samples: tuple[tuple[int, float], ...]
    beta: float
    tail_start: int


@dataclass(frozen=True)
class DenominatorSubsequence:
    indices: tuple[int, ...]
    rule: str  # "all" or "exponential-gap"
    beta: float = 0.0


def dist_to_Z(x):
    """Distance from x to the nearest integer.

    Exact for ``Fraction``/integer input, float otherwise.
    """
    if isinstance(x, Rational):
        x = Fraction(x)
        r = x - math.floor(x)
        return min(r, 1 - r)
    x = np.asarray(x, dtype=float)
    out = np.abs(x - np.round(x))
    return float(out) if out.ndim == 0 else out


def frac_mod1(n, alpha) -> float:
    """Fractional part of n*alpha, exact when alpha is a ``Fraction``."""
    if isinstance(alpha, Fraction):
        r = n * alpha
        return float(r - math.floor(r))
    return float(np.mod(n * alpha, 1.0))


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, mpmath.mpf):
        man, exp = x.man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    return Fraction(x)


def _convergents(terms: Sequence[int]) -> list[tuple[int, int]]:
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    out = []
    for a in terms:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        out.append((p, q))
    return out


def _simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """Rational with the smallest denominator in the closed interval [lo, hi]."""
    fl = math.floor(lo)
    if fl == lo:
        return Fraction(fl)
    if fl < math.floor(hi):
        return Fraction(fl + 1)
    rest = _simplest_between(1 / (hi - fl), 1 / (lo - fl))
    return fl + 1 / rest


def cf_from_terms(terms: Iterable[int]) -> FrequencyCF:
    """Frequency given by explicit partial quotients a_1, a_2, ... (alpha = [0; a_1, a_2, ...])."""
    terms = tuple(int(a) for a in terms)
    if not terms:
        raise ValueError("max_terms must be >= 1")
    if any(a < 1 for a in terms):
        raise ValueError("partial quotients must be positive integers")
    conv = _convergents(terms)
    p, q = conv[-1]
    exact = Fraction(p, q)
    return FrequencyCF(float(exact), terms, tuple(conv), "explicit-terms", exact)


def cf_expand(x, max_terms: int = 64, mode: str = "numeric", tol=None) -> FrequencyCF:
    """Continued-fraction expansion of a frequency.

    Parameters
    ----------
    x : float, Fraction, mpmath.mpf or sequence of ints
        The frequency in (0, 1); in ``mode="explicit-terms"`` the partial
        quotients themselves.
    max_terms : int
        Upper bound on the number of terms emitted.
    tol : optional
        Half-width of the uncertainty interval around ``x``.  Defaults to
        ``eps * |x|`` for floats and 0 for exact rationals.

    Raises
    ------
    ValueError
        ``"rational input"`` when ``x`` is a rational with small denominator
        to working precision; also for ``max_terms < 1`` or x outside (0, 1).
    """
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    if mode == "explicit-terms":
        return cf_from_terms(list(x)[:max_terms])
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")

    X = _to_fraction(x)
    if not 0 < X < 1:
        raise ValueError("frequency must lie in (0, 1)")
    if tol is None:
        tol = Fraction(0) if isinstance(x, Fraction) else Fraction(float(MACHINE_EPS)) * X
    tol = _to_fraction(tol)
    lo, hi = max(X - tol, Fraction(0)), min(X + tol, Fraction(1))

    if tol > 0:
        r = _simplest_between(lo, hi)
        if r.denominator <= RATIONAL_DENOMINATOR_FRACTION / math.sqrt(float(tol)):
            raise ValueError(f"rational input: {x!r} is {r} to working precision")

    terms: list[int] = []
    a_lo, a_hi = lo, hi
    while len(terms) < max_terms:
        if a_lo == 0 or a_hi == 0:
            break
        t_lo, t_hi = 1 / a_lo, 1 / a_hi
        k_lo, k_hi = math.floor(t_lo), math.floor(t_hi)
        if k_lo != k_hi:
            break
        terms.append(k_lo)
        a_lo, a_hi = t_lo - k_lo, t_hi - k_hi

    if not terms:
        raise ValueError(f"rational input: no trustworthy term for {x!r}")
    if tol == 0 and len(terms) < max_terms:
        # exact input whose expansion terminated
        raise ValueError(f"rational input: {X} has a finite expansion")
    conv = _convergents(terms)
    return FrequencyCF(float(X), tuple(terms), tuple(conv), "numeric", X)


def estimate_beta(cf: FrequencyCF, tail_start: int = 0) -> BetaEstimate:
    """Upper bound over a tail of ln(q_{m+1})/q_m, the finite stand-in for beta(alpha)."""
    if tail_start < 0 or len(cf) < tail_start + 2:
        raise ValueError(
            f"too few convergents: need {tail_start + 2}, have {len(cf)}"
        )
    samples = tuple(
        (cf.q(m), math.log(cf.q(m + 1)) / cf.q(m)) for m in range(tail_start, len(cf) - 1)
    )
    return BetaEstimate(samples, max(s for _, s in samples), tail_start)


def select_subsequence(cf: FrequencyCF, beta: float, tail_start: int = 0) -> DenominatorSubsequence:
    """Indices m along which Birkhoff sums of analytic zero-mean functions vanish.

    For ``beta == 0`` every index is admissible.  Otherwise the indices
    m >= tail_start with q_{m+1} >= exp(beta/2 * q_m) are returned.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if beta == 0:
        return DenominatorSubsequence(tuple(range(tail_start, len(cf))), "all", 0.0)
    idx = []
    for m in range(tail_start, len(cf) - 1):
        qm, qn = cf.q(m), cf.q(m + 1)
        # compare logs; q_{m+1} can be astronomically large
        if math.log(qn) >= 0.5 * beta * qm:
            idx.append(m)
    if not idx:
        raise ValueError("extend expansion: no index satisfies the exponential gap")
    return DenominatorSubsequence(tuple(idx), "exponential-gap", float(beta))


def liouville_terms(levels: int = 3, first: int = 2) -> list[int]:
    """Partial quotients a_1 = first, a_{m+1} = ceil(exp(q_m)).

    Only a handful of levels are computable: the fourth term of the default
    schedule already has ~10^8 digits.
    """
    terms = [int(first)]
    q_prev, q = 1, int(first)
    while len(terms) < levels:
        digits = int(q / math.log(10)) + 30
        with mpmath.workdps(digits):
            a = int(mpmath.ceil(mpmath.exp(q)))
        terms.append(a)
        q, q_prev = a * q + q_prev, q
    return terms


def golden_mean() -> float:
    return (math.sqrt(5.0) - 1.0) / 2.0
