"""Birkhoff sums S_q f(x) = f(x) + f(x + alpha) + ... + f(x + (q-1) alpha).

For a zero-mean analytic f the sums vanish uniformly along suitable
continued-fraction denominators.  Two regimes are covered: when beta(alpha)
is zero the cohomological equation h(x + alpha) - h(x) = f(x) can be solved
and S_q f telescopes; otherwise the Dirichlet factors
(1 - e^{2 pi i n q alpha}) / (1 - e^{2 pi i n alpha}) are bounded directly.

Phases n*alpha are reduced mod 1 in exact arithmetic whenever alpha is a
``Fraction``, so denominators far beyond 1/eps are handled correctly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .contfrac import DenominatorSubsequence, FrequencyCF

__all__ = [
    "AnalyticTorusFunction",
    "BirkhoffRow",
    "BirkhoffReport",
    "Case2Bound",
    "birkhoff_sum",
    "dirichlet_factor",
    "cohomological_solve",
    "cohomological_residual",
    "case2_bound",
    "verify_uniform_lemma",
    "parse_builtin",
]

TWO_PI = 2.0 * math.pi
SMALL_DIVISOR = 1e-8
MEAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AnalyticTorusFunction:
    """Trigonometric data f_hat(n), n = -N..N, with |f_hat(n)| <= c e^{-2 pi delta0 |n|}."""

    fourier: np.ndarray
    delta0: float
    c_bound: float

    def __post_init__(self):
        a = np.asarray(self.fourier, dtype=complex)
        if a.ndim != 1 or len(a) % 2 == 0:
            raise ValueError("fourier must have odd length 2N+1")
        object.__setattr__(self, "fourier", a)

    @classmethod
    def from_coefficients(cls, coeffs, delta0: float = 0.1) -> "AnalyticTorusFunction":
        coeffs = np.asarray(coeffs, dtype=complex)
        n = np.abs(np.arange(len(coeffs)) - (len(coeffs) - 1) // 2)
        c = float(np.max(np.abs(coeffs) * np.exp(TWO_PI * delta0 * n))) if len(coeffs) else 0.0
        return cls(coeffs, delta0, c)

    @classmethod
    def from_sines(cls, amplitudes: dict, delta0: float = 0.1) -> "AnalyticTorusFunction":
        """sum_n a_n sin(2 pi n x) for a dict {n: a_n}."""
        N = max(amplitudes) if amplitudes else 0
        coeffs = np.zeros(2 * N + 1, dtype=complex)
        for n, a in amplitudes.items():
            coeffs[N + n] += -0.5j * a
            coeffs[N - n] += 0.5j * a
        return cls.from_coefficients(coeffs, delta0)

    @classmethod
    def zero(cls) -> "AnalyticTorusFunction":
        return cls(np.zeros(1, dtype=complex), 1.0, 0.0)

    @property
    def n_max(self) -> int:
        return (len(self.fourier) - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    @property
    def mean(self) -> complex:
        return complex(self.fourier[self.n_max])

    @property
    def is_real(self) -> bool:
        return bool(np.allclose(self.fourier, np.conj(self.fourier[::-1]), atol=1e-14))

    def trimmed(self, rel_tol: float = 1e-17) -> "AnalyticTorusFunction":
        """Drop trailing modes below rel_tol * max|f_hat|."""
        mag = np.abs(self.fourier)
        top = mag.max() if len(mag) else 0.0
        N = self.n_max
        if top == 0.0:
            return AnalyticTorusFunction(self.fourier[N : N + 1], self.delta0, self.c_bound)
        big = np.nonzero(mag > rel_tol * top)[0]
        K = int(max(abs(big[0] - N), abs(big[-1] - N)))
        return AnalyticTorusFunction(self.fourier[N - K : N + K + 1], self.delta0, self.c_bound)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.zeros(flat.shape, dtype=complex)
        n = self.modes
        for start in range(0, len(flat), 4096):
            chunk = flat[start : start + 4096]
            out[start : start + 4096] = np.exp(1j * TWO_PI * np.outer(chunk, n)) @ self.fourier
        out = out.reshape(x.shape)
        return out.real if self.is_real else out

    def on_grid(self, G: int) -> np.ndarray:
        return _eval_grid(self.fourier, G, self.is_real)

    def lipschitz(self) -> float:
        return float(np.sum(TWO_PI * np.abs(self.modes) * np.abs(self.fourier)))


def _eval_grid(coeffs: np.ndarray, G: int, real: bool) -> np.ndarray:
    """Values of sum_n c_n e^{2 pi i n x} at x = j/G (needs G >= 2N+1)."""
    N = (len(coeffs) - 1) // 2
    if G < 2 * N + 1:
        raise ValueError(f"grid of {G} points cannot resolve {2 * N + 1} modes")
    buf = np.zeros(G, dtype=complex)
    buf[: N + 1] = coeffs[N:]
    if N:
        buf[-N:] = coeffs[:N]
    vals = np.fft.ifft(buf) * G
    return vals.real if real else vals


def _phase_mod1(n: np.ndarray, alpha) -> np.ndarray:
    """{n alpha} in [0, 1) for integer array n, exact for Fraction alpha."""
    t = _phase_centered(n, alpha)
    return np.where(t < 0.0, t + 1.0, t)


def _phase_centered(n: np.ndarray, alpha) -> np.ndarray:
    """n alpha minus the nearest integer, in [-1/2, 1/2)."""
    if isinstance(alpha, Fraction):
        p, q = alpha.numerator, alpha.denominator
        out = []
        for k in n:
            r = (int(k) * p) % q
            out.append((r - q if 2 * r >= q else r) / q)
        return np.array(out, dtype=float)
    x = n * float(alpha)
    t = x - np.floor(x + 0.5)
    return np.where(t >= 0.5, t - 1.0, t)


def dirichlet_factor(n: np.ndarray, q: int, alpha) -> np.ndarray:
    """(1 - e^{2 pi i n q alpha}) / (1 - e^{2 pi i n alpha}), equal to q when n alpha is an integer.

    Written as e^{i pi (a - b)} sin(pi a) / sin(pi b) with a = {n q alpha},
    b = {n alpha}; the expression is invariant under integer shifts of a and b,
    so centred residues are used to keep sin(pi b) accurate near the integers.
    """
    n = np.asarray(n, dtype=object if isinstance(alpha, Fraction) else np.int64)
    tA = _phase_centered(n * q, alpha)
    tB = _phase_centered(n, alpha)
    out = np.full(tA.shape, float(q), dtype=complex)
    ok = tB != 0.0
    a, b = tA[ok], tB[ok]
    # (a / b) sinc(a) / sinc(b) stays exact for subnormal phases
    out[ok] = np.exp(1j * math.pi * (a - b)) * ((a / b) * (np.sinc(a) / np.sinc(b)))
    return out


def _kahan_direct(f: AnalyticTorusFunction, alpha, x: np.ndarray, q: int) -> np.ndarray:
    total = np.zeros(x.shape, dtype=complex)
    comp = np.zeros(x.shape, dtype=complex)
    for j in range(q):
        shift = _phase_mod1(np.array([j]), alpha)[0]
        y = f(np.mod(x + shift, 1.0)) - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def birkhoff_sum(f: AnalyticTorusFunction, alpha, x, q: int, method: str = "auto"):
    """S_q f(x) by direct (compensated) summation or by the closed geometric form."""
    if q < 1:
        raise ValueError("q must be >= 1")
    x = np.asarray(x, dtype=float)
    if method == "auto":
        method = "direct" if q <= 2048 else "geometric"
    if method == "direct":
        out = _kahan_direct(f, alpha, x, q)
    elif method == "geometric":
        g = f.fourier * dirichlet_factor(f.modes, q, alpha)
        out = AnalyticTorusFunction(g, f.delta0, f.c_bound).__call__(x)
        return out
    else:
        raise ValueError(f"unknown method {method!r}")
    return out.real if f.is_real else out


def cohomological_solve(f: AnalyticTorusFunction, alpha, threshold: float = SMALL_DIVISOR) -> AnalyticTorusFunction:
    """h with h(x + alpha) - h(x) = f(x), i.e. h_hat(n) = f_hat(n) / (e^{2 pi i n alpha} - 1)."""
    if abs(f.mean) > MEAN_TOL:
        raise ValueError(f"f must have zero mean, got {f.mean}")
    n = f.modes
    den = np.exp(2j * math.pi * _phase_mod1(n, alpha)) - 1.0
    nz = n != 0
    if np.any(np.abs(den[nz]) < threshold):
        bad = n[nz][np.abs(den[nz]) < threshold]
        raise ValueError(f"small divisor at n={int(bad[0])}: use the Case 2 estimate instead")
    h = np.zeros_like(f.fourier)
    h[nz] = f.fourier[nz] / den[nz]
    return AnalyticTorusFunction.from_coefficients(h, f.delta0)


def cohomological_residual(f: AnalyticTorusFunction, h: AnalyticTorusFunction, alpha, grid: int = 4096) -> float:
    x = np.arange(grid) / grid
    shift = _phase_mod1(np.array([1]), alpha)[0]
    return float(np.max(np.abs(f(x) - h(np.mod(x + shift, 1.0)) + h(x))))


class Case2Bound(NamedTuple):
    stylized: float  # c q^3 / q_{m+1} + c q e^{-2 pi delta0 q}
    exact: float  # triangle-inequality sum with the actual coefficients
    dirichlet_part: float
    tail_part: float


def case2_bound(f: AnalyticTorusFunction, cf: FrequencyCF, m: int) -> Case2Bound:
    """Upper bounds for sup_x |S_{q_m} f(x)|.

    ``exact`` is sum_{1<=|n|<=q-1} |f_hat(n)| |D_q(n)| + sum_{|n|>=q} |f_hat(n)| q,
    with the unstored modes beyond N bounded by c e^{-2 pi delta0 |n|}.
    """
    if m + 1 >= len(cf):
        raise ValueError("m + 1 outside the stored convergents")
    q, qn = cf.q(m), cf.q(m + 1)
    c, d0 = f.c_bound, f.delta0
    stylized = c * q**3 / qn + c * q * math.exp(-TWO_PI * d0 * q)

    n = f.modes
    mag = np.abs(f.fourier)
    low = (np.abs(n) >= 1) & (np.abs(n) <= q - 1)
    D = np.abs(dirichlet_factor(n[low], q, cf.exact)) if low.any() else np.zeros(0)
    dirichlet_part = float(np.sum(mag[low] * D))
    tail_part = float(np.sum(mag[np.abs(n) >= q]) * q)
    M = max(f.n_max, q - 1)
    r = math.exp(-TWO_PI * d0)
    if r < 1.0:
        tail_part += 2.0 * c * q * r ** (M + 1) / (1.0 - r)
    else:
        tail_part = math.inf
    return Case2Bound(stylized, dirichlet_part + tail_part, dirichlet_part, tail_part)


class BirkhoffRow(NamedTuple):
    m: int
    q: int
    sup_grid: float
    sup_certified: float
    exact_bound: float
    stylized_bound: float


@dataclass(frozen=True)
class BirkhoffReport:
    rows: tuple
    rule: str

    @property
    def sups(self) -> list[float]:
        return [r.sup_grid for r in self.rows]

    def decreasing(self) -> bool:
        s = self.sups
        return all(b < a for a, b in zip(s, s[1:]))

    def within_bounds(self) -> bool:
        return all(r.sup_grid <= r.exact_bound for r in self.rows if math.isfinite(r.exact_bound))


def _grid_size(n_max: int, x_grid: int) -> int:
    G = max(x_grid, 8 * max(n_max, 1))
    return 1 << (G - 1).bit_length()


def verify_uniform_lemma(
    f: AnalyticTorusFunction,
    cf: FrequencyCF,
    sub: DenominatorSubsequence,
    x_grid: int = 4096,
) -> BirkhoffReport:
    """sup_x |S_{q_m} f(x)| along the selected denominators.

    S_q f is a trigonometric polynomial with the same modes as f, so it is
    evaluated exactly on a grid of max(x_grid, 8N) points; the certified sup
    adds the Lipschitz margin L / (2G).
    """
    if abs(f.mean) > MEAN_TOL:
        raise ValueError(f"f must have zero mean, got f_hat(0) = {f.mean}")
    if not sub.indices:
        raise ValueError("subsequence empty")
    G = _grid_size(f.n_max, x_grid)
    rows = []
    for m in sub.indices:
        q = cf.q(m)
        g = f.fourier * dirichlet_factor(f.modes, q, cf.exact)
        vals = _eval_grid(g, G, f.is_real)
        sup = float(np.max(np.abs(vals)))
        lip = float(np.sum(TWO_PI * np.abs(f.modes) * np.abs(g)))
        if m + 1 < len(cf):
            b = case2_bound(f, cf, m)
            exact, styl = b.exact, b.stylized
        else:
            exact = styl = math.inf
        rows.append(BirkhoffRow(m, q, sup, sup + lip / (2 * G), exact, styl))
    return BirkhoffReport(tuple(rows), sub.rule)


def parse_builtin(spec: str, delta0: float = 0.1) -> AnalyticTorusFunction:
    """Parse sums like ``sin1+0.5sin2`` (coefficient, 'sin', mode)."""
    amps: dict[int, float] = {}
    for term in spec.replace(" ", "").split("+"):
        if "sin" not in term:
            raise ValueError(f"cannot parse term {term!r}")
        coef, mode = term.split("sin")
        amps[int(mode)] = amps.get(int(mode), 0.0) + (float(coef) if coef else 1.0)
    return AnalyticTorusFunction.from_sines(amps, delta0)
