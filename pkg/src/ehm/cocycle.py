"""Transfer-matrix cocycles over the rotation x -> x + alpha.

The dual cocycle is

    A(x) = (1 / c_hat(x)) [[E/l2 - 2 cos 2 pi x, -c~_hat(x - alpha)],
                           [c_hat(x),              0                ]]

with c_hat the symbol of sigma(lam).  Its determinant is
c~_hat(x - alpha) / c_hat(x), which is what the determinant cascade iterates.
Lyapunov exponents are computed from the polynomial cocycle c(x) A(x), whose
entries are entire, and corrected by the mean of log|c|.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import integrate

from ._util import NumericalContractError, jit
from .model import (
    CouplingTriple,
    abs_c,
    c_symbol,
    c_tilde,
    mean_log_abs_c,
    real_roots_on_torus,
    sigma,
)

__all__ = [
    "SymbolZeroError",
    "CocycleOrbit",
    "LyapunovEstimate",
    "transfer_matrix",
    "iterate",
    "lyapunov",
    "mean_log_abs_c_quadrature",
    "product_ratio",
    "det_cascade_check",
    "OrbitFunction",
    "orbit_law_function",
    "convergence_factor",
]

TWO_PI = 2.0 * math.pi
ZERO_TOL = 1e-12
RENORM_EVERY = 32


class SymbolZeroError(ValueError):
    pass


def _orbit_point(x, j: int, alpha: float):
    """x + j alpha with j alpha reduced mod 1 exactly, so long orbits keep full precision."""
    r = Fraction(alpha) * j
    return x + float(r - math.floor(r))


def transfer_matrix(lam, E: float, alpha: float, x: float) -> np.ndarray:
    """A_{sigma(lam), E/l2}(x) as a 2x2 complex array."""
    lam = CouplingTriple.of(lam)
    lh = sigma(lam)
    c = complex(c_symbol(lh, alpha, x))
    if abs(c) < ZERO_TOL:
        raise SymbolZeroError(f"symbol zero at x={x}")
    ct = complex(c_tilde(lh, alpha, x - alpha))
    return np.array([[E / lam.l2 - 2.0 * math.cos(TWO_PI * x), -ct], [c, 0.0]], dtype=complex) / c


@dataclass
class CocycleOrbit:
    """P_n(x) = A(x + (n-1) alpha) ... A(x), stored as exp(log_scale) * matrix.

    ``log_det`` is the sum of log det A over the steps; the renormalised
    matrix itself is too close to rank one to recover det P_n.
    """

    x: float
    n: int
    matrix: np.ndarray
    log_scale: float
    log_norm_trace: list = field(default_factory=list)
    log_det: complex = 0j

    @property
    def product(self) -> np.ndarray:
        return math.exp(self.log_scale) * self.matrix

    @property
    def log_norm(self) -> float:
        return self.log_scale + math.log(np.linalg.norm(self.matrix, 2))


def iterate(lam, E: float, alpha: float, x: float, n: int, start: int = 0) -> CocycleOrbit:
    """Cocycle product of length n with norm renormalisation every 32 steps.

    The orbit points are x + (start + j) alpha, so a split product can reuse
    exactly the same phases as the full one.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    P = np.eye(2, dtype=complex)
    logs: list[float] = []
    det_re: list[float] = []
    det_im: list[float] = []
    trace = []
    for j in range(n):
        try:
            A = transfer_matrix(lam, E, alpha, _orbit_point(x, start + j, alpha))
        except SymbolZeroError as exc:
            raise SymbolZeroError(f"symbol zero at step {j}: {exc}") from None
        ld = cmath.log(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
        det_re.append(ld.real)
        det_im.append(ld.imag)
        P = A @ P
        if (j + 1) % RENORM_EVERY == 0:
            s = np.linalg.norm(P)
            P = P / s
            logs.append(math.log(s))
            trace.append(math.fsum(logs) + math.log(np.linalg.norm(P, 2)))
    return CocycleOrbit(x, n, P, math.fsum(logs), trace, complex(math.fsum(det_re), math.fsum(det_im)))


# --------------------------------------------------------------------------
# Lyapunov exponents


@jit
def _le_kernel(a1, a2, a3, alpha, energy, xs, n, renorm):
    two_pi = 2.0 * np.pi
    out = np.empty(len(xs))
    for s in range(len(xs)):
        x = xs[s]
        v1 = 1.0 + 0.0j
        v2 = 0.3 + 0.0j
        total = 0.0
        comp = 0.0
        for j in range(n):
            t = (x + j * alpha) % 1.0
            z = np.exp(1j * two_pi * (t + alpha / 2.0))
            zm = np.exp(1j * two_pi * (t - alpha / 2.0))
            c = a1 / z + a2 + a3 * z
            ct = a1 * zm + a2 + a3 / zm
            w1 = (energy - 2.0 * np.cos(two_pi * t)) * v1 - ct * v2
            w2 = c * v1
            v1 = w1
            v2 = w2
            if (j + 1) % renorm == 0 or j == n - 1:
                nr = np.sqrt(v1.real ** 2 + v1.imag ** 2 + v2.real ** 2 + v2.imag ** 2)
                y = np.log(nr) - comp
                tt = total + y
                comp = (tt - total) - y
                total = tt
                v1 = v1 / nr
                v2 = v2 / nr
        out[s] = total / n
    return out


def mean_log_abs_c_quadrature(lam, alpha: float = 0.0) -> float:
    """Adaptive quadrature of log|c_lam| over the torus, split at its real zeros."""
    lam = CouplingTriple.of(lam)
    pts = sorted(real_roots_on_torus(lam, alpha))
    edges = [0.0] + [p for p in pts if 0.0 < p < 1.0] + [1.0]
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        val, _ = integrate.quad(
            lambda t: math.log(max(abs(complex(c_symbol(lam, alpha, t))), 1e-300)),
            a, b, limit=400, epsabs=1e-13, epsrel=1e-13,
        )
        total += val
    return total


@dataclass(frozen=True, eq=False)
class LyapunovEstimate:
    energy: float
    n_steps: int
    le_regularized: float
    le_raw: float
    log_mean_abs_c: float
    log_mean_abs_c_jensen: float
    per_sample: np.ndarray
    cocycle: str

    @property
    def stderr(self) -> float:
        k = len(self.per_sample)
        return float(np.std(self.per_sample, ddof=1) / math.sqrt(k)) if k > 1 else 0.0


def lyapunov(
    lam,
    E: float,
    alpha: float,
    n: int = 100_000,
    samples: int = 8,
    seed: int = 0,
    cocycle: str = "operator",
    xs=None,
) -> LyapunovEstimate:
    """Lyapunov exponent at energy E.

    ``cocycle="operator"`` uses the transfer matrices of H_lam itself, i.e.
    the dual cocycle of sigma(lam) at energy E; ``"dual"`` uses A_{sigma(lam),
    E/l2}.  The raw exponent of the polynomial cocycle is corrected by the
    mean of log|c|, computed by quadrature and checked against Jensen's formula.
    """
    if n < 1000:
        raise ValueError("n must be >= 1000")
    lam = CouplingTriple.of(lam)
    if cocycle == "operator":
        sym, energy = lam, float(E)
    elif cocycle == "dual":
        sym, energy = sigma(lam), float(E) / lam.l2
    else:
        raise ValueError(f"unknown cocycle {cocycle!r}")
    if xs is None:
        xs = np.random.default_rng(seed).random(samples)
    xs = np.asarray(xs, dtype=float)
    raw = _le_kernel(sym.l1, sym.l2, sym.l3, float(alpha), energy, xs, int(n), RENORM_EVERY)
    quad = mean_log_abs_c_quadrature(sym, alpha)
    jensen = mean_log_abs_c(sym)
    if abs(quad - jensen) > 1e-8:
        raise NumericalContractError(
            f"mean log|c| disagrees: quadrature {quad!r} vs Jensen {jensen!r}"
        )
    le_raw = float(np.mean(raw))
    return LyapunovEstimate(float(E), int(n), le_raw - quad, le_raw, quad, jensen, raw - quad, cocycle)


# --------------------------------------------------------------------------
# determinant cascade


def product_ratio(lam, alpha: float, x, k: int) -> np.ndarray:
    """prod_{j=-1}^{k-2} c~_hat(x + j alpha) / prod_{j=0}^{k-1} c_hat(x + j alpha).

    Accumulated in log-polar form.
    """
    lh = sigma(CouplingTriple.of(lam))
    x = np.asarray(x, dtype=float)
    acc = np.zeros(x.shape, dtype=complex)
    comp = np.zeros(x.shape, dtype=complex)
    for j in range(-1, k):
        term = np.zeros(x.shape, dtype=complex)
        if j <= k - 2:
            ct = c_tilde(lh, alpha, _orbit_point(x, j, alpha))
            if np.any(np.abs(ct) < ZERO_TOL):
                raise SymbolZeroError(f"symbol zero in product window at j={j}")
            term = term + np.log(ct)
        if j >= 0:
            c = c_symbol(lh, alpha, _orbit_point(x, j, alpha))
            if np.any(np.abs(c) < ZERO_TOL):
                raise SymbolZeroError(f"symbol zero in product window at j={j}")
            term = term - np.log(c)
        y = term - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return np.exp(acc)


def det_cascade_check(lam, E: float, alpha: float, x, k: int, g: Callable) -> float:
    """max |g(x + k alpha) - R_k(x) g(x)| for g obeying the one-step determinant law.

    ``E`` does not enter the determinant and is accepted for symmetry with the
    other cocycle functions.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    R = product_ratio(lam, alpha, x, k)
    return float(np.max(np.abs(g(x + k * alpha) - R * g(x))))


class OrbitFunction:
    """Values along the orbit x0 + j alpha (unwrapped), looked up by j."""

    def __init__(self, x0: float, alpha: float, values: np.ndarray, j0: int = 0):
        self.x0, self.alpha, self.values, self.j0 = x0, alpha, np.asarray(values), j0

    def __call__(self, x):
        j = np.rint((np.asarray(x, dtype=float) - self.x0) / self.alpha).astype(int) - self.j0
        if np.any(j < 0) or np.any(j >= len(self.values)):
            raise IndexError("point outside the stored orbit")
        return self.values[j]


def orbit_law_function(lam, alpha: float, x0: float, g0: complex, kmax: int) -> OrbitFunction:
    """g on x0 + j alpha, j = 0..kmax, built step by step from g(x+alpha) = c~_hat(x-alpha)/c_hat(x) g(x)."""
    lh = sigma(CouplingTriple.of(lam))
    vals = np.empty(kmax + 1, dtype=complex)
    vals[0] = g0
    for j in range(kmax):
        xj = _orbit_point(x0, j, alpha)
        c = complex(c_symbol(lh, alpha, xj))
        if abs(c) < ZERO_TOL:
            raise SymbolZeroError(f"symbol zero at x={xj}")
        vals[j + 1] = complex(c_tilde(lh, alpha, xj - alpha)) / c * vals[j]
    return OrbitFunction(x0, alpha, vals)


def _q2_alpha_mod1(q: int, alpha: float) -> float:
    r = Fraction(alpha) * q * q
    return float(r - math.floor(r))


def convergence_factor(lam, alpha: float, q: int, grid: int = 4096, wf=None) -> dict:
    """The factor that must tend to 1 along the selected denominators.

    F(x) = |c|_hat(x - alpha) / |c|_hat(x + q alpha - alpha)
           * exp(-i (S_q f(x - alpha) + S_q f(x))) * exp(-+ 2 pi i q alpha)

    computed from the winding phase f and, independently, as the direct
    product ratio times exp(+- i (4 pi q x + 2 pi q^2 alpha)).
    """
    from .winding import factorize

    lam = CouplingTriple.of(lam)
    if wf is None:
        wf = factorize(lam, alpha)
    w = wf.winding
    lh = sigma(lam)
    x = np.arange(grid) / grid

    s1 = np.zeros(grid)
    s2 = np.zeros(grid)
    for j in range(q):
        s1 += wf.f(x + (j - 1) * alpha)
        s2 += wf.f(x + j * alpha)
    mod_ratio = abs_c(lh, alpha, x - alpha) / abs_c(lh, alpha, x + q * alpha - alpha)
    qa = Fraction(alpha) * q
    qa = float(qa - math.floor(qa))
    F_winding = mod_ratio * np.exp(-1j * (s1 + s2)) * np.exp(1j * w * TWO_PI * qa)

    lin = 2.0 * TWO_PI * q * x + TWO_PI * _q2_alpha_mod1(q, alpha)
    F_product = product_ratio(lam, alpha, x, q) * np.exp(1j * w * lin)
    return {
        "q": q,
        "sup_dev": float(np.max(np.abs(F_winding - 1.0))),
        "sup_dev_product": float(np.max(np.abs(F_product - 1.0))),
        "agreement": float(np.max(np.abs(F_winding - F_product))),
        "birkhoff_sup": float(max(np.max(np.abs(s1)), np.max(np.abs(s2)))),
    }
