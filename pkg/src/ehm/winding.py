"""Unimodular part of the dual symbol in the anisotropic self-dual regime.

For l1 + l3 > 1 and l3 > l1 both roots y_s of l1 z^2 + z + l3 lie outside the
unit circle and, with phi = 2 pi (theta + alpha/2),

    c_hat(theta) / |c_hat|(theta) = exp(-i phi + i f(theta)),
    f(theta) = sum_s arg(1 - e^{i phi} / y_s).

Each |e^{i phi}/y_s| < 1, so principal arguments never jump and the log
series of 1 - w has no constant term: f has zero mean without any
normalisation step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import CouplingTriple, abs_c, c_symbol, c_tilde, classify, dual_symbol_roots, sigma

__all__ = [
    "WindingFactorization",
    "FactorizationCheck",
    "factorize",
    "verify_factorization",
    "winding_f",
    "fourier_from_roots",
    "fit_decay",
]

TWO_PI = 2.0 * math.pi


def _check_grid(grid_size: int) -> None:
    if grid_size < 64 or grid_size & (grid_size - 1):
        raise ValueError(f"grid_size must be a power of two >= 64, got {grid_size}")


def winding_f(roots, alpha: float, theta, reflected: bool = False):
    """f(theta) from the root product form; vectorised in theta."""
    theta = np.asarray(theta, dtype=float)
    t = -theta - alpha if reflected else theta
    w = np.exp(1j * TWO_PI * (t + alpha / 2.0))
    out = np.zeros_like(theta)
    for y in roots:
        out = out + np.angle(1.0 - w / y)
    return out


def fourier_from_roots(roots, alpha: float, n_max: int, reflected: bool = False) -> np.ndarray:
    """Fourier coefficients of f for |n| <= n_max from the log series.

    arg(1 - w) = -Im sum_k w^k / k gives f_hat(k) = (i / 2k) S_k e^{i pi k alpha}
    with S_k = sum_s y_s^{-k}.  Returned array is indexed n = -n_max..n_max.
    """
    k = np.arange(1, n_max + 1)
    S = np.zeros(n_max, dtype=complex)
    for y in roots:
        S += (1.0 / complex(y)) ** k
    pos = 1j / (2.0 * k) * S * np.exp(1j * math.pi * k * alpha)
    if reflected:
        # f(theta) = f'(-theta - alpha): f_hat(n) = f'_hat(-n) e^{2 pi i n alpha}
        neg_src = np.conj(pos)  # f'_hat(-k)
        pos, neg = neg_src * np.exp(1j * TWO_PI * k * alpha), pos * np.exp(-1j * TWO_PI * k * alpha)
    else:
        neg = np.conj(pos)
    return np.concatenate([neg[::-1], [0.0], pos])


def fit_decay(coeffs: np.ndarray, floor: float = 1e-13) -> tuple[float, float]:
    """Fit |f_hat(n)| <= c exp(-2 pi delta0 |n|).

    delta0 comes from least squares on log|f_hat(n)| over n >= 1 where the
    coefficients exceed ``floor``; c is then the smallest constant making the
    bound hold on every one of those coefficients.
    """
    n_max = (len(coeffs) - 1) // 2
    n = np.arange(1, n_max + 1)
    mag = np.maximum(np.abs(coeffs[n_max + 1 :]), np.abs(coeffs[: n_max][::-1]))
    keep = mag > floor
    if keep.sum() < 2:
        raise ValueError("too few significant Fourier coefficients to fit a decay rate")
    slope, _ = np.polyfit(n[keep], np.log(mag[keep]), 1)
    delta0 = -slope / TWO_PI
    c = float(np.max(mag[keep] * np.exp(TWO_PI * delta0 * n[keep])))
    return float(delta0), c


@dataclass(frozen=True, eq=False)
class WindingFactorization:
    couplings: CouplingTriple
    alpha: float
    roots: tuple
    reflected: bool
    winding: int  # -1 when l3 > l1, +1 after the l1 <-> l3 reflection
    grid: np.ndarray
    f_samples: np.ndarray
    f_fourier: np.ndarray  # n = -N..N
    delta0: float
    c_bound: float

    def f(self, theta):
        return winding_f(self.roots, self.alpha, theta, self.reflected)

    @property
    def n_max(self) -> int:
        return (len(self.f_fourier) - 1) // 2

    def to_torus_function(self):
        from .birkhoff import AnalyticTorusFunction

        return AnalyticTorusFunction(self.f_fourier, self.delta0, self.c_bound)


class FactorizationCheck(NamedTuple):
    max_residual: float
    mean_f: float
    conj_residual: float
    norm_residual: float
    winding_number: int


def factorize(lam, alpha: float, grid_size: int = 4096) -> WindingFactorization:
    """Zero-mean phase f with c_hat/|c_hat| = exp(-+ 2 pi i (theta + alpha/2) + i f).

    Requires region III, l1 + l3 > 1 and l1 != l3.  For l1 > l3 the
    factorisation of the reflected couplings (l3, l2, l1) is used through
    c_hat(theta) = c_hat'(-theta - alpha), which flips the linear winding to +1.
    """
    lam = CouplingTriple.of(lam)
    _check_grid(grid_size)
    lab = classify(lam)
    if not lab.region.startswith("III") or lam.s <= 1.0 or lam.isotropic:
        raise ValueError(
            f"factorization not defined for {lam.as_tuple()}: need region III, "
            "l1 + l3 > 1 and l1 != l3"
        )
    reflected = lam.l1 > lam.l3
    work = CouplingTriple(lam.l3, lam.l2, lam.l1) if reflected else lam
    roots = dual_symbol_roots(work).roots
    grid = np.arange(grid_size) / grid_size
    f_samples = winding_f(roots, alpha, grid, reflected)
    spec = np.fft.fft(f_samples) / grid_size
    n_max = grid_size // 2 - 1
    coeffs = np.concatenate([spec[-n_max:], spec[: n_max + 1]])
    coeffs[n_max] = 0.0
    # enforce exact Hermitian symmetry of a real function
    coeffs = 0.5 * (coeffs + np.conj(coeffs[::-1]))
    delta0, c = fit_decay(coeffs)
    return WindingFactorization(
        lam, float(alpha), tuple(roots), reflected, 1 if reflected else -1,
        grid, f_samples, coeffs, delta0, c,
    )


def verify_factorization(w: WindingFactorization, grid_size: int | None = None) -> FactorizationCheck:
    """Sup-grid residuals of both unimodular displays plus |mean f|.

    On the factorization's own grid the stored samples are checked, so a
    corrupted sample shows up; other grid sizes re-evaluate f.
    """
    G = grid_size or len(w.grid)
    theta = np.arange(G) / G
    lam_hat = sigma(w.couplings)
    c = c_symbol(lam_hat, w.alpha, theta)
    ct = c_tilde(lam_hat, w.alpha, theta)
    mod = abs_c(lam_hat, w.alpha, theta)
    f = w.f_samples if G == len(w.grid) else w.f(theta)
    lin = w.winding * TWO_PI * (theta + w.alpha / 2.0)
    res = np.max(np.abs(c / mod - np.exp(1j * (lin + f))))
    conj_res = np.max(np.abs(ct / mod - np.exp(-1j * (lin + f))))

    # the ratio prod (z - y_s) / prod (1/z - y_s) is unimodular
    t = -theta - w.alpha if w.reflected else theta
    z = np.exp(1j * TWO_PI * (t + w.alpha / 2.0))
    num = np.ones_like(z)
    den = np.ones_like(z)
    for y in w.roots:
        num = num * (z - y)
        den = den * (1.0 / z - y)
    norm_res = float(np.max(np.abs(np.abs(num / den) - 1.0)))

    ratio = c / mod
    steps = np.angle(np.roll(ratio, -1) / ratio)
    winding_number = int(round(steps.sum() / TWO_PI))
    return FactorizationCheck(float(res), float(abs(np.mean(f))), float(conj_res), norm_res, winding_number)
