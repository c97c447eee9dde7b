"""Fourier duality: the dual equations, the matrix field M_theta and its determinant.

A sequence u_n solving H_{lam, theta} u = E u becomes the torus function
u(x) = sum_n u_n e^{2 pi i n x}, which satisfies

    e^{2 pi i theta} c_hat(x) u(x + alpha) + e^{-2 pi i theta} c~_hat(x - alpha) u(x - alpha)
        + 2 cos(2 pi x) u(x) = (E / l2) u(x)

with c_hat the symbol of sigma(lam), together with the same equation at -x.
All shifts and reflections act on the Fourier coefficients, never on samples.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import (
    CouplingTriple,
    Phase,
    abs_c,
    c_symbol,
    c_tilde,
    in_singular_regime,
    real_roots_on_torus,
    sigma,
)

__all__ = [
    "TorusFunctionGrid",
    "DetIdentityReport",
    "sequence_to_torus",
    "dual_equation_residual",
    "conjugacy_residual",
    "duality_matrix_field",
    "det_identity_check",
    "det_cascade_consistency",
    "singular_contradiction_probe",
    "block_eigenvector",
    "localized_test_vector",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class TorusFunctionGrid:
    """u on the grid x_j = j/G, stored with its Fourier coefficients u_n, n = n0 .. n0+len-1."""

    samples: np.ndarray
    coeffs: np.ndarray
    n0: int

    @property
    def G(self) -> int:
        return len(self.samples)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.G) / self.G

    @property
    def modes(self) -> np.ndarray:
        return self.n0 + np.arange(len(self.coeffs))

    def l2_norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def evaluate(self, sign: int = 1, shift: float = 0.0) -> np.ndarray:
        """Samples of u(sign * x + shift) on the grid, from the coefficients."""
        n = self.modes
        c = self.coeffs * np.exp(1j * TWO_PI * n * shift)
        idx = (sign * n) % self.G
        buf = np.zeros(self.G, dtype=complex)
        np.add.at(buf, idx, c)
        return np.fft.ifft(buf) * self.G

    def scaled(self, a: complex) -> "TorusFunctionGrid":
        return TorusFunctionGrid(a * self.samples, a * self.coeffs, self.n0)


def sequence_to_torus(u, G: int, n0: int | None = None) -> TorusFunctionGrid:
    """Fourier series of a finite sequence on a G-point grid.

    ``u`` is indexed from n0; by default it is centred, u[0] <-> n = -(len-1)/2.
    """
    u = np.asarray(u, dtype=complex)
    L = len(u)
    if n0 is None:
        if L % 2 == 0:
            raise ValueError("centred sequences need odd length; pass n0")
        n0 = -(L - 1) // 2
    if G < 2 or G & (G - 1):
        raise ValueError(f"grid size must be a power of two, got {G}")
    if G < 2 * L:
        raise ValueError(f"aliasing error: grid size {G} < 2 * {L}")
    f = TorusFunctionGrid(np.zeros(G, dtype=complex), u.copy(), int(n0))
    return TorusFunctionGrid(f.evaluate(), u.copy(), int(n0))


def _theta(theta) -> Phase:
    return theta if isinstance(theta, Phase) else Phase.generic(theta)


def _dual_residuals(lam, alpha, theta, E, u: TorusFunctionGrid):
    lam = CouplingTriple.of(lam)
    lh = sigma(lam)
    th = _theta(theta).theta
    x = u.x
    ep, em = np.exp(1j * TWO_PI * th), np.exp(-1j * TWO_PI * th)
    eps = E / lam.l2
    u0 = u.samples
    res1 = (
        ep * c_symbol(lh, alpha, x) * u.evaluate(1, alpha)
        + em * c_tilde(lh, alpha, x - alpha) * u.evaluate(1, -alpha)
        + (2.0 * np.cos(TWO_PI * x) - eps) * u0
    )
    # the same equation at -x
    um = u.evaluate(-1)
    res2 = (
        ep * c_symbol(lh, alpha, -x) * u.evaluate(-1, alpha)
        + em * c_tilde(lh, alpha, -x - alpha) * u.evaluate(-1, -alpha)
        + (2.0 * np.cos(TWO_PI * x) - eps) * um
    )
    return res1, res2


def dual_equation_residual(lam, alpha: float, theta, E: float, u: TorusFunctionGrid, norm: str = "l2") -> dict:
    """Residuals r1, r2 of the dual equation at x and at -x (L2 over the grid, or sup)."""
    res1, res2 = _dual_residuals(lam, alpha, theta, E, u)
    if norm == "l2":
        f = lambda r: float(np.sqrt(np.mean(np.abs(r) ** 2)))
    elif norm == "sup":
        f = lambda r: float(np.max(np.abs(r)))
    else:
        raise ValueError(f"unknown norm {norm!r}")
    return {"r1": f(res1), "r2": f(res2)}


def duality_matrix_field(theta, alpha: float, u: TorusFunctionGrid, shift: float = 0.0) -> np.ndarray:
    """M_theta(x + shift) on the grid, shape (G, 2, 2)."""
    th = _theta(theta).theta
    M = np.empty((u.G, 2, 2), dtype=complex)
    M[:, 0, 0] = u.evaluate(1, shift)
    M[:, 0, 1] = u.evaluate(-1, -shift)
    M[:, 1, 0] = np.exp(-1j * TWO_PI * th) * u.evaluate(1, shift - alpha)
    M[:, 1, 1] = np.exp(1j * TWO_PI * th) * u.evaluate(-1, alpha - shift)
    return M


def conjugacy_residual(
    lam, alpha: float, theta, E: float, u: TorusFunctionGrid, cutoff: float = 1e-8, return_excluded: bool = False
):
    """sup over the grid of ||A(x) M(x) - M(x + alpha) R_theta|| (Frobenius).

    Grid points with |c_hat(x)| <= cutoff are skipped; with ``return_excluded``
    their count is returned as well.
    """
    lam = CouplingTriple.of(lam)
    lh = sigma(lam)
    th = _theta(theta).theta
    x = u.x
    c = c_symbol(lh, alpha, x)
    ok = np.abs(c) > cutoff
    ct = c_tilde(lh, alpha, x - alpha)
    A = np.empty((u.G, 2, 2), dtype=complex)
    A[:, 0, 0] = (E / lam.l2 - 2.0 * np.cos(TWO_PI * x)) / np.where(ok, c, 1.0)
    A[:, 0, 1] = -ct / np.where(ok, c, 1.0)
    A[:, 1, 0] = 1.0
    A[:, 1, 1] = 0.0
    M0 = duality_matrix_field(th, alpha, u)
    M1 = duality_matrix_field(th, alpha, u, shift=alpha)
    R = np.diag([np.exp(1j * TWO_PI * th), np.exp(-1j * TWO_PI * th)])
    D = A @ M0 - M1 @ R
    err = np.sqrt(np.sum(np.abs(D) ** 2, axis=(1, 2)))
    val = float(np.max(err[ok])) if ok.any() else 0.0
    if return_excluded:
        return val, int((~ok).sum())
    return val


@dataclass(frozen=True)
class DetIdentityReport:
    b_estimate: float
    relative_variation: float
    grid_size: int
    excluded: int
    hypothesis_ok: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _det_M(theta, alpha, u: TorusFunctionGrid, shift: float = 0.0) -> np.ndarray:
    M = duality_matrix_field(theta, alpha, u, shift)
    return M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]


def det_identity_check(lam, alpha: float, theta, u: TorusFunctionGrid, exclude: float = 0.05) -> DetIdentityReport:
    """How constant |det M(x)| * |c|_hat(x - alpha) is over the grid.

    b_estimate is the median of the product after dropping the ``exclude``
    fraction of points with the smallest |c|_hat(x - alpha); the variation is
    (max - min) / median over the same points.
    """
    ph = _theta(theta)
    ok_hyp = not ph.is_alpha_rational
    if not ok_hyp:
        warnings.warn("hypothesis violated: theta was constructed alpha-rational", stacklevel=2)
    lh = sigma(CouplingTriple.of(lam))
    x = u.x
    mod = abs_c(lh, alpha, x - alpha)
    prod = np.abs(_det_M(ph.theta, alpha, u)) * mod
    n_drop = int(math.floor(exclude * u.G))
    keep = np.argsort(mod, kind="stable")[n_drop:]
    vals = prod[keep]
    med = float(np.median(vals))
    var = float((vals.max() - vals.min()) / med) if med > 0 else math.inf
    return DetIdentityReport(med, var, u.G, n_drop, ok_hyp)


def det_cascade_consistency(lam, alpha: float, theta, u: TorusFunctionGrid, k: int) -> float:
    """max |det M(x + k alpha) - R_k(x) det M(x)| with R_k the cocycle product ratio.

    For a solution of both dual equations det M obeys the one-step law
    det M(x + alpha) = c~_hat(x - alpha) / c_hat(x) * det M(x).
    """
    from .cocycle import product_ratio

    th = _theta(theta).theta
    d0 = _det_M(th, alpha, u)
    dk = _det_M(th, alpha, u, shift=k * alpha)
    return float(np.max(np.abs(dk - product_ratio(lam, alpha, u.x, k) * d0)))


def singular_contradiction_probe(lam, alpha: float, theta=0.0, u: TorusFunctionGrid | None = None, ks=range(8, 19)) -> dict:
    """Growth of the grid quadrature of 1/|c|_hat as the grid refines.

    If |det M| = b / |c|_hat then b * mean(1/|c|_hat) <= 2 ||u||^2, so a
    divergent quadrature forces b = 0.  Reports Q(G), its slope against
    log G, the log-log exponent and the implied bound on b.
    """
    lam = CouplingTriple.of(lam)
    if not in_singular_regime(lam):
        raise ValueError(f"not in singular regime: {lam.as_tuple()}")
    lh = sigma(lam)
    norm_sq = u.l2_norm_sq() if u is not None else 1.0
    Gs, Q = [], []
    for k in ks:
        G = 2 ** k
        x = np.arange(G) / G
        Gs.append(G)
        Q.append(float(np.mean(1.0 / np.abs(c_symbol(lh, alpha, x)))))
    logG = np.log(Gs)
    Q = np.array(Q)
    slope = float(np.polyfit(logG, Q, 1)[0])
    exponent = float(np.polyfit(logG, np.log(Q), 1)[0])
    return {
        "couplings": list(lam.as_tuple()),
        "zeros": real_roots_on_torus(lh, alpha),
        "grid_sizes": Gs,
        "quadrature": Q.tolist(),
        "slope_vs_logG": slope,
        "loglog_exponent": exponent,
        "b_upper": (2.0 * norm_sq / Q).tolist(),
        "theta": _theta(theta).theta,
    }


# --------------------------------------------------------------------------
# test vectors


def block_eigenvector(lam, p: int, q: int, index: int = 0):
    """An exact finitely supported eigenvector at alpha = p/q.

    Needs a real zero theta0 of c_lam.  At theta = theta0 the hopping
    c(theta + n alpha) vanishes for every n divisible by q, so sites 1..q form
    an invariant block; its eigenvectors extended by zero are l^2 solutions.
    Returns (theta, E, u, n0) with u indexed from n0 = 1.
    """
    lam = CouplingTriple.of(lam)
    alpha = p / q
    zeros = real_roots_on_torus(lam, alpha)
    if not zeros:
        raise ValueError("c_lam has no real zero; no decoupled block")
    th = zeros[0]
    n = np.arange(1, q + 1)
    t = th + n * alpha
    H = np.diag(2.0 * np.cos(TWO_PI * t)).astype(complex)
    c = c_symbol(lam, alpha, t[:-1])
    H += np.diag(c, 1) + np.diag(np.conj(c), -1)
    w, v = np.linalg.eigh(H)
    return th, float(w[index]), v[:, index], 1


def localized_test_vector(lam, alpha: float, theta, N: int, window: int = 64):
    """(E, u) for the mid-spectrum Dirichlet eigenvector peaked closest to the centre.

    u is indexed -N..N.
    """
    from .spectral import truncated_eigensystem

    dim = 2 * N + 1
    mid = dim // 2
    es = truncated_eigensystem(lam, alpha, theta, N, index_window=(mid - window, mid + window))
    peaks = np.abs(np.argmax(np.abs(es.real_vectors), axis=0) - N)
    j = int(np.argmin(peaks))
    return float(es.eigenvalues[j]), es.eigenvectors[:, j]
