"""Finite-volume spectra: Bloch approximants at rational alpha and Dirichlet truncations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import minimize_scalar

from ._util import parallel_map
from .model import CouplingTriple, Phase, c_symbol, classify, potential_v, sigma

__all__ = [
    "PeriodicApproximantSpectrum",
    "TruncatedEigensystem",
    "LocalizationDiagnostics",
    "bloch_matrix",
    "approximant_spectrum",
    "merge_bands",
    "hausdorff",
    "duality_spectrum_check",
    "butterfly",
    "truncated_eigensystem",
    "localization_diagnostics",
    "decay_rate",
    "point_spectrum_probe",
]

TWO_PI = 2.0 * math.pi


def _pq(p, q=None) -> tuple[int, int]:
    if q is None:
        fr = Fraction(p)
        p, q = fr.numerator, fr.denominator
    p, q = int(p), int(q)
    if q <= 0:
        raise ValueError("q must be positive")
    if math.gcd(p, q) != 1:
        raise ValueError(f"gcd({p}, {q}) != 1")
    return p, q


# --------------------------------------------------------------------------
# Bloch approximants


def bloch_matrix(lam, p, q=None, theta: float = 0.0, k: float = 0.0) -> np.ndarray:
    """q x q Bloch matrix of H at alpha = p/q, phase theta, quasi-momentum k."""
    p, q = _pq(p, q)
    lam = CouplingTriple.of(lam)
    alpha = p / q
    t = theta + alpha * np.arange(q)
    c = np.asarray(c_symbol(lam, alpha, t), dtype=complex)
    H = np.diag(potential_v(t).astype(complex))
    up = np.zeros((q, q), dtype=complex)
    for n in range(q - 1):
        up[n, n + 1] += c[n]
    # the wraparound hop from site q-1 to site q = site 0 carries the Bloch phase
    up[q - 1, 0] += c[q - 1] * np.exp(1j * TWO_PI * k)
    return H + up + up.conj().T


def _hop_phase(lam, p, q, theta) -> float:
    """arg of the product of hoppings around one period, in units of 2 pi."""
    c = c_symbol(lam, p / q, theta + (p / q) * np.arange(q))
    prod_log = np.sum(np.log(np.asarray(c, dtype=complex) + 0j))
    return float(prod_log.imag / TWO_PI)


def _edge_curves(lam, p, q, theta, k_extra=()) -> tuple[np.ndarray, np.ndarray]:
    """Per-band lower and upper eigenvalue over all k at fixed theta.

    The characteristic polynomial depends on k only through
    Re(e^{2 pi i k} prod c), so band edges sit where that product is real.
    """
    k0 = -_hop_phase(lam, p, q, theta)
    ks = [k0, k0 + 0.5, *k_extra]
    ev = np.array([np.linalg.eigvalsh(bloch_matrix(lam, p, q, theta, k)) for k in ks])
    return ev.min(axis=0), ev.max(axis=0)


@dataclass(frozen=True, eq=False)
class PeriodicApproximantSpectrum:
    p: int
    q: int
    couplings: CouplingTriple
    bands: np.ndarray  # (nb, 2), sorted and disjoint
    raw_bands: np.ndarray  # (q, 2) before merging

    @property
    def total_measure(self) -> float:
        return float(np.sum(self.bands[:, 1] - self.bands[:, 0]))

    @property
    def e_range(self) -> tuple[float, float]:
        return float(self.bands[0, 0]), float(self.bands[-1, 1])


def merge_bands(intervals: np.ndarray, rel_gap: float = 1e-9) -> np.ndarray:
    iv = np.asarray(intervals, dtype=float)
    iv = iv[np.argsort(iv[:, 0])]
    span = iv[:, 1].max() - iv[:, 0].min()
    thr = rel_gap * span
    out = [list(iv[0])]
    for a, b in iv[1:]:
        if a <= out[-1][1] + thr:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return np.array(out)


def approximant_spectrum(
    lam,
    p,
    q=None,
    theta_grid: int = 16,
    k_grid: int = 8,
    refine: bool = True,
    threads: int | None = None,
) -> PeriodicApproximantSpectrum:
    """Union over theta and k of the Bloch spectra at alpha = p/q, as merged bands.

    theta runs over one period [0, 1/q) of the theta dependence.  At each
    theta the k extremes are taken at the two exact edge momenta (plus a k
    grid as a guard); the theta extremes of each band edge are then polished
    with a bounded scalar minimiser started from the best grid cell.
    """
    if theta_grid < 8 or k_grid < 8:
        raise ValueError("grids must be >= 8")
    p, q = _pq(p, q)
    lam = CouplingTriple.of(lam)
    period = 1.0 / q
    thetas = np.arange(theta_grid) * period / theta_grid
    k_extra = tuple(np.arange(k_grid) / k_grid)
    curves = parallel_map(lambda t: _edge_curves(lam, p, q, t, k_extra), thetas, threads)
    lo = np.array([c[0] for c in curves])  # (theta, band)
    hi = np.array([c[1] for c in curves])
    lower = lo.min(axis=0)
    upper = hi.max(axis=0)
    if refine:
        h = period / theta_grid
        for i in range(q):
            for sign, arr in ((1.0, lo[:, i]), (-1.0, hi[:, i])):
                # refine around every local extremum of the periodic grid curve
                vals = sign * arr
                cand = [j for j in range(theta_grid)
                        if vals[j] <= vals[j - 1] and vals[j] <= vals[(j + 1) % theta_grid]]
                for j in cand:
                    fun = (lambda t, i=i, s=sign: s * (_edge_curves(lam, p, q, t)[0 if s > 0 else 1][i]))
                    res = minimize_scalar(
                        fun, bounds=(thetas[j] - h, thetas[j] + h), method="bounded",
                        options={"xatol": 1e-12 * period},
                    )
                    best = sign * res.fun
                    if sign > 0:
                        lower[i] = min(lower[i], best)
                    else:
                        upper[i] = max(upper[i], best)
    raw = np.column_stack([lower, upper])
    return PeriodicApproximantSpectrum(p, q, lam, merge_bands(raw), raw)


def _dist_to_union(x: float, bands: np.ndarray) -> float:
    inside = (bands[:, 0] <= x) & (x <= bands[:, 1])
    if inside.any():
        return 0.0
    return float(np.min(np.minimum(np.abs(bands[:, 0] - x), np.abs(bands[:, 1] - x))))


def _directed(A: np.ndarray, B: np.ndarray) -> float:
    # d(., B) restricted to an interval of A peaks at its ends or at gap midpoints of B
    mids = 0.5 * (B[:-1, 1] + B[1:, 0])
    best = 0.0
    for a, b in A:
        pts = [a, b, *[m for m in mids if a < m < b]]
        best = max(best, max(_dist_to_union(x, B) for x in pts))
    return best


def hausdorff(A, B) -> float:
    """Hausdorff distance between two finite unions of closed intervals."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    return max(_directed(A, B), _directed(B, A))


def duality_spectrum_check(lam, p, q=None, theta_grid: int = 16, k_grid: int = 8, threads=None) -> float:
    """Hausdorff distance between spec(H_lam) and l2 * spec(H_sigma(lam)) at alpha = p/q."""
    lam = CouplingTriple.of(lam)
    a = approximant_spectrum(lam, p, q, theta_grid, k_grid, threads=threads)
    b = approximant_spectrum(sigma(lam), p, q, theta_grid, k_grid, threads=threads)
    return hausdorff(a.bands, lam.l2 * b.bands)


def butterfly(lam, qmax: int, theta_grid: int = 8, k_grid: int = 8, threads=None) -> list[tuple]:
    """Rows (p, q, band_index, E_min, E_max) for all reduced p/q in [0, 1), q <= qmax."""
    pairs = [(p, q) for q in range(1, qmax + 1) for p in range(q) if math.gcd(p, q) == 1]
    specs = parallel_map(
        lambda pq: approximant_spectrum(lam, pq[0], pq[1], theta_grid, k_grid), pairs, threads
    )
    rows = []
    for (p, q), sp in zip(pairs, specs):
        for i, (a, b) in enumerate(sp.bands):
            rows.append((p, q, i, float(a), float(b)))
    return rows


# --------------------------------------------------------------------------
# Dirichlet truncations


@dataclass(frozen=True, eq=False)
class TruncatedEigensystem:
    N: int
    theta: Phase
    alpha: float
    couplings: CouplingTriple
    eigenvalues: np.ndarray
    real_vectors: np.ndarray  # eigenvectors of the gauge-fixed real matrix, columns
    gauge: np.ndarray  # unimodular site phases: u = gauge * w
    indices: np.ndarray  # positions of the eigenvalues in the full ordered spectrum

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.gauge[:, None] * self.real_vectors

    def matrix(self) -> np.ndarray:
        d, e = _tridiagonal(self.couplings, self.alpha, float(self.theta), self.N)
        return np.diag(d.astype(complex)) + np.diag(e, 1) + np.diag(e.conj(), -1)

    def residuals(self) -> np.ndarray:
        """||H u - E u|| per eigenpair, evaluated with the complex matrix."""
        d, e = _tridiagonal(self.couplings, self.alpha, float(self.theta), self.N)
        U = self.eigenvectors
        HU = d[:, None] * U
        HU[:-1] += e[:, None] * U[1:]
        HU[1:] += e.conj()[:, None] * U[:-1]
        return np.linalg.norm(HU - U * self.eigenvalues[None, :], axis=0)


def _tridiagonal(lam, alpha, theta, N):
    n = np.arange(-N, N + 1)
    t = theta + n * alpha
    d = potential_v(t)
    e = np.asarray(c_symbol(lam, alpha, t[:-1]), dtype=complex)
    return d, e


def _gauge(e: np.ndarray) -> np.ndarray:
    """Site phases g with conj(g_n) e_n g_{n+1} = |e_n|."""
    ph = np.ones(len(e) + 1, dtype=complex)
    for i, x in enumerate(e):
        ph[i + 1] = ph[i] * (np.conj(x) / abs(x) if abs(x) > 0 else 1.0)
    return ph


def truncated_eigensystem(
    lam,
    alpha: float,
    theta,
    N: int,
    energy_window: tuple[float, float] | None = None,
    index_window: tuple[int, int] | None = None,
    chunk: int = 2048,
) -> TruncatedEigensystem:
    """Eigenpairs of H restricted to [-N, N] with Dirichlet boundary.

    Complex hoppings are gauged to |c| so the solve is a real symmetric
    tridiagonal one.  ``index_window`` (inclusive) or ``energy_window``
    restricts the eigenpairs returned.
    """
    lam = CouplingTriple.of(lam)
    ph = theta if isinstance(theta, Phase) else Phase.generic(theta)
    d, e = _tridiagonal(lam, alpha, ph.theta, N)
    g = _gauge(e)
    ae = np.abs(e)
    dim = 2 * N + 1
    if energy_window is not None:
        w, v = eigh_tridiagonal(d, ae, select="v", select_range=energy_window)
        all_w = eigh_tridiagonal(d, ae, eigvals_only=True)
        # the two solves differ in the last bits, so locate by nearest value
        idx = int(np.argmin(np.abs(all_w - w[0]))) + np.arange(len(w)) if len(w) else np.arange(0)
        return TruncatedEigensystem(N, ph, alpha, lam, w, v, g, idx)
    lo, hi = index_window if index_window is not None else (0, dim - 1)
    ws, vs = [], []
    for a in range(lo, hi + 1, chunk):
        b = min(a + chunk - 1, hi)
        w, v = eigh_tridiagonal(d, ae, select="i", select_range=(a, b), lapack_driver="stemr")
        ws.append(w)
        vs.append(v)
    return TruncatedEigensystem(
        N, ph, alpha, lam, np.concatenate(ws), np.hstack(vs), g, np.arange(lo, hi + 1)
    )


@dataclass(frozen=True, eq=False)
class LocalizationDiagnostics:
    ipr: np.ndarray
    edge_mass: np.ndarray
    decay_rate: np.ndarray


def _ipr_edge(V: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    P = np.abs(V) ** 2
    P = P / P.sum(axis=0, keepdims=True)
    ipr = np.sum(P * P, axis=0)
    n = np.arange(-N, N + 1)
    edge = P[np.abs(n) > 0.9 * N].sum(axis=0)
    return ipr, edge


def decay_rate(u: np.ndarray, floor: float = 1e-12, min_points: int = 8) -> float:
    """Exponential rate from a least-squares fit of log|u_n| against |n - n_peak|.

    Only points above ``floor`` times the peak enter; 0 when too few remain.
    """
    a = np.abs(np.asarray(u))
    j0 = int(np.argmax(a))
    keep = a > floor * a[j0]
    dist = np.abs(np.arange(len(a)) - j0)
    keep &= dist > 0
    if keep.sum() < min_points:
        return 0.0
    slope, _ = np.polyfit(dist[keep], np.log(a[keep] / a[j0]), 1)
    return float(max(-slope, 0.0))


def localization_diagnostics(es: TruncatedEigensystem, decay_for=None) -> LocalizationDiagnostics:
    """IPR and edge mass for every pair; decay rates for the indices in ``decay_for`` (else 0)."""
    ipr, edge = _ipr_edge(es.real_vectors, es.N)
    rates = np.zeros(len(ipr))
    if decay_for is not None:
        for j in np.atleast_1d(decay_for):
            rates[j] = decay_rate(es.real_vectors[:, j])
    return LocalizationDiagnostics(ipr, edge, rates)


@dataclass
class ProbeRow:
    theta: float
    kind: str
    N: int
    max_ipr: float
    n_kept: int
    n_window: int
    energy_at_max: float


def _probe_one(lam, alpha, ph: Phase, N: int, mid_fraction: float, edge_cut: float, chunk: int) -> ProbeRow:
    d, e = _tridiagonal(lam, alpha, ph.theta, N)
    ae = np.abs(e)
    dim = 2 * N + 1
    skip = int(round(dim * (1.0 - mid_fraction) / 2.0))
    lo, hi = skip, dim - 1 - skip
    best, best_e, kept = 0.0, float("nan"), 0
    for a in range(lo, hi + 1, chunk):
        b = min(a + chunk - 1, hi)
        w, v = eigh_tridiagonal(d, ae, select="i", select_range=(a, b), lapack_driver="stemr")
        ipr, edge = _ipr_edge(v, N)
        ok = edge < edge_cut
        kept += int(ok.sum())
        if ok.any():
            j = int(np.argmax(np.where(ok, ipr, -1.0)))
            if ipr[j] > best:
                best, best_e = float(ipr[j]), float(w[j])
    return ProbeRow(ph.theta, ph.kind, N, best, kept, hi - lo + 1, best_e)


@dataclass
class PointSpectrumReport:
    couplings: CouplingTriple
    alpha: float
    rows: list = field(default_factory=list)
    region: str = ""

    def max_ipr(self, theta: float, N: int) -> float:
        for r in self.rows:
            if r.N == N and abs(r.theta - theta) < 1e-15:
                return r.max_ipr
        raise KeyError((theta, N))

    def contrast(self, N: int | None = None) -> float | None:
        """max IPR at alpha-rational phases over max IPR at generic ones, at the largest N."""
        N = N or max(r.N for r in self.rows)
        rat = [r.max_ipr for r in self.rows if r.N == N and r.kind == "alpha_rational"]
        gen = [r.max_ipr for r in self.rows if r.N == N and r.kind != "alpha_rational"]
        if not rat or not gen:
            return None
        return max(rat) / max(gen)

    def trend(self, theta: float) -> list[tuple[int, float]]:
        return sorted((r.N, r.max_ipr) for r in self.rows if abs(r.theta - theta) < 1e-15)

    def as_dict(self) -> dict:
        return {
            "couplings": list(self.couplings.as_tuple()),
            "alpha": self.alpha,
            "region": self.region,
            "rows": [r.__dict__ for r in self.rows],
            "contrast_at_max_N": self.contrast(),
        }


def point_spectrum_probe(
    lam,
    alpha: float,
    thetas: Sequence,
    Ns: Sequence[int],
    mid_fraction: float = 0.6,
    edge_cut: float = 0.01,
    chunk: int = 2048,
    threads: int | None = None,
) -> PointSpectrumReport:
    """Max filtered IPR per (theta, N) over the central part of the spectrum.

    Qualitative: a finite truncation can only indicate the infinite-volume
    spectral type.
    """
    lam = CouplingTriple.of(lam)
    phases = [t if isinstance(t, Phase) else Phase.generic(t) for t in thetas]
    jobs = [(ph, N) for ph in phases for N in Ns]
    rows = parallel_map(lambda j: _probe_one(lam, alpha, j[0], j[1], mid_fraction, edge_cut, chunk), jobs, threads)
    return PointSpectrumReport(lam, float(alpha), rows, classify(lam).region)
