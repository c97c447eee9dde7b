"""Coupling constants, the region picture and the hopping symbol.

The extended Harper's model on l^2(Z) reads

    (H u)_n = c(theta + n alpha) u_{n+1} + c~(theta + (n-1) alpha) u_{n-1}
              + 2 cos(2 pi (theta + n alpha)) u_n

with c(t) = l1 e^{-2 pi i (t + alpha/2)} + l2 + l3 e^{2 pi i (t + alpha/2)} and
c~ the reflection of c that agrees with its complex conjugate on real t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "CouplingTriple",
    "RegionLabel",
    "Phase",
    "SymbolFunction",
    "DualRoots",
    "classify",
    "sigma",
    "c_symbol",
    "c_tilde",
    "abs_c",
    "potential_v",
    "symbol_eval",
    "dual_symbol_roots",
    "real_roots_on_torus",
    "dual_has_singularity",
    "in_singular_regime",
    "mean_log_abs_c",
    "detect_alpha_rational",
]

TWO_PI = 2.0 * math.pi
LINE_TOL = 1e-12


@dataclass(frozen=True)
class CouplingTriple:
    l1: float
    l2: float
    l3: float

    def __post_init__(self):
        for name in ("l1", "l2", "l3"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"domain error: {name}={v} is not finite")
        if self.l1 < 0 or self.l3 < 0:
            raise ValueError(f"domain error: need l1, l3 >= 0, got {self}")
        if self.l2 <= 0:
            raise ValueError(f"domain error: need l2 > 0, got {self}")

    @classmethod
    def of(cls, lam) -> "CouplingTriple":
        if isinstance(lam, CouplingTriple):
            return lam
        l1, l2, l3 = lam
        return cls(float(l1), float(l2), float(l3))

    @property
    def s(self) -> float:
        return self.l1 + self.l3

    @property
    def isotropic(self) -> bool:
        return self.l1 == self.l3

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.l1, self.l2, self.l3)


@dataclass(frozen=True)
class RegionLabel:
    region: str  # "I", "II", "III_isotropic", "III_anisotropic"
    boundary_flags: frozenset
    interior: bool

    @property
    def self_dual(self) -> bool:
        return self.region.startswith("III") or "L_II" in self.boundary_flags


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def classify(lam, tol: float = LINE_TOL) -> RegionLabel:
    """Place a coupling triple in the region picture.

    Regions are the closed sets
      I:   0 <= l1+l3 <= 1,  0 < l2 <= 1
      II:  0 <= l1+l3 <= l2, 1 <= l2
      III: max(1, l2) <= l1+l3
    which overlap on their boundaries; III takes precedence, then I.  The
    boundary lines are reported separately as flags.  Line equalities use a
    relative tolerance ``tol``; isotropy l1 == l3 is tested exactly.
    """
    lam = CouplingTriple.of(lam)
    s, l2 = lam.s, lam.l2

    def ge(a, b):
        return a >= b or _close(a, b, tol)

    flags = set()
    if _close(s, 1.0, tol) and ge(1.0, l2):
        flags.add("L_I")
    if ge(1.0, s) and _close(l2, 1.0, tol):
        flags.add("L_II")
    if _close(s, l2, tol) and ge(s, 1.0):
        flags.add("L_III")

    if ge(s, max(1.0, l2)):
        region = "III_isotropic" if lam.isotropic else "III_anisotropic"
        interior = s > max(1.0, l2)
    elif ge(1.0, s) and ge(1.0, l2):
        region = "I"
        interior = 0.0 < s < 1.0 and l2 < 1.0
    else:
        region = "II"
        interior = 0.0 < s < l2 and l2 > 1.0
    interior = interior and not flags
    return RegionLabel(region, frozenset(flags), interior)


def sigma(lam) -> CouplingTriple:
    """Duality map (l1, l2, l3) -> (l3/l2, 1/l2, l1/l2)."""
    lam = CouplingTriple.of(lam)
    return CouplingTriple(lam.l3 / lam.l2, 1.0 / lam.l2, lam.l1 / lam.l2)


# --------------------------------------------------------------------------
# symbols


def c_symbol(lam, alpha: float, theta):
    lam = CouplingTriple.of(lam)
    z = np.exp(1j * TWO_PI * (np.asarray(theta) + alpha / 2))
    return lam.l1 / z + lam.l2 + lam.l3 * z


def c_tilde(lam, alpha: float, theta):
    lam = CouplingTriple.of(lam)
    z = np.exp(1j * TWO_PI * (np.asarray(theta) + alpha / 2))
    return lam.l1 * z + lam.l2 + lam.l3 / z


def potential_v(theta):
    return 2.0 * np.cos(TWO_PI * np.asarray(theta))


def abs_c(lam, alpha: float, theta, path_steps: int = 256):
    """|c|(theta): |c(theta)| on the real line, sqrt(c c~) continued off it.

    Off the real axis the square root is continued along the vertical segment
    from Re(theta), starting from the positive root.  A zero of c c~ on that
    segment makes the branch ambiguous and raises ``ValueError``.
    """
    theta = np.asarray(theta)
    if not np.iscomplexobj(theta) or np.all(theta.imag == 0):
        return np.abs(c_symbol(lam, alpha, np.real(theta)))
    re, im = theta.real, theta.imag
    ts = np.linspace(0.0, 1.0, path_steps + 1)
    prev = None
    for t in ts:
        pt = re + 1j * im * t
        w = c_symbol(lam, alpha, pt) * c_tilde(lam, alpha, pt)
        if np.any(np.abs(w) < 1e-14):
            raise ValueError("branch undefined: c*c~ vanishes on the continuation path")
        r = np.sqrt(w.astype(complex))
        if prev is None:
            r = np.where(r.real < 0, -r, r)
        else:
            r = np.where(np.abs(r - prev) <= np.abs(r + prev), r, -r)
        prev = r
    return prev


@dataclass(frozen=True)
class SymbolFunction:
    couplings: CouplingTriple
    alpha: float
    kind: str  # "c", "c_tilde", "abs_c", "potential_v"

    def __call__(self, theta):
        return symbol_eval(self, theta)


def symbol_eval(s: SymbolFunction, theta):
    if s.kind == "c":
        return c_symbol(s.couplings, s.alpha, theta)
    if s.kind == "c_tilde":
        return c_tilde(s.couplings, s.alpha, theta)
    if s.kind == "abs_c":
        return abs_c(s.couplings, s.alpha, theta)
    if s.kind == "potential_v":
        return potential_v(theta)
    raise ValueError(f"unknown symbol kind {s.kind!r}")


# --------------------------------------------------------------------------
# zeros


class DualRoots(NamedTuple):
    roots: tuple  # (y_small, y_big) by modulus; single root when degenerate
    degenerate: bool


def dual_symbol_roots(lam) -> DualRoots:
    """Roots of l1 z^2 + z + l3, which carry the zeros of the dual symbol.

    With z = exp(2 pi i (x + alpha/2)) the dual symbol is
    (l1/l2) z^{-1} (z - y_1)(z - y_2).  Roots are ordered by modulus.
    """
    lam = CouplingTriple.of(lam)
    l1, l3 = lam.l1, lam.l3
    if l1 == 0.0:
        if l3 == 0.0:
            raise ValueError("constant symbol, no roots")
        return DualRoots((complex(-l3),), True)
    disc = 1.0 - 4.0 * l1 * l3
    if disc >= 0.0:
        big = (-1.0 - math.sqrt(disc)) / (2.0 * l1)
        small = -2.0 * l3 / (1.0 + math.sqrt(disc))
        return DualRoots((complex(small), complex(big)), False)
    re = -1.0 / (2.0 * l1)
    im = math.sqrt(-disc) / (2.0 * l1)
    return DualRoots((complex(re, im), complex(re, -im)), False)


def real_roots_on_torus(lam, alpha: float, tol: float = LINE_TOL) -> list[float]:
    """All real theta in [0, 1) with c(theta) = 0.

    On the unit circle the imaginary part of c is (l3 - l1) sin(phi), so an
    anisotropic symbol can only vanish at phi = pi, which needs l1 + l3 = l2;
    an isotropic one vanishes where 2 l3 cos(phi) = -l2.
    """
    lam = CouplingTriple.of(lam)
    s, l2 = lam.s, lam.l2
    half = (0.5 - alpha / 2.0) % 1.0
    if s == 0.0:
        return []
    if lam.isotropic:
        if _close(s, l2, tol):
            return [half]
        if s < l2:
            return []
        phi = math.acos(-l2 / s) / TWO_PI
        return sorted({(phi - alpha / 2.0) % 1.0, (-phi - alpha / 2.0) % 1.0})
    if _close(s, l2, tol):
        return [half]
    return []


def dual_has_singularity(lam, tol: float = LINE_TOL) -> bool:
    """Whether the dual symbol c_{sigma(lam)} vanishes somewhere on the torus.

    Equivalent to: isotropic with l1 + l3 >= 1, or l1 + l3 = 1.  Within
    region III this is exactly III_isotropic or III_anisotropic with
    l1 + l3 = 1.
    """
    lam = CouplingTriple.of(lam)
    s = lam.s
    if s == 0.0:
        return False
    if lam.isotropic and (s >= 1.0 or _close(s, 1.0, tol)):
        return True
    return _close(s, 1.0, tol)


def in_singular_regime(lam, tol: float = LINE_TOL) -> bool:
    """III_isotropic, or III_anisotropic on l1 + l3 = 1."""
    lab = classify(lam, tol)
    if lab.region == "III_isotropic":
        return True
    return lab.region == "III_anisotropic" and _close(CouplingTriple.of(lam).s, 1.0, tol)


def mean_log_abs_c(lam) -> float:
    """Integral over the torus of log|c_lam|, by Jensen's formula.

    c_lam = z^{-1} (l3 z^2 + l2 z + l1) on |z| = 1, so the mean equals
    log|leading coefficient| + sum over roots of log max(1, |root|).
    """
    lam = CouplingTriple.of(lam)
    a, b, c = lam.l3, lam.l2, lam.l1
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        # conjugate pair with |root|^2 = c / a
        return math.log(max(a, c))
    # stable root split: q / a and c / q, written so nothing divides by a
    q = 0.5 * (b + math.sqrt(disc))
    return math.log(max(a, q)) + max(0.0, math.log(c) - math.log(q) if c > 0.0 else 0.0)


# --------------------------------------------------------------------------
# phases


@dataclass(frozen=True)
class Phase:
    """A phase theta in [0, 1).

    ``kind == "alpha_rational"`` records that theta was built as
    (j alpha + k)/2; it is never inferred from a float.
    """

    theta: float
    kind: str = "generic"
    j: int | None = None
    k: int | None = None
    alpha: float | None = None

    @classmethod
    def generic(cls, theta: float) -> "Phase":
        return cls(float(theta) % 1.0)

    @classmethod
    def alpha_rational(cls, j: int, k: int, alpha: float) -> "Phase":
        theta = ((j * alpha + k) / 2.0) % 1.0
        return cls(theta, "alpha_rational", int(j), int(k), float(alpha))

    @property
    def is_alpha_rational(self) -> bool:
        return self.kind == "alpha_rational"

    def __float__(self) -> float:
        return self.theta


def detect_alpha_rational(theta: float, alpha: float, max_j: int = 50, tol: float = 1e-10):
    """Advisory search for (j, k) with |2 theta - j alpha - k| < tol, |j| <= max_j.

    Only a heuristic: alpha-rationality of a float is undecidable.
    """
    for j in sorted(range(-max_j, max_j + 1), key=abs):
        x = 2.0 * theta - j * alpha
        k = round(x)
        if abs(x - k) < tol:
            return int(j), int(k)
    return None
