"""The acceptance suite: one function per criterion, each returning a CriterionResult."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import birkhoff, cocycle, contfrac, duality, model, spectral, winding

PASS, FAIL, INDETERMINATE = "PASS", "FAIL", "INDETERMINATE"


@dataclass
class CriterionResult:
    number: int
    name: str
    status: str
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def line(self) -> str:
        return f"{self.status} [{self.number}] {self.name}"


def _golden():
    return contfrac.golden_mean()


# ---------------------------------------------------------------------------


def criterion_1(n_alpha: int = 1000, m_max: int = 20, seed: int = 1) -> CriterionResult:
    """Convergent inequality checked in exact arithmetic for random 256-bit alphas."""
    rng = np.random.default_rng(seed)
    failures, checked = 0, 0
    for _ in range(n_alpha):
        num = int.from_bytes(rng.bytes(32), "little") | 1
        alpha = Fraction(num, 2**256)
        cf = contfrac.cf_expand(alpha, max_terms=m_max + 2)
        for m in range(min(m_max + 1, len(cf) - 1)):
            q, qn = cf.q(m), cf.q(m + 1)
            d = contfrac.dist_to_Z(q * alpha)
            checked += 1
            if not (Fraction(1, 2 * qn) <= d <= Fraction(1, qn)):
                failures += 1
    status = PASS if failures == 0 and checked >= n_alpha * (m_max + 1) else FAIL
    return CriterionResult(1, "continued-fraction convergent law", status,
                           {"checked": checked, "failures": failures})


def _sample_region(rng, kind: str) -> model.CouplingTriple:
    while True:
        if kind == "I":
            s, l2 = rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99)
        elif kind == "II":
            l2 = rng.uniform(1.01, 10.0)
            s = rng.uniform(0.01, 0.99) * l2
        elif kind == "III":
            l2 = rng.uniform(0.05, 5.0)
            s = max(1.0, l2) * rng.uniform(1.01, 3.0)
        elif kind == "L_I":
            s, l2 = 1.0, rng.uniform(0.01, 1.0)
        elif kind == "L_III":
            l2 = rng.uniform(1.0, 10.0)
            s = l2
        elif kind == "L_II":
            s, l2 = rng.uniform(0.0, 1.0), 1.0
        t = rng.uniform(0.0, 1.0)
        return model.CouplingTriple(s * t, l2, s * (1.0 - t))


def criterion_2(n: int = 10_000, seed: int = 2) -> CriterionResult:
    rng = np.random.default_rng(seed)
    inv_err = 0.0
    fails = {}
    for _ in range(n):
        lam = model.CouplingTriple(rng.uniform(0, 5), rng.uniform(0.01, 5), rng.uniform(0, 5))
        back = model.sigma(model.sigma(lam))
        inv_err = max(inv_err, max(abs(a - b) / max(1.0, abs(a)) for a, b in zip(back.as_tuple(), lam.as_tuple())))

    def check(kind, ok):
        bad = 0
        for _ in range(n):
            lam = _sample_region(rng, kind)
            if not ok(model.classify(lam), model.classify(model.sigma(lam))):
                bad += 1
        fails[kind] = bad

    check("I", lambda a, b: a.region == "I" and a.interior and b.region == "II" and b.interior)
    check("II", lambda a, b: a.region == "II" and a.interior and b.region == "I" and b.interior)
    check("III", lambda a, b: a.region.startswith("III") and a.interior and b.region.startswith("III") and b.interior)
    check("L_I", lambda a, b: "L_I" in a.boundary_flags and "L_III" in b.boundary_flags)
    check("L_III", lambda a, b: "L_III" in a.boundary_flags and "L_I" in b.boundary_flags)
    check("L_II", lambda a, b: "L_II" in a.boundary_flags and "L_II" in b.boundary_flags)
    status = PASS if inv_err < 1e-14 and not any(fails.values()) else FAIL
    return CriterionResult(2, "duality map algebra", status, {"involution_err": inv_err, "failures": fails})


def sample_winding_couplings(rng, min_log_root: float = 0.05) -> model.CouplingTriple:
    """Random lam in III_anisotropic with l1 + l3 > 1, roots kept off the unit circle."""
    while True:
        l2 = rng.uniform(0.1, 3.0)
        s = max(1.0, l2) * rng.uniform(1.02, 2.5)
        t = rng.uniform(0.02, 0.98)
        if abs(t - 0.5) < 0.02:
            continue
        lam = model.CouplingTriple(s * t, l2, s * (1.0 - t))
        roots = model.dual_symbol_roots(lam).roots
        if min(math.log(abs(y)) for y in roots) >= min_log_root:
            return lam


def criterion_3(n: int = 100, seed: int = 3, grid: int = 4096) -> CriterionResult:
    rng = np.random.default_rng(seed)
    alpha = _golden()
    worst = {"residual": 0.0, "mean_f": 0.0, "delta0_rel": 0.0}
    bad = 0
    for _ in range(n):
        lam = sample_winding_couplings(rng)
        w = winding.factorize(lam, alpha, grid)
        chk = winding.verify_factorization(w)
        target = min(math.log(abs(y)) for y in w.roots) / (2 * math.pi)
        rel = abs(w.delta0 - target) / target
        worst["residual"] = max(worst["residual"], chk.max_residual, chk.conj_residual)
        worst["mean_f"] = max(worst["mean_f"], chk.mean_f)
        worst["delta0_rel"] = max(worst["delta0_rel"], rel)
        if not (chk.max_residual < 1e-10 and chk.conj_residual < 1e-10 and chk.mean_f < 1e-10
                and w.delta0 > 0 and rel < 0.2):
            bad += 1
    return CriterionResult(3, "winding factorization", PASS if bad == 0 else FAIL, {**worst, "failures": bad})


def criterion_4() -> CriterionResult:
    alpha = _golden()
    f = birkhoff.parse_builtin("sin1+0.5sin2")
    cf = contfrac.cf_expand(alpha)
    upto = [m for m, q in enumerate(cf.denominators) if q <= 987]
    rep = birkhoff.verify_uniform_lemma(f, cf, contfrac.DenominatorSubsequence(tuple(upto), "all", 0.0))
    sups = dict(zip([r.q for r in rep.rows], rep.sups))
    decreasing = rep.decreasing()
    at610 = sups[610]

    h = birkhoff.cohomological_solve(f, alpha)
    case1 = birkhoff.cohomological_residual(f, h, alpha)

    lcf = contfrac.cf_from_terms(contfrac.liouville_terms(3))
    beta = contfrac.estimate_beta(lcf).beta
    sub = contfrac.select_subsequence(lcf, beta)
    lrep = birkhoff.verify_uniform_lemma(f, lcf, sub)
    l_ok = beta >= 1 and lrep.sups[-1] < 1e-3 and lrep.within_bounds()

    ok = decreasing and at610 < 5e-3 and case1 < 1e-10 and l_ok
    return CriterionResult(4, "Birkhoff sums along convergents", PASS if ok else FAIL, {
        "golden_sups": sups, "decreasing": decreasing, "sup_at_610": at610, "sup_at_610_limit": 5e-3,
        "case1_residual": case1, "liouville_beta": beta, "liouville_q": [r.q for r in lrep.rows],
        "liouville_sups": lrep.sups, "liouville_bounds": [r.exact_bound for r in lrep.rows],
    })


def criterion_5(n_det: int = 100_000, seed: int = 5) -> CriterionResult:
    rng = np.random.default_rng(seed)
    alpha = _golden()
    det_err, skipped = 0.0, 0
    for _ in range(n_det):
        lam = model.CouplingTriple(rng.uniform(0, 3), rng.uniform(0.1, 3), rng.uniform(0, 3))
        E, x = rng.uniform(-5, 5), rng.uniform(0, 1)
        try:
            A = cocycle.transfer_matrix(lam, E, alpha, x)
        except cocycle.SymbolZeroError:
            skipped += 1
            continue
        lh = model.sigma(lam)
        want = complex(model.c_tilde(lh, alpha, x - alpha)) / complex(model.c_symbol(lh, alpha, x))
        got = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        det_err = max(det_err, abs(got - want) / max(1.0, abs(want)))

    split_err = 0.0
    lam = (0.3, 1.0, 0.6)
    for _ in range(10):
        m1, m2 = int(rng.integers(1, 1000)), int(rng.integers(1, 1000))
        E, x = rng.uniform(-3, 3), rng.uniform(0, 1)
        full = cocycle.iterate(lam, E, alpha, x, m1 + m2)
        a = cocycle.iterate(lam, E, alpha, x, m1)
        b = cocycle.iterate(lam, E, alpha, x, m2, start=m1)
        prod = b.matrix @ a.matrix
        scale = math.exp(a.log_scale + b.log_scale - full.log_scale)
        split_err = max(split_err, np.linalg.norm(prod * scale - full.matrix) / np.linalg.norm(full.matrix))

    cascade = 0.0
    lam = (0.2, 1.0, 1.0)
    x0 = 0.1234
    g = cocycle.orbit_law_function(lam, alpha, x0, 1.0 + 0.5j, 2000)
    for k in [1] + [q for q in contfrac.cf_expand(alpha).denominators if q <= 987]:
        for j0 in (0, 7, 100):
            cascade = max(cascade, cocycle.det_cascade_check(lam, 0.0, alpha, x0 + j0 * alpha, k, g))
    ok = det_err < 1e-13 and split_err < 1e-10 and cascade < 1e-9
    return CriterionResult(5, "transfer-matrix determinant and cascade", PASS if ok else FAIL, {
        "det_rel_err": det_err, "det_skipped": skipped, "split_rel_defect": split_err, "cascade_residual": cascade,
    })


def criterion_6() -> CriterionResult:
    alpha = _golden()
    lam = (0.2, 1.0, 1.0)
    wf = winding.factorize(lam, alpha)
    qs = [q for q in contfrac.cf_expand(alpha).denominators if 5 <= q <= 987]
    devs = [cocycle.convergence_factor(lam, alpha, q, wf=wf)["sup_dev"] for q in qs]
    mono = all(b < a for a, b in zip(devs, devs[1:]))
    ok = devs[-1] < 1e-2 and mono
    return CriterionResult(6, "convergence factor along Fibonacci q", PASS if ok else FAIL,
                           {"q": qs, "sup_dev": devs, "monotone": mono})


def criterion_7(n: int = 20, seed: int = 7, threads=None) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        lam = (rng.uniform(0, 2), rng.uniform(0.1, 2.5), rng.uniform(0, 2))
        for p, q in ((5, 8), (8, 13), (13, 21)):
            worst = max(worst, spectral.duality_spectrum_check(lam, p, q, threads=threads))
    self_dual = max(spectral.duality_spectrum_check((0, 1, 0), p, q) for p, q in ((5, 8), (8, 13), (13, 21)))
    ok = worst < 1e-4 and self_dual < 1e-10
    return CriterionResult(7, "Aubry duality of approximant spectra", PASS if ok else FAIL,
                           {"max_hausdorff": worst, "self_dual": self_dual})


def criterion_8(n: int = 10**6, samples: int = 4) -> CriterionResult:
    alpha = _golden()
    out = {}
    ok = True
    for lam, target in (((0.0, 0.5, 0.0), math.log(2.0)), ((0.0, 2.0, 0.0), 0.0)):
        ev = np.linalg.eigvalsh(spectral.bloch_matrix(lam, 610, 987, 0.0, 0.0))
        energies = ev[[50, 250, 493, 700, 900]]
        les = [cocycle.lyapunov(lam, float(E), alpha, n=n, samples=samples).le_regularized for E in energies]
        out[str(lam)] = {"energies": energies.tolist(), "le": les, "target": target}
        ok &= all(abs(v - target) <= 0.01 for v in les)
    return CriterionResult(8, "AMO Lyapunov exponents", PASS if ok else FAIL, out)


def criterion_9() -> CriterionResult:
    pq = [(5, 8), (8, 13), (13, 21), (21, 34), (34, 55)]
    meas = [spectral.approximant_spectrum((0, 1, 0), p, q).total_measure for p, q in pq]
    slope = float(np.polyfit(np.log([q for _, q in pq]), np.log(meas), 1)[0])
    ok = abs(slope + 1.0) <= 0.2
    return CriterionResult(9, "critical AMO bandwidth scaling", PASS if ok else FAIL,
                           {"measures": meas, "slope": slope})


def criterion_10() -> CriterionResult:
    alpha = _golden()
    lam = (0.1, 0.4, 0.2)
    theta = model.Phase.generic(0.3)
    N = 3000
    E, v = duality.localized_test_vector(lam, alpha, theta, N)
    u = duality.sequence_to_torus(v, 1 << (2 * (2 * N + 1) - 1).bit_length())
    rep = duality.det_identity_check(lam, alpha, theta, u)
    probes = {str(l): duality.singular_contradiction_probe(l, alpha) for l in ((0.3, 1, 0.7), (1, 1, 1))}
    grows = all(p["slope_vs_logG"] > 0 and p["quadrature"][-1] > p["quadrature"][0] for p in probes.values())
    ok = rep.relative_variation < 0.05 and grows
    return CriterionResult(10, "determinant identity and singular probe", PASS if ok else FAIL, {
        "E": E, "b_estimate": rep.b_estimate, "relative_variation": rep.relative_variation,
        "probe_slopes": {k: p["slope_vs_logG"] for k, p in probes.items()},
    })


def criterion_11(threads=None) -> CriterionResult:
    alpha = _golden()
    rat = model.Phase.alpha_rational(1, 0, alpha)
    iso = spectral.point_spectrum_probe((1, 1, 1), alpha, [rat, 0.1234], [4000], threads=threads)
    contrast = iso.contrast()
    aniso = spectral.point_spectrum_probe((0.2, 1, 1.0), alpha, [0.1234], [1000, 2000, 4000], threads=threads)
    trend = [v for _, v in aniso.trend(0.1234)]
    decays = all(b < a for a, b in zip(trend, trend[1:]))
    ok = contrast is not None and contrast > 5 and decays
    return CriterionResult(11, "point-spectrum probe (qualitative)", PASS if ok else INDETERMINATE, {
        "contrast": contrast, "iso_rows": [r.__dict__ for r in iso.rows], "aniso_trend": trend, "aniso_decays": decays,
    })


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}


def run(numbers=None, threads=None) -> list[CriterionResult]:
    out = []
    for i in numbers or sorted(CRITERIA):
        t0 = time.perf_counter()
        fn = CRITERIA[i]
        res = fn(threads=threads) if i in (7, 11) else fn()
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out
