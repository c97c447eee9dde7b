import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import integrate
from scipy.optimize import minimize_scalar

from ehm.model import (
    CouplingTriple,
    Phase,
    SymbolFunction,
    abs_c,
    c_symbol,
    c_tilde,
    classify,
    detect_alpha_rational,
    dual_has_singularity,
    dual_symbol_roots,
    in_singular_regime,
    mean_log_abs_c,
    real_roots_on_torus,
    sigma,
    symbol_eval,
)

ALPHA = (math.sqrt(5) - 1) / 2

couplings = st.builds(
    CouplingTriple,
    st.floats(0, 5, allow_nan=False),
    st.floats(0.01, 5, allow_nan=False),
    st.floats(0, 5, allow_nan=False),
)


def test_classify_examples():
    lab = classify((0.3, 0.5, 0.2))
    assert lab.region == "I" and not lab.boundary_flags and lab.interior
    lab = classify((0.4, 1.0, 0.8))
    assert lab.region == "III_anisotropic" and not lab.boundary_flags
    lab = classify((0.5, 1.0, 0.5))
    assert lab.boundary_flags == {"L_I", "L_II", "L_III"}
    assert not lab.interior


def test_classify_region_II_and_isotropic():
    assert classify((0.2, 2.0, 0.3)).region == "II"
    assert classify((1.0, 1.0, 1.0)).region == "III_isotropic"


@pytest.mark.parametrize("bad", [(0.1, 0.0, 0.1), (-0.1, 1, 0.1), (0.1, 1, -1), (0.1, -2, 0.1)])
def test_domain_error(bad):
    with pytest.raises(ValueError, match="domain error"):
        classify(bad)


def test_sigma_examples():
    assert sigma((0.3, 0.5, 0.2)).as_tuple() == pytest.approx((0.4, 2.0, 0.6))
    assert sigma(sigma((0.3, 0.5, 0.2))).as_tuple() == pytest.approx((0.3, 0.5, 0.2), abs=1e-15)
    s = sigma((0.4, 0.5, 0.6))
    assert s.as_tuple() == pytest.approx((1.2, 2.0, 0.8))
    assert "L_III" in classify(s).boundary_flags


@given(couplings)
def test_sigma_involution(lam):
    back = sigma(sigma(lam)).as_tuple()
    for a, b in zip(back, lam.as_tuple()):
        assert abs(a - b) <= 1e-14 * max(1.0, abs(b))


@given(couplings)
def test_region_mapping(lam):
    a, b = classify(lam), classify(sigma(lam))
    if a.interior:
        if a.region == "I":
            assert b.region == "II" and b.interior
        elif a.region == "II":
            assert b.region == "I" and b.interior
        else:
            assert b.region.startswith("III") and b.interior
    if "L_II" in a.boundary_flags:
        assert "L_II" in b.boundary_flags


def test_symbol_examples():
    assert c_symbol((0, 1, 2), ALPHA, -ALPHA / 2) == pytest.approx(3.0)
    assert abs(c_symbol((1, 1, 1), ALPHA, 1 / 3 - ALPHA / 2)) < 1e-15
    lam = (0.2, 1, 1.0)
    th = 0.1 - ALPHA / 2
    c, ct = c_symbol(lam, ALPHA, th), c_tilde(lam, ALPHA, th)
    assert abs_c(lam, ALPHA, th) == pytest.approx(cmath.sqrt(c * ct).real, rel=1e-14)


@given(couplings, st.floats(0, 1), st.floats(0, 1))
def test_c_tilde_is_conjugate_on_reals(lam, alpha, th):
    c = c_symbol(lam, alpha, th)
    assert abs(c_tilde(lam, alpha, th) - np.conj(c)) <= 1e-14 * max(1.0, abs(c))
    assert abs(abs(c) ** 2 - (c * c_tilde(lam, alpha, th)).real) <= 1e-13 * max(1.0, abs(c) ** 2)


def test_symbol_function_kinds():
    lam = CouplingTriple(0.2, 1.0, 0.7)
    th = np.linspace(0, 1, 17)
    v = symbol_eval(SymbolFunction(lam, ALPHA, "potential_v"), th)
    assert np.all(np.abs(v) <= 2)
    assert np.allclose(SymbolFunction(lam, ALPHA, "abs_c")(th), np.abs(c_symbol(lam, ALPHA, th)))
    with pytest.raises(ValueError):
        symbol_eval(SymbolFunction(lam, ALPHA, "nope"), th)


def test_abs_c_continuation():
    lam = (0.2, 1.0, 1.0)
    z = 0.3 + 0.05j
    r = abs_c(lam, ALPHA, z)
    assert r ** 2 == pytest.approx(c_symbol(lam, ALPHA, z) * c_tilde(lam, ALPHA, z), rel=1e-12)
    assert r.real > 0


def test_abs_c_branch_undefined():
    # c vanishes at theta + alpha/2 = 1/2 for (0.5, 1, 0.5); go straight through it
    with pytest.raises(ValueError, match="branch undefined"):
        abs_c((0.5, 1.0, 0.5), 0.0, 0.5 + 0.1j)


def test_dual_roots_examples():
    r = dual_symbol_roots((0.2, 1, 1.0))
    assert [y.real for y in r.roots] == pytest.approx([-1.3819660, -3.6180340], abs=1e-7)
    assert (r.roots[0] * r.roots[1]).real == pytest.approx(5.0)
    r = dual_symbol_roots((0.5, 1, 0.6))
    assert abs(r.roots[0]) == pytest.approx(math.sqrt(1.2))
    assert r.roots[0].real == pytest.approx(-1.0)
    assert abs(r.roots[0].imag) == pytest.approx(0.4472136, abs=1e-7)
    r = dual_symbol_roots((0, 1, 2))
    assert r.degenerate and r.roots == (-2.0,)
    with pytest.raises(ValueError, match="constant symbol"):
        dual_symbol_roots((0, 1, 0))


@given(st.floats(0.01, 5), st.floats(0.01, 5))
def test_dual_roots_are_roots(l1, l3):
    roots = dual_symbol_roots((l1, 1.0, l3)).roots
    for y in roots:
        assert abs(l1 * y * y + y + l3) <= 1e-10 * max(1.0, abs(y)) ** 2
    assert abs(roots[0]) <= abs(roots[1])
    assert abs(roots[0]) * abs(roots[1]) == pytest.approx(l3 / l1, rel=1e-12)


def test_real_roots_examples():
    r = real_roots_on_torus((1, 1, 1), ALPHA)
    assert sorted(r) == pytest.approx(sorted([(1 / 3 - ALPHA / 2) % 1, (2 / 3 - ALPHA / 2) % 1]))
    r = real_roots_on_torus((0.6, 1, 0.6), ALPHA)
    phi = math.acos(-1 / 1.2) / (2 * math.pi)
    assert sorted((t + ALPHA / 2) % 1 for t in r) == pytest.approx([phi, 1 - phi], abs=1e-12)
    assert phi == pytest.approx(0.40679, abs=1e-5)
    assert real_roots_on_torus((0.4, 1.2, 0.8), ALPHA) == pytest.approx([(0.5 - ALPHA / 2) % 1])
    assert real_roots_on_torus((0.2, 1, 1.0), ALPHA) == []


def _min_abs_c(lam, alpha, G=20001):
    th = np.linspace(0, 1, G)
    return np.min(np.abs(c_symbol(lam, alpha, th)))


def _refined_min_abs_c(lam, alpha, G=4001):
    th = np.linspace(0, 1, G)
    vals = np.abs(c_symbol(lam, alpha, th))
    best = float(vals.min())
    for j in np.argsort(vals)[:4]:
        res = minimize_scalar(lambda t: abs(c_symbol(lam, alpha, t)),
                              bounds=(th[j] - 1 / G, th[j] + 1 / G), method="bounded",
                              options={"xatol": 1e-14})
        best = min(best, float(res.fun))
    return best


@settings(max_examples=80, deadline=None)
@given(couplings, st.floats(0, 1))
def test_real_roots_vanish_and_are_complete(lam, alpha):
    roots = real_roots_on_torus(lam, alpha)
    scale = max(1.0, lam.s + lam.l2)
    for t in roots:
        assert abs(c_symbol(lam, alpha, t)) < 1e-9 * scale
    assert len(roots) <= 2
    if _refined_min_abs_c(lam, alpha) < 1e-10 * scale:
        assert roots


def test_dual_singularity_examples():
    assert dual_has_singularity((1, 1, 1))
    assert dual_has_singularity((0.3, 1, 0.7))
    assert not dual_has_singularity((0.2, 1, 1.0))


@settings(max_examples=300, deadline=None)
@given(couplings)
def test_dual_singularity_matches_dual_zeros(lam):
    assert dual_has_singularity(lam) == bool(real_roots_on_torus(sigma(lam), ALPHA))


def test_singular_regime():
    assert in_singular_regime((1, 1, 1))
    assert in_singular_regime((0.3, 1, 0.7))
    assert not in_singular_regime((0.2, 1, 1.0))
    assert not in_singular_regime((0.1, 0.4, 0.2))


@settings(max_examples=40, deadline=None)
@given(couplings)
def test_jensen_against_quadrature(lam):
    assume(_min_abs_c(lam, 0.0, 2001) > 1e-2)
    val, _ = integrate.quad(lambda t: math.log(abs(c_symbol(lam, 0.0, t))), 0, 1, limit=200)
    assert mean_log_abs_c(lam) == pytest.approx(val, abs=1e-8)


def test_phases():
    ph = Phase.alpha_rational(1, 0, ALPHA)
    assert ph.is_alpha_rational and ph.theta == pytest.approx(ALPHA / 2)
    x = 2 * ph.theta - ALPHA
    assert abs(x - round(x)) < 1e-15
    assert Phase.generic(1.25).theta == 0.25 and not Phase.generic(0.3).is_alpha_rational
    assert detect_alpha_rational(ALPHA / 2, ALPHA) == (1, 0)
    assert detect_alpha_rational(0.1234, ALPHA, max_j=10) is None
