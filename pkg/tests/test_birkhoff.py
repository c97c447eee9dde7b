import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ehm.birkhoff import (
    AnalyticTorusFunction,
    birkhoff_sum,
    case2_bound,
    cohomological_residual,
    cohomological_solve,
    dirichlet_factor,
    parse_builtin,
    verify_uniform_lemma,
)
from ehm.contfrac import (
    DenominatorSubsequence,
    cf_expand,
    cf_from_terms,
    estimate_beta,
    golden_mean,
    liouville_terms,
    select_subsequence,
)
from ehm.winding import factorize

ALPHA = (math.sqrt(5) - 1) / 2
SIN1 = AnalyticTorusFunction.from_sines({1: 1.0})


def _naive_sum(coeffs, alpha, x, q):
    """Plain double loop, no FFT, no compensation."""
    N = (len(coeffs) - 1) // 2
    total = np.zeros_like(np.asarray(x, dtype=float), dtype=complex)
    for j in range(q):
        for k, c in enumerate(coeffs):
            total += c * np.exp(2j * math.pi * (k - N) * (x + j * alpha))
    return total


def test_sin_q5_geometric_oracle():
    x = np.arange(8192) / 8192
    sup = np.max(np.abs(birkhoff_sum(SIN1, ALPHA, x, 5)))
    oracle = abs(math.sin(5 * math.pi * ALPHA)) / abs(math.sin(math.pi * ALPHA))
    assert sup == pytest.approx(oracle, rel=1e-6)
    assert sup == pytest.approx(0.300, abs=3e-3)


def test_zero_function():
    x = np.linspace(0, 1, 33)
    for q in (1, 7, 100):
        assert np.all(birkhoff_sum(AnalyticTorusFunction.zero(), ALPHA, x, q) == 0)


def test_sin_q144_small():
    x = np.arange(4096) / 4096
    assert np.max(np.abs(birkhoff_sum(SIN1, ALPHA, x, 144))) < 0.02


def test_q_must_be_positive():
    with pytest.raises(ValueError):
        birkhoff_sum(SIN1, ALPHA, 0.0, 0)


def test_direct_matches_naive_loop():
    f = parse_builtin("sin1+0.5sin2+0.25sin3")
    x = np.linspace(0, 1, 11)
    for q in (1, 2, 13, 40):
        ref = _naive_sum(f.fourier, ALPHA, x, q).real
        assert np.max(np.abs(birkhoff_sum(f, ALPHA, x, q, method="direct") - ref)) < 1e-11


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False), min_size=1, max_size=6),
    st.integers(1, 10_000),
    st.floats(0, 1, exclude_max=True),
)
def test_direct_and_geometric_agree(pos, q, alpha):
    N = len(pos)
    coeffs = np.zeros(2 * N + 1, dtype=complex)
    coeffs[N + 1 :] = pos
    coeffs[:N] = np.conj(pos[::-1])
    f = AnalyticTorusFunction.from_coefficients(coeffs)
    x = np.array([0.0, 0.1234, 0.5, 0.987])
    a = birkhoff_sum(f, alpha, x, q, method="direct")
    b = birkhoff_sum(f, alpha, x, q, method="geometric")
    assert np.max(np.abs(a - b)) < 1e-11 * max(1.0, math.sqrt(q))


def test_unknown_method():
    with pytest.raises(ValueError):
        birkhoff_sum(SIN1, ALPHA, 0.0, 3, method="fast")


def test_dirichlet_factor_exact_fraction():
    a = Fraction(8, 13)
    n = np.array([-13, -1, 1, 2, 13, 26])
    d = dirichlet_factor(n, 5, a)
    for k, v in zip(n, d):
        ref = sum(np.exp(2j * math.pi * int(k) * j * 8 / 13) for j in range(5))
        assert abs(v - ref) < 1e-12
    assert d[0] == 5 and d[-1] == 5


def test_cohomological_sin():
    h = cohomological_solve(SIN1, ALPHA)
    x = np.arange(512) / 512
    oracle = (np.exp(2j * math.pi * x) / (np.exp(2j * math.pi * ALPHA) - 1)).imag
    assert np.max(np.abs(h(x) - oracle)) < 1e-14
    assert cohomological_residual(SIN1, h, ALPHA) < 1e-12


def test_cohomological_zero():
    h = cohomological_solve(AnalyticTorusFunction.zero(), ALPHA)
    assert np.all(h.fourier == 0)


def test_small_divisor_on_liouville_convergent():
    cf = cf_from_terms(liouville_terms(3))
    p, q = cf.convergents[1]
    alpha = Fraction(p, q)
    f = AnalyticTorusFunction.from_sines({1: 1.0, q: 0.1})
    with pytest.raises(ValueError, match="small divisor"):
        cohomological_solve(f, alpha)
    with pytest.raises(ValueError, match="small divisor"):
        cohomological_solve(SIN1, 1e-10)


def test_nonzero_mean_rejected():
    coeffs = np.array([0, 0.1, 0], dtype=complex)
    f = AnalyticTorusFunction.from_coefficients(coeffs)
    with pytest.raises(ValueError, match="zero mean"):
        cohomological_solve(f, ALPHA)
    cf = cf_expand(golden_mean(), max_terms=10)
    with pytest.raises(ValueError, match="zero mean"):
        verify_uniform_lemma(f, cf, DenominatorSubsequence((3,), "all", 0.0))


def test_case1_telescoping():
    f = parse_builtin("sin1+0.5sin2+0.2sin5")
    h = cohomological_solve(f, ALPHA)
    x = np.linspace(0, 1, 257)
    for q in (3, 55, 987):
        lhs = birkhoff_sum(f, ALPHA, x, q)
        rhs = h(np.mod(x + q * ALPHA, 1)) - h(x)
        assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_case2_bound_sin_610():
    cf = cf_expand(golden_mean())
    m = cf.denominators.index(610)
    assert cf.q(m + 1) == 987
    b = case2_bound(SIN1, cf, m)
    # only n = +-1 present: 2 * (1/2) * |sin(pi q alpha)| / |sin(pi alpha)|
    oracle = abs(math.sin(math.pi * 610 * ALPHA)) / abs(math.sin(math.pi * ALPHA))
    assert b.dirichlet_part == pytest.approx(oracle, rel=1e-6)
    assert b.dirichlet_part < 5e-3
    assert b.stylized >= 0 and b.exact >= 0 and b.tail_part >= 0


def test_case2_bound_out_of_range():
    cf = cf_from_terms([1, 1, 1])
    with pytest.raises(ValueError):
        case2_bound(SIN1, cf, 2)


def test_case2_liouville_bound_vanishes():
    # three levels already reach q = 410634203; a fourth would need a ~e^(4e8) quotient
    cf = cf_from_terms(liouville_terms(3))
    bounds = [case2_bound(SIN1, cf, m) for m in range(len(cf) - 1)]
    assert bounds[-1].stylized < 1e-3 * bounds[0].stylized
    assert bounds[-1].exact < 1e-2 * bounds[0].exact


def test_uniform_lemma_golden_two_modes():
    f = parse_builtin("sin1+0.5sin2")
    cf = cf_expand(golden_mean())
    idx = tuple(m for m, q in enumerate(cf.denominators) if q <= 987)
    rep = verify_uniform_lemma(f, cf, DenominatorSubsequence(idx, "all", 0.0))
    assert rep.rows[-1].q == 987
    assert rep.decreasing()
    assert rep.sups[-1] < 5e-3
    assert rep.within_bounds()
    for r in rep.rows:
        assert r.sup_certified >= r.sup_grid >= 0
        x = np.linspace(0, 1, 97)
        assert np.max(np.abs(birkhoff_sum(f, ALPHA, x, r.q))) <= r.sup_certified + 1e-12


def test_uniform_lemma_liouville():
    f = parse_builtin("sin1+0.5sin2")
    cf = cf_from_terms(liouville_terms(3))
    sub = select_subsequence(cf, estimate_beta(cf).beta)
    rep = verify_uniform_lemma(f, cf, sub)
    assert rep.within_bounds()


def test_empty_subsequence():
    cf = cf_expand(golden_mean(), max_terms=10)
    with pytest.raises(ValueError, match="subsequence empty"):
        verify_uniform_lemma(SIN1, cf, DenominatorSubsequence((), "all", 0.0))


def test_winding_function_composition():
    w = factorize((0.2, 1, 1.0), ALPHA, 4096)
    f = w.to_torus_function().trimmed()
    assert abs(f.mean) < 1e-15 and f.is_real
    cf = cf_expand(golden_mean())
    m = cf.denominators.index(987)
    rep = verify_uniform_lemma(f, cf, DenominatorSubsequence((m,), "all", 0.0))
    assert rep.sups[0] < 1e-2
    x = np.linspace(0, 1, 64, endpoint=False)
    direct = np.array([sum(w.f(xx + j * ALPHA) for j in range(987)) for xx in x])
    assert np.max(np.abs(direct)) <= rep.rows[0].sup_certified + 1e-10


def test_parse_builtin():
    f = parse_builtin("sin1+0.5sin2")
    x = np.linspace(0, 1, 17)
    ref = np.sin(2 * math.pi * x) + 0.5 * np.sin(4 * math.pi * x)
    assert np.max(np.abs(f(x) - ref)) < 1e-14
    with pytest.raises(ValueError):
        parse_builtin("cos1")
