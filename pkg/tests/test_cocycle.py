import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ehm.cocycle import (
    SymbolZeroError,
    convergence_factor,
    det_cascade_check,
    iterate,
    lyapunov,
    mean_log_abs_c_quadrature,
    orbit_law_function,
    product_ratio,
    transfer_matrix,
)
from ehm.contfrac import cf_expand, golden_mean
from ehm.model import CouplingTriple, c_symbol, c_tilde, mean_log_abs_c, sigma
from ehm.spectral import truncated_eigensystem

ALPHA = (math.sqrt(5) - 1) / 2

couplings = st.builds(
    CouplingTriple,
    st.floats(0, 3, allow_nan=False),
    st.floats(0.1, 3, allow_nan=False),
    st.floats(0, 3, allow_nan=False),
)


def _amo_matrix(E, l2, x):
    """Standard almost-Mathieu step for (1/l2)-scaled energy; c_hat == 1/l2 constant."""
    return np.array([[E - 2 * l2 * math.cos(2 * math.pi * x), -1.0], [1.0, 0.0]])


def test_amo_hand_built():
    lam = (0.0, 0.5, 0.0)
    for E in (-1.3, 0.0, 2.7):
        for x in (0.0, 0.17, 0.61):
            A = transfer_matrix(lam, E, ALPHA, x)
            # c_hat = 1/l2 = 2, so A = [[(E/l2 - 2cos)/2, -1], [1, 0]]
            ref = np.array([[(E / 0.5 - 2 * math.cos(2 * math.pi * x)) / 2, -1.0], [1.0, 0.0]])
            assert np.max(np.abs(A - ref)) < 1e-15
            assert np.max(np.abs(A - _amo_matrix(E, 0.5, x))) < 1e-15


@settings(max_examples=200, deadline=None)
@given(couplings, st.floats(-5, 5), st.floats(0, 1))
def test_determinant_identity(lam, E, x):
    lh = sigma(lam)
    c = complex(c_symbol(lh, ALPHA, x))
    if abs(c) < 1e-6:
        return
    A = transfer_matrix(lam, E, ALPHA, x)
    ref = complex(c_tilde(lh, ALPHA, x - ALPHA)) / c
    assert abs(np.linalg.det(A) - ref) <= 1e-13 * max(1.0, abs(ref)) * max(1.0, abs(E), abs(A).max())


def test_symbol_zero():
    # sigma(1,1,1) = (1,1,1) vanishes where x + alpha/2 = 1/3
    with pytest.raises(SymbolZeroError, match="symbol zero at x"):
        transfer_matrix((1, 1, 1), 0.3, ALPHA, 1 / 3 - ALPHA / 2)
    with pytest.raises(SymbolZeroError, match="step 2"):
        iterate((1, 1, 1), 0.3, ALPHA, 1 / 3 - ALPHA / 2 - 2 * ALPHA, 5)


def test_iterate_base_cases():
    lam = (0.2, 1.0, 0.7)
    o = iterate(lam, 0.4, ALPHA, 0.3, 0)
    assert np.array_equal(o.product, np.eye(2))
    o = iterate(lam, 0.4, ALPHA, 0.3, 1)
    assert np.max(np.abs(o.product - transfer_matrix(lam, 0.4, ALPHA, 0.3))) < 1e-15
    with pytest.raises(ValueError):
        iterate(lam, 0.4, ALPHA, 0.3, -1)


def test_iterate_matches_plain_product():
    lam = (0.3, 0.9, 1.2)
    x, E = 0.123, -0.8
    P = np.eye(2, dtype=complex)
    for j in range(100):
        P = transfer_matrix(lam, E, ALPHA, x + j * ALPHA) @ P
    o = iterate(lam, E, ALPHA, x, 100)
    assert np.max(np.abs(o.product - P)) <= 1e-11 * np.abs(P).max()


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 600), st.integers(1, 600), st.floats(0, 1), st.floats(-3, 3))
def test_cocycle_law(m1, m2, x, E):
    lam = (0.2, 1.0, 1.0)
    full = iterate(lam, E, ALPHA, x, m1 + m2)
    a = iterate(lam, E, ALPHA, x, m1)
    b = iterate(lam, E, ALPHA, x, m2, start=m1)
    split = b.matrix @ a.matrix
    scale = b.log_scale + a.log_scale - full.log_scale
    defect = np.linalg.norm(math.exp(scale) * split - full.matrix) / np.linalg.norm(full.matrix)
    assert defect < 1e-10


@pytest.mark.parametrize("n", [1, 10, 300, 10_000])
def test_det_telescoping(n):
    lam = (0.2, 1.0, 1.0)
    x = 0.3
    o = iterate(lam, 0.5, ALPHA, x, n)
    log_det = o.log_det
    if n <= 10:
        # direct det of the product cancels down to eps * norm(P)^2
        assert abs(cmath.exp(log_det) - np.linalg.det(o.product)) < 1e-14 * np.linalg.norm(o.product) ** 2
    ref = complex(product_ratio(lam, ALPHA, x, n))
    log_ref = cmath.log(ref)
    assert abs(log_det.real - log_ref.real) < 1e-9 * max(1.0, abs(log_ref.real)) + 1e-9
    assert abs(cmath.exp(1j * (log_det.imag - log_ref.imag)) - 1) < 1e-9


def test_product_ratio_naive():
    lam = (0.4, 1.0, 0.8)
    lh = sigma(lam)
    x, k = 0.77, 9
    num = np.prod([complex(c_tilde(lh, ALPHA, x + j * ALPHA)) for j in range(-1, k - 1)])
    den = np.prod([complex(c_symbol(lh, ALPHA, x + j * ALPHA)) for j in range(k)])
    assert abs(product_ratio(lam, ALPHA, x, k) - num / den) < 1e-13 * abs(num / den)


def test_det_cascade_base_case_and_convergent():
    lam = (0.2, 1.0, 1.0)
    x0 = 0.1
    cf = cf_expand(golden_mean())
    q = 987
    g = orbit_law_function(lam, ALPHA, x0, 1.0 + 0.5j, q + 1)
    assert det_cascade_check(lam, 0.0, ALPHA, x0, 1, g) < 1e-14
    assert q in cf.denominators
    assert det_cascade_check(lam, 0.0, ALPHA, x0, q, g) < 1e-9


def test_det_cascade_detects_wrong_law():
    lam = (0.2, 1.0, 1.0)
    g = orbit_law_function(lam, ALPHA, 0.1, 1.0, 20)
    bad = orbit_law_function((0.25, 1.0, 1.0), ALPHA, 0.1, 1.0, 20)
    assert det_cascade_check(lam, 0.0, ALPHA, 0.1, 13, g) < 1e-12
    assert det_cascade_check(lam, 0.0, ALPHA, 0.1, 13, bad) > 1e-3


def test_product_ratio_symbol_zero():
    with pytest.raises(SymbolZeroError):
        product_ratio((1, 1, 1), ALPHA, 1 / 3 - ALPHA / 2 - 3 * ALPHA, 6)


@pytest.mark.parametrize("lam", [(0.2, 1.0, 1.0), (1.0, 1.0, 0.2), (0.5, 1.0, 0.6)])
def test_convergence_factor(lam):
    devs = []
    for q in (34, 144, 610):
        r = convergence_factor(lam, ALPHA, q, grid=1024)
        assert r["agreement"] < 1e-6
        devs.append(r["sup_dev"])
    assert devs[-1] < devs[0]


def _in_spectrum_energy(lam):
    es = truncated_eigensystem(lam, ALPHA, 0.1, 300)
    return float(es.eigenvalues[len(es.eigenvalues) // 3])


def test_lyapunov_supercritical_amo():
    lam = (0.0, 0.5, 0.0)  # u(n+1) + u(n-1) + 4 cos(...) u(n) after dividing by 0.5
    E = _in_spectrum_energy(lam)
    est = lyapunov(lam, E, ALPHA, n=100_000, samples=4)
    assert est.le_regularized == pytest.approx(math.log(2), abs=0.01)
    assert est.log_mean_abs_c == pytest.approx(math.log(0.5), abs=1e-12)


def test_lyapunov_subcritical_amo():
    lam = (0.0, 2.0, 0.0)
    E = _in_spectrum_energy(lam)
    est = lyapunov(lam, E, ALPHA, n=100_000, samples=4)
    assert abs(est.le_regularized) < 0.01


def test_lyapunov_far_outside():
    est = lyapunov((0.2, 1.0, 1.0), 1e3, ALPHA, n=2000, samples=2)
    assert est.le_regularized > 5


def test_lyapunov_dual_matches_iterate():
    lam = (0.3, 1.0, 0.5)
    x, n = 0.21, 20_000
    est = lyapunov(lam, 3.5, ALPHA, n=n, xs=[x], cocycle="dual")
    direct = iterate(lam, 3.5, ALPHA, x, n).log_norm / n
    assert est.le_regularized == pytest.approx(direct, abs=2e-3)


def test_lyapunov_sample_reshuffle():
    lam = (0.0, 0.7, 0.0)
    a = lyapunov(lam, 0.3, ALPHA, n=5000, samples=16, seed=1)
    b = lyapunov(lam, 0.3, ALPHA, n=5000, samples=16, seed=2)
    rev = lyapunov(lam, 0.3, ALPHA, n=5000, xs=a.per_sample * 0 + np.random.default_rng(1).random(16)[::-1])
    assert rev.le_regularized == pytest.approx(a.le_regularized, abs=1e-12)
    assert abs(a.le_regularized - b.le_regularized) <= 2 * math.hypot(a.stderr, b.stderr) + 1e-3


def test_lyapunov_arguments():
    with pytest.raises(ValueError):
        lyapunov((0, 1, 0), 0.0, ALPHA, n=999)
    with pytest.raises(ValueError):
        lyapunov((0, 1, 0), 0.0, ALPHA, n=1000, cocycle="both")


@settings(max_examples=40, deadline=None)
@given(couplings)
def test_mean_log_c_two_ways(lam):
    assert mean_log_abs_c_quadrature(lam) == pytest.approx(mean_log_abs_c(lam), abs=1e-8)
