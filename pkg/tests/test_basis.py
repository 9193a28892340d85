import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcdkernel.basis import (
    GegenbauerParams,
    PolynomialBasis,
    SphericalHarmonicBasis,
    enumerate_monomials,
    eval_gegenbauer,
    eval_monomial,
    eval_sph_harmonic,
    normalized_gegenbauer,
)
from mcdkernel.quadrature import box_rule, sphere_rule


def test_enumerate_small_cases():
    assert enumerate_monomials(1, 2).indices == ((0,), (1,), (2,))
    assert enumerate_monomials(2, 1).indices == ((0, 0), (1, 0), (0, 1))
    assert len(enumerate_monomials(3, 4)) == 35


@pytest.mark.parametrize("n,d", [(0, 2), (2, -1)])
def test_enumerate_rejects(n, d):
    with pytest.raises(ValueError):
        enumerate_monomials(n, d)


@given(st.integers(1, 4), st.integers(0, 10))
@settings(max_examples=40, deadline=None)
def test_monomial_count_and_ordering(n, d):
    idx = enumerate_monomials(n, d).indices
    assert len(idx) == math.comb(n + d, d)
    assert len(set(idx)) == len(idx)
    degs = [sum(a) for a in idx]
    assert degs == sorted(degs)
    # exactly the multi-indices of degree <= d (brute force)
    brute = {a for a in product(range(d + 1), repeat=n) if sum(a) <= d}
    assert set(idx) == brute


def test_eval_monomial():
    assert eval_monomial((2, 1), (3, 2)) == 18
    assert eval_monomial((0, 0), (7.5, -3.0)) == 1
    assert eval_monomial((5,), (0.5,)) == 0.03125
    with pytest.raises(ValueError):
        eval_monomial((1, 2), (1.0,))


@pytest.mark.parametrize("kind", ["legendre", "scaled", "monomial"])
def test_polynomial_basis_spans_same_space(kind):
    # every kind spans the polynomials of degree <= d: least squares fit of a random cubic is exact
    rng = np.random.default_rng(1)
    basis = PolynomialBasis([-1.0, 0.0], [2.0, 1.0], 3, kind=kind)
    pts = rng.uniform([-1, 0], [2, 1], size=(60, 2))
    target = 1 + pts[:, 0] ** 3 - 2 * pts[:, 0] * pts[:, 1] ** 2 + pts[:, 1]
    B = basis.evaluate(pts)
    c, *_ = np.linalg.lstsq(B, target, rcond=None)
    assert np.max(np.abs(B @ c - target)) < 1e-10


def test_legendre_basis_orthonormal_on_box():
    basis = PolynomialBasis([0.0, -2.0], [1.0, 3.0], 6)
    rule = box_rule([0.0, -2.0], [1.0, 3.0], 10)
    B = basis.evaluate(rule.nodes)
    G = B.T @ (B * rule.weights[:, None])
    assert np.allclose(G, np.eye(len(basis)), atol=1e-12)


@pytest.mark.parametrize("kind", ["legendre", "scaled", "monomial"])
def test_box_integrals_against_quadrature(kind):
    basis = PolynomialBasis([-1.0, -1.0], [1.0, 2.0], 5, kind=kind)
    lo, hi = np.array([-0.3, 0.2]), np.array([0.7, 1.9])
    rule = box_rule(lo, hi, 8)
    vol = np.prod(hi - lo)
    ref = basis.evaluate(rule.nodes).T @ rule.weights * vol
    assert np.allclose(basis.box_integrals(lo, hi), ref, rtol=1e-12, atol=1e-13)
    assert np.all(basis.box_integrals([0.5, 0.0], [0.5, 1.0]) == 0)


def test_spherical_harmonic_values():
    x = np.array([0.0, 0.0, 1.0])
    assert eval_sph_harmonic(0, 0, [0.6, 0.0, 0.8]) == pytest.approx(1.0)
    assert eval_sph_harmonic(1, 0, x) == pytest.approx(math.sqrt(3.0), rel=1e-14)
    rule = sphere_rule(8, 17)
    y = SphericalHarmonicBasis(2).evaluate(rule.nodes)[:, SphericalHarmonicBasis.index(2, 1)]
    assert abs(np.sum(rule.weights * y * y) - 1.0) < 1e-10
    with pytest.raises(ValueError):
        eval_sph_harmonic(1, 2, x)
    with pytest.raises(ValueError):
        eval_sph_harmonic(1, 0, [0.0, 0.0, 1.1])


def test_harmonic_ordering_and_size():
    b = SphericalHarmonicBasis(4)
    assert len(b) == 25
    assert b.entries[:4] == ((0, 0), (1, -1), (1, 0), (1, 1))
    assert [b.index(l, m) for l, m in b.entries] == list(range(25))


def test_harmonics_closed_forms():
    # degree one harmonics are sqrt(3) times the coordinates
    rng = np.random.default_rng(3)
    x = rng.normal(size=(5, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    Y = SphericalHarmonicBasis(1).evaluate(x)
    assert np.allclose(Y[:, 1:], math.sqrt(3.0) * x[:, [1, 2, 0]], atol=1e-14)


def test_orthonormality_degree_8():
    rule = sphere_rule(12, 25)
    Y = SphericalHarmonicBasis(8).evaluate(rule.nodes)
    G = Y.T @ (Y * rule.weights[:, None])
    assert np.max(np.abs(G - np.eye(81))) < 1e-9


def test_high_degree_stable():
    rule = sphere_rule(70, 141)
    Y = SphericalHarmonicBasis(60).evaluate(rule.nodes)
    assert np.all(np.isfinite(Y))
    diag = np.sum(Y * Y * rule.weights[:, None], axis=0)
    assert np.max(np.abs(diag - 1)) < 1e-9


@given(st.integers(0, 8), st.floats(-1, 1), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
@settings(max_examples=40, deadline=None)
def test_zonal_kernel_depends_only_on_inner_product(l, t, a1, a2):
    # pairs (x, y) with <x, y> = t rotated about the z axis and then about x
    s = math.sqrt(max(0.0, 1 - t * t))
    def pair(alpha):
        x = np.array([0.0, 0.0, 1.0])
        y = np.array([s * math.cos(alpha), s * math.sin(alpha), t])
        c, sn = math.cos(alpha / 3), math.sin(alpha / 3)
        R = np.array([[1, 0, 0], [0, c, -sn], [0, sn, c]])
        return R @ x, R @ y
    b = SphericalHarmonicBasis(l)
    sel = b.orders == l
    vals = []
    for alpha in (a1, a2):
        x, y = pair(alpha)
        Y = b.evaluate(np.vstack([x, y]))
        vals.append(float(Y[0, sel] @ Y[1, sel]))
    assert abs(vals[0] - vals[1]) < 1e-9
    # addition theorem value (2l+1) P_l(t)
    assert vals[0] == pytest.approx((2 * l + 1) * np.polynomial.legendre.legval(t, [0] * l + [1]), abs=1e-9)


def test_gegenbauer_examples():
    assert eval_gegenbauer(GegenbauerParams(0.7, 0), 0.3) == 1
    assert eval_gegenbauer(GegenbauerParams(1.0, 1), 0.5) == pytest.approx(1.0)
    assert eval_gegenbauer(GegenbauerParams(0.5, 2), 1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        eval_gegenbauer(GegenbauerParams(0.5, 2), 1.5)
    with pytest.raises(ValueError):
        GegenbauerParams(-0.6, 1)


@given(st.floats(0.05, 3.0), st.floats(-1, 1))
@settings(max_examples=50, deadline=None)
def test_gegenbauer_closed_forms(a, t):
    closed = [1.0, 2 * a * t, 2 * a * (a + 1) * t * t - a,
              4.0 / 3.0 * a * (a + 1) * (a + 2) * t ** 3 - 2 * a * (a + 1) * t]
    for l, c in enumerate(closed):
        assert eval_gegenbauer(GegenbauerParams(a, l), t) == pytest.approx(c, abs=1e-12)
        norm = normalized_gegenbauer(a, 3, np.array([t]))[0, l]
        assert norm * eval_gegenbauer(GegenbauerParams(a, l), 1.0) == pytest.approx(c, abs=1e-12)


def test_normalized_gegenbauer_chebyshev_limit():
    t = np.linspace(-1, 1, 11)
    R = normalized_gegenbauer(0.0, 6, t)
    assert np.allclose(R, np.cos(np.outer(np.arccos(t), np.arange(7))), atol=1e-13)
