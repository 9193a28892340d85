import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as spi
from scipy import special

from mcdkernel.basis import PolynomialBasis, SphericalHarmonicBasis
from mcdkernel.mollifier import (
    GegenbauerMismatchError,
    MollifierSpec,
    UnresolvedMollifierError,
    box_coupling,
    ell_by_quadrature,
    ell_vector,
    eval_mollifier,
    funk_hecke_lambda,
    funk_hecke_lambdas,
    lasserre_box,
    mollifier_norm_sq,
    ratio_gradient,
    ratio_one_minus_t,
    smooth_bump,
    sphere_coupling,
    zonal,
    zonal_lambdas,
    zonal_mass,
    zonal_variance_resolution,
)
from mcdkernel.quadrature import BoxDomain, sphere_rule
import mcdkernel.mollifier as mol


def test_eval_examples():
    assert eval_mollifier(lasserre_box([0.3], 0.1), [0.3]) == pytest.approx(5.0)
    assert eval_mollifier(zonal([0, 0, 1], 4), [0, 0, 1]) == pytest.approx(5.0)
    assert eval_mollifier(smooth_bump([0.0, 0.0], 0.2), [0.2, 0.0]) == 0.0
    assert eval_mollifier(smooth_bump([0.0, 0.0], 0.2), [0.15, 0.14]) == 0.0
    assert eval_mollifier(lasserre_box([0.0, 0.0], 0.2), [0.15, 0.0]) == 0.0  # outside the inscribed cube


def test_spec_validation():
    with pytest.raises(ValueError):
        zonal([0, 0, 2], 3)
    with pytest.raises(ValueError):
        zonal([0, 0, 1], 0)
    with pytest.raises(ValueError):
        lasserre_box([0.0], -0.1)
    with pytest.raises(ValueError):
        MollifierSpec("gaussian", (0.0,), 0.1, 1)


def test_zonal_mass_beta_oracle():
    for n in (2, 3, 4, 5):
        for k in (0, 1, 4, 17):
            # the endpoint factor (1 - t^2)^((n-3)/2) goes into the QUADPACK algebraic weight
            a = (n - 3) / 2
            num, _ = spi.quad(lambda t: ((1 + t) / 2) ** k, -1, 1, weight="alg", wvar=(a, a), epsabs=1e-14, epsrel=1e-13)
            den, _ = spi.quad(lambda t: 1.0, -1, 1, weight="alg", wvar=(a, a), epsabs=1e-14, epsrel=1e-13)
            assert zonal_mass(k, n) == pytest.approx(num / den, rel=1e-9)
    assert zonal_mass(4, 3) == pytest.approx(1 / 5)


def test_norm_examples():
    assert mollifier_norm_sq(lasserre_box([0.0], 0.1)) == pytest.approx(5.0)
    assert mollifier_norm_sq(zonal([1, 0, 0], 1)) == pytest.approx(4 / 3)
    assert mollifier_norm_sq(lasserre_box([0.0, 0.0], 0.5)) == pytest.approx(2.0)
    for k in (1, 5, 30):
        assert mollifier_norm_sq(zonal([0, 1, 0], k)) == pytest.approx((k + 1) ** 2 / (2 * k + 1), rel=1e-12)
    with pytest.raises(ValueError):
        mollifier_norm_sq(lasserre_box([0.95], 0.1), BoxDomain((-1,), (1,)))


def test_bump_norm_against_direct_quadrature():
    for eps in (0.5, 0.1):
        s = smooth_bump([0.0], eps)
        direct, _ = spi.quad(lambda y: eval_mollifier(s, [y]) ** 2, -eps, eps, epsabs=0, epsrel=1e-12, limit=200)
        assert mollifier_norm_sq(s) == pytest.approx(direct, rel=1e-10)


def test_ratio_examples():
    assert ratio_one_minus_t(1, 3) == pytest.approx(0.5)
    assert ratio_one_minus_t(10, 2) == pytest.approx(1 / 21)
    vals = [ratio_one_minus_t(k, 3) for k in range(1, 200)]
    assert all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] < 0.01
    assert ratio_gradient(1, 3) == pytest.approx(0.5)
    # 4 * 2 / (4 * 2 + 3 - 3) = 1
    assert ratio_gradient(2, 3) == pytest.approx(1.0)
    assert ratio_gradient(2, 3) == pytest.approx(_jacobi_ratio(2, 3, grad=True), rel=1e-12)
    with pytest.raises(ValueError):
        ratio_gradient(0, 3)


def _jacobi_ratio(k, n, grad=False):
    a = (n - 3) / 2
    t, w = special.roots_jacobi(2 * k + 4, a, a)
    g = ((1 + t) / 2) ** k
    den = np.sum(w * g * g)
    if grad:
        dg = k / 2 * ((1 + t) / 2) ** (k - 1)
        return np.sum(w * (1 - t * t) * dg * dg) / den
    return np.sum(w * (1 - t) * g * g) / den


def test_gradient_ratio_quadrature():
    assert ratio_gradient(5, 3) == pytest.approx(_jacobi_ratio(5, 3, grad=True), rel=1e-10)


def test_variance_resolution():
    # mean of |x - y|^2 = 2(1 - t) under the normalized mollifier, by surface quadrature
    rule = sphere_rule(30, 61)
    s = zonal([0, 0, 1], 12)
    mean = np.sum(rule.weights * eval_mollifier(s, rule.nodes) * 2 * (1 - rule.nodes[:, 2]))
    assert mean == pytest.approx(zonal_variance_resolution(12), rel=1e-12)


def test_funk_hecke_examples():
    for n in (2, 3, 4, 6):
        assert funk_hecke_lambda(0, lambda t: np.ones_like(t), n) == pytest.approx(1.0, abs=1e-13)
    for k in range(0, 9):
        assert funk_hecke_lambda(0, lambda t: ((1 + t) / 2) ** k, 3) == pytest.approx(1 / (k + 1))
    assert funk_hecke_lambda(1, lambda t: (1 + t) / 2, 3) == pytest.approx(1 / 6)


def test_funk_hecke_alpha_mismatch():
    # the order (n-1)/2 does not reproduce the surface measure
    with pytest.raises(GegenbauerMismatchError):
        funk_hecke_lambdas(lambda t: np.ones_like(t), 2, n=3, alpha=1.0)
    funk_hecke_lambdas(lambda t: np.ones_like(t), 2, n=3, alpha=0.5)


def test_zonal_lambda_closed_form():
    # n = 3: lambda_l of the normalized g_k is k!(k+1)! / ((k-l)!(k+l+1)!)
    for k in (3, 20, 93):
        lam = zonal_lambdas(k, 30)
        for l in range(31):
            ref = 0.0 if l > k else math.exp(special.gammaln(k + 1) + special.gammaln(k + 2)
                                              - special.gammaln(k - l + 1) - special.gammaln(k + l + 2))
            assert abs(lam[l] - ref) < 1e-12  # absolute, relative to lambda_0 = 1


def test_ell_lasserre_examples():
    basis = PolynomialBasis([-1], [1], 2, kind="monomial")
    for z, eps in [(0.3, 0.2), (-0.5, 0.05)]:
        r = ell_vector(lasserre_box([z], eps), basis).values
        assert r[0] == pytest.approx(1.0)
        assert r[1] == pytest.approx(z)
        assert r[2] == pytest.approx(z * z + eps * eps / 3)


def test_ell_region_clipping():
    basis = PolynomialBasis([-1], [1], 3)
    spec = lasserre_box([0.95], 0.2)
    rX, rZ = ell_vector(spec, basis, "X").values, ell_vector(spec, basis, "Z").values
    assert rZ[0] == pytest.approx(1.0)
    # support (0.75, 1.15) clipped at 1: length 0.25 at height 1 / 0.4
    assert rX[0] == pytest.approx(0.625)
    outside = ell_vector(lasserre_box([1.5], 0.2), basis, "X").values
    assert np.all(outside == 0)


@given(st.floats(-0.6, 0.6), st.floats(0.02, 0.35), st.sampled_from(["legendre", "monomial"]))
@settings(max_examples=25, deadline=None)
def test_bump_ell_matches_adaptive_quadrature(z, eps, kind):
    basis = PolynomialBasis([-1], [1], 6, kind=kind)
    spec = smooth_bump([z], eps)
    r = ell_vector(spec, basis).values
    for j in (0, 3, 6):
        f = lambda y: eval_mollifier(spec, [y]) * basis.evaluate(np.array([[y]]))[0, j]
        ref, _ = spi.quad(f, z - eps, z + eps, epsabs=1e-13, epsrel=1e-12, limit=200)
        assert r[j] == pytest.approx(ref, abs=1e-9)
    assert r[0 if kind == "monomial" else 0] == pytest.approx(1.0, abs=1e-12)


def test_bump_2d_mass():
    basis = PolynomialBasis([-1, -1], [1, 1], 3)
    r = ell_vector(smooth_bump([0.1, -0.2], 0.3), basis).values
    assert r[0] == pytest.approx(1.0, abs=1e-10)


def test_unresolved_bump_raises(monkeypatch):
    monkeypatch.setattr(mol, "SUBRULE_MAX", 8)
    monkeypatch.setattr(mol, "SUBRULE_START", 4)
    with pytest.raises(UnresolvedMollifierError):
        ell_vector(smooth_bump([0.0], 0.2), PolynomialBasis([-1], [1], 4))


@pytest.mark.parametrize("k", [1, 4, 8])
def test_zonal_ell_matches_surface_quadrature(k):
    basis = SphericalHarmonicBasis(8)
    rule = sphere_rule(20, 41)
    z = np.array([0.36, -0.48, 0.8])
    spec = zonal(z, k)
    assert np.max(np.abs(ell_vector(spec, basis).values - ell_by_quadrature(spec, basis, rule))) < 1e-8


def test_couplings():
    assert box_coupling(8, 2) == pytest.approx(0.25)
    assert [sphere_coupling(d) for d in (5, 10, 15, 20, 25, 30)] == [8, 21, 36, 54, 73, 93]
    assert sphere_coupling(8) == 16
