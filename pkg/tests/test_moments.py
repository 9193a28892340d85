import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given, settings, strategies as st

from mcdkernel.basis import PolynomialBasis, SphericalHarmonicBasis
from mcdkernel.densities import VMFMixture
from mcdkernel.moments import (
    ConditionError,
    MomentMatrixError,
    build_moment_matrix,
    dump_csv,
    factorize,
    orthonormal_functionals,
    project,
    weighted_norm_sq,
)
from mcdkernel.mollifier import mollifier_norm_sq, zonal
from mcdkernel.quadrature import BoxDomain, Measure, box_rule, sphere_rule


@pytest.fixture(scope="module")
def uniform_interval():
    return Measure.uniform(box_rule([-1], [1], 10))


def test_monomial_gram_matrix(uniform_interval):
    M = build_moment_matrix(uniform_interval, PolynomialBasis([-1], [1], 2, kind="monomial"))
    expected = np.array([[1, 0, 1 / 3], [0, 1 / 3, 0], [1 / 3, 0, 1 / 5]])
    assert np.allclose(M.matrix, expected, atol=1e-15)
    # (M^{-1})_{11} = (1/5) / (1/5 - 1/9) = 9/4 for the normalized measure
    assert weighted_norm_sq(M, [1.0, 0.0, 0.0]) == pytest.approx(2.25, rel=1e-13)
    # against plain Lebesgue measure dy on [-1, 1] the matrix doubles and the value halves
    assert weighted_norm_sq(factorize(2 * M.matrix), [1.0, 0.0, 0.0]) == pytest.approx(1.125, rel=1e-13)
    assert weighted_norm_sq(M, np.zeros(3)) == 0
    with pytest.raises(ValueError):
        weighted_norm_sq(M, [1.0, 0.0])


def test_sphere_moments_identity_and_vmf():
    I = build_moment_matrix(Measure.uniform(sphere_rule(10, 21)), SphericalHarmonicBasis(3))
    assert np.max(np.abs(I.matrix - np.eye(16))) < 1e-10
    assert weighted_norm_sq(I, np.arange(16.0)) == pytest.approx(np.sum(np.arange(16.0) ** 2))
    M = build_moment_matrix(Measure.from_density(sphere_rule(40, 81), VMFMixture(3.0)), SphericalHarmonicBasis(5))
    assert np.allclose(M.matrix, M.matrix.T)
    assert np.all(np.linalg.eigvalsh(M.matrix) > 0)
    assert abs(M.matrix[0, 0] - 1) < 1e-8


def test_cholesky_failure_reports_pivot():
    # three atoms cannot support quadratics in two variables: Zariski degenerate
    emp = Measure.empirical([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], BoxDomain((0, 0), (1, 1)))
    with pytest.raises(MomentMatrixError) as exc:
        build_moment_matrix(emp, PolynomialBasis([0, 0], [1, 1], 2))
    assert exc.value.pivot is not None and exc.value.pivot <= 1e-10
    assert exc.value.index is not None


def test_condition_monitor():
    M = factorize(np.diag([1.0, 1e-16]))
    assert M.pivot_ratio == pytest.approx(1e16)
    with pytest.raises(ConditionError):
        M.check_condition()
    assert factorize(np.eye(3)).check_condition() == 1.0


def test_project_polynomial_is_reproduced(uniform_interval):
    basis = PolynomialBasis([-1], [1], 4, kind="monomial")
    M = build_moment_matrix(uniform_interval, basis)
    coeffs = np.array([1.0, -2.0, 0.5, 0.0, 3.0])
    pc = project(uniform_interval, M, lambda x: basis.evaluate(x) @ coeffs)
    assert np.allclose(pc.coeffs, coeffs, atol=1e-9)
    assert pc.residual_sq < 1e-18
    one = project(uniform_interval, M, lambda x: np.ones(len(x)))
    assert np.allclose(one.coeffs, np.eye(5)[0], atol=1e-12)
    assert one.norm_sq == pytest.approx(1.0)


def test_project_zonal_mollifier_exact():
    rule = sphere_rule(20, 41)
    mu = Measure.uniform(rule)
    M = build_moment_matrix(mu, SphericalHarmonicBasis(6))
    from mcdkernel.mollifier import eval_mollifier
    spec = zonal([0.0, 0.6, 0.8], 5)
    pc = project(mu, M, lambda y: eval_mollifier(spec, y))
    assert pc.norm_sq == pytest.approx(mollifier_norm_sq(spec), abs=1e-8)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 12), st.sampled_from([1, 2]))
@settings(max_examples=25, deadline=None)
def test_orthonormalized_equivalence(seed, d, n):
    rng = np.random.default_rng(seed)
    mu = Measure.from_density(box_rule([0] * n, [2] * n, 20), lambda x: 1 + 0.5 * np.cos(3 * x[:, 0]))
    basis = PolynomialBasis([0] * n, [2] * n, d)
    M = build_moment_matrix(mu, basis)
    R = rng.normal(size=(len(basis), 4))
    Q = orthonormal_functionals(mu, basis, R)
    assert np.allclose(np.sum(Q * Q, axis=0), weighted_norm_sq(M, R), rtol=1e-9)
    # columns of L^{-T} as an orthonormal basis
    Linv_T = la.solve_triangular(M.chol, np.eye(len(basis)), lower=True).T
    assert np.allclose(np.sum((R.T @ Linv_T) ** 2, axis=1), weighted_norm_sq(M, R), rtol=1e-9)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20, deadline=None)
def test_monotone_in_degree(seed):
    rng = np.random.default_rng(seed)
    mu = Measure.from_density(box_rule([-1], [1], 30), lambda x: 2 + x[:, 0])
    coeffs = rng.normal(size=9)
    prev = -1.0
    for d in range(9):
        basis = PolynomialBasis([-1], [1], d)
        M = build_moment_matrix(mu, basis)
        # a fixed functional: integration against a fixed weight g
        g = np.polynomial.legendre.legval(mu.nodes[:, 0], coeffs) ** 2
        r = basis.evaluate(mu.nodes).T @ (mu.rule.weights * g)
        val = weighted_norm_sq(M, r)
        assert val >= prev * (1 - 1e-12)
        prev = val


def test_dump_csv(tmp_path, uniform_interval):
    M = build_moment_matrix(uniform_interval, PolynomialBasis([-1], [1], 2, kind="monomial"))
    path = tmp_path / "m.csv"
    dump_csv(M, path)
    back = np.loadtxt(path, delimiter=",")
    assert np.array_equal(back, M.matrix)
