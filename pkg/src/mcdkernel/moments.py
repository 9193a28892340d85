"""Moment (Gram) matrices of a basis in L2(mu) and the solves built on them."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

__all__ = [
    "MomentMatrixError",
    "ConditionError",
    "MomentMatrix",
    "ProjectionCoefficients",
    "build_moment_matrix",
    "weighted_norm_sq",
    "solve",
    "project",
    "orthonormal_functionals",
    "dump_csv",
    "PIVOT_RATIO_LIMIT",
]

PIVOT_RATIO_LIMIT = 1e14
CHUNK = 4096


class MomentMatrixError(RuntimeError):
    """Cholesky factorization failed; `pivot` is the offending pivot value."""

    def __init__(self, message, pivot=None, index=None):
        super().__init__(message)
        self.pivot = pivot
        self.index = index


class ConditionError(MomentMatrixError):
    """The factor's pivot ratio exceeds the allowed limit."""


@dataclass
class MomentMatrix:
    """M_ij = int b_i b_j dmu together with its lower Cholesky factor."""

    basis: object = field(repr=False)
    matrix: np.ndarray = field(repr=False)
    chol: np.ndarray = field(repr=False)

    @property
    def size(self):
        return self.matrix.shape[0]

    @property
    def pivot_ratio(self):
        """(max L_ii / min L_ii)^2, a cheap lower estimate of cond(M)."""
        diag = np.abs(np.diag(self.chol))
        return float((diag.max() / diag.min()) ** 2)

    cond_est = pivot_ratio

    def check_condition(self, limit=PIVOT_RATIO_LIMIT):
        ratio = self.pivot_ratio
        if not ratio <= limit:
            raise ConditionError(f"moment matrix pivot ratio {ratio:.3g} exceeds {limit:.3g}", pivot=ratio)
        return ratio


def _failing_pivot(M, index):
    """Exact Schur-complement pivot at `index` given a successful leading block."""
    if index == 0:
        return float(M[0, 0])
    L = la.cholesky(M[:index, :index], lower=True)
    x = la.solve_triangular(L, M[:index, index], lower=True)
    return float(M[index, index] - x @ x)


def factorize(M, basis=None) -> MomentMatrix:
    M = np.asarray(M, dtype=float)
    M = 0.5 * (M + M.T)
    L, info = la.lapack.dpotrf(M, lower=1, clean=1)
    if info != 0:
        if info < 0:
            raise MomentMatrixError(f"dpotrf argument error {info}")
        idx = info - 1
        pivot = _failing_pivot(M, idx)
        raise MomentMatrixError(
            f"Cholesky failed at pivot {idx} (value {pivot:.3e}); the support may be "
            f"Zariski-degenerate or the quadrature under-resolved",
            pivot=pivot,
            index=idx,
        )
    return MomentMatrix(basis, M, np.tril(L))


def build_moment_matrix(measure, basis, chunk=CHUNK) -> MomentMatrix:
    """Gram matrix of `basis` against `measure`, accumulated over node chunks."""
    n = len(basis)
    M = np.zeros((n, n))
    nodes = measure.nodes
    w = measure.weights
    for start in range(0, len(w), chunk):
        B = basis.evaluate(nodes[start:start + chunk])
        M += B.T @ (B * w[start:start + chunk, None])
    return factorize(M, basis)


def weighted_norm_sq(M: MomentMatrix, r) -> float:
    """r^T M^{-1} r via one triangular solve against the Cholesky factor."""
    r = np.asarray(r, dtype=float)
    if r.shape[0] != M.size:
        raise ValueError(f"vector has length {r.shape[0]}, moment matrix has size {M.size}")
    z = la.solve_triangular(M.chol, r, lower=True)
    return float(z @ z) if z.ndim == 1 else np.sum(z * z, axis=0)


def whiten(M: MomentMatrix, R):
    """L^{-1} R for a vector or a matrix of column vectors."""
    R = np.asarray(R, dtype=float)
    if R.shape[0] != M.size:
        raise ValueError(f"vector has length {R.shape[0]}, moment matrix has size {M.size}")
    return la.solve_triangular(M.chol, R, lower=True)


def solve(M: MomentMatrix, r):
    """M^{-1} r via the Cholesky factor."""
    return la.cho_solve((M.chol, True), np.asarray(r, dtype=float))


@dataclass
class ProjectionCoefficients:
    coeffs: np.ndarray
    rhs: np.ndarray
    norm_sq: float
    residual_sq: float


def project(measure, M: MomentMatrix, h) -> ProjectionCoefficients:
    """L2(mu)-orthogonal projection of `h` onto the span of the basis.

    `residual_sq` is ||h - P h||^2 computed on the quadrature nodes.
    """
    B = M.basis.evaluate(measure.nodes)
    hv = np.asarray(h(measure.nodes), dtype=float).reshape(-1)
    if not np.all(np.isfinite(hv)):
        raise ValueError("h is not finite at every node")
    w = measure.weights
    r = B.T @ (w * hv)
    c = solve(M, r)
    resid = hv - B @ c
    return ProjectionCoefficients(c, r, float(c @ r), float(np.sum(w * resid * resid)))


def orthonormal_functionals(measure, basis, R):
    """Functionals of a mu-orthonormal basis obtained by QR of the weighted design.

    Given ``R[:, j] = ell_j(b)`` for the basis b, returns ``ell_j(q)`` for the
    orthonormal basis q = T^{-1} b produced by a QR factorization of
    ``sqrt(w) B``.  This route never forms M.
    """
    B = basis.evaluate(measure.nodes)
    _, T = np.linalg.qr(np.sqrt(measure.weights)[:, None] * B, mode="reduced")
    # q = T^{-T} b  =>  ell(q) = T^{-T} ell(b)
    return la.solve_triangular(T, np.asarray(R, dtype=float), trans="T", lower=False)


def dump_csv(M: MomentMatrix, path):
    """Write the full symmetric matrix row-major, one row per line."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in M.matrix:
            writer.writerow([repr(float(v)) for v in row])
