"""Polynomial bases on boxes, real spherical harmonics on S^2, Gegenbauer polynomials.

Everything here is evaluated in a vectorized way: bases return design
matrices of shape ``(n_points, n_basis)`` whose columns follow the fixed
basis ordering.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MultiIndex",
    "MonomialBasis",
    "PolynomialBasis",
    "SphericalHarmonicBasis",
    "GegenbauerParams",
    "enumerate_monomials",
    "eval_monomial",
    "eval_sph_harmonic",
    "eval_gegenbauer",
    "normalized_gegenbauer",
    "legendre_table",
]

UNIT_TOL = 1e-12

MultiIndex = tuple  # tuple[int, ...] of exponents, one per coordinate


def _graded_lex(n, d):
    out = []
    for deg in range(d + 1):
        # lexicographic descending within a degree: x1 before x2 before ...
        level = [c for c in itertools.product(range(deg, -1, -1), repeat=n) if sum(c) == deg]
        out.extend(level)
    return out


@dataclass(frozen=True)
class MonomialBasis:
    """All multi-indices of total degree <= `degree` in graded-lex order."""

    dimension: int
    degree: int
    indices: tuple = field(repr=False)

    def __len__(self):
        return len(self.indices)


def enumerate_monomials(n: int, d: int) -> MonomialBasis:
    """Graded-lex enumeration of the exponents spanning polynomials of degree <= d.

    >>> enumerate_monomials(2, 1).indices
    ((0, 0), (1, 0), (0, 1))
    """
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    if int(d) != d or d < 0:
        raise ValueError(f"degree must be a non-negative integer, got {d!r}")
    return MonomialBasis(int(n), int(d), tuple(_graded_lex(int(n), int(d))))


def eval_monomial(idx, x) -> float:
    """Evaluate prod_i x_i ** idx_i."""
    idx = tuple(idx)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if len(idx) != x.shape[-1]:
        raise ValueError(f"multi-index has length {len(idx)} but point has dimension {x.shape[-1]}")
    out = 1.0
    for a, xi in zip(idx, x):
        out *= xi ** a
    return float(out)


def legendre_table(u, d):
    """Legendre polynomials P_0..P_d at `u`, shape ``u.shape + (d + 1,)``."""
    u = np.asarray(u, dtype=float)
    out = np.empty(u.shape + (d + 1,))
    out[..., 0] = 1.0
    if d >= 1:
        out[..., 1] = u
    for j in range(2, d + 1):
        out[..., j] = ((2 * j - 1) * u * out[..., j - 1] - (j - 1) * out[..., j - 2]) / j
    return out


class PolynomialBasis:
    """Tensor-type basis of polynomials of total degree <= d on an axis-aligned box.

    Parameters
    ----------
    a, b : array_like
        Lower and upper corners of the box.
    degree : int
        Maximal total degree.
    kind : {"legendre", "scaled", "monomial"}
        ``"monomial"`` are raw powers ``y**alpha``; ``"scaled"`` divides each
        monomial by its L2 norm against the normalized Lebesgue measure of the
        box; ``"legendre"`` uses tensor products of Legendre polynomials mapped
        to the box, orthonormal for that measure.

    The per-axis factors are one-dimensional, so every basis element is a
    product ``prod_i u_{alpha_i}(y_i)``.  That is what makes integrals over
    sub-boxes available in closed form (see :meth:`box_integrals`).
    """

    KINDS = ("legendre", "scaled", "monomial")

    def __init__(self, a, b, degree, kind="legendre"):
        self.a = np.atleast_1d(np.asarray(a, dtype=float))
        self.b = np.atleast_1d(np.asarray(b, dtype=float))
        if self.a.shape != self.b.shape or self.a.ndim != 1:
            raise ValueError("box corners must be 1-d arrays of equal length")
        if np.any(self.b <= self.a):
            raise ValueError("degenerate box: need a_i < b_i")
        if kind not in self.KINDS:
            raise ValueError(f"unknown basis kind {kind!r}")
        self.kind = kind
        self.monomials = enumerate_monomials(len(self.a), degree)
        self.degree = self.monomials.degree
        self.dim = len(self.a)
        self._alpha = np.array(self.monomials.indices, dtype=int).reshape(len(self.monomials), self.dim)
        if kind == "scaled":
            # L2 norm of y**j against dy/(b-a) on [a,b]
            j = np.arange(self.degree + 1)
            scales = []
            for ai, bi in zip(self.a, self.b):
                m2 = (bi ** (2 * j + 1) - ai ** (2 * j + 1)) / ((2 * j + 1) * (bi - ai))
                scales.append(np.sqrt(m2))
            self._axis_scale = np.array(scales)
        else:
            self._axis_scale = np.ones((self.dim, self.degree + 1))

    def __len__(self):
        return len(self.monomials)

    @property
    def indices(self):
        return self.monomials.indices

    def _axis_values(self, y, axis):
        d = self.degree
        if self.kind == "legendre":
            ai, bi = self.a[axis], self.b[axis]
            u = (2.0 * y - ai - bi) / (bi - ai)
            return legendre_table(u, d) * np.sqrt(2 * np.arange(d + 1) + 1)
        powers = y[..., None] ** np.arange(d + 1)
        return powers / self._axis_scale[axis]

    def _axis_antiderivative(self, y, axis):
        """Antiderivative in y of each 1-d factor, shape ``y.shape + (d + 1,)``."""
        d = self.degree
        j = np.arange(d + 1)
        if self.kind == "legendre":
            ai, bi = self.a[axis], self.b[axis]
            u = (2.0 * y - ai - bi) / (bi - ai)
            P = legendre_table(u, d + 1)
            anti = np.empty(np.shape(y) + (d + 1,))
            anti[..., 0] = u
            if d >= 1:
                jj = j[1:]
                anti[..., 1:] = (P[..., 2:] - P[..., : d]) / (2 * jj + 1)
            return anti * np.sqrt(2 * j + 1) * (bi - ai) / 2.0
        return y[..., None] ** (j + 1) / (j + 1) / self._axis_scale[axis]

    def evaluate(self, points):
        """Design matrix of shape ``(n_points, len(self))``."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        out = np.ones((pts.shape[0], len(self)))
        for axis in range(self.dim):
            table = self._axis_values(pts[:, axis], axis)
            out *= table[:, self._alpha[:, axis]]
        return out

    def box_integrals(self, lo, hi):
        """Lebesgue integrals of every basis element over the box [lo, hi].

        Empty boxes (some lo_i >= hi_i) give zeros.
        """
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if np.any(hi <= lo):
            return np.zeros(len(self))
        out = np.ones(len(self))
        for axis in range(self.dim):
            anti = self._axis_antiderivative(np.array([lo[axis], hi[axis]]), axis)
            per_axis = anti[1] - anti[0]
            out *= per_axis[self._alpha[:, axis]]
        return out


# --------------------------------------------------------------------------
# spherical harmonics


def _check_unit(points):
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    norms = np.linalg.norm(pts, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"points must lie on the unit sphere (norm deviation {worst:.3g})")
    return pts


def _normalized_legendre(t, s, d):
    """Associated Legendre functions normalized so that int_{-1}^{1} P^2 dt/2 = 1.

    Returns a dict ``(l, m) -> array`` for 0 <= m <= l <= d, computed with the
    upward recurrence in l at fixed m (no Condon-Shortley phase).
    """
    P = {}
    pmm = np.ones_like(t)
    for m in range(d + 1):
        if m == 1:
            pmm = np.sqrt(1.5) * s
        elif m > 1:
            pmm = np.sqrt((2 * m + 1) / (2 * m)) * s * pmm
        P[m, m] = pmm
        if m + 1 <= d:
            P[m + 1, m] = np.sqrt(2 * m + 3) * t * pmm
        for l in range(m + 2, d + 1):
            a = np.sqrt((2 * l + 1) * (2 * l - 1) / ((l - m) * (l + m)))
            b = np.sqrt((2 * l + 1) * (l + m - 1) * (l - m - 1) / ((l - m) * (l + m) * (2 * l - 3)))
            P[l, m] = a * t * P[l - 1, m] - b * P[l - 2, m]
    return P


class SphericalHarmonicBasis:
    """Real spherical harmonics Y_{l,m}, 0 <= l <= d, orthonormal for the
    normalized surface measure (so Y_{0,0} = 1).

    Entries are ordered by l, then m = -l..l.  Negative m carries the
    sin(|m| phi) factor, positive m the cos(m phi) factor.
    """

    def __init__(self, degree):
        if int(degree) != degree or degree < 0:
            raise ValueError(f"degree must be a non-negative integer, got {degree!r}")
        self.degree = int(degree)
        self.entries = tuple((l, m) for l in range(self.degree + 1) for m in range(-l, l + 1))

    def __len__(self):
        return (self.degree + 1) ** 2

    @staticmethod
    def index(l, m):
        return l * l + l + m

    @property
    def orders(self):
        """Degree l of every entry, as an int array."""
        return np.array([l for l, _ in self.entries], dtype=int)

    def evaluate(self, points, check=True):
        pts = _check_unit(points) if check else np.asarray(points, dtype=float).reshape(-1, 3)
        d = self.degree
        t = np.clip(pts[:, 2], -1.0, 1.0)
        s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        P = _normalized_legendre(t, s, d)
        out = np.empty((pts.shape[0], len(self)))
        cos_m = [np.ones_like(t)] + [np.cos(m * phi) for m in range(1, d + 1)]
        sin_m = [np.zeros_like(t)] + [np.sin(m * phi) for m in range(1, d + 1)]
        root2 = math.sqrt(2.0)
        for l in range(d + 1):
            base = l * l + l
            out[:, base] = P[l, 0]
            for m in range(1, l + 1):
                out[:, base + m] = root2 * P[l, m] * cos_m[m]
                out[:, base - m] = root2 * P[l, m] * sin_m[m]
        return out


def eval_sph_harmonic(l: int, m: int, x) -> float:
    """Real spherical harmonic Y_{l,m}(x) normalized against the surface probability measure."""
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l (got l={l}, m={m})")
    basis = SphericalHarmonicBasis(l)
    return float(basis.evaluate(np.asarray(x, dtype=float).reshape(1, 3))[0, basis.index(l, m)])


# --------------------------------------------------------------------------
# Gegenbauer polynomials


@dataclass(frozen=True)
class GegenbauerParams:
    alpha: float
    degree: int

    def __post_init__(self):
        if not self.alpha > -0.5:
            raise ValueError(f"Gegenbauer order must exceed -1/2, got {self.alpha}")
        if int(self.degree) != self.degree or self.degree < 0:
            raise ValueError(f"degree must be a non-negative integer, got {self.degree!r}")

    @property
    def weight_exponent(self):
        """Exponent of (1 - t^2) in the weight w_alpha."""
        return self.alpha - 0.5


def _check_interval(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + 1e-14):
        raise ValueError("Gegenbauer argument must lie in [-1, 1]")
    return t


def eval_gegenbauer(p: GegenbauerParams, t):
    """C_l^(alpha)(t) by the three-term recurrence (C_0 = 1, C_1 = 2 alpha t)."""
    t = _check_interval(t)
    a = p.alpha
    c_prev = np.ones_like(t)
    if p.degree == 0:
        return c_prev if c_prev.ndim else float(c_prev)
    c = 2.0 * a * t
    for l in range(2, p.degree + 1):
        c_prev, c = c, (2.0 * (l + a - 1) * t * c - (l + 2 * a - 2) * c_prev) / l
    return c if np.ndim(c) else float(c)


def normalized_gegenbauer(alpha, degree, t):
    """C_l^(alpha)(t) / C_l^(alpha)(1) for l = 0..degree, last axis indexes l.

    Uses the recurrence for the normalized family directly, which stays well
    defined at alpha = 0 (where it reduces to Chebyshev polynomials).
    """
    t = _check_interval(t)
    out = np.empty(np.shape(t) + (degree + 1,))
    out[..., 0] = 1.0
    if degree >= 1:
        out[..., 1] = t
    for l in range(2, degree + 1):
        den = 2 * alpha + l - 1
        out[..., l] = (2 * (l + alpha - 1) / den) * t * out[..., l - 1] - ((l - 1) / den) * out[..., l - 2]
    return out
