"""Mollifier families, their linear functionals on a basis, and zonal reductions.

Euclidean mollifiers (``lasserre_box``, ``smooth_bump``) are probability
densities with respect to Lebesgue measure, supported in the ball
B(z, eps).  Zonal mollifiers on S^2 are probability densities with respect
to the normalized surface measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate as _spi
from scipy import special

from .basis import PolynomialBasis, SphericalHarmonicBasis, normalized_gegenbauer
from .quadrature import BoxDomain, cube_rule, gauss_legendre

__all__ = [
    "FAMILIES",
    "MollifierSpec",
    "EllVector",
    "UnresolvedMollifierError",
    "GegenbauerMismatchError",
    "lasserre_box",
    "smooth_bump",
    "zonal",
    "eval_mollifier",
    "ell_vector",
    "ell_matrix",
    "ell_by_quadrature",
    "mollifier_norm_sq",
    "ratio_one_minus_t",
    "ratio_gradient",
    "zonal_variance_resolution",
    "funk_hecke_lambda",
    "funk_hecke_lambdas",
    "zonal_lambdas",
    "zonal_mass",
    "sphere_area",
    "box_coupling",
    "sphere_coupling",
]

FAMILIES = ("lasserre_box", "smooth_bump", "zonal_algebraic")
EUCLIDEAN = ("lasserre_box", "smooth_bump")

SUBRULE_START = 32
SUBRULE_MAX = 4096
SUBRULE_TOL = 1e-12


class UnresolvedMollifierError(RuntimeError):
    """The local sub-rule did not converge under refinement."""


class GegenbauerMismatchError(ValueError):
    """The Gegenbauer order does not reproduce the surface measure at l = 0."""


@dataclass(frozen=True)
class MollifierSpec:
    family: str
    center: tuple
    resolution: float
    dim: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown mollifier family {self.family!r}")
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        object.__setattr__(self, "center", c)
        if len(c) != self.dim:
            raise ValueError("center dimension does not match ambient dimension")
        if self.family == "zonal_algebraic":
            if int(self.resolution) != self.resolution or self.resolution < 1:
                raise ValueError("zonal mollifiers need an integer degree k >= 1")
            if abs(np.linalg.norm(c) - 1.0) > 1e-12:
                raise ValueError("zonal mollifier center must be a unit vector")
            object.__setattr__(self, "resolution", int(self.resolution))
        elif not self.resolution > 0:
            raise ValueError("resolution eps must be positive")

    @property
    def z(self):
        return np.array(self.center)

    @property
    def euclidean(self):
        return self.family in EUCLIDEAN

    def support_box(self):
        """Smallest axis-aligned box containing the support (Euclidean families)."""
        z = self.z
        half = self.resolution / math.sqrt(self.dim) if self.family == "lasserre_box" else self.resolution
        return z - half, z + half

    def with_center(self, center):
        return MollifierSpec(self.family, tuple(np.atleast_1d(center)), self.resolution, self.dim)


def lasserre_box(center, eps):
    center = np.atleast_1d(np.asarray(center, dtype=float))
    return MollifierSpec("lasserre_box", tuple(center), float(eps), len(center))


def smooth_bump(center, eps):
    center = np.atleast_1d(np.asarray(center, dtype=float))
    return MollifierSpec("smooth_bump", tuple(center), float(eps), len(center))


def zonal(center, k):
    center = np.atleast_1d(np.asarray(center, dtype=float))
    return MollifierSpec("zonal_algebraic", tuple(center), int(k), len(center))


# --------------------------------------------------------------------------
# constants


def sphere_area(m):
    """Surface area of S^m in R^{m+1}."""
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


@lru_cache(maxsize=None)
def _bump_radial(n, power):
    """sphere_area(n-1) * int_0^1 r^{n-1} exp(-power/(1-r^2)) dr."""
    def f(r):
        return r ** (n - 1) * math.exp(-power / (1.0 - r * r)) if r < 1.0 else 0.0
    val, _ = _spi.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return sphere_area(n - 1) * val


def bump_constant(n):
    """Normalizing constant of exp(-1/(1-|y|^2)) on the unit ball of R^n."""
    return _bump_radial(n, 1.0)


def bump_unit_norm_sq(n):
    """Squared L2 norm of the normalized unit-radius bump."""
    return _bump_radial(n, 2.0) / bump_constant(n) ** 2


def zonal_mass(k, n=3):
    """int g_k d lambda on S^{n-1} for g_k(t) = ((1+t)/2)^k."""
    a = (n - 1) / 2.0
    log_c = special.gammaln(n / 2.0) - 0.5 * math.log(math.pi) - special.gammaln(a)
    return float(np.exp(log_c + (n - 2) * math.log(2.0) + special.betaln(k + a, a)))


# --------------------------------------------------------------------------
# evaluation


def eval_mollifier(spec: MollifierSpec, y):
    """phi_{z,eps}(y); vectorized over rows of `y`."""
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 1
    pts = y.reshape(-1, spec.dim)
    z = spec.z
    n = spec.dim
    if spec.family == "lasserre_box":
        eps = spec.resolution
        height = eps ** (-n) * (math.sqrt(n) / 2.0) ** n
        inside = np.max(np.abs(pts - z), axis=1) < eps / math.sqrt(n)
        out = np.where(inside, height, 0.0)
    elif spec.family == "smooth_bump":
        eps = spec.resolution
        r2 = np.sum((pts - z) ** 2, axis=1) / eps ** 2
        out = np.zeros(pts.shape[0])
        m = r2 < 1.0
        out[m] = np.exp(-1.0 / (1.0 - r2[m]))
        out *= eps ** (-n) / bump_constant(n)
    else:
        k = spec.resolution
        t = np.clip(pts @ z, -1.0, 1.0)
        out = ((1.0 + t) / 2.0) ** k / zonal_mass(k, n)
    return float(out[0]) if scalar else out


def mollifier_norm_sq(spec: MollifierSpec, domain=None) -> float:
    """||phi_{z,eps}||^2 in L2 of the family's reference measure.

    For Euclidean families the value is translation invariant provided the
    support stays inside `domain`; passing a domain enforces that.
    """
    n = spec.dim
    if spec.euclidean:
        if domain is not None:
            z = spec.z
            if not (domain.contains(z) and domain.inner_distance(z) >= spec.resolution):
                raise ValueError(
                    f"mollifier ball B({tuple(np.round(z, 6))}, {spec.resolution:g}) is not inside the domain"
                )
        eps = spec.resolution
        if spec.family == "lasserre_box":
            return eps ** (-n) * (math.sqrt(n) / 2.0) ** n
        return eps ** (-n) * bump_unit_norm_sq(n)
    k = spec.resolution
    return zonal_mass(2 * k, n) / zonal_mass(k, n) ** 2


# --------------------------------------------------------------------------
# zonal reductions


def ratio_one_minus_t(k: int, n: int) -> float:
    """int (1-t) g_k^2 w / int g_k^2 w with w the S^{n-1} weight: (n-1)/(2k+n-1)."""
    _check_kn(k, n)
    return (n - 1) / (2 * k + n - 1)


def ratio_gradient(k: int, n: int) -> float:
    """int (1-t^2) g_k'^2 w / int g_k^2 w: k^2 (n-1)/(4k+n-3)."""
    _check_kn(k, n)
    return k * k * (n - 1) / (4 * k + n - 3)


def zonal_variance_resolution(k: int, n: int = 3) -> float:
    """Mean squared chordal distance |x-y|^2 under the normalized mollifier: 2(n-1)/(k+n-1)."""
    _check_kn(k, n)
    return 2.0 * (n - 1) / (k + n - 1)


def _check_kn(k, n):
    if k < 1 or n < 2:
        raise ValueError("need k >= 1 and n >= 2")


@lru_cache(maxsize=None)
def _jacobi_rule(count, a):
    if a == 0.0:
        gl = gauss_legendre(count)
        return np.array(gl.nodes), np.array(gl.weights)
    return special.roots_jacobi(count, a, a)


def _check_alpha(n, alpha):
    ratio = sphere_area(n - 2) / sphere_area(n - 1)
    _, w = _jacobi_rule(8, alpha - 0.5)
    lam0 = ratio * float(np.sum(w))
    if abs(lam0 - 1.0) > 1e-12:
        raise GegenbauerMismatchError(
            f"Gegenbauer order alpha={alpha} does not match S^{n - 1}: lambda_0(1) = {lam0:.15g}, expected 1 "
            f"(use alpha = (n-2)/2 = {(n - 2) / 2})"
        )
    return ratio


def funk_hecke_lambdas(F, lmax, n=3, alpha=None, count=64):
    """lambda_l(F) for l = 0..lmax via Gauss-Jacobi quadrature on [-1, 1].

    Normalized so that lambda_0(1) = 1 (probability surface measure).  The
    quadrature is exact when F is a polynomial of degree <= 2 count - 1 - lmax.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    alpha = (n - 2) / 2.0 if alpha is None else float(alpha)
    ratio = _check_alpha(n, alpha)
    t, w = _jacobi_rule(int(count), alpha - 0.5)
    R = normalized_gegenbauer(alpha, lmax, t)
    Fv = np.asarray(F(t), dtype=float) * np.ones_like(t)
    return ratio * (w * Fv) @ R


def funk_hecke_lambda(l, F, n=3, alpha=None, count=64):
    """lambda_l(F) with int_S F(<x,y>) Y_l(y) dlambda(y) = lambda_l(F) Y_l(x)."""
    return float(funk_hecke_lambdas(F, l, n, alpha, count)[l])


@lru_cache(maxsize=256)
def _zonal_lambdas(k, lmax, n):
    count = (k + lmax) // 2 + 2
    vals = funk_hecke_lambdas(lambda t: ((1.0 + t) / 2.0) ** k, lmax, n, count=count)
    vals.setflags(write=False)
    return vals


def zonal_lambdas(k, lmax, n=3, normalized=True):
    """lambda_l of g_k (or of the unit-mass mollifier (g_k / int g_k)) for l = 0..lmax."""
    vals = _zonal_lambdas(int(k), int(lmax), int(n))
    return vals / zonal_mass(k, n) if normalized else vals.copy()


# --------------------------------------------------------------------------
# linear functionals ell_{z,eps}(b_j)


@dataclass
class EllVector:
    values: np.ndarray = field(repr=False)
    region: str


def _clip_box(lo, hi, domain):
    return np.maximum(lo, domain.lo), np.minimum(hi, domain.hi)


def _basis_domain(basis):
    return BoxDomain(tuple(basis.a), tuple(basis.b))


def _subrule_ell(spec, basis, lo, hi, tol=None, start=None, max_points=None):
    tol = SUBRULE_TOL if tol is None else tol
    start = SUBRULE_START if start is None else start
    max_points = SUBRULE_MAX if max_points is None else max_points
    if np.any(hi <= lo):
        return np.zeros(len(basis))
    prev = None
    m = start
    while m <= max_points:
        nodes, w = cube_rule(lo, hi, m)
        vals = w * eval_mollifier(spec, nodes)
        r = basis.evaluate(nodes).T @ vals
        if prev is not None and np.max(np.abs(r - prev)) <= tol * max(1.0, np.max(np.abs(r))):
            return r
        prev = r
        m *= 2
    raise UnresolvedMollifierError(
        f"smooth bump functional at z={spec.center}, eps={spec.resolution} did not converge "
        f"with {max_points} points per axis"
    )


def ell_vector(spec: MollifierSpec, basis, region="X", domain=None) -> EllVector:
    """ell^A_{z,eps}(b_j) = int_A phi_{z,eps} b_j dlambda for every basis element.

    region ``"X"`` restricts integration to the basis box (Euclidean) and
    ``"Z"`` integrates over the whole mollifier support.  On the sphere the
    two coincide.
    """
    if region not in ("X", "Z"):
        raise ValueError("region must be 'X' or 'Z'")
    if spec.family == "zonal_algebraic":
        if not isinstance(basis, SphericalHarmonicBasis):
            raise TypeError("zonal mollifiers pair with a spherical harmonic basis")
        lam = zonal_lambdas(spec.resolution, basis.degree, spec.dim)
        Y = basis.evaluate(spec.z.reshape(1, 3))[0]
        return EllVector(lam[basis.orders] * Y, region)
    if not isinstance(basis, PolynomialBasis):
        raise TypeError("Euclidean mollifiers pair with a polynomial basis")
    lo, hi = spec.support_box()
    if region == "X":
        lo, hi = _clip_box(lo, hi, domain if domain is not None else _basis_domain(basis))
    if spec.family == "lasserre_box":
        n = spec.dim
        height = spec.resolution ** (-n) * (math.sqrt(n) / 2.0) ** n
        return EllVector(height * basis.box_integrals(lo, hi), region)
    return EllVector(_subrule_ell(spec, basis, lo, hi), region)


def ell_matrix(specs, basis, region="X", domain=None):
    """Stack ell vectors of several mollifiers as columns, shape ``(len(basis), len(specs))``."""
    specs = list(specs)
    if specs and specs[0].family == "zonal_algebraic" and len({s.resolution for s in specs}) == 1:
        k = specs[0].resolution
        lam = zonal_lambdas(k, basis.degree, specs[0].dim)
        Y = basis.evaluate(np.array([s.center for s in specs]))
        return (Y * lam[basis.orders]).T
    return np.column_stack([ell_vector(s, basis, region, domain).values for s in specs]) if specs else \
        np.zeros((len(basis), 0))


def ell_by_quadrature(spec, basis, rule, region="X"):
    """Functionals by brute-force quadrature on a global rule.

    The rule integrates against its normalized reference measure; Euclidean
    mollifiers are Lebesgue densities, hence the volume factor.
    """
    vals = eval_mollifier(spec, rule.nodes) * rule.weights
    scale = getattr(rule.domain, "volume", 1.0)
    return basis.evaluate(rule.nodes).T @ vals * scale


# --------------------------------------------------------------------------
# couplings


def box_coupling(d, k_sobolev, scale=1.0):
    """eps_d = scale * d^{-k/(k+1)}."""
    if d < 1:
        raise ValueError("coupling needs d >= 1")
    return scale * float(d) ** (-k_sobolev / (k_sobolev + 1.0))


def sphere_coupling(d):
    """k_d = floor(d^{4/3}), never below 1."""
    if d < 1:
        raise ValueError("coupling needs d >= 1")
    # small guard against 8**(4/3) = 15.999999...
    return max(1, int(math.floor(float(d) ** (4.0 / 3.0) + 1e-9)))
