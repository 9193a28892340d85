"""Mollified Christoffel-Darboux kernels: evaluation, density estimation, support tests.

A :class:`KernelContext` bundles a measure, its factorized moment matrix
for a degree-d basis, a mollifier family at a fixed resolution and the
integration region tag.  Region ``"Z"`` gives the support locator (the
mollifier is integrated over its whole support), region ``"X"`` the density
estimator (integration clipped to the box carrying the measure).

Frames: box measures live on the normalized Lebesgue measure lambda of the
box, while Euclidean mollifiers are Lebesgue densities.  The kernel itself
does not care (the functionals are the same numbers), but norms do:
``||phi||^2_{L2(lambda)} = vol(X) * ||phi||^2_{L2(dy)}``.  Everything
reported by this module is in the lambda frame, so estimates of 1/f refer
to the density of mu with respect to lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import PolynomialBasis, SphericalHarmonicBasis
from .moments import MomentMatrix, build_moment_matrix, weighted_norm_sq, whiten
from .mollifier import (
    MollifierSpec,
    ell_matrix,
    ell_vector,
    eval_mollifier,
    mollifier_norm_sq,
    zonal_mass,
)
from .quadrature import BoxDomain, Measure, Sphere2, cube_rule, gauss_legendre

__all__ = [
    "KernelContext",
    "build_context",
    "mcd_eval",
    "mcd_diag",
    "smcd_diag",
    "density_estimate",
    "DensityEstimate",
    "h_norm_sq",
    "error_split",
    "ErrorSplit",
    "SphereCap",
    "DichotomyBound",
    "BoundInapplicableError",
    "dichotomy_bound",
    "growth_factor",
    "classify_support",
    "EstimateRow",
    "EstimateSeries",
    "reference_norm_sq",
]

LOCAL_START = 32
LOCAL_MAX = 2048
LOCAL_TOL = 1e-12


# --------------------------------------------------------------------------
# context


@dataclass(frozen=True)
class KernelContext:
    measure: Measure = field(repr=False)
    moments: MomentMatrix = field(repr=False)
    region: str
    family: str
    resolution: float
    basis: object = field(repr=False)

    @property
    def degree(self):
        return self.basis.degree

    @property
    def domain(self):
        return self.measure.domain

    @property
    def dim(self):
        return self.measure.nodes.shape[1]

    @property
    def cond_est(self):
        return self.moments.pivot_ratio

    def spec(self, z) -> MollifierSpec:
        return MollifierSpec(self.family, tuple(np.atleast_1d(z)), self.resolution, self.dim)

    def ell(self, z):
        return ell_vector(self.spec(z), self.basis, self.region, self._box()).values

    def ells(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return ell_matrix([self.spec(p) for p in pts], self.basis, self.region, self._box())

    def _box(self):
        return self.domain if isinstance(self.domain, BoxDomain) else None


def default_basis(domain, degree, kind="legendre"):
    if isinstance(domain, Sphere2):
        return SphericalHarmonicBasis(degree)
    return PolynomialBasis(domain.a, domain.b, degree, kind=kind)


def build_context(measure: Measure, degree: int, family: str, resolution, region="X",
                  basis=None, basis_kind="legendre", check_condition=True) -> KernelContext:
    """Assemble and factorize the moment matrix, then freeze the kernel setup.

    Raises
    ------
    MomentMatrixError
        When the Cholesky factorization fails.
    ConditionError
        When ``check_condition`` is set and the pivot ratio exceeds the limit.
    """
    if region not in ("X", "Z"):
        raise ValueError("region must be 'X' or 'Z'")
    if basis is None:
        basis = default_basis(measure.domain, degree, basis_kind)
    M = build_moment_matrix(measure, basis)
    if check_condition:
        M.check_condition()
    return KernelContext(measure, M, region, family, resolution, basis)


# --------------------------------------------------------------------------
# kernel evaluation


def mcd_eval(ctx: KernelContext, x, y) -> float:
    """r_x^T M^{-1} r_y."""
    rx, ry = ctx.ell(x), ctx.ell(y)
    wx, wy = whiten(ctx.moments, rx), whiten(ctx.moments, ry)
    return float(wx @ wy)


def mcd_diag(ctx: KernelContext, points) -> np.ndarray:
    """Diagonal MCD(z, z) on a batch of points."""
    R = ctx.ells(points)
    return np.atleast_1d(weighted_norm_sq(ctx.moments, R))


def smcd_diag(ctx: KernelContext, points) -> np.ndarray:
    if ctx.region != "Z":
        raise ValueError("support locator requires a context built with region 'Z'")
    return mcd_diag(ctx, points)


def reference_norm_sq(ctx_or_spec, domain=None) -> float:
    """||phi_{z,eps}||^2 in L2(lambda) with lambda the normalized reference measure."""
    if isinstance(ctx_or_spec, KernelContext):
        raise TypeError("pass a MollifierSpec")
    spec = ctx_or_spec
    base = mollifier_norm_sq(spec, domain)
    if spec.euclidean:
        if domain is None:
            raise ValueError("Euclidean norms need the box to fix the lambda frame")
        return domain.volume * base
    return base


@dataclass
class DensityEstimate:
    points: np.ndarray = field(repr=False)
    dmcd: np.ndarray
    norm_sq: np.ndarray
    g_hat: np.ndarray
    f_hat: np.ndarray
    degenerate: np.ndarray


def density_estimate(ctx: KernelContext, points) -> DensityEstimate:
    """g_hat = DMCD(x,x) / ||phi_x||^2 and f_hat = 1/g_hat.

    Points with g_hat <= 0 are flagged degenerate and get f_hat = nan.
    """
    if ctx.region != "X":
        raise ValueError("density estimation requires a context built with region 'X'")
    pts = np.asarray(points, dtype=float).reshape(-1, ctx.dim)
    vals = mcd_diag(ctx, pts)
    box = ctx._box()
    norms = np.array([reference_norm_sq(ctx.spec(p), box) for p in pts])
    g = vals / norms
    bad = ~(g > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(bad, np.nan, 1.0 / g)
    return DensityEstimate(pts, vals, norms, g, f, bad)


# --------------------------------------------------------------------------
# ground truth and error decomposition


def _rotation_to(z):
    """Orthogonal matrix whose third column is z."""
    z = np.asarray(z, dtype=float)
    a = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(z, a)
    u /= np.linalg.norm(u)
    v = np.cross(z, u)
    return np.column_stack([u, v, z])


def _zonal_local_rule(z, k, n_phi=64):
    """Product rule around pole z; Gauss-Legendre in t = <z, y>, weights sum to 1."""
    gl = gauss_legendre(int(k) + 48)
    t = gl.nodes
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    T, PHI = np.meshgrid(t, phi, indexing="ij")
    S = np.sqrt(1.0 - T * T)
    local = np.stack([(S * np.cos(PHI)).ravel(), (S * np.sin(PHI)).ravel(), T.ravel()], axis=1)
    nodes = local @ _rotation_to(z).T
    weights = np.repeat(gl.weights / 2.0, n_phi) / n_phi
    return nodes, weights


def h_norm_sq(spec: MollifierSpec, measure: Measure) -> float:
    """||h||^2_{L2(mu)} for h = phi / f on X, i.e. int_X phi^2 / f dlambda.

    This is the d -> infinity limit of DMCD(z, z).  Box integrals use a
    tensor Gauss rule on the mollifier support clipped to X, refined until
    two successive values agree; zonal integrals use a product rule
    oriented at z.
    """
    if not measure.has_density:
        raise ValueError("ground truth needs a measure with a density")
    if not spec.euclidean:
        nodes, w = _zonal_local_rule(spec.z, spec.resolution)
        vals = eval_mollifier(spec, nodes) ** 2 / measure.density(nodes)
        return float(np.sum(w * vals))
    box = measure.domain
    lo, hi = spec.support_box()
    lo, hi = np.maximum(lo, box.lo), np.minimum(hi, box.hi)
    if np.any(hi <= lo):
        return 0.0
    prev = None
    m = LOCAL_START
    while m <= LOCAL_MAX:
        nodes, w = cube_rule(lo, hi, m)
        val = float(np.sum(w * eval_mollifier(spec, nodes) ** 2 / measure.density(nodes)))
        if prev is not None and abs(val - prev) <= LOCAL_TOL * max(1.0, abs(val)):
            return box.volume * val
        prev, m = val, 2 * m
    raise RuntimeError(f"ground-truth integral at z={spec.center} did not converge")


@dataclass
class ErrorSplit:
    """Pointwise quantities of g_hat - g = (g_hat - H) + (H - g), H = ||h||^2/||phi||^2."""

    g_true: np.ndarray
    H: np.ndarray
    total: np.ndarray
    proj: np.ndarray
    approx: np.ndarray
    proj_gap: np.ndarray  # ||h||^2 - ||P h||^2, signed, in units of ||phi||^2


def error_split(ctx: KernelContext, est: DensityEstimate) -> ErrorSplit:
    measure = ctx.measure
    hh = np.array([h_norm_sq(ctx.spec(p), measure) for p in est.points])
    H = hh / est.norm_sq
    g_true = 1.0 / measure.density(est.points)
    gap = H - est.g_hat
    return ErrorSplit(g_true, H, np.abs(est.g_hat - g_true), np.abs(gap), np.abs(H - g_true), gap)


# --------------------------------------------------------------------------
# dichotomy


class BoundInapplicableError(ValueError):
    """The dichotomy lower bound does not apply at this point/resolution."""


@dataclass(frozen=True)
class SphereCap:
    """Spherical cap {y in S^2 : angle(y, center) <= theta}; distances are chordal."""

    center: tuple
    theta: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        c = c / np.linalg.norm(c)
        object.__setattr__(self, "center", tuple(c))
        if not 0 < self.theta <= math.pi:
            raise ValueError("cap angle must lie in (0, pi]")

    @property
    def volume(self):
        """Normalized surface measure of the cap."""
        return 0.5 * (1.0 - math.cos(self.theta))

    def _angle(self, z):
        return math.acos(float(np.clip(np.dot(np.asarray(z, dtype=float), self.center), -1.0, 1.0)))

    def contains(self, z):
        return self._angle(z) <= self.theta

    def distance(self, z):
        psi = self._angle(z)
        return 0.0 if psi <= self.theta else 2.0 * math.sin((psi - self.theta) / 2.0)

    def eccentricity(self, z):
        return 2.0 * math.sin(min(self._angle(z) + self.theta, math.pi) / 2.0)

    def inner_distance(self, z):
        psi = self._angle(z)
        return 0.0 if psi > self.theta else 2.0 * math.sin((self.theta - psi) / 2.0)


@dataclass(frozen=True)
class DichotomyBound:
    delta: float
    rho: float
    degree: int
    mass: float
    mu_X: float
    value: float


def growth_factor(delta, rho):
    """1 + 3 delta^2 / (4 (rho^2 - delta^2))."""
    return 1.0 + 3.0 * delta * delta / (4.0 * (rho * rho - delta * delta))


def _mass_in_ball(spec: MollifierSpec, radius):
    if spec.euclidean:
        if spec.resolution < radius:
            return 1.0
        raise BoundInapplicableError(
            f"eps = {spec.resolution:g} is not below delta/2 = {radius:g}; the lower bound does not apply"
        )
    # chordal |z - y| < r  <=>  t > 1 - r^2/2 ; tail mass of the normalized g_k
    k, n = spec.resolution, spec.dim
    t0 = 1.0 - radius * radius / 2.0
    if n == 3:
        return 1.0 - ((1.0 + t0) / 2.0) ** (k + 1)
    gl = gauss_legendre(int(k) + 32)
    t = 0.5 * (1.0 - t0) * gl.nodes + 0.5 * (1.0 + t0)
    w = 0.5 * (1.0 - t0) * gl.weights * (1.0 - t * t) ** ((n - 3) / 2.0)
    area = 2.0 * math.pi ** ((n - 1) / 2) / math.gamma((n - 1) / 2) / (2.0 * math.pi ** (n / 2) / math.gamma(n / 2))
    return float(area * np.sum(w * ((1.0 + t) / 2.0) ** k) / zonal_mass(k, n))


def dichotomy_bound(z, X, degree: int, spec: MollifierSpec, mu_X: float = 1.0) -> DichotomyBound:
    """Exponential lower bound on SMCD(z, z) for z outside X = supp mu.

    Parameters
    ----------
    z : array_like
        Query point outside X.
    X : BoxDomain or SphereCap
        Support descriptor; distance and eccentricity come in closed form.
    degree : int
    spec : MollifierSpec
        Mollifier at z (its resolution decides the mass term).
    mu_X : float
        Total mass of mu.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    delta, rho = X.distance(z), X.eccentricity(z)
    if delta <= 0:
        raise BoundInapplicableError("the point lies in X; the lower bound is for exterior points")
    mass = _mass_in_ball(spec, delta / 2.0)
    exponent = 2 * math.ceil(degree / 2)
    value = growth_factor(delta, rho) ** exponent * mass * mass / mu_X
    return DichotomyBound(delta, rho, int(degree), mass, float(mu_X), value)


def classify_support(points, values_low, values_high, d_low, d_high, resolution, measure,
                     delta_est=None, domain=None):
    """Label points ``inside``/``outside``/``ambiguous`` from SMCD growth in d.

    Policy: a point is outside when the log-slope
    ``(log v_high - log v_low) / (d_high - d_low)`` exceeds half the
    per-degree log growth of the lower bound, evaluated at ``delta_est``
    (default ``2 * resolution``, the smallest distance where the bound
    applies) and at the eccentricity of the point relative to the measure's
    nodes.  With a known `domain`, points whose resolution ball meets both X
    and its complement are flagged ``ambiguous`` instead.
    """
    if not d_high > d_low:
        raise ValueError("classification needs two distinct degrees d_low < d_high")
    pts = np.asarray(points, dtype=float)
    pts = pts.reshape(len(np.atleast_1d(values_low)), -1)
    v1 = np.asarray(values_low, dtype=float)
    v2 = np.asarray(values_high, dtype=float)
    if np.any(v1 <= 0) or np.any(v2 <= 0):
        raise ValueError("SMCD values must be positive")
    slopes = (np.log(v2) - np.log(v1)) / (d_high - d_low)
    delta = 2.0 * resolution if delta_est is None else float(delta_est)
    nodes = measure.nodes
    labels = []
    for p, s in zip(pts, slopes):
        if domain is not None:
            inner = domain.inner_distance(p) if domain.contains(p) else 0.0
            outer = domain.distance(p)
            if (domain.contains(p) and inner < resolution) or (not domain.contains(p) and outer < resolution):
                labels.append("ambiguous")
                continue
        rho = float(np.max(np.linalg.norm(nodes - p, axis=1)))
        rho = max(rho, 1.01 * delta)
        threshold = 0.5 * math.log(growth_factor(delta, rho))
        labels.append("outside" if s > threshold else "inside")
    return labels


# --------------------------------------------------------------------------
# series


@dataclass
class EstimateRow:
    d: int
    resolution: float
    g_hat: np.ndarray = field(repr=False)
    f_hat: np.ndarray = field(repr=False)
    l2_error: Optional[float] = None
    seconds: Optional[float] = None


@dataclass
class EstimateSeries:
    rows: list = field(default_factory=list)

    def add(self, row: EstimateRow):
        if row.l2_error is not None and row.l2_error < 0:
            raise ValueError("errors are non-negative")
        self.rows.append(row)
        self.rows.sort(key=lambda r: r.d)

    @property
    def degrees(self):
        return [r.d for r in self.rows]

    @property
    def errors(self):
        return [r.l2_error for r in self.rows]
