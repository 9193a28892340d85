"""Quadrature rules for the reference measure and quadrature-backed measures.

The reference measure is always normalized: on a box it is Lebesgue measure
divided by the volume, on S^2 it is surface measure divided by 4 pi.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "BoxDomain",
    "Sphere2",
    "QuadratureRule",
    "GaussLegendre1D",
    "Measure",
    "gauss_legendre",
    "box_rule",
    "cube_rule",
    "sphere_rule",
    "integrate",
    "default_resolution",
]

MAX_BOX_DIM = 3


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box [a, b] in R^n."""

    a: tuple
    b: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in np.atleast_1d(self.a))
        b = tuple(float(v) for v in np.atleast_1d(self.b))
        if len(a) != len(b):
            raise ValueError("box corners have different dimensions")
        if any(hi <= lo for lo, hi in zip(a, b)):
            raise ValueError(f"degenerate box: a={a}, b={b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self):
        return len(self.a)

    @property
    def lo(self):
        return np.array(self.a)

    @property
    def hi(self):
        return np.array(self.b)

    @property
    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def contains(self, z):
        z = np.asarray(z, dtype=float)
        return bool(np.all(z >= self.lo) and np.all(z <= self.hi))

    def distance(self, z):
        """Euclidean distance from z to the box (0 inside)."""
        z = np.asarray(z, dtype=float)
        return float(np.linalg.norm(z - np.clip(z, self.lo, self.hi)))

    def eccentricity(self, z):
        """Largest distance from z to a point of the box (attained at a corner)."""
        z = np.asarray(z, dtype=float)
        far = np.maximum(np.abs(z - self.lo), np.abs(z - self.hi))
        return float(np.linalg.norm(far))

    def inner_distance(self, z):
        """Distance from an interior point to the boundary (0 outside)."""
        z = np.asarray(z, dtype=float)
        if not self.contains(z):
            return 0.0
        return float(np.min(np.minimum(z - self.lo, self.hi - z)))


@dataclass(frozen=True)
class Sphere2:
    """The unit sphere S^2 in R^3."""

    dim: int = 3

    @property
    def volume(self):
        return 1.0


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights; weights sum to one for reference-measure rules.

    `exactness` is the total polynomial degree integrated exactly.
    """

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    domain: object
    exactness: int

    def __len__(self):
        return len(self.weights)

    @property
    def size(self):
        return len(self.weights)


@dataclass(frozen=True)
class GaussLegendre1D:
    count: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def exactness(self):
        return 2 * self.count - 1


_GL_CACHE = {}


def gauss_legendre(count: int) -> GaussLegendre1D:
    """Gauss-Legendre nodes and weights on [-1, 1] (weights sum to 2)."""
    if count < 1:
        raise ValueError("need at least one Gauss-Legendre node")
    if count not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(count)
        x.setflags(write=False)
        w.setflags(write=False)
        _GL_CACHE[count] = GaussLegendre1D(count, x, w)
    return _GL_CACHE[count]


def _tensor(lo, hi, points_per_axis):
    gl = gauss_legendre(points_per_axis)
    axes_x, axes_w = [], []
    for ai, bi in zip(lo, hi):
        axes_x.append(0.5 * (bi - ai) * gl.nodes + 0.5 * (ai + bi))
        axes_w.append(0.5 * (bi - ai) * gl.weights)
    grids = np.meshgrid(*axes_x, indexing="ij")
    wgrids = np.meshgrid(*axes_w, indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return nodes, weights


def box_rule(a, b, points_per_axis: int) -> QuadratureRule:
    """Tensor Gauss-Legendre rule for the normalized Lebesgue measure on [a, b]."""
    domain = BoxDomain(tuple(np.atleast_1d(a)), tuple(np.atleast_1d(b)))
    if domain.dim > MAX_BOX_DIM:
        raise ValueError(f"box rules are limited to dimension <= {MAX_BOX_DIM}")
    if points_per_axis < 1:
        raise ValueError("points_per_axis must be >= 1")
    nodes, weights = _tensor(domain.lo, domain.hi, int(points_per_axis))
    weights = weights / domain.volume
    return QuadratureRule(nodes, weights, domain, 2 * int(points_per_axis) - 1)


def cube_rule(lo, hi, points_per_axis: int):
    """Un-normalized tensor Gauss rule (Lebesgue weights) on the box [lo, hi]."""
    return _tensor(np.atleast_1d(lo), np.atleast_1d(hi), int(points_per_axis))


def sphere_rule(n_theta: int, n_phi: int) -> QuadratureRule:
    """Product rule on S^2: Gauss-Legendre in cos(theta), equispaced azimuth.

    Exact for spherical polynomials of degree <= min(2 n_theta - 1, n_phi - 1).
    """
    if n_theta < 1 or n_phi < 1:
        raise ValueError("n_theta and n_phi must be >= 1")
    gl = gauss_legendre(int(n_theta))
    t = gl.nodes
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    T, PHI = np.meshgrid(t, phi, indexing="ij")
    S = np.sqrt(1.0 - T * T)
    nodes = np.stack([(S * np.cos(PHI)).ravel(), (S * np.sin(PHI)).ravel(), T.ravel()], axis=1)
    # renormalize rounding so every node is unit length to machine precision
    nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    weights = np.repeat(gl.weights / 2.0, n_phi) / n_phi
    return QuadratureRule(nodes, weights, Sphere2(), min(2 * int(n_theta) - 1, int(n_phi) - 1))


def default_resolution(d: int, k: int = 0, domain="sphere"):
    """Quadrature resolution for degree-d moments against a resolution-k mollifier.

    Returns ``(n_theta, n_phi)`` on the sphere and ``points_per_axis`` on boxes.
    """
    if domain in ("sphere", "sphere2") or isinstance(domain, Sphere2):
        n_theta = max(2 * d + k + 8, 48)
        return n_theta, 2 * n_theta + 1
    return max(2 * d + 16, 48)


class Measure:
    """A measure mu backed by a quadrature rule.

    Density-backed measures have ``d mu = f d lambda`` where lambda is the
    rule's (normalized) reference measure.  Empirical measures put weight
    ``1/N`` on each sample and carry no density.
    """

    def __init__(self, rule: QuadratureRule, density: Optional[Callable] = None, kind="density",
                 name="custom"):
        self.rule = rule
        self.kind = kind
        self.name = name
        self._density = density
        if kind == "density":
            fvals = np.ones(len(rule)) if density is None else np.asarray(density(rule.nodes), dtype=float)
            if fvals.shape != (len(rule),):
                raise ValueError("density must return one value per node")
            if not np.all(np.isfinite(fvals)) or np.any(fvals <= 0):
                raise ValueError("density must be finite and strictly positive at every node")
            self.node_density = fvals
            self.weights = rule.weights * fvals
        elif kind == "empirical":
            self.node_density = None
            self.weights = rule.weights.copy()
        else:
            raise ValueError(f"unknown measure kind {kind!r}")
        self.mass = float(np.sum(self.weights))

    @classmethod
    def uniform(cls, rule):
        return cls(rule, None, name="uniform")

    @classmethod
    def from_density(cls, rule, density, name="custom"):
        return cls(rule, density, name=name)

    @classmethod
    def empirical(cls, samples, domain):
        pts = np.atleast_2d(np.asarray(samples, dtype=float))
        if pts.shape[0] == 0:
            raise ValueError("empirical measure needs at least one sample")
        w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        rule = QuadratureRule(pts, w, domain, exactness=0)
        return cls(rule, None, kind="empirical", name="empirical")

    @property
    def nodes(self):
        return self.rule.nodes

    @property
    def domain(self):
        return self.rule.domain

    @property
    def has_density(self):
        return self.kind == "density"

    def density(self, y):
        """Density of mu with respect to the reference measure, at points y."""
        if not self.has_density:
            raise ValueError("empirical measures have no density")
        y = np.asarray(y, dtype=float)
        if self._density is None:
            return np.ones(y.reshape(-1, self.rule.nodes.shape[1]).shape[0])
        return np.asarray(self._density(y.reshape(-1, self.rule.nodes.shape[1])), dtype=float)

    def min_density(self):
        return float(np.min(self.node_density))


def integrate(measure: Measure, g: Callable) -> float:
    """sum_i w_i f(node_i) g(node_i), with numpy's pairwise summation."""
    vals = np.asarray(g(measure.nodes), dtype=float)
    if vals.shape == ():
        vals = np.full(len(measure.weights), float(vals))
    vals = vals.reshape(len(measure.weights))
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand is not finite at every node")
    return float(np.sum(measure.weights * vals))
