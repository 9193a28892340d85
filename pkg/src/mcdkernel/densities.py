"""Ground-truth densities used in the experiments.

All densities are expressed with respect to the normalized reference
measure of their domain (surface probability measure on S^2, normalized
Lebesgue measure on a box).
"""

from __future__ import annotations

import numpy as np

__all__ = ["vmf_density", "VMFMixture", "SmoothSine", "PolynomialDensity", "canonical_means"]


def canonical_means():
    return np.eye(3)


def vmf_density(x, mean, kappa):
    """von Mises-Fisher density on S^2 relative to the normalized surface measure.

    Against surface area the normalization is kappa / (4 pi sinh kappa); the
    factor 4 pi converts to the probability measure.  Written as
    2 kappa exp(kappa (t - 1)) / (1 - exp(-2 kappa)) to avoid overflow.
    """
    x = np.asarray(x, dtype=float).reshape(-1, 3)
    mean = np.asarray(mean, dtype=float)
    mean = mean / np.linalg.norm(mean)
    t = x @ mean
    if kappa == 0:
        return np.ones(x.shape[0])
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    return 2.0 * kappa * np.exp(kappa * (t - 1.0)) / -np.expm1(-2.0 * kappa)


class VMFMixture:
    """Equally weighted mixture of vMF densities with a common concentration."""

    def __init__(self, kappa=3.0, means=None):
        if kappa < 0:
            raise ValueError("kappa must be non-negative")
        self.kappa = float(kappa)
        self.means = np.atleast_2d(canonical_means() if means is None else np.asarray(means, dtype=float))

    def __call__(self, x):
        vals = [vmf_density(x, m, self.kappa) for m in self.means]
        return np.mean(vals, axis=0)


class SmoothSine:
    """f(x) = 1 + amplitude * sin(2 pi (x_1 - a_1) / (b_1 - a_1)) on a box.

    Integrates to one against the normalized Lebesgue measure; on [0, 1]
    with amplitude 1/2 this is (2 + sin(2 pi x)) / 2.
    """

    def __init__(self, a, b, amplitude=0.5):
        if not 0 <= amplitude < 1:
            raise ValueError("amplitude must lie in [0, 1) for a positive density")
        self.a = np.atleast_1d(np.asarray(a, dtype=float))
        self.b = np.atleast_1d(np.asarray(b, dtype=float))
        self.amplitude = float(amplitude)

    def __call__(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, len(self.a))
        u = (x[:, 0] - self.a[0]) / (self.b[0] - self.a[0])
        return 1.0 + self.amplitude * np.sin(2.0 * np.pi * u)


class PolynomialDensity:
    """sum_j c_j y^{alpha_j}, renormalized to unit mass by the caller-supplied constant."""

    def __init__(self, terms, scale=1.0):
        self.terms = [(tuple(int(e) for e in exps), float(c)) for exps, c in terms]
        if not self.terms:
            raise ValueError("polynomial density needs at least one term")
        self.scale = float(scale)

    @classmethod
    def from_coefficients(cls, coeffs):
        """Univariate shorthand: coeffs[j] multiplies y**j."""
        return cls([((j,), c) for j, c in enumerate(coeffs)])

    def __call__(self, x):
        n = len(self.terms[0][0])
        x = np.asarray(x, dtype=float).reshape(-1, n)
        out = np.zeros(x.shape[0])
        for exps, c in self.terms:
            out += c * np.prod(x ** np.array(exps), axis=1)
        return out * self.scale
