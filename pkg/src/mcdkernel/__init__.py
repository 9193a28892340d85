"""Mollified Christoffel-Darboux kernels for support location and density recovery from moments."""

from .basis import PolynomialBasis, SphericalHarmonicBasis, enumerate_monomials
from .mcd import (
    KernelContext,
    build_context,
    classify_support,
    density_estimate,
    dichotomy_bound,
    mcd_diag,
    mcd_eval,
    smcd_diag,
)
from .mollifier import MollifierSpec, ell_vector, eval_mollifier, lasserre_box, smooth_bump, zonal
from .moments import build_moment_matrix
from .quadrature import BoxDomain, Measure, Sphere2, box_rule, sphere_rule

__version__ = "0.1.0"

__all__ = [
    "PolynomialBasis",
    "SphericalHarmonicBasis",
    "enumerate_monomials",
    "KernelContext",
    "build_context",
    "classify_support",
    "density_estimate",
    "dichotomy_bound",
    "mcd_diag",
    "mcd_eval",
    "smcd_diag",
    "MollifierSpec",
    "ell_vector",
    "eval_mollifier",
    "lasserre_box",
    "smooth_bump",
    "zonal",
    "build_moment_matrix",
    "BoxDomain",
    "Measure",
    "Sphere2",
    "box_rule",
    "sphere_rule",
]
