"""Experiment runners behind the ``mcd`` command.

Each runner takes a resolved configuration dictionary and returns a
:class:`RunResult`: CSV rows in the fixed schema, named checks used by
``--assert``, and the series drawn in the SVG plot.
"""

from __future__ import annotations

import copy
import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import mcd as K
from .basis import PolynomialBasis, SphericalHarmonicBasis
from .densities import PolynomialDensity, SmoothSine, VMFMixture
from .moments import MomentMatrixError
from .mollifier import (
    MollifierSpec,
    box_coupling,
    ell_vector,
    eval_mollifier,
    funk_hecke_lambdas,
    ratio_one_minus_t,
    sphere_coupling,
    zonal_variance_resolution,
    _bump_radial,
)
from .quadrature import (
    BoxDomain,
    Measure,
    Sphere2,
    box_rule,
    cube_rule,
    default_resolution,
    sphere_rule,
)

FIELDS = ("experiment", "d", "resolution", "point_id", "value", "err_total", "err_proj", "err_approx",
          "cond_est", "seconds")
EXPERIMENTS = ("dichotomy", "recover-box", "recover-sphere", "funk-hecke-check", "axioms-check")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


# --------------------------------------------------------------------------
# defaults

DEFAULTS = {
    "dichotomy": {
        "domain": {"type": "box", "a": [-1.0], "b": [1.0]},
        "density": {"kind": "uniform"},
        "mollifier": "lasserre_box",
        "coupling": {"kind": "fixed", "value": 0.2},
        "exterior_eps_fraction": 0.25,
        "points": [[0.0], [0.5], [-0.5], [1.5], [2.0], [3.0]],
        "degrees": list(range(0, 31, 2)),
        "classify": [8, 16],
    },
    "recover-box": {
        "domain": {"type": "box", "a": [0.0], "b": [1.0]},
        "density": {"kind": "smooth-1d", "amplitude": 0.5},
        "mollifier": "smooth_bump",
        "coupling": {"kind": "paper-box", "k": 2, "scale": 1.0},
        "K": {"a": [0.4], "b": [0.6]},
        "eval_points_per_axis": 32,
        "degrees": [4, 8, 16, 24, 32],
        "max_slope": -0.9,
    },
    "recover-sphere": {
        "domain": {"type": "sphere"},
        "density": {"kind": "vmf-mixture", "kappa": 3.0},
        "mollifier": "zonal_algebraic",
        "coupling": {"kind": "paper-sphere"},
        "eval": {"n_theta": 48, "n_phi": 97},
        "sample_points": 20,
        "degrees": [5, 10, 15, 20, 25, 30],
        "slope_window": [-2.0, -1.0],
    },
    "funk-hecke-check": {
        "kmax": 8,
        "lmax": 8,
        "sample_points": 10,
        "quadrature": {"n_theta": 24, "n_phi": 49},
        "tolerance": 1e-8,
    },
    "axioms-check": {
        "domain": {"type": "box", "a": [-1.0], "b": [1.0]},
        "eps": [0.4, 0.2, 0.1, 0.05],
        "k": [4, 16, 64],
        "centers": 20,
        "delta": 0.3,
        "arccos_samples": 1000000,
    },
}

COMMON = {"seed": 0, "quadrature": None}


def resolve_config(experiment, user=None):
    """Merge user settings over the experiment defaults and validate."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    cfg = copy.deepcopy(COMMON)
    cfg.update(copy.deepcopy(DEFAULTS[experiment]))
    for key, val in (user or {}).items():
        if key == "experiment":
            if val != experiment:
                raise ConfigError(f"config is for experiment {val!r}, not {experiment!r}")
            continue
        cfg[key] = val
    cfg["experiment"] = experiment
    if "degrees" in cfg:
        degs = cfg["degrees"]
        if not isinstance(degs, list) or not degs or any(int(d) != d or d < 0 for d in degs):
            raise ConfigError("degrees must be a non-empty list of non-negative integers")
        if any(b <= a for a, b in zip(degs, degs[1:])):
            raise ConfigError("degrees must be strictly increasing")
        cfg["degrees"] = [int(d) for d in degs]
    if not isinstance(cfg.get("seed", 0), int):
        raise ConfigError("seed must be an integer")
    return cfg


# --------------------------------------------------------------------------
# table


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return format(v, ".15g")
    return str(v)


@dataclass
class ResultTable:
    experiment: str
    rows: list = field(default_factory=list)

    def add(self, d=None, resolution=None, point_id="", value=None, err_total=None, err_proj=None,
            err_approx=None, cond_est=None, seconds=None):
        self.rows.append({"experiment": self.experiment, "d": d, "resolution": resolution,
                          "point_id": point_id, "value": value, "err_total": err_total,
                          "err_proj": err_proj, "err_approx": err_approx, "cond_est": cond_est,
                          "seconds": seconds})

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(FIELDS)
        for row in self.rows:
            w.writerow([_fmt(row[k]) for k in FIELDS])
        return buf.getvalue()

    def select(self, point_id):
        return [r for r in self.rows if r["point_id"] == point_id]


@dataclass
class RunResult:
    table: ResultTable
    checks: list = field(default_factory=list)
    plot: dict = field(default_factory=dict)
    moments: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)

    def check(self, name, passed, detail=""):
        self.checks.append((name, bool(passed), detail))

    @property
    def passed(self):
        return all(p for _, p, _ in self.checks)


class Timer:
    def __init__(self, enabled):
        self.enabled = enabled

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0 if self.enabled else None


# --------------------------------------------------------------------------
# construction helpers


def point_label(z):
    z = np.atleast_1d(z)
    return "z=" + ",".join(format(float(c), "g") for c in z)


def make_domain(spec):
    kind = spec.get("type", "box")
    if kind == "box":
        try:
            dom = BoxDomain(tuple(spec["a"]), tuple(spec["b"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad box domain {spec}: {exc}") from exc
        if dom.dim > 3:
            raise ConfigError("box domains are limited to dimension 3")
        return dom
    if kind == "sphere":
        return Sphere2()
    raise ConfigError(f"unknown domain type {kind!r}")


def load_points(path):
    """Plain text points, one per row, separated by commas and/or whitespace."""
    try:
        with open(path) as fh:
            rows = [line.replace(",", " ").split() for line in fh if line.strip() and not line.startswith("#")]
    except OSError as exc:
        raise ConfigError(f"cannot read sample file {path}: {exc}") from exc
    try:
        pts = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ConfigError(f"sample file {path} has non-numeric entries") from exc
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ConfigError(f"sample file {path} has no consistent rows")
    return pts


def make_density(spec, domain):
    kind = spec.get("kind", "uniform")
    if kind == "uniform":
        return None
    if kind == "vmf-mixture":
        kappa = float(spec.get("kappa", 3.0))
        if kappa < 0:
            raise ConfigError("kappa must be non-negative (0 means uniform)")
        if not isinstance(domain, Sphere2):
            raise ConfigError("vmf-mixture lives on the sphere")
        return VMFMixture(kappa, spec.get("means"))
    if kind == "smooth-1d":
        if not isinstance(domain, BoxDomain):
            raise ConfigError("smooth-1d needs a box domain")
        try:
            return SmoothSine(domain.a, domain.b, float(spec.get("amplitude", 0.5)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if kind == "custom-polynomial":
        if "coeffs" in spec:
            dens = PolynomialDensity.from_coefficients(spec["coeffs"])
        elif "terms" in spec:
            dens = PolynomialDensity(spec["terms"])
        else:
            raise ConfigError("custom-polynomial needs 'coeffs' or 'terms'")
        return dens
    raise ConfigError(f"unknown density kind {kind!r}")


def make_measure(cfg, domain, d, k=0):
    dens_spec = cfg.get("density", {"kind": "uniform"})
    if dens_spec.get("kind") == "empirical":
        pts = load_points(dens_spec["path"])
        if pts.shape[1] != (3 if isinstance(domain, Sphere2) else domain.dim):
            raise ConfigError("sample dimension does not match the domain")
        return Measure.empirical(pts, domain)
    q = cfg.get("quadrature") or {}
    if isinstance(domain, Sphere2):
        if "n_theta" in q:
            rule = sphere_rule(int(q["n_theta"]), int(q.get("n_phi", 2 * int(q["n_theta"]) + 1)))
        else:
            rule = sphere_rule(*default_resolution(d, k, "sphere"))
    else:
        ppa = int(q["points_per_axis"]) if "points_per_axis" in q else default_resolution(d, domain="box")
        rule = box_rule(domain.a, domain.b, ppa)
    density = make_density(dens_spec, domain)
    if isinstance(density, PolynomialDensity):
        mass = float(np.sum(rule.weights * density(rule.nodes)))
        if not mass > 0:
            raise ConfigError("custom polynomial has non-positive mass")
        density.scale = 1.0 / mass
    try:
        return Measure(rule, density, name=dens_spec.get("kind", "uniform"))
    except ValueError as exc:
        raise ConfigError(f"density: {exc}") from exc


def resolutions(cfg, degrees):
    c = cfg.get("coupling", {})
    kind = c.get("kind")
    if kind == "paper-box":
        return [box_coupling(d, float(c.get("k", 2)), float(c.get("scale", 1.0))) if d > 0 else
                float(c.get("scale", 1.0)) for d in degrees]
    if kind == "paper-sphere":
        return [sphere_coupling(max(d, 1)) for d in degrees]
    if kind == "explicit":
        vals = c.get("values", [])
        if len(vals) != len(degrees):
            raise ConfigError("explicit coupling needs one resolution per degree")
        return list(vals)
    if kind == "fixed":
        return [c["value"]] * len(degrees)
    raise ConfigError(f"unknown coupling {kind!r}")


def _slope(ds, errs):
    x, y = np.log(np.asarray(ds, float)), np.log(np.asarray(errs, float))
    A = np.column_stack([x, np.ones_like(x)])
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.sum((A @ coef - y) ** 2)))
    return float(coef[0]), resid


def _l2(w, v):
    return float(np.sqrt(np.sum(w * v * v)))


# --------------------------------------------------------------------------
# dichotomy


def run_dichotomy(cfg, timings=False):
    domain = make_domain(cfg["domain"])
    if not isinstance(domain, BoxDomain):
        raise ConfigError("the dichotomy experiment needs a box domain")
    family = cfg["mollifier"]
    if family not in ("lasserre_box", "smooth_bump"):
        raise ConfigError("dichotomy uses a Euclidean mollifier family")
    degrees = cfg["degrees"]
    eps_list = resolutions(cfg, degrees)
    frac = cfg.get("exterior_eps_fraction")
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in cfg.get("points", [])]
    if any(len(p) != domain.dim for p in pts):
        raise ConfigError("evaluation points must match the domain dimension")
    res = RunResult(ResultTable("dichotomy"))
    curves, bounds = {}, {}
    values = {}
    for d, eps0 in zip(degrees, eps_list):
        measure = make_measure(cfg, domain, d)
        mu_X = measure.mass
        min_f = measure.min_density() if measure.has_density else None
        ctx_cache = {}
        for p in pts:
            delta = domain.distance(p)
            eps = float(eps0)
            if delta > 0 and frac is not None:
                eps = min(eps, float(frac) * delta)
            if eps not in ctx_cache:
                with Timer(timings) as tm:
                    ctx_cache[eps] = K.build_context(measure, d, family, eps, region="Z")
                if eps == float(eps0):
                    res.moments[d] = ctx_cache[eps].moments
            ctx = ctx_cache[eps]
            with Timer(timings) as tm:
                v = float(K.smcd_diag(ctx, [p])[0])
            lab = point_label(p)
            values.setdefault(lab, {})[d] = (v, eps)
            res.table.add(d, eps, lab, v, cond_est=ctx.cond_est, seconds=tm.seconds)
            curves.setdefault(lab, ([], []))
            curves[lab][0].append(d)
            curves[lab][1].append(v)
            spec = ctx.spec(p)
            if delta > 0:
                try:
                    b = K.dichotomy_bound(p, domain, d, spec, mu_X)
                except K.BoundInapplicableError as exc:
                    res.table.add(d, eps, lab + "|bound", None)
                    res.messages.append(f"d={d} {lab}: {exc}")
                    continue
                ok = v >= b.value
                res.table.add(d, eps, lab + "|bound", b.value, err_total=v / b.value)
                bounds.setdefault(lab, ([], []))
                bounds[lab][0].append(d)
                bounds[lab][1].append(b.value)
                if d % 2 == 0:
                    res.check(f"bound d={d} {lab}", ok, f"SMCD={v:.6g} bound={b.value:.6g}")
            elif min_f is not None and domain.inner_distance(p) >= spec.resolution:
                cap = K.reference_norm_sq(spec, domain) / min_f
                res.table.add(d, eps, lab + "|interior_bound", cap, err_total=v / cap)
                res.check(f"interior d={d} {lab}", v <= cap * (1 + 1e-6), f"SMCD={v:.6g} cap={cap:.6g}")
    pair = cfg.get("classify")
    if pair and len(degrees) >= 2:
        d1, d2 = pair if (pair[0] in degrees and pair[1] in degrees) else (degrees[0], degrees[-1])
        measure = make_measure(cfg, domain, d2)
        for p in pts:
            lab = point_label(p)
            (v1, eps), (v2, _) = values[lab][d1], values[lab][d2]
            label = K.classify_support([p], [v1], [v2], d1, d2, eps, measure, domain=domain)[0]
            code = {"inside": 0, "outside": 1, "ambiguous": -1}[label]
            res.table.add(d2, eps, lab + "|class", code)
            res.messages.append(f"{lab}: {label} (d={d1}->{d2})")
    series = {lab: c for lab, c in curves.items()}
    series.update({lab + " bound": c for lab, c in bounds.items()})
    res.plot = dict(series=series, title="SMCD(z,z) versus degree", xlabel="d + 1", ylabel="SMCD",
                    dashed=tuple(lab + " bound" for lab in bounds), shift=1)
    return res


# --------------------------------------------------------------------------
# recovery


def _record_estimates(res, ctx, est, split, d, resolution, ids, cond, seconds):
    for i, pid in enumerate(ids):
        res.table.add(d, resolution, pid, est.f_hat[i],
                      err_total=None if split is None else split.total[i],
                      err_proj=None if split is None else split.proj[i],
                      err_approx=None if split is None else split.approx[i],
                      cond_est=cond, seconds=seconds if i == 0 else None)


def _decomposition_checks(res, split, d, scale=1.0):
    tot_ok = bool(np.all(split.total <= split.proj + split.approx + 1e-9))
    gap_ok = bool(np.all(split.proj_gap >= -1e-9 * max(1.0, scale)))
    res.check(f"decomposition d={d}", tot_ok and gap_ok,
              f"min projection gap {split.proj_gap.min():.3g}")


def run_recover_box(cfg, timings=False):
    domain = make_domain(cfg["domain"])
    if not isinstance(domain, BoxDomain) or domain.dim > 2:
        raise ConfigError("recover-box needs a 1D or 2D box")
    family = cfg["mollifier"]
    if family not in ("lasserre_box", "smooth_bump"):
        raise ConfigError("recover-box uses a Euclidean mollifier family")
    Kbox = cfg["K"]
    try:
        Kdom = BoxDomain(tuple(Kbox["a"]), tuple(Kbox["b"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad evaluation set K: {exc}") from exc
    if Kdom.dim != domain.dim or np.any(Kdom.lo <= domain.lo) or np.any(Kdom.hi >= domain.hi):
        raise ConfigError("the evaluation set K must lie in the interior of the domain (it touches the boundary)")
    degrees = cfg["degrees"]
    eps_list = resolutions(cfg, degrees)
    for eps in eps_list:
        margin = min(np.min(Kdom.lo - domain.lo), np.min(domain.hi - Kdom.hi))
        if eps > margin:
            raise ConfigError(f"resolution {eps:g} exceeds the distance {margin:g} from K to the boundary")
    Krule = box_rule(Kdom.a, Kdom.b, int(cfg.get("eval_points_per_axis", 32)))
    ids = [point_label(p) for p in Krule.nodes]
    res = RunResult(ResultTable("recover-box"))
    l2s, sups = [], []
    for d, eps in zip(degrees, eps_list):
        measure = make_measure(cfg, domain, d)
        with Timer(timings) as tm:
            ctx = K.build_context(measure, d, family, float(eps), region="X")
            est = K.density_estimate(ctx, Krule.nodes)
        res.moments[d] = ctx.moments
        if np.any(est.degenerate):
            res.messages.append(f"d={d}: g_hat <= 0 at {int(est.degenerate.sum())} points")
        split = K.error_split(ctx, est) if measure.has_density else None
        _record_estimates(res, ctx, est, split, d, eps, ids, ctx.cond_est, tm.seconds)
        if split is not None:
            f_true = measure.density(Krule.nodes)
            l2 = _l2(Krule.weights, est.f_hat - f_true)
            sup = float(np.max(np.abs(est.f_hat - f_true)))
            res.table.add(d, eps, "L2_fhat", l2, err_total=_l2(Krule.weights, split.total),
                          err_proj=_l2(Krule.weights, split.proj), err_approx=_l2(Krule.weights, split.approx),
                          cond_est=ctx.cond_est)
            res.table.add(d, eps, "sup_fhat", sup)
            l2s.append(l2)
            sups.append(sup)
            _decomposition_checks(res, split, d)
    if len(l2s) >= 2:
        slope, resid = _slope(degrees, l2s)
        res.table.add(None, None, "fit_slope", slope, err_total=resid)
        res.check("L2 error strictly decreasing", all(b < a for a, b in zip(l2s, l2s[1:])))
        res.check(f"fitted slope <= {cfg['max_slope']}", slope <= cfg["max_slope"], f"slope={slope:.4f}")
        res.messages.append(f"fitted slope {slope:.4f} (residual {resid:.3g})")
    res.plot = dict(series={"L2 error of f_hat": (degrees, l2s), "sup error": (degrees, sups)},
                    title="Density recovery on the box", xlabel="d", ylabel="error")
    return res


def run_recover_sphere(cfg, timings=False):
    domain = make_domain(cfg["domain"])
    if not isinstance(domain, Sphere2):
        raise ConfigError("recover-sphere needs the sphere domain")
    if cfg.get("mollifier", "zonal_algebraic") != "zonal_algebraic":
        raise ConfigError("recover-sphere uses the zonal mollifier")
    degrees = cfg["degrees"]
    if degrees[0] < 1:
        raise ConfigError("sphere degrees start at 1")
    ks = [int(k) for k in resolutions(cfg, degrees)]
    ev = cfg["eval"]
    erule = sphere_rule(int(ev["n_theta"]), int(ev["n_phi"]))
    rng = np.random.default_rng(cfg.get("seed", 0))
    sample = rng.normal(size=(int(cfg.get("sample_points", 20)), 3))
    sample /= np.linalg.norm(sample, axis=1, keepdims=True)
    ids = [f"x{i:02d}" for i in range(len(sample))]
    res = RunResult(ResultTable("recover-sphere"))
    l2s, done = [], []
    for d, k in zip(degrees, ks):
        measure = make_measure(cfg, domain, d, k)
        try:
            with Timer(timings) as tm:
                ctx = K.build_context(measure, d, "zonal_algebraic", k, region="X")
        except MomentMatrixError as exc:
            safe = done[-1] if done else None
            raise NumericalAbort(f"moment matrix unusable at d={d} ({exc}); largest safe degree: {safe}",
                                 res) from exc
        res.moments[d] = ctx.moments
        res.table.add(d, k, "resolution_eps", ratio_one_minus_t(k, 3))
        res.table.add(d, k, "resolution_var", zonal_variance_resolution(k, 3))
        est_s = K.density_estimate(ctx, sample)
        split_s = K.error_split(ctx, est_s) if measure.has_density else None
        _record_estimates(res, ctx, est_s, split_s, d, k, ids, ctx.cond_est, tm.seconds)
        if measure.has_density:
            est = K.density_estimate(ctx, erule.nodes)
            split = K.error_split(ctx, est)
            f_true = measure.density(erule.nodes)
            l2 = _l2(erule.weights, est.f_hat - f_true)
            res.table.add(d, k, "L2_fhat", l2, err_total=_l2(erule.weights, split.total),
                          err_proj=_l2(erule.weights, split.proj), err_approx=_l2(erule.weights, split.approx),
                          cond_est=ctx.cond_est)
            l2s.append(l2)
            _decomposition_checks(res, split, d)
            if np.any(est.degenerate):
                res.messages.append(f"d={d}: g_hat <= 0 at {int(est.degenerate.sum())} evaluation nodes")
        done.append(d)
    if len(l2s) >= 2:
        slope, resid = _slope(degrees, l2s)
        lo, hi = cfg["slope_window"]
        res.table.add(None, None, "fit_slope", slope, err_total=resid)
        res.check("L2 error strictly decreasing", all(b < a for a, b in zip(l2s, l2s[1:])))
        res.check(f"fitted slope in [{lo}, {hi}]", lo <= slope <= hi, f"slope={slope:.4f}")
        res.messages.append(f"fitted slope {slope:.4f} (residual {resid:.3g})")
    series = {"L2 error of f_hat": (degrees, l2s)}
    if l2s:
        series["d^(-4/3) reference"] = (degrees, [l2s[0] * (d / degrees[0]) ** (-4.0 / 3.0) for d in degrees])
    res.plot = dict(series=series, title="Density recovery on the sphere", xlabel="d", ylabel="L2 error",
                    dashed=("d^(-4/3) reference",))
    return res


class NumericalAbort(RuntimeError):
    """Numerical failure carrying the partial result."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result



# --------------------------------------------------------------------------
# Funk-Hecke


def run_funk_hecke_check(cfg, timings=False):
    kmax, lmax = int(cfg["kmax"]), int(cfg["lmax"])
    q = cfg["quadrature"]
    rule = sphere_rule(int(q["n_theta"]), int(q["n_phi"]))
    if rule.exactness < kmax + lmax:
        raise ConfigError(f"surface rule exact to degree {rule.exactness}, need {kmax + lmax}")
    rng = np.random.default_rng(cfg.get("seed", 0))
    xs = rng.normal(size=(int(cfg["sample_points"]), 3))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    basis = SphericalHarmonicBasis(lmax)
    Yn = basis.evaluate(rule.nodes)
    Yx = basis.evaluate(xs)
    orders = basis.orders
    res = RunResult(ResultTable("funk-hecke-check"))
    tol = float(cfg["tolerance"])
    worst_all = 0.0
    ks = [0] + list(range(1, kmax + 1))
    for k in ks:
        lam = funk_hecke_lambdas(lambda t: ((1.0 + t) / 2.0) ** k, lmax, 3, count=(k + lmax) // 2 + 2)
        # left side: surface quadrature of F(<x, y>) Y(y)
        t = np.clip(xs @ rule.nodes.T, -1.0, 1.0)
        lhs = (((1.0 + t) / 2.0) ** k * rule.weights) @ Yn
        rhs = Yx * lam[orders]
        dev = np.abs(lhs - rhs)
        for l in range(lmax + 1):
            worst = float(dev[:, orders == l].max())
            worst_all = max(worst_all, worst)
            res.table.add(l, k, "max_dev", worst)
            if l > k:
                res.check(f"orthogonality k={k} l={l}", max(worst, float(np.abs(lhs[:, orders == l]).max())) <= 1e-10)
    res.check(f"max deviation < {tol:g}", worst_all < tol, f"max={worst_all:.3g}")
    res.messages.append(f"max deviation {worst_all:.3g}")
    return res


# --------------------------------------------------------------------------
# mollifier axioms


TEST_POLYS_EUCLID = (
    ("y1^2", {(2,): 1.0}),
    ("y1^3-y1", {(3,): 1.0, (1,): -1.0}),
    ("(1+y1)^4", {(0,): 1.0, (1,): 4.0, (2,): 6.0, (3,): 4.0, (4,): 1.0}),
    ("y1^5", {(5,): 1.0}),
    ("1+y1-2y1^6", {(0,): 1.0, (1,): 1.0, (6,): -2.0}),
)

TEST_POLYS_SPHERE = (
    ("y3", lambda y: y[:, 2]),
    ("y1*y2", lambda y: y[:, 0] * y[:, 1]),
    ("y3^2", lambda y: y[:, 2] ** 2),
    ("y1^3", lambda y: y[:, 0] ** 3),
    ("y1+y2^2-y3^4", lambda y: y[:, 0] + y[:, 1] ** 2 - y[:, 2] ** 4),
)


def _euclid_reproduction(spec, domain):
    """|int phi p dy - p(z)| for the test polynomials (first coordinate only)."""
    n = domain.dim
    basis = PolynomialBasis(domain.a, domain.b, 6, kind="monomial")
    r = ell_vector(spec, basis, region="Z").values
    lookup = {tuple(idx): j for j, idx in enumerate(basis.indices)}
    out = []
    for _, poly in TEST_POLYS_EUCLID:
        val, exact = 0.0, 0.0
        for e, c in poly.items():
            idx = tuple(e) + (0,) * (n - 1)
            val += c * r[lookup[idx]]
            exact += c * spec.z[0] ** e[0]
        out.append(abs(val - exact))
    return out


def _euclid_norm_by_quadrature(spec):
    lo, hi = spec.support_box()
    prev, m = None, 32
    while m <= 2048:
        nodes, w = cube_rule(lo, hi, m)
        val = float(np.sum(w * eval_mollifier(spec, nodes) ** 2))
        if prev is not None and abs(val - prev) <= 1e-13 * val:
            return val
        prev, m = val, 2 * m
    return val


def _euclid_offball(spec, delta):
    n, eps = spec.dim, spec.resolution
    if spec.family == "smooth_bump":
        if delta >= eps:
            return 0.0
        # radial reduction: fraction of int r^{n-1} exp(-2/(1-r^2)) beyond delta/eps
        from scipy import integrate as spi
        f = lambda r: r ** (n - 1) * math.exp(-2.0 / (1.0 - r * r)) if r < 1 else 0.0
        tail, _ = spi.quad(f, delta / eps, 1.0, epsabs=0.0, epsrel=1e-12)
        total = _bump_radial(n, 2.0) / (2.0 * math.pi ** (n / 2) / math.gamma(n / 2))
        return tail / total
    half = eps / math.sqrt(n)
    if n == 1:
        return max(0.0, half - delta) / half
    nodes, w = cube_rule(spec.z - half, spec.z + half, 256)
    far = np.linalg.norm(nodes - spec.z, axis=1) > delta
    return float(np.sum(w[far]) / np.sum(w))


def _zonal_offball(k, delta):
    """Fraction of ||phi||^2 outside the chordal ball of radius delta, n = 3."""
    t0 = 1.0 - delta * delta / 2.0
    return ((1.0 + t0) / 2.0) ** (2 * k + 1)


def run_axioms_check(cfg, timings=False):
    domain = make_domain(cfg["domain"])
    if not isinstance(domain, BoxDomain):
        raise ConfigError("axioms-check needs a box domain for the Euclidean families")
    rng = np.random.default_rng(cfg.get("seed", 0))
    res = RunResult(ResultTable("axioms-check"))
    delta = float(cfg["delta"])
    eps_list = [float(e) for e in cfg["eps"]]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigError("eps list must be strictly decreasing")
    ncent = int(cfg["centers"])
    emax = max(eps_list)
    inner_lo, inner_hi = domain.lo + emax, domain.hi - emax
    if np.any(inner_hi <= inner_lo):
        raise ConfigError("domain too small for the largest eps")
    centers = inner_lo + (inner_hi - inner_lo) * rng.random((ncent, domain.dim))
    unit = PolynomialBasis(domain.a, domain.b, 0)
    curves = {}
    for family in ("lasserre_box", "smooth_bump"):
        repro_hist, off_hist = [], []
        for eps in eps_list:
            specs = [MollifierSpec(family, tuple(c), eps, domain.dim) for c in centers]
            mass_dev = max(abs(ell_vector(s, unit, region="Z").values[0] - 1.0) for s in specs)
            norms = np.array([_euclid_norm_by_quadrature(s) for s in specs])
            spread = float((norms.max() - norms.min()) / norms.mean())
            repro = _euclid_reproduction(specs[0], domain)
            off = _euclid_offball(specs[0], delta)
            repro_hist.append(repro)
            off_hist.append(off)
            res.table.add(None, eps, f"{family}|unit_mass", mass_dev)
            res.table.add(None, eps, f"{family}|norm_spread", spread)
            for (name, _), e in zip(TEST_POLYS_EUCLID, repro):
                res.table.add(None, eps, f"{family}|repro|{name}", e)
            res.table.add(None, eps, f"{family}|offball", off)
            res.check(f"{family} eps={eps:g} unit mass", mass_dev <= 1e-8, f"{mass_dev:.3g}")
            res.check(f"{family} eps={eps:g} norm constancy", spread <= 1e-8, f"{spread:.3g}")
        _monotone_checks(res, family, repro_hist, off_hist)
        curves[f"{family} offball"] = (eps_list, off_hist)
        curves[f"{family} repro y1^2"] = (eps_list, [r[0] for r in repro_hist])
    # zonal family on S^2
    ks = [int(k) for k in cfg["k"]]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ConfigError("k list must be strictly increasing")
    zc = rng.normal(size=(ncent, 3))
    zc /= np.linalg.norm(zc, axis=1, keepdims=True)
    repro_hist, off_hist = [], []
    for k in ks:
        rule = sphere_rule(k + 4, 2 * k + 9)
        specs = [MollifierSpec("zonal_algebraic", tuple(c), k, 3) for c in zc]
        masses = np.array([np.sum(rule.weights * eval_mollifier(s, rule.nodes)) for s in specs])
        norms = np.array([np.sum(rule.weights * eval_mollifier(s, rule.nodes) ** 2) for s in specs])
        mass_dev = float(np.max(np.abs(masses - 1.0)))
        spread = float((norms.max() - norms.min()) / norms.mean())
        phi0 = eval_mollifier(specs[0], rule.nodes) * rule.weights
        repro = [float(abs(phi0 @ p(rule.nodes) - p(specs[0].z.reshape(1, 3))[0])) for _, p in TEST_POLYS_SPHERE]
        off = _zonal_offball(k, delta)
        repro_hist.append(repro)
        off_hist.append(off)
        res.table.add(None, k, "zonal_algebraic|unit_mass", mass_dev)
        res.table.add(None, k, "zonal_algebraic|norm_spread", spread)
        for (name, _), e in zip(TEST_POLYS_SPHERE, repro):
            res.table.add(None, k, f"zonal_algebraic|repro|{name}", e)
        res.table.add(None, k, "zonal_algebraic|offball", off)
        res.check(f"zonal k={k} unit mass", mass_dev <= 1e-8, f"{mass_dev:.3g}")
        res.check(f"zonal k={k} norm constancy", spread <= 1e-8, f"{spread:.3g}")
    _monotone_checks(res, "zonal_algebraic", repro_hist, off_hist)
    # arccos(t) <= (pi / sqrt 2) sqrt(1 - t)
    t = rng.uniform(-1.0, 1.0, int(cfg["arccos_samples"]))
    viol = int(np.count_nonzero(np.arccos(t) > (math.pi / math.sqrt(2.0)) * np.sqrt(1.0 - t)))
    res.table.add(None, None, "arccos_violations", viol)
    res.check("arccos inequality", viol == 0, f"{viol} violations")
    res.plot = dict(series=curves, title="Off-ball energy and reproduction error", xlabel="eps",
                    ylabel="diagnostic")
    return res


def _monotone_checks(res, family, repro_hist, off_hist, slack=1e-12):
    repro = np.array(repro_hist)
    ok_r = bool(np.all(np.diff(repro, axis=0) <= slack))
    res.check(f"{family} reproduction error non-increasing", ok_r)
    off = np.array(off_hist)
    ok_o = bool(np.all(np.diff(off) <= slack) and off[-1] < off[0])
    res.check(f"{family} off-ball energy decreasing", ok_o, " ".join(f"{v:.3g}" for v in off))


RUNNERS = {
    "dichotomy": run_dichotomy,
    "recover-box": run_recover_box,
    "recover-sphere": run_recover_sphere,
    "funk-hecke-check": run_funk_hecke_check,
    "axioms-check": run_axioms_check,
}
