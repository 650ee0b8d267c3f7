"""Practical bias-correction estimators.

Plug-in, lower/upper least favorable, neighborhood rules (uniformly
outperforming and minimax, with radius calibration), consistent shrinkage
estimation, the parametric bootstrap built on it, and crude dimension bounds.

Radius calibration conventions follow the constructions they reproduce: the
single-line rules threshold the constrained estimate's distance (so the
expected rule value is 2 - Phi(r - mu)), while the three-line rules threshold
the raw observation's distance (a noncentral radial probability).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .closedform import BiasEstimate, bias_aic, bias_constant, singularity_bias
from .geometry import (
    CENTROID,
    Counts,
    DomainError,
    GeometryParams,
    SimplexPoint,
    TransformedPoint,
    mu0y,
    phi_from_p1,
    transform_map,
)
from .models import (
    HALFLINES,
    POLYTOMY,
    T1,
    T3,
    UNCONSTRAINED,
    ModelSpec,
    cone_of,
    mle_simplex,
    project_points,
)
from .montecarlo import McSettings, mc_bias_gaussian
from .quadrature import QuadratureSettings, bias_t3_value, quad_adaptive_1d
from .special import bessel_i0e, erf, norm_cdf

_SQRT2 = math.sqrt(2.0)
_T3_SING = 2.0 + 3.0 * math.sqrt(3.0) / (2.0 * math.pi)

# Published reference radii (derived at reference sample size 1e6); used when
# a neighborhood rule is applied without an explicit radius.
DEFAULT_RADII = {
    (T1, "uo"): 0.0,
    (T1, "minimax"): 0.95,
    (T3, "uo"): 1.77,
    (T3, "minimax"): 2.21,
}


class InfeasibleError(RuntimeError):
    """A calibration problem has no feasible solution."""


@dataclass(frozen=True)
class EstimatorRule:
    """Configuration of one data-dependent bias-correction estimator."""

    method: str
    radius: float | None = None
    eta_exponent: float = 1.0 / 3.0
    bootstrap_b: int = 1000
    reference_n: int | None = None
    observed: str | None = None  # "muhat" | "zbar" | None = per-model convention

    def __post_init__(self):
        if self.method not in ("plugin", "aic", "llf", "ulf", "uo", "minimax",
                               "consistent", "bootstrap"):
            raise DomainError(f"unknown estimator method {self.method!r}")
        if self.radius is not None and self.radius < 0:
            raise DomainError("radius must be nonnegative")
        if self.bootstrap_b < 1:
            raise DomainError("bootstrap replicate count must be >= 1")
        if self.observed not in (None, "muhat", "zbar"):
            raise DomainError("observed must be 'muhat' or 'zbar'")


def default_observed(model: ModelSpec, method: str) -> str:
    if method in ("uo", "minimax") and model.variant == T1:
        return "muhat"
    if method == "consistent":
        return "muhat"
    return "zbar"


def default_radius(model: ModelSpec, method: str) -> float:
    try:
        return DEFAULT_RADII[(model.variant, method)]
    except KeyError:
        raise DomainError(
            f"no reference radius for {model.model_id}; calibrate one first") from None


@dataclass(frozen=True)
class Observation:
    """Transformed-plane view of an observed sample under a line model."""

    muhat: TransformedPoint
    zbar: TransformedPoint
    geometry: GeometryParams
    topology: int

    def point(self, which: str) -> TransformedPoint:
        return self.muhat if which == "muhat" else self.zbar


def transformed_observation(model: ModelSpec, counts: Counts, n: int | None = None) -> Observation:
    """Map counts into the transformed plane via the plug-in transform.

    The constrained MLE plays the role of the generating parameter: it fixes
    the Fisher scaling and puts its own line on the +y axis, so the estimate
    itself lands at (0, mu0y(phi_hat, n)).
    """
    if model.variant not in (T1, T3):
        raise DomainError("transformed observations are defined for the line models")
    n = counts.n if n is None else n
    if n != counts.n:
        raise DomainError("n must match the total count")
    fit = mle_simplex(model, counts)
    p_big = fit.estimate.as_tuple()[fit.topology - 1]
    phi_hat = phi_from_p1(p_big)
    geo = GeometryParams.from_phi0(phi_hat, n)
    tmap = transform_map(fit.estimate, n, axis_topology=fit.topology)
    return Observation(
        muhat=TransformedPoint(0.0, geo.mu0y),
        zbar=tmap(counts.mean()),
        geometry=geo,
        topology=fit.topology,
    )


def plugin_bias(model: ModelSpec, counts: Counts, n: int | None = None,
                quad: QuadratureSettings = QuadratureSettings()) -> BiasEstimate:
    """Bias correction with the generating parameter replaced by the MLE."""
    if model.variant in (POLYTOMY, UNCONSTRAINED):
        return BiasEstimate(bias_constant(model).value, "plug-in",
                            settings={"model": model.model_id})
    if model.variant == HALFLINES:
        raise DomainError("half-lines models carry no observed-data parametrization")
    obs = transformed_observation(model, counts, n)
    mu = obs.geometry.mu0y
    if model.variant == T1:
        value = 1.0 + erf(mu / _SQRT2)
    else:
        value = bias_t3_value(mu, obs.geometry.alpha0, quad)
    return BiasEstimate(value, "plug-in",
                        settings={"model": model.model_id, "mu_hat": mu})


def bias_on_cone(model: ModelSpec, mu: float, geo: GeometryParams | None = None,
                 quad: QuadratureSettings = QuadratureSettings()) -> float:
    """Bias correction at distance mu along a ray of the model's cone."""
    if model.variant == T1:
        return 1.0 + erf(mu / _SQRT2)
    if model.variant == T3:
        alpha0 = geo.alpha0 if geo is not None else math.pi / 6.0
        return bias_t3_value(mu, alpha0, quad)
    if model.variant in (POLYTOMY, UNCONSTRAINED):
        return bias_constant(model).value
    if mu == 0.0:
        return singularity_bias(model)
    raise DomainError("half-lines bias away from the origin has no closed form; "
                      "use the Monte Carlo engine")


@lru_cache(maxsize=128)
def least_favorable(model: ModelSpec, which: str,
                    quad: QuadratureSettings = QuadratureSettings(),
                    reference_n: float = 1e6) -> BiasEstimate:
    """Infimum ('lower') or supremum ('upper') of the bias over the cone.

    Computed by a coarse scan of distances [0, 50] (with the cone geometry
    the model has at reference_n) plus golden-section refinement; the far
    endpoint already sits at the regular-model limit to within 1e-6.  For
    half-lines models the value along each ray interpolates between the
    origin value and the regular limit 2, so the extremes are those two.
    """
    if which not in ("lower", "upper"):
        raise DomainError("which must be 'lower' or 'upper'")
    method = "llf" if which == "lower" else "ulf"
    if model.variant in (POLYTOMY, UNCONSTRAINED):
        value = bias_constant(model).value
        return BiasEstimate(value, method, settings={"model": model.model_id})
    if model.variant == HALFLINES:
        b0 = singularity_bias(model)
        value = min(b0, 2.0) if which == "lower" else max(b0, 2.0)
        return BiasEstimate(value, method, settings={"model": model.model_id})

    def f(mu: float) -> float:
        if model.variant == T1:
            return 1.0 + erf(mu / _SQRT2)
        geo = GeometryParams.from_mu0y(mu, reference_n)
        return bias_t3_value(mu, geo.alpha0, quad)

    sign = 1.0 if which == "lower" else -1.0
    grid = [0.5 * i for i in range(101)]
    vals = [sign * f(m) for m in grid]
    k = int(np.argmin(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    x, fx = _golden_min(lambda m: sign * f(m), lo, hi, 1e-4)
    best = min([(vals[0], grid[0]), (vals[-1], grid[-1]), (fx, x)])
    return BiasEstimate(sign * best[0], method,
                        settings={"model": model.model_id, "argmu": best[1],
                                  "reference_n": reference_n})


def _golden_min(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def neighborhood_rule(model: ModelSpec, r: float, observed: TransformedPoint,
                      method: str = "uo", seed: int = 0) -> BiasEstimate:
    """Singularity value inside the radius-r ball, the classical value outside.

    With several singularities the nearest would win (ties uniformly at
    random from the seed); the models here have a single one at the origin.
    """
    if r < 0:
        raise DomainError("radius must be nonnegative")
    singularities = [np.zeros(2)]
    dists = [float(np.linalg.norm(observed.as_array() - s)) for s in singularities]
    order = np.argsort(dists, kind="stable")
    nearest = order[0]
    ties = [i for i in order if abs(dists[i] - dists[nearest]) < 1e-15]
    if len(ties) > 1:
        nearest = np.random.default_rng(seed).choice(ties)
    inside = dists[nearest] <= r
    value = singularity_bias(model) if inside else bias_aic(model).value
    return BiasEstimate(value, method,
                        settings={"model": model.model_id, "radius": r,
                                  "inside": bool(inside)})


def rice_density(rho, center_norm: float):
    """Density of ||z||, z ~ N(mu, I_2) with ||mu|| = center_norm."""
    rho = np.asarray(rho, dtype=float)
    s = center_norm
    return rho * bessel_i0e(rho * s) * np.exp(-0.5 * (rho - s) ** 2)


def noncentral_radius_cdf(r: float, center_norm: float,
                          abs_tol: float = 1e-10) -> float:
    """P(||z|| <= r) for z ~ N(mu, I_2), by quadrature of the radial density."""
    if r < 0:
        raise DomainError("radius must be nonnegative")
    if r == 0.0:
        return 0.0
    return min(1.0, quad_adaptive_1d(lambda rho: rice_density(rho, center_norm),
                                     0.0, r, abs_tol))


def expected_neighborhood_value(model: ModelSpec, r: float, mu_grid: np.ndarray) -> np.ndarray:
    """E of the radius-r neighborhood rule at each generating distance.

    t1 thresholds the projected estimate (max(y, 0) <= r, giving
    2 - Phi(r - mu)); t3 thresholds the raw draw (||z|| <= r, a noncentral
    radial probability scaling the singularity excess).
    """
    mu_grid = np.asarray(mu_grid, dtype=float)
    if model.variant == T1:
        return 2.0 - norm_cdf(r - mu_grid)
    if model.variant == T3:
        h = _T3_SING - 2.0
        probs = np.array([noncentral_radius_cdf(r, m) for m in mu_grid])
        return 2.0 + h * probs
    raise DomainError(f"no expected-rule closed form for {model.model_id}")


@lru_cache(maxsize=64)
def _truth_grid(model_variant: str, grid_key: tuple[float, ...], n: float,
                quad: QuadratureSettings) -> tuple[float, ...]:
    model = ModelSpec(model_variant, topology=1 if model_variant == T1 else None)
    out = []
    for mu in grid_key:
        if model_variant == T1:
            out.append(1.0 + erf(mu / _SQRT2))
        else:
            geo = GeometryParams.from_mu0y(mu, n)
            out.append(bias_t3_value(mu, geo.alpha0, quad))
    return tuple(out)


def _radius_grid(grid) -> tuple[float, ...]:
    g = tuple(float(x) for x in grid)
    if not g:
        raise DomainError("radius calibration needs a nonempty grid")
    return g


def minimax_radius(model: ModelSpec, mu_grid, n: float,
                   quad: QuadratureSettings = QuadratureSettings(),
                   r_max: float = 6.0, tol: float = 1e-3) -> tuple[float, dict]:
    """Neighborhood radius minimizing the sup over the grid of squared error
    between the expected rule value and the true bias correction."""
    if model.variant not in (T1, T3):
        raise DomainError(f"{model.model_id} has a constant bias; no radius applies")
    grid = _radius_grid(mu_grid)
    truth = np.array(_truth_grid(model.variant, grid, float(n), quad))
    mus = np.array(grid)

    def sup_risk(r: float) -> float:
        return float(np.max((expected_neighborhood_value(model, r, mus) - truth) ** 2))

    r_star, risk_star = _golden_min(sup_risk, 0.0, r_max, tol)
    scan = np.arange(0.0, r_max + 1e-12, 0.05)
    scan_risks = [sup_risk(r) for r in scan]
    k = int(np.argmin(scan_risks))
    diag = {"sup_risk": risk_star, "scan_r": float(scan[k]),
            "scan_risk": float(scan_risks[k])}
    if scan_risks[k] < risk_star - 1e-9:
        r_ref, risk_ref = _golden_min(
            sup_risk, max(0.0, scan[k] - 0.05), min(r_max, scan[k] + 0.05), tol)
        diag["warning"] = "sup-risk curve not unimodal; grid-scan minimizer used"
        return r_ref, diag | {"sup_risk": risk_ref}
    return r_star, diag


def uo_radius(model: ModelSpec, mu_grid, n: float, violation_tol: float = 1.02e-14,
              quad: QuadratureSettings = QuadratureSettings(),
              r_max: float = 6.0, tol: float = 1e-3) -> tuple[float, dict]:
    """Largest radius whose expected rule value stays between the true bias
    and the classical correction, up to an opposite-sign slack."""
    if model.variant not in (T1, T3):
        raise DomainError(f"{model.model_id} has a constant bias; no radius applies")
    grid = _radius_grid(mu_grid)
    truth = np.array(_truth_grid(model.variant, grid, float(n), quad))
    mus = np.array(grid)
    aic = 2.0 * model.dim
    gap = aic - truth
    if np.all(gap >= -1e-12):
        side = 1.0     # classical value overestimates; rule must not dip below truth
    elif np.all(gap <= 1e-12):
        side = -1.0    # classical value underestimates; rule must not exceed truth
    else:
        raise DomainError("classical bias crosses the true bias on this grid; "
                          "no uniformly outperforming construction")

    def violation(r: float) -> float:
        e = expected_neighborhood_value(model, r, mus)
        return float(np.max(side * (truth - e)))

    if violation(0.0) > violation_tol:
        raise InfeasibleError("no feasible radius: even r = 0 violates the bound")
    if violation(r_max) <= violation_tol:
        return r_max, {"capped": True, "max_violation": violation(r_max)}
    lo, hi = 0.0, r_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if violation(mid) <= violation_tol:
            lo = mid
        else:
            hi = mid
    e = expected_neighborhood_value(model, lo, mus)
    worst = int(np.argmax(side * (truth - e)))
    return lo, {"max_violation": violation(lo), "binding_mu": float(mus[worst]),
                "violation_tol": violation_tol}


def consistent_estimate(model: ModelSpec, observed: TransformedPoint, n: float,
                        eta_exponent: float = 1.0 / 3.0,
                        geo: GeometryParams | None = None,
                        quad: QuadratureSettings = QuadratureSettings()
                        ) -> tuple[TransformedPoint, BiasEstimate]:
    """Shrink the observation to the singularity inside a slowly-growing ball.

    The ball radius is sqrt(n) * eta_n with eta_n = n^(-e); exponents must lie
    strictly inside (0, 1/2) so the radius grows without bound yet more slowly
    than sqrt(n).  Outside the ball the estimate is the cone projection of the
    observation, and the bias is evaluated at whichever estimate results.
    """
    if n < 3:
        raise DomainError("consistent estimation needs n >= 3")
    if not 0.0 < eta_exponent < 0.5:
        raise DomainError("rate exponent must lie strictly inside (0, 1/2)")
    radius = float(n) ** (0.5 - eta_exponent)
    if geo is None:
        geo = GeometryParams.from_phi0(1.0, n)
    cone = cone_of(model, geo)
    if observed.norm() <= radius:
        mu_t = TransformedPoint(0.0, 0.0)
        value = singularity_bias(model)
    else:
        proj = project_points(cone, observed.as_array()[None])[0]
        mu_t = TransformedPoint(float(proj[0]), float(proj[1]))
        value = bias_on_cone(model, mu_t.norm(), geo, quad)
    est = BiasEstimate(value, "consistent",
                       settings={"model": model.model_id, "radius": radius,
                                 "eta_exponent": eta_exponent,
                                 "shrunk": observed.norm() <= radius})
    return mu_t, est


def bootstrap_bias(model: ModelSpec, data: Counts, n: int | None = None,
                   b_replicates: int = 1000, seed: int = 0,
                   eta_exponent: float = 1.0 / 3.0, observed: str = "muhat",
                   chunk_size: int = 1 << 16, workers: int = 1,
                   quad: QuadratureSettings = QuadratureSettings()) -> BiasEstimate:
    """Parametric bootstrap of the bias correction around the shrunken center.

    The consistent estimate centers the bootstrap; each replicate draws
    z* ~ N(mu_tilde, I) and re-estimates by ordinary cone projection, and the
    average of 2 (z* - mu_tilde).(mu*_tilde - mu_tilde) is reported.
    """
    n = data.n if n is None else n
    if n != data.n:
        raise DomainError("n must match the total count")
    if model.variant in (POLYTOMY, UNCONSTRAINED):
        center = TransformedPoint(0.0, 0.0)
        geo = GeometryParams.from_phi0(1.0, max(n, 3))
    else:
        obs = transformed_observation(model, data, n)
        geo = obs.geometry
        center, _ = consistent_estimate(model, obs.point(observed), n,
                                        eta_exponent, geo, quad)
    cone = cone_of(model, geo)
    est = mc_bias_gaussian(cone, center, McSettings(seed, b_replicates, chunk_size, workers))
    return BiasEstimate(est.value, "bootstrap", std_error=est.std_error,
                        settings={"model": model.model_id,
                                  "center": (center.x, center.y),
                                  "replicates": b_replicates, "seed": seed,
                                  "eta_exponent": eta_exponent})


def crude_bounds(model: ModelSpec) -> tuple[BiasEstimate, BiasEstimate]:
    """Dimension bounds: twice the largest affine subspace locally inside the
    space (never below the universal lower bound 0) and twice its affine hull."""
    if model.variant == POLYTOMY:
        lo, hi = 0.0, 0.0
    elif model.variant == UNCONSTRAINED:
        lo, hi = 4.0, 4.0
    elif model.variant == T1:
        lo, hi = 0.0, 2.0
    elif model.variant == T3:
        lo, hi = 0.0, 4.0
    else:
        angles = [a % (2.0 * math.pi) for a in model.angles]
        has_line = any(
            abs(abs(a - b) - math.pi) < 1e-12
            for i, a in enumerate(angles) for b in angles[i + 1:])
        collinear = all(
            min(abs(a - angles[0]), abs(abs(a - angles[0]) - math.pi)) < 1e-12
            for a in angles)
        lo = 2.0 if has_line else 0.0
        hi = 2.0 if collinear else 4.0
    meta = {"model": model.model_id}
    return (BiasEstimate(lo, "crude-bound", settings=meta | {"side": "lower"}),
            BiasEstimate(hi, "crude-bound", settings=meta | {"side": "upper"}))


@lru_cache(maxsize=16)
def _t3_bias_table(alpha0: float, mu_max: float,
                   quad: QuadratureSettings) -> tuple[np.ndarray, np.ndarray]:
    xs = np.arange(0.0, mu_max + 0.05, 0.05)
    ys = np.array([bias_t3_value(float(m), alpha0, quad) for m in xs])
    return xs, ys


def _plugin_values(model: ModelSpec, mu: np.ndarray, geo: GeometryParams,
                   quad: QuadratureSettings) -> np.ndarray:
    if model.variant == T1:
        return 1.0 + erf(mu / _SQRT2)
    if model.variant == T3:
        # Tabulated quadrature values with linear interpolation; the node
        # spacing keeps interpolation error well below Monte Carlo resolution.
        mu_max = math.ceil(float(np.max(mu)) + 1.0)
        table_quad = QuadratureSettings(max(quad.abs_tol, 1e-7), quad.r_max_offset,
                                        quad.max_subdivisions)
        xs, ys = _t3_bias_table(geo.alpha0, float(mu_max), table_quad)
        return np.interp(mu, xs, ys)
    if model.variant == POLYTOMY:
        return np.zeros_like(mu)
    if model.variant == UNCONSTRAINED:
        return np.full_like(mu, 4.0)
    raise DomainError(f"no plug-in rule for {model.model_id}")


def rule_evaluator(model: ModelSpec, rule: EstimatorRule,
                   geo: GeometryParams | None = None,
                   quad: QuadratureSettings = QuadratureSettings()):
    """Vectorized map from transformed-plane draws to the rule's value.

    The returned callable takes an (N, 2) array and feeds
    montecarlo.mc_expected_estimator.
    """
    if geo is None:
        geo = GeometryParams.from_phi0(1.0, rule.reference_n or 1e6)
    cone = cone_of(model, geo)

    if rule.method == "aic":
        const = bias_aic(model).value
        return lambda z: np.full(len(z), const)
    if rule.method in ("llf", "ulf"):
        const = least_favorable(model, "lower" if rule.method == "llf" else "upper",
                                quad, float(rule.reference_n or 1e6)).value
        return lambda z: np.full(len(z), const)
    if rule.method == "plugin":
        def plugin_fn(z):
            proj = project_points(cone, z)
            return _plugin_values(model, np.linalg.norm(proj, axis=1), geo, quad)
        return plugin_fn
    if rule.method in ("uo", "minimax"):
        r = rule.radius if rule.radius is not None else default_radius(model, rule.method)
        which = rule.observed or default_observed(model, rule.method)
        sing = singularity_bias(model)
        aic = bias_aic(model).value

        def neighborhood_fn(z):
            pts = z if which == "zbar" else project_points(cone, z)
            inside = np.linalg.norm(pts, axis=1) <= r
            return np.where(inside, sing, aic)
        return neighborhood_fn
    if rule.method == "consistent":
        if rule.reference_n is None:
            raise DomainError("consistent rule needs reference_n")
        if not 0.0 < rule.eta_exponent < 0.5:
            raise DomainError("rate exponent must lie strictly inside (0, 1/2)")
        radius = float(rule.reference_n) ** (0.5 - rule.eta_exponent)
        which = rule.observed or default_observed(model, rule.method)

        def consistent_fn(z):
            proj = project_points(cone, z)
            obs = z if which == "zbar" else proj
            mu_t = np.where(np.linalg.norm(obs, axis=1) <= radius, 0.0,
                            np.linalg.norm(proj, axis=1))
            return _plugin_values(model, mu_t, geo, quad)
        return consistent_fn
    raise DomainError(f"no draw-wise evaluator for method {rule.method!r}")
