"""Candidate models, constrained MLEs on the simplex, and cone projection.

Five model families: a single fixed topology line (t1:1, t1:2, t1:3), the
union of all three lines (t3), the centroid point model (polytomy), the full
open simplex (unconstrained), and an abstract multiple half-lines model that
lives only in the transformed plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    CENTROID,
    Counts,
    DomainError,
    GeometryParams,
    SimplexPoint,
    TransformedPoint,
)

TWO_PI = 2.0 * math.pi

T1 = "t1"
T3 = "t3"
POLYTOMY = "polytomy"
UNCONSTRAINED = "unconstrained"
HALFLINES = "halflines"


@dataclass(frozen=True)
class ModelSpec:
    """One candidate model; use the module constructors rather than __init__."""

    variant: str
    topology: int | None = None
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        if self.variant not in (T1, T3, POLYTOMY, UNCONSTRAINED, HALFLINES):
            raise DomainError(f"unknown model variant {self.variant!r}")
        if self.variant == T1 and self.topology not in (1, 2, 3):
            raise DomainError("t1 requires a topology in {1, 2, 3}")

    @property
    def model_id(self) -> str:
        if self.variant == T1:
            return f"t1:{self.topology}"
        if self.variant == HALFLINES:
            return "halflines:" + ",".join(f"{a:.12g}" for a in self.angles)
        return self.variant

    @property
    def dim(self) -> int:
        """Naive parameter count of the simplex model (line = 1, plane = 2)."""
        return {T1: 1, T3: 1, HALFLINES: 1, POLYTOMY: 0, UNCONSTRAINED: 2}[self.variant]

    def sector_gaps(self) -> tuple[float, ...]:
        if self.variant != HALFLINES:
            raise DomainError("sector gaps only defined for half-lines models")
        prev = 0.0
        gaps = []
        for a in self.angles:
            gaps.append(a - prev)
            prev = a
        return tuple(gaps)


def t1_model(topology: int) -> ModelSpec:
    return ModelSpec(T1, topology=topology)


def t3_model() -> ModelSpec:
    return ModelSpec(T3)


def polytomy_model() -> ModelSpec:
    return ModelSpec(POLYTOMY)


def unconstrained_model() -> ModelSpec:
    return ModelSpec(UNCONSTRAINED)


def validate_halflines(angles) -> ModelSpec:
    """Validate ray angles for the half-lines model.

    Angles must be strictly increasing in (0, 2pi], end at 2pi, and the
    largest sector must be the one between the +x axis and the first ray.
    A violation of the largest-sector convention raises with the rotation
    that fixes it (the model itself is fine, just labeled nonconventionally).
    """
    angs = tuple(float(a) for a in angles)
    if not angs:
        raise DomainError("half-lines model needs at least one ray")
    for a in angs:
        if not 0.0 < a <= TWO_PI + 1e-12:
            raise DomainError(f"ray angle {a!r} outside (0, 2pi]")
    for lo, hi in zip(angs, angs[1:]):
        if hi <= lo:
            raise DomainError("ray angles must be strictly increasing")
    if abs(angs[-1] - TWO_PI) > 1e-12:
        raise DomainError("last ray angle must equal 2pi")
    angs = angs[:-1] + (TWO_PI,)

    gaps = []
    prev = 0.0
    for a in angs:
        gaps.append(a - prev)
        prev = a
    widest = int(np.argmax(gaps))
    if gaps[widest] > gaps[0] + 1e-12:
        pivot = angs[widest - 1]
        relabeled = sorted(((a - pivot) % TWO_PI) or TWO_PI for a in angs)
        raise DomainError(
            "largest sector must precede the first ray; rotate by "
            f"{-pivot:.12g} rad, giving angles {tuple(relabeled)}"
        )
    return ModelSpec(HALFLINES, angles=angs)


@dataclass(frozen=True)
class MLEResult:
    estimate: SimplexPoint
    neg2loglik: float
    at_vertex_of_cone: bool
    topology: int | None = None  # which line carries the estimate (t1/t3)


def neg2loglik_at(counts: Counts, p: SimplexPoint) -> float:
    """-2 sum n_i log p_i with 0 log 0 = 0; +inf when n_i > 0 meets p_i = 0."""
    total = 0.0
    for c, prob in zip((counts.n1, counts.n2, counts.n3), p.as_tuple()):
        if c == 0:
            continue
        if prob <= 0.0:
            return math.inf
        total += c * math.log(prob)
    return -2.0 * total


def _t1_fit(counts: Counts, topology: int) -> MLEResult:
    n = counts.n
    c = (counts.n1, counts.n2, counts.n3)[topology - 1]
    big = max(c / n, 1.0 / 3.0)
    small = (1.0 - big) / 2.0
    ps = [small, small, small]
    ps[topology - 1] = big
    est = SimplexPoint(*ps, boundary_ok=True)
    return MLEResult(
        estimate=est,
        neg2loglik=neg2loglik_at(counts, est),
        at_vertex_of_cone=c / n <= 1.0 / 3.0,
        topology=topology,
    )


def mle_simplex(model: ModelSpec, counts: Counts) -> MLEResult:
    """Constrained maximum likelihood on the simplex.

    t1:i clamps p_i at 1/3 from below with the other two equal; t3 fits the
    best topology (count ties resolved by likelihood, then smallest index);
    polytomy is the centroid; unconstrained is the sample mean (closure
    points allowed).
    """
    if model.variant == HALFLINES:
        raise DomainError("half-lines models have no simplex parametrization")
    if model.variant == T1:
        return _t1_fit(counts, model.topology)
    if model.variant == T3:
        cs = (counts.n1, counts.n2, counts.n3)
        best = max(cs)
        fits = [_t1_fit(counts, i + 1) for i in range(3) if cs[i] == best]
        return min(fits, key=lambda r: (r.neg2loglik, r.topology))
    if model.variant == POLYTOMY:
        return MLEResult(CENTROID, neg2loglik_at(counts, CENTROID), True, None)
    est = counts.mean()
    at_vertex = all(abs(p - 1.0 / 3.0) < 1e-15 for p in est.as_tuple())
    return MLEResult(est, neg2loglik_at(counts, est), at_vertex, None)


@dataclass(frozen=True)
class Cone:
    """Transformed-plane image of a model's parameter space near the origin."""

    kind: str  # "rays" | "point" | "plane"
    angles: tuple[float, ...] = ()

    def directions(self) -> np.ndarray:
        a = np.array(self.angles)
        dirs = np.column_stack([np.cos(a), np.sin(a)])
        # snap the ~1e-16 crumbs at axis-aligned angles so axis rays are exact
        dirs[np.abs(dirs) < 1e-15] = 0.0
        return dirs


def cone_of(model: ModelSpec, geometry: GeometryParams | None = None) -> Cone:
    """Ray set of the model in the transformed plane.

    t3 needs cone geometry (its off-axis ray angles depend on alpha0); by
    convention the line through the generating parameter sits on the +y axis.
    """
    if model.variant == T1:
        return Cone("rays", (0.5 * math.pi,))
    if model.variant == T3:
        if geometry is None:
            raise DomainError("t3 cone requires geometry (alpha0)")
        a0 = geometry.alpha0
        return Cone("rays", tuple(sorted((0.5 * math.pi, math.pi + a0, TWO_PI - a0))))
    if model.variant == POLYTOMY:
        return Cone("point")
    if model.variant == UNCONSTRAINED:
        return Cone("plane")
    return Cone("rays", tuple(sorted(a % TWO_PI or TWO_PI for a in model.angles)))


def project_points(cone: Cone, points: np.ndarray) -> np.ndarray:
    """Euclidean projection of an (N, 2) array onto the cone, vectorized.

    Per ray with unit direction d the candidate is max(0, w.d) d; the
    winning candidate minimizes the distance, ties going to the smallest
    ray angle.  A point cone projects to the origin, the plane to itself.
    """
    pts = np.asarray(points, dtype=float)
    if cone.kind == "point":
        return np.zeros_like(pts)
    if cone.kind == "plane":
        return pts.copy()
    dirs = cone.directions()  # sorted by angle, so argmin tie-break is by angle
    t = np.clip(pts @ dirs.T, 0.0, None)
    # ||w - t d||^2 = ||w||^2 - t^2 once t is the clipped inner product
    best = np.argmin(-t * t, axis=1)
    return t[np.arange(len(pts)), best, None] * dirs[best]


def project_transformed(cone: Cone, w: TransformedPoint) -> TransformedPoint:
    out = project_points(cone, w.as_array()[None, :])[0]
    return TransformedPoint(float(out[0]), float(out[1]))


def theta_in_model(model: ModelSpec, theta: SimplexPoint, tol: float = 1e-9) -> bool:
    """Membership of a simplex point in the model's parameter space closure."""
    p = theta.as_tuple()
    if model.variant == UNCONSTRAINED:
        return True
    if model.variant == POLYTOMY:
        return all(abs(x - 1.0 / 3.0) <= tol for x in p)
    if model.variant == T1:
        i = model.topology - 1
        j, k = [m for m in range(3) if m != i]
        return p[i] >= p[j] - tol and abs(p[j] - p[k]) <= tol
    if model.variant == T3:
        return any(theta_in_model(t1_model(i), theta, tol) for i in (1, 2, 3))
    raise DomainError("half-lines models have no simplex parameter space")
