"""Simplex geometry and the transformed-plane correspondence.

The trinomial lives on the open 2-simplex; all cone geometry lives in a
transformed plane obtained by centering at the centroid, scaling by
sqrt(n) * I(theta0)^{1/2} (I the Fisher information in free coordinates
(p1, p2)), and rotating a distinguished model direction onto the +y axis.
Under that map the centroid goes to the origin and a generating parameter on
a model line goes to (0, mu0y), its Mahalanobis distance from the centroid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INTERIOR_TOL = 1e-9  # points with min(p_i) below this are treated as on-face
_CENTROID = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)

# Directions of the three topology lines (centroid -> vertex i) in (p1, p2).
_TOPOLOGY_DIRS = {
    1: (2.0, -1.0),
    2: (-1.0, 2.0),
    3: (-1.0, -1.0),
}


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class SimplexPoint:
    """A probability triple on the 2-simplex.

    Strictly interior by default; pass ``boundary_ok=True`` to admit closure
    points (zero components), e.g. unconstrained MLEs at extreme counts.
    """

    p1: float
    p2: float
    p3: float
    boundary_ok: bool = False

    def __post_init__(self):
        total = self.p1 + self.p2 + self.p3
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"probabilities sum to {total!r}, not 1")
        lo = 0.0 if self.boundary_ok else float(np.nextafter(0.0, 1.0))
        for p in (self.p1, self.p2, self.p3):
            if not (p >= lo and math.isfinite(p)):
                raise DomainError(f"probability {p!r} outside the simplex")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p1, self.p2, self.p3)

    def free_coords(self) -> np.ndarray:
        return np.array([self.p1, self.p2])

    def is_interior(self, tol: float = INTERIOR_TOL) -> bool:
        return min(self.p1, self.p2, self.p3) >= tol


CENTROID = SimplexPoint(*_CENTROID)


@dataclass(frozen=True)
class Counts:
    """An observed trinomial sample."""

    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        for c in (self.n1, self.n2, self.n3):
            if c != int(c) or c < 0:
                raise DomainError(f"count {c!r} is not a nonnegative integer")
        if self.n < 1:
            raise DomainError("total count must be at least 1")

    @property
    def n(self) -> int:
        return self.n1 + self.n2 + self.n3

    def as_array(self) -> np.ndarray:
        return np.array([self.n1, self.n2, self.n3], dtype=float)

    def mean(self) -> SimplexPoint:
        n = self.n
        return SimplexPoint(self.n1 / n, self.n2 / n, self.n3 / n, boundary_ok=True)


@dataclass(frozen=True)
class TransformedPoint:
    """A point of the transformed plane, in Mahalanobis units."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError("transformed coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


def phi_from_p1(p1: float) -> float:
    """Branch-length-like parameter phi0 = (3/2)(1 - p1), for p1 in [1/3, 1)."""
    if not 1.0 / 3.0 <= p1 < 1.0:
        raise DomainError(f"p1={p1!r} outside [1/3, 1)")
    return 1.5 * (1.0 - p1)


def p1_from_phi(phi0: float) -> float:
    """Inverse of :func:`phi_from_p1`: p1 = 1 - (2/3) phi0."""
    _check_phi(phi0)
    return 1.0 - 2.0 * phi0 / 3.0


def _check_phi(phi0: float) -> None:
    if not 0.0 < phi0 <= 1.0:
        raise DomainError(f"phi0={phi0!r} outside (0, 1]")


def mu0y(phi0: float, n: float) -> float:
    """Mahalanobis distance of the generating parameter from the centroid.

    mu0y = sqrt(2n) (1 - phi0) / sqrt(phi0 (3 - 2 phi0)).
    """
    _check_phi(phi0)
    if n < 1:
        raise DomainError("sample size must be >= 1")
    return math.sqrt(2.0 * n) * (1.0 - phi0) / math.sqrt(phi0 * (3.0 - 2.0 * phi0))


def phi_from_mu0y(mu: float, n: float) -> float:
    """Invert mu0y(., n) by bisection; mu0y is strictly decreasing on (0, 1]."""
    if mu < 0:
        raise DomainError("mu0y must be nonnegative")
    if n < 1:
        raise DomainError("sample size must be >= 1")
    if mu == 0.0:
        return 1.0
    lo, hi = 1e-12, 1.0  # mu0y(lo) huge, mu0y(hi) = 0
    if mu >= mu0y(lo, n):
        raise DomainError(f"mu0y={mu!r} unattainable for n={n!r}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mu0y(mid, n) > mu:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)


def angles_from_phi0(phi0: float) -> tuple[float, float]:
    """Cone angles (alpha0, beta0) of the three-line geometry at phi0.

    alpha0 = arctan(1 / sqrt(3 (3 - 2 phi0))), beta0 = (pi/2 - alpha0) / 2.
    """
    _check_phi(phi0)
    alpha0 = math.atan(1.0 / math.sqrt(3.0 * (3.0 - 2.0 * phi0)))
    beta0 = 0.5 * (0.5 * math.pi - alpha0)
    return alpha0, beta0


@dataclass(frozen=True)
class GeometryParams:
    """Derived geometry of a generating parameter on a model line."""

    phi0: float
    mu0y: float
    alpha0: float
    beta0: float
    n: float

    def __post_init__(self):
        _check_phi(self.phi0)
        if abs(self.beta0 - 0.5 * (0.5 * math.pi - self.alpha0)) > 1e-12:
            raise DomainError("beta0 must equal (pi/2 - alpha0)/2")
        a_expected = math.atan(1.0 / math.sqrt(3.0 * (3.0 - 2.0 * self.phi0)))
        if abs(self.alpha0 - a_expected) > 1e-12:
            raise DomainError("alpha0 inconsistent with phi0")
        if (self.mu0y == 0.0) != (self.phi0 == 1.0) and abs(self.phi0 - 1.0) > 1e-12:
            if self.mu0y == 0.0:
                raise DomainError("mu0y = 0 requires phi0 = 1")

    @classmethod
    def from_phi0(cls, phi0: float, n: float) -> "GeometryParams":
        alpha0, beta0 = angles_from_phi0(phi0)
        return cls(phi0=phi0, mu0y=mu0y(phi0, n), alpha0=alpha0, beta0=beta0, n=n)

    @classmethod
    def from_mu0y(cls, mu: float, n: float) -> "GeometryParams":
        return cls.from_phi0(phi_from_mu0y(mu, n), n)


def fisher_information(theta: SimplexPoint) -> np.ndarray:
    """Trinomial Fisher information per observation in coordinates (p1, p2)."""
    if not theta.is_interior():
        raise DomainError("Fisher information degenerate on the simplex faces")
    p1, p2, p3 = theta.as_tuple()
    return np.array([
        [1.0 / p1 + 1.0 / p3, 1.0 / p3],
        [1.0 / p3, 1.0 / p2 + 1.0 / p3],
    ])


def mahalanobis(theta: SimplexPoint, theta0: SimplexPoint, n: float) -> float:
    """sqrt(n (theta - theta0)^T I(theta0) (theta - theta0)) in free coordinates."""
    info = fisher_information(theta0)
    if not theta.is_interior(0.0):
        raise DomainError("theta must lie in the closed simplex")
    d = theta.free_coords() - theta0.free_coords()
    return math.sqrt(n * float(d @ info @ d))


@dataclass(frozen=True)
class TransformMap:
    """Affine map simplex -> transformed plane: w = A (v(theta) - anchor)."""

    matrix: np.ndarray
    anchor: np.ndarray

    def __call__(self, theta: SimplexPoint) -> TransformedPoint:
        w = self.matrix @ (theta.free_coords() - self.anchor)
        return TransformedPoint(float(w[0]), float(w[1]))

    def apply_free(self, v: np.ndarray) -> np.ndarray:
        """Vectorized image of free-coordinate points, shape (..., 2)."""
        return (np.asarray(v, dtype=float) - self.anchor) @ self.matrix.T


def _rotation_to_y(u: np.ndarray) -> np.ndarray:
    psi = math.atan2(u[1], u[0])
    rot = 0.5 * math.pi - psi
    c, s = math.cos(rot), math.sin(rot)
    return np.array([[c, -s], [s, c]])


def transform_map(theta0: SimplexPoint, n: float, axis_topology: int | None = None) -> TransformMap:
    """Build the centering/scaling/rotation map determined by theta0.

    The plane is scaled by sqrt(n) * I(theta0)^{1/2} with I^{1/2} the upper
    factor of the Cholesky decomposition, then rotated so the distinguished
    half-line lands on the +y axis.  The distinguished direction is the ray
    from the centroid through theta0; if theta0 is the centroid itself (or
    ``axis_topology`` is given) the named topology line is used instead,
    defaulting to topology 1.
    """
    if not theta0.is_interior():
        raise DomainError("theta0 must be strictly interior to the simplex")
    if n < 1:
        raise DomainError("sample size must be >= 1")
    info = fisher_information(theta0)
    half = np.linalg.cholesky(info).T  # upper triangular; half.T @ half == info
    scale = math.sqrt(n) * half
    anchor = np.array(_CENTROID[:2])

    if axis_topology is not None:
        if axis_topology not in _TOPOLOGY_DIRS:
            raise DomainError(f"axis_topology must be 1, 2 or 3, got {axis_topology!r}")
        direction = np.array(_TOPOLOGY_DIRS[axis_topology])
    else:
        direction = theta0.free_coords() - anchor
        if float(np.hypot(*direction)) <= 1e-12:
            direction = np.array(_TOPOLOGY_DIRS[1])
    u = scale @ direction
    return TransformMap(matrix=_rotation_to_y(u) @ scale, anchor=anchor)


def theta_on_line(phi0: float, topology: int = 1) -> SimplexPoint:
    """The simplex point at parameter phi0 on the given topology line."""
    _check_phi(phi0)
    big = p1_from_phi(phi0)
    small = (1.0 - big) / 2.0
    ps = [small, small, small]
    ps[topology - 1] = big
    return SimplexPoint(*ps)
