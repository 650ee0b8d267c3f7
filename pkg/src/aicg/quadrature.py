"""Adaptive quadrature and the three-ray (t3) bias correction.

The t3 bias is a 1-D error-function-weighted Gaussian integral plus a 2-D
polar integral; both semi-infinite domains are truncated at mu0y + offset,
where the Gaussian tail is far below the requested tolerance.  The inner
radial integral has a closed form, but numerical evaluation of the double
integral is fast, simple, and is the route taken here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .closedform import BiasEstimate
from .geometry import DomainError
from .special import erf

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-8
    r_max_offset: float = 12.0
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")
        if self.r_max_offset < 8:
            raise DomainError("r_max_offset must be at least 8")


class ConvergenceError(RuntimeError):
    """Adaptive subdivision hit its budget; carries the best estimate."""

    def __init__(self, message: str, best: float):
        super().__init__(message)
        self.best = best


def quad_adaptive_1d(f, a: float, b: float, abs_tol: float,
                     max_subdivisions: int = 2000) -> float:
    """Adaptive Simpson integration of a vectorized integrand on [a, b].

    Each interval is accepted once its Richardson error estimate fits within
    its proportional share of ``abs_tol``; the accepted pieces are summed
    with math.fsum, so the result does not depend on acceptance order.
    """
    if b < a:
        raise DomainError("integration bounds must satisfy a <= b")
    if a == b:
        return 0.0
    if not abs_tol > 0:
        raise DomainError("abs_tol must be positive")

    width = b - a
    n0 = 8
    edges = np.linspace(a, b, n0 + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    fe = np.asarray(f(edges), dtype=float)
    fm = np.asarray(f(mids), dtype=float)
    lo, hi = edges[:-1], edges[1:]
    s = (hi - lo) / 6.0 * (fe[:-1] + 4.0 * fm + fe[1:])
    frontier = list(zip(lo, hi, fe[:-1], fm, fe[1:], s))

    accepted: list[float] = []
    splits = 0
    while frontier:
        arr = np.array([(it[0], it[1]) for it in frontier])
        la, lb = arr[:, 0], arr[:, 1]
        m = 0.5 * (la + lb)
        lmid = 0.5 * (la + m)
        rmid = 0.5 * (m + lb)
        fl = np.asarray(f(lmid), dtype=float)
        fr = np.asarray(f(rmid), dtype=float)

        nxt = []
        for i, (ia, ib, ifa, ifm, ifb, is_) in enumerate(frontier):
            im = m[i]
            s_l = (im - ia) / 6.0 * (ifa + 4.0 * fl[i] + ifm)
            s_r = (ib - im) / 6.0 * (ifm + 4.0 * fr[i] + ifb)
            err = (s_l + s_r - is_) / 15.0
            if abs(err) <= abs_tol * (ib - ia) / width:
                accepted.append(s_l + s_r + err)
            else:
                nxt.append((ia, im, ifa, fl[i], ifm, s_l))
                nxt.append((im, ib, ifm, fr[i], ifb, s_r))
                splits += 1
                if splits > max_subdivisions:
                    best = math.fsum(accepted) + math.fsum(it[5] for it in nxt)
                    best += math.fsum(frontier[j][5] for j in range(i + 1, len(frontier)))
                    raise ConvergenceError(
                        f"no convergence within {max_subdivisions} subdivisions", best)
        frontier = nxt
    return math.fsum(accepted)


def g_integrand(r, phi, mu0y: float, alpha0: float):
    """Radial factor of the t3 polar integrand.

    r (r^2 cos^2(phi + alpha0) - mu0y r (sin phi - sin alpha0 cos(phi + alpha0))
       + mu0y^2)
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be nonnegative")
    c = np.cos(phi + alpha0)
    return r * (r * r * c * c
                - mu0y * r * (np.sin(phi) - math.sin(alpha0) * c)
                + mu0y * mu0y)


def _radial_integrals(phis: np.ndarray, mu0y: float, alpha0: float,
                      upper: float, abs_tol: float) -> np.ndarray:
    """Inner radial integral of the t3 polar term, for a batch of angles.

    Composite Simpson with panel doubling until every angle's Richardson
    estimate clears abs_tol; vectorizing over angles keeps the outer
    adaptive pass cheap.
    """
    col = phis[:, None]
    sin_phi = np.sin(col)

    def composite(n_panels: int) -> np.ndarray:
        r = np.linspace(0.0, upper, n_panels + 1)[None, :]
        expo = -0.5 * (r * r - 2.0 * mu0y * r * sin_phi + mu0y * mu0y)
        vals = g_integrand(r, col, mu0y, alpha0) * np.exp(expo)
        w = np.ones(n_panels + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return (upper / n_panels / 3.0) * (vals @ w)

    n = 64
    prev = composite(n)
    for _ in range(12):
        n *= 2
        cur = composite(n)
        if np.max(np.abs(cur - prev)) / 15.0 <= abs_tol:
            return cur
        prev = cur
    raise ConvergenceError("radial integral did not converge", float(np.sum(cur)))


def _t3_terms(mu0y: float, alpha0: float, settings: QuadratureSettings) -> tuple[float, float]:
    beta0 = 0.5 * (0.5 * math.pi - alpha0)
    cot_b = math.cos(beta0) / math.sin(beta0)
    upper = mu0y + settings.r_max_offset
    tol = settings.abs_tol

    def f_axis(y):
        d = y - mu0y
        return d * d * np.exp(-0.5 * d * d) * erf(y * cot_b / _SQRT2)

    # truncate on both sides of the Gaussian bump at y = mu0y: the left tail
    # below mu0y - offset is bounded by the same e^{-offset^2/2} factor, and
    # keeping the domain a fixed multiple of the bump width means the initial
    # panels always see it, however far out the bump sits
    y_lo = max(0.0, mu0y - settings.r_max_offset)
    term1 = math.sqrt(2.0 / math.pi) * quad_adaptive_1d(
        f_axis, y_lo, upper, 0.5 * tol / math.sqrt(2.0 / math.pi),
        settings.max_subdivisions)

    inner_tol = tol / 100.0

    def f_angular(phis):
        phis = np.atleast_1d(np.asarray(phis, dtype=float))
        return _radial_integrals(phis, mu0y, alpha0, upper, inner_tol)

    term2 = (2.0 / math.pi) * quad_adaptive_1d(
        f_angular, -0.5 * math.pi, beta0, 0.5 * tol * math.pi / 2.0,
        settings.max_subdivisions)
    return term1, term2


def bias_t3(mu0y: float, alpha0: float,
            settings: QuadratureSettings = QuadratureSettings()) -> BiasEstimate:
    """t3 bias correction by adaptive quadrature of both integrals."""
    if mu0y < 0:
        raise DomainError("mu0y must be nonnegative")
    if not 0.0 < alpha0 <= math.pi / 6.0 + 1e-12:
        raise DomainError("alpha0 must lie in (0, pi/6]")
    term1, term2 = _t3_terms(mu0y, alpha0, settings)
    u = settings.r_max_offset
    tail_bound = (u * u + mu0y * mu0y + 4.0) * math.exp(-0.5 * u * u)
    return BiasEstimate(
        term1 + term2, "quadrature",
        settings={
            "model": "t3", "mu0y": mu0y, "alpha0": alpha0,
            "abs_tol": settings.abs_tol, "r_max": mu0y + u,
            "tail_bound": tail_bound,
        })


@lru_cache(maxsize=4096)
def bias_t3_value(mu0y: float, alpha0: float,
                  settings: QuadratureSettings = QuadratureSettings()) -> float:
    """Memoized scalar t3 bias; safe because bias_t3 is a pure function."""
    return bias_t3(mu0y, alpha0, settings).value
