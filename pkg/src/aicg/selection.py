"""Model scoring and decision-region grids.

Assembles -2 log L and a chosen bias-correction estimator into generalized
and classical scores, ranks candidate models, and labels barycentric lattices
of pseudo-observations with the winning model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .closedform import BiasEstimate, bias_aic
from .estimators import (
    EstimatorRule,
    bootstrap_bias,
    consistent_estimate,
    default_observed,
    default_radius,
    least_favorable,
    neighborhood_rule,
    plugin_bias,
    transformed_observation,
)
from .geometry import Counts, DomainError
from .models import POLYTOMY, T1, T3, UNCONSTRAINED, ModelSpec, mle_simplex
from .quadrature import QuadratureSettings

_VERSION = "0.1.0"


@dataclass(frozen=True)
class ScoreRow:
    model_id: str
    neg2loglik: float | None
    bias_method: str | None
    bias_value: float | None
    aicg: float | None
    aic: float | None
    rank_aicg: int | None
    rank_aic: int | None
    error: str | None = None


@dataclass(frozen=True)
class SelectionReport:
    rows: tuple[ScoreRow, ...]
    metadata: dict[str, Any] = field(default_factory=dict)

    def winner(self) -> str | None:
        for row in self.rows:
            if row.rank_aicg == 1:
                return row.model_id
        return None


def _bias_for(model: ModelSpec, counts: Counts, n: int, rule: EstimatorRule,
              seed: int, quad: QuadratureSettings) -> BiasEstimate:
    if rule.method == "plugin":
        return plugin_bias(model, counts, n, quad)
    if rule.method == "aic":
        return bias_aic(model)
    if rule.method in ("llf", "ulf"):
        return least_favorable(model, "lower" if rule.method == "llf" else "upper",
                               quad, float(n))
    if rule.method in ("uo", "minimax"):
        if model.variant in (POLYTOMY, UNCONSTRAINED):
            return BiasEstimate(bias_aic(model).value, rule.method,
                                settings={"model": model.model_id, "constant": True})
        obs = transformed_observation(model, counts, n)
        r = rule.radius if rule.radius is not None else default_radius(model, rule.method)
        which = rule.observed or default_observed(model, rule.method)
        return neighborhood_rule(model, r, obs.point(which), rule.method, seed)
    if rule.method == "consistent":
        if model.variant in (POLYTOMY, UNCONSTRAINED):
            return BiasEstimate(bias_aic(model).value, "consistent",
                                settings={"model": model.model_id, "constant": True})
        obs = transformed_observation(model, counts, n)
        which = rule.observed or default_observed(model, rule.method)
        _, est = consistent_estimate(model, obs.point(which), n,
                                     rule.eta_exponent, obs.geometry, quad)
        return est
    if rule.method == "bootstrap":
        return bootstrap_bias(model, counts, n, rule.bootstrap_b, seed,
                              rule.eta_exponent, rule.observed or "muhat", quad=quad)
    raise DomainError(f"estimator method {rule.method!r} not usable for scoring")


def _rank(values: list[tuple[float, str]]) -> dict[str, int]:
    order = sorted(range(len(values)), key=lambda i: (values[i][0], values[i][1]))
    return {values[i][1]: pos + 1 for pos, i in enumerate(order)}


def score(models: Sequence[ModelSpec], counts: Counts, rule: EstimatorRule,
          seed: int = 0, quad: QuadratureSettings = QuadratureSettings()) -> SelectionReport:
    """Score each candidate model on observed counts and rank by the
    generalized criterion (ties broken by model id).

    The multinomial coefficient is dropped from every -2 log L; it is common
    to all models for fixed data, so score differences are unaffected.
    A model the estimator cannot handle yields an error row, leaving the
    other rows intact.
    """
    if not models:
        raise DomainError("need at least one candidate model")
    n = counts.n
    partial = []
    for model in models:
        try:
            fit = mle_simplex(model, counts)
            bias = _bias_for(model, counts, n, rule, seed, quad)
            partial.append((model.model_id, fit.neg2loglik, bias, None))
        except (DomainError, ValueError) as exc:
            partial.append((model.model_id, None, None, str(exc)))

    scored = [(mid, n2ll, b, n2ll + b.value, n2ll + bias_aic_value(mid))
              for mid, n2ll, b, err in partial if err is None]
    rank_g = _rank([(s[3], s[0]) for s in scored])
    rank_a = _rank([(s[4], s[0]) for s in scored])

    rows = []
    for mid, n2ll, bias, err in partial:
        if err is not None:
            rows.append(ScoreRow(mid, None, None, None, None, None, None, None, err))
            continue
        aicg = n2ll + bias.value
        aic = n2ll + bias_aic_value(mid)
        rows.append(ScoreRow(mid, n2ll, bias.method, bias.value, aicg, aic,
                             rank_g[mid], rank_a[mid]))
    rows.sort(key=lambda r: (r.rank_aicg is None, r.rank_aicg or 0, r.model_id))
    meta = {
        "n": n, "seed": seed, "estimator": rule.method,
        "radius": rule.radius, "version": _VERSION,
        "note": "multinomial coefficient dropped from -2 log L",
    }
    return SelectionReport(tuple(rows), meta)


def bias_aic_value(model_id: str) -> float:
    return 2.0 * parse_model_id(model_id).dim


def parse_model_id(model_id: str) -> ModelSpec:
    """Inverse of ModelSpec.model_id, also accepting CLI spellings."""
    from .models import t1_model, t3_model, polytomy_model, unconstrained_model, validate_halflines
    s = model_id.strip().lower()
    if s.startswith("t1"):
        topo = int(s.split(":", 1)[1]) if ":" in s else 1
        return t1_model(topo)
    if s == "t3":
        return t3_model()
    if s == "polytomy":
        return polytomy_model()
    if s in ("unconstrained", "u"):
        return unconstrained_model()
    if s.startswith("halflines:"):
        return validate_halflines([float(a) for a in s.split(":", 1)[1].split(",")])
    raise DomainError(f"unknown model id {model_id!r}")


def akaike_weights(report: SelectionReport) -> dict[str, float]:
    """Optional exp(-delta/2) weights over the generalized scores."""
    scored = [(r.model_id, r.aicg) for r in report.rows if r.aicg is not None]
    best = min(v for _, v in scored)
    raw = {mid: math.exp(-0.5 * (v - best)) for mid, v in scored}
    total = sum(raw.values())
    return {mid: w / total for mid, w in raw.items()}


@dataclass(frozen=True)
class RegionGrid:
    resolution: int
    n: int
    model_ids: tuple[str, ...]
    points: tuple[tuple[int, int, int], ...]
    winners: tuple[str, ...]
    metadata: dict[str, Any] = field(default_factory=dict)


def simplex_lattice(resolution: int) -> list[tuple[int, int, int]]:
    """Barycentric lattice (i, j, k)/R, row-major, excluding the 3 vertices."""
    if resolution < 1:
        raise DomainError("resolution must be >= 1")
    pts = []
    for i in range(resolution + 1):
        for j in range(resolution + 1 - i):
            k = resolution - i - j
            if max(i, j, k) == resolution:
                continue
            pts.append((i, j, k))
    return pts


def largest_remainder_counts(p: Sequence[float], n: int) -> tuple[int, int, int]:
    """Round n*p to integers summing to n, largest fractional parts first."""
    raw = [n * x for x in p]
    base = [math.floor(v) for v in raw]
    short = n - sum(base)
    rema = sorted(range(3), key=lambda i: (-(raw[i] - base[i]), i))
    for i in rema[:short]:
        base[i] += 1
    return tuple(base)


def region_grid(models: Sequence[ModelSpec], n: int, resolution: int,
                rule: EstimatorRule, seed: int = 0,
                quad: QuadratureSettings = QuadratureSettings()) -> RegionGrid:
    """Label every lattice point with the model winning at its pseudo-counts.

    Pseudo-counts are the sum-preserving largest-remainder rounding of n*p
    (exact when n is a multiple of the resolution).  Equal generalized scores
    are recorded as an explicit "tie" so grids stay deterministic.
    """
    if len(models) < 2:
        raise DomainError("region grids need at least two models")
    pts = simplex_lattice(resolution)
    winners = []
    for (i, j, k) in pts:
        counts = Counts(*largest_remainder_counts(
            (i / resolution, j / resolution, k / resolution), n))
        report = score(models, counts, rule, seed, quad)
        best = [r for r in report.rows if r.rank_aicg == 1]
        if not best:
            winners.append("error")
            continue
        top = best[0]
        tied = [r.model_id for r in report.rows
                if r.aicg is not None and r.aicg == top.aicg]
        winners.append("tie" if len(tied) > 1 else top.model_id)
    return RegionGrid(
        resolution=resolution, n=n,
        model_ids=tuple(m.model_id for m in models),
        points=tuple(pts), winners=tuple(winners),
        metadata={"estimator": rule.method, "seed": seed, "version": _VERSION},
    )


def lattice_neighbors(point: tuple[int, int, int]):
    i, j, k = point
    return [(i + 1, j - 1, k), (i - 1, j + 1, k), (i + 1, j, k - 1),
            (i - 1, j, k + 1), (i, j + 1, k - 1), (i, j - 1, k + 1)]


def winning_component(grid: RegionGrid, label: str,
                      start: tuple[int, int, int]) -> set[tuple[int, int, int]]:
    """Lattice-connected component of `label` cells containing `start`."""
    lookup = dict(zip(grid.points, grid.winners))
    if lookup.get(start) != label:
        return set()
    seen = {start}
    stack = [start]
    while stack:
        cur = stack.pop()
        for nb in lattice_neighbors(cur):
            if nb not in seen and lookup.get(nb) == label:
                seen.add(nb)
                stack.append(nb)
    return seen
