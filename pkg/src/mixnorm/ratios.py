"""Bounded-ratio reports: the numerical reading of two-sided estimates.

A claim ``A(x) ≍ B(x)`` is checked by sampling ``A/B`` on a grid, then
again on a refined grid that pushes further toward the place where the
estimate could fail (r -> 1, x -> infinity, higher frequencies).  The
verdict is

* ``bounded`` when the extreme ratios move by at most ``stability_tol``,
* ``unbounded-trend`` when the maximum grows (or the minimum shrinks) by
  at least a factor ``growth``,
* ``unconverged`` otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

BOUNDED = "bounded"
UNBOUNDED = "unbounded-trend"
UNCONVERGED = "unconverged"

STABILITY_TOL = 0.10
GROWTH_FACTOR = 2.0


def _jsonable(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


@dataclass
class RatioReport:
    ratio_min: float
    ratio_max: float
    argmin: Any
    argmax: Any
    n_points: int
    stability: float
    verdict: str
    coarse_min: float = float("nan")
    coarse_max: float = float("nan")
    excluded: int = 0
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def spread(self) -> float:
        """max/min of the ratio; the empirical equivalence constant."""
        if self.ratio_min <= 0:
            return float("inf")
        return self.ratio_max / self.ratio_min

    @property
    def bounded(self) -> bool:
        return self.verdict == BOUNDED

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "label": self.label,
                "ratio_min": self.ratio_min,
                "ratio_max": self.ratio_max,
                "argmin": self.argmin,
                "argmax": self.argmax,
                "n_points": self.n_points,
                "stability": self.stability,
                "verdict": self.verdict,
                "coarse_min": self.coarse_min,
                "coarse_max": self.coarse_max,
                "excluded": self.excluded,
                "extra": self.extra,
            }
        )


def _clean(points, lhs, rhs):
    points = list(points)
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = lhs / rhs
    ok = (rhs > 0) & ~np.isnan(ratio)
    excluded = int(np.count_nonzero(~ok))
    pts = [p for p, keep in zip(points, ok) if keep]
    return pts, ratio[ok], excluded


def report_from_samples(
    coarse: tuple[Sequence, Sequence, Sequence],
    refined: tuple[Sequence, Sequence, Sequence],
    *,
    stability_tol: float = STABILITY_TOL,
    growth: float = GROWTH_FACTOR,
    label: str = "",
    side: str = "both",
) -> RatioReport:
    """Build a report from precomputed ``(points, lhs, rhs)`` triples.

    The refined triple should contain the coarse points as well as the
    new ones; the reported extremes are those of the refined sample.
    With ``side="upper"`` only the maximum enters the verdict, which is
    the right reading of a one-sided estimate ``A <= C B``.
    """
    if side not in ("both", "upper"):
        raise ValueError(f"side must be 'both' or 'upper', got {side!r}")
    both = side == "both"
    cp, cr, cex = _clean(*coarse)
    rp, rr, rex = _clean(*refined)
    if len(cr) == 0 or len(rr) == 0:
        return RatioReport(
            float("nan"), float("nan"), None, None, 0, float("inf"), UNCONVERGED,
            excluded=rex, label=label,
        )
    cmin, cmax = float(np.min(cr)), float(np.max(cr))
    rmin, rmax = float(np.min(rr)), float(np.max(rr))
    imin, imax = int(np.argmin(rr)), int(np.argmax(rr))

    if not np.isfinite(rmax) or (cmax > 0 and rmax >= growth * cmax) or (
        both and rmin >= 0 and cmin > 0 and rmin <= cmin / growth
    ):
        verdict = UNBOUNDED
        with np.errstate(invalid="ignore", divide="ignore"):
            stability = float(max(abs(rmax - cmax) / abs(cmax) if cmax else np.inf,
                                  abs(rmin - cmin) / abs(cmin) if cmin else np.inf))
    else:
        stability = max(
            abs(rmax - cmax) / abs(cmax) if cmax else 0.0,
            abs(rmin - cmin) / abs(cmin) if (cmin and both) else 0.0,
        )
        verdict = BOUNDED if stability <= stability_tol else UNCONVERGED
    return RatioReport(
        ratio_min=rmin,
        ratio_max=rmax,
        argmin=rp[imin],
        argmax=rp[imax],
        n_points=len(rr),
        stability=stability,
        verdict=verdict,
        coarse_min=cmin,
        coarse_max=cmax,
        excluded=rex,
        label=label,
        extra={"side": side} if not both else {},
    )


def ratio_sweep(
    lhs: Callable[[Any], float],
    rhs: Callable[[Any], float],
    grid: Sequence,
    refined_grid: Sequence | None = None,
    **kwargs,
) -> RatioReport:
    """Sample ``lhs/rhs`` on ``grid`` and on ``refined_grid``.

    The refinement pass is mandatory; when ``refined_grid`` is omitted
    and ``grid`` holds radii in [0, 1), the grid is extended toward 1 by
    squaring the distance to the boundary three times over (u -> u**3
    at the finest point).
    """
    grid = list(grid)
    if refined_grid is None:
        refined_grid = extend_radial_grid(grid)
    refined_grid = list(refined_grid)

    cache: dict = {}

    def values(points):
        lv, rv = [], []
        for p in points:
            key = p if not isinstance(p, list) else tuple(p)
            if key not in cache:
                cache[key] = (float(lhs(p)), float(rhs(p)))
            a, b = cache[key]
            lv.append(a)
            rv.append(b)
        return lv, rv

    cl, cr = values(grid)
    rl, rr = values(refined_grid)
    return report_from_samples((grid, cl, cr), (refined_grid, rl, rr), **kwargs)


def radial_grid(j_max: int = 80, step: float = 0.25) -> np.ndarray:
    """Radii ``1 - 2**(-j*step)`` for ``j = 0..j_max``."""
    j = np.arange(j_max + 1)
    return 1.0 - 2.0 ** (-j * step)


def distance_grid(j_max: int = 80, step: float = 0.25) -> np.ndarray:
    """Distances to the boundary ``2**(-j*step)`` (exact near 0)."""
    j = np.arange(j_max + 1)
    return 2.0 ** (-j * step)


def extend_radial_grid(grid: Sequence[float], power: float = 3.0) -> list[float]:
    """Append radii whose distance to 1 reaches ``min_dist**power``."""
    grid = [float(g) for g in grid]
    u = [1.0 - g for g in grid if g < 1.0]
    u_min = min(u)
    if u_min <= 0 or u_min >= 1:
        return grid
    extra = []
    target = u_min ** power
    v = u_min
    ratio = 2.0 ** (-0.25)
    while v * ratio >= target * (1.0 - 1e-12):
        v *= ratio
        extra.append(1.0 - v)
    return grid + extra
