"""Lacunary schedules from a weight and smooth block decompositions of frequencies.

A schedule is the sequence of radii where the tail has dropped by the
factor ``K`` n times, together with the integers ``M_n = floor(1/(1-r_n))``.
Block windows are built from telescoping smooth ramps::

    R_0 = 1,   R_n(j) = Phi((j - M_{n-1}) / (M_{n+N-1} - M_{n-1})),   P_n = R_n - R_{n+1}

so that ``sum_n P_n = 1`` wherever the schedule reaches, each
``P_n`` takes values in [0, 1] and vanishes outside ``[M_{n-1}, M_{n+N})``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .diskfn import AnalyticPoly, hardy_norm, bloch_norm, bmoa_norm, hadamard
from .weights import RadialWeight, WeightDomainError, certify_upper_doubling, empirical_alpha0

log = logging.getLogger(__name__)

MIN_DISTANCE = 1e-12
SNAP_RTOL = 1e-9
LACUNARY_EPS = 1e-9


class BlockError(ValueError):
    """Invalid block construction or a basis that does not cover the input."""


# ---------------------------------------------------------------- cutoff
def _phi(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


@dataclass(frozen=True)
class CutoffSpec:
    """C^infinity profile: 1 on (-inf, 1], 0 on [k, inf), decreasing between."""

    k: int = 2

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise BlockError("cutoff needs an integer k > 1")

    def psi(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        a = _phi(self.k - t)
        b = _phi(t - 1.0)
        with np.errstate(invalid="ignore"):
            mid = a / (a + b)
        return np.where(t <= 1.0, 1.0, np.where(t >= self.k, 0.0, mid))

    def ramp(self, x) -> np.ndarray:
        """Increasing ramp: 0 for x <= 0, 1 for x >= 1."""
        x = np.asarray(x, dtype=float)
        return 1.0 - self.psi(1.0 + (self.k - 1.0) * x)


def build_vnk(cut: CutoffSpec, n: int) -> AnalyticPoly:
    """Dyadic-type window ``V_{n,k}``; the windows telescope to ``Psi(j / k^m)``."""
    if n < 0:
        raise BlockError("n must be >= 0")
    k = cut.k
    if n == 0:
        return AnalyticPoly(cut.psi(np.arange(k)))
    top = k ** (n + 1)
    j = np.arange(top)
    t = j / float(k ** (n - 1))
    return AnalyticPoly(cut.psi(t / k) - cut.psi(t))


# ---------------------------------------------------------------- schedules
def is_lacunary(seq: Sequence[int]) -> tuple[bool, float]:
    """Whether ``seq`` grows geometrically, with the minimal consecutive ratio.

    Besides ``min ratio > 1``, a finite sequence must not show ratios
    decaying toward 1: the smallest excess over 1 in the second half has
    to stay above 3/4 of the smallest excess in the first half.
    """
    a = np.asarray(seq, dtype=float)
    if a.size == 0:
        raise BlockError("is_lacunary needs a nonempty sequence")
    if a.size == 1:
        return True, math.inf
    if np.any(a[:-1] <= 0):
        return False, float(np.min(a[1:] / np.where(a[:-1] > 0, a[:-1], np.nan)))
    ratios = a[1:] / a[:-1]
    rmin = float(np.min(ratios))
    ok = rmin > 1.0 + LACUNARY_EPS
    if ok and ratios.size >= 4:
        half = ratios.size // 2
        first = float(np.min(ratios[:half])) - 1.0
        second = float(np.min(ratios[half:])) - 1.0
        ok = second >= 0.75 * first
    return bool(ok), rmin


@dataclass(frozen=True)
class BlockSchedule:
    K: float
    u_seq: tuple[float, ...]
    M_seq: tuple[int, ...]
    lacunary_ratio: float
    truncated: bool = False

    @property
    def r_seq(self) -> tuple[float, ...]:
        return tuple(1.0 - u for u in self.u_seq)

    @property
    def n_max(self) -> int:
        return len(self.M_seq) - 1

    def M(self, n: int) -> int:
        """``M_n`` with the convention ``M_{-1} = 0``."""
        if n < 0:
            return 0
        return self.M_seq[n]

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "r_seq": list(self.r_seq),
            "u_seq": list(self.u_seq),
            "M_seq": list(self.M_seq),
            "lacunary_ratio": self.lacunary_ratio,
            "truncated": self.truncated,
        }


def _solve_level(w: RadialWeight, log_level: float) -> float:
    """Largest distance ``u`` with ``log omega_hat(u) <= log_level`` (bisection in log u)."""
    lo, hi = -745.0, 0.0  # log u
    if float(w.log_tail_u(1.0)) <= log_level:
        return 1.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if float(w.log_tail_u(math.exp(mid))) <= log_level:
            lo = mid
        else:
            hi = mid
    return math.exp(lo)


def _floor_inverse(u: float) -> int:
    x = 1.0 / u
    nearest = round(x)
    if abs(x - nearest) <= SNAP_RTOL * x:
        return int(nearest)
    return int(math.floor(x))


def build_schedule(w: RadialWeight, K: float, n_max: int = 16) -> BlockSchedule:
    """Radii where the tail equals ``omega_hat(0) K^-n`` and their ``M_n``.

    Stops early (with a warning) once ``1 - r_n`` drops below 1e-12.
    """
    if not K > 1:
        raise BlockError("K must exceed 1")
    if n_max < 1:
        raise BlockError("n_max must be >= 1")
    log0 = float(w.log_tail_u(1.0))
    us = [1.0]
    truncated = False
    for n in range(1, n_max + 1):
        u = _solve_level(w, log0 - n * math.log(K))
        if u < MIN_DISTANCE:
            log.warning("schedule truncated at n=%d: 1 - r_n = %.3g below %.0e", n, u, MIN_DISTANCE)
            truncated = True
            break
        us.append(u)
    Ms = [_floor_inverse(u) for u in us]
    ratios = [Ms[i + 1] / Ms[i] for i in range(1, len(Ms) - 1)]
    lac = min(ratios) if ratios else math.inf
    return BlockSchedule(float(K), tuple(us), tuple(Ms), float(lac), truncated)


def choose_K(w: RadialWeight, *, C: float = 1.0, margin: float = 0.01,
             n_max: int = 16) -> float:
    """``max(omega_hat(0)/omega_hat(1/2), C 3^alpha0) (1 + margin)``.

    ``alpha0`` is the empirical exponent of the tail power bound with
    constant ``C``.  Raises if the weight is not certified upper doubling
    or the resulting schedule fails :func:`is_lacunary`.
    """
    rep = certify_upper_doubling(w)
    if not rep.certified:
        raise BlockError(f"{w.spec()} is not certified upper doubling; no K exists")
    a0 = empirical_alpha0(w, C)
    base = float(w.tail_u(1.0)) / float(w.tail_u(0.5))
    K = max(base, C * 3.0 ** a0) * (1.0 + margin)
    sched = build_schedule(w, K, n_max)
    ok, _ = is_lacunary(sched.M_seq[1:])
    if not ok:
        raise BlockError(f"schedule for K={K:.6g} is not lacunary: {sched.M_seq}")
    return K


# ---------------------------------------------------------------- bases
@dataclass(frozen=True)
class BlockBasis:
    """Smooth partition of unity on frequencies subordinate to a schedule."""

    schedule: BlockSchedule
    N: int = 1
    cutoff: CutoffSpec = field(default_factory=CutoffSpec)

    @property
    def n_windows(self) -> int:
        return self.schedule.n_max - self.N + 1

    @property
    def coverage(self) -> int:
        """Largest degree j for which the windows sum to exactly 1."""
        return self.schedule.M(self.schedule.n_max - self.N)

    def support(self, n: int) -> tuple[int, int]:
        """Half-open index range ``[M_{n-1}, M_{n+N})`` containing window n."""
        return self.schedule.M(n - 1), self.schedule.M(n + self.N)

    def _ramp(self, n: int, j: np.ndarray) -> np.ndarray:
        if n == 0:
            return np.ones(j.shape)
        a = self.schedule.M(n - 1)
        b = self.schedule.M(n + self.N - 1)
        if b <= a:
            return (j > a).astype(float)
        return self.cutoff.ramp((j - a) / float(b - a))

    def window(self, n: int, j) -> np.ndarray:
        """Values ``P_n(j)``."""
        if not 0 <= n < self.n_windows:
            raise BlockError(f"window index {n} outside 0..{self.n_windows - 1}")
        j = np.asarray(j, dtype=float)
        return self._ramp(n, j) - self._ramp(n + 1, j)

    def windows_for_degree(self, degree: int) -> list[int]:
        """Indices of the windows meeting ``[0, degree]``."""
        if degree > self.coverage:
            raise BlockError(f"basis covers degrees up to {self.coverage}, got {degree}")
        return [n for n in range(self.n_windows) if self.schedule.M(n - 1) <= degree]

    def window_poly(self, n: int, degree: int) -> AnalyticPoly:
        return AnalyticPoly(self.window(n, np.arange(degree + 1)))

    def project(self, n: int, f: AnalyticPoly) -> AnalyticPoly:
        return hadamard(self.window_poly(n, f.degree), f)

    def to_dict(self, max_degree: int | None = None) -> dict:
        if max_degree is None:
            max_degree = min(self.coverage, 1 << 16)
        wins = []
        for n in range(self.n_windows):
            lo, hi = self.support(n)
            hi = min(hi, max_degree + 1)
            j = np.arange(lo, max(lo, hi))
            v = self.window(n, j)
            nz = v != 0
            wins.append([[int(a), float(b)] for a, b in zip(j[nz], v[nz])])
        return {
            "K": self.schedule.K,
            "M_seq": list(self.schedule.M_seq),
            "N": self.N,
            "cutoff_k": self.cutoff.k,
            "max_degree": int(max_degree),
            "windows": wins,
        }

    def to_json(self, max_degree: int | None = None) -> str:
        return json.dumps(self.to_dict(max_degree))


def build_block_basis(schedule: BlockSchedule, N: int = 1, cut: CutoffSpec | None = None) -> BlockBasis:
    if N < 1:
        raise BlockError("overlap N must be >= 1")
    if schedule.n_max < N:
        raise BlockError("schedule too short for the requested overlap")
    ok, _ = is_lacunary(schedule.M_seq[1:]) if schedule.n_max >= 2 else (True, math.inf)
    if not ok:
        raise BlockError("schedule is not lacunary")
    return BlockBasis(schedule, N, cut or CutoffSpec())


def block_project(basis: BlockBasis, n: int, f: AnalyticPoly) -> AnalyticPoly:
    """``P_n * f``."""
    return basis.project(n, f)


def inner_norm(f: AnalyticPoly, inner: str = "hp", p: float = 2.0) -> float:
    """Norm of a polynomial in H^p, the Bloch space or BMOA."""
    if inner == "hp":
        return hardy_norm(f, p)
    if inner == "bloch":
        return bloch_norm(f)
    if inner == "bmoa":
        return bmoa_norm(f)
    raise BlockError(f"unknown inner space {inner!r}")


def block_norms(f: AnalyticPoly, basis: BlockBasis, inner: str = "hp", p: float = 2.0) -> np.ndarray:
    """``||P_n * f||_X`` for every window meeting ``deg f``."""
    idx = basis.windows_for_degree(f.degree)
    return np.array([inner_norm(basis.project(n, f), inner, p) for n in idx])


def _lq(terms: np.ndarray, q: float) -> float:
    if terms.size == 0:
        return 0.0
    if math.isinf(q):
        return float(np.max(terms))
    return float(np.sum(terms ** q) ** (1.0 / q))


def decomposition_norm(f: AnalyticPoly, basis: BlockBasis, q: float, inner: str = "hp",
                       p: float = 2.0, norms: np.ndarray | None = None) -> float:
    """``(sum_n K^-n ||P_n * f||_X^q)^{1/q}``, or ``sup_n K^-n ||P_n * f||_X`` for q = inf."""
    if not q > 0:
        raise BlockError("q must lie in (0, inf]")
    b = block_norms(f, basis, inner, p) if norms is None else norms
    n = np.arange(b.size)
    K = basis.schedule.K
    if math.isinf(q):
        return _lq(K ** (-n) * b, q)
    return _lq(K ** (-n / q) * b, q)


def lqs_norm(f: AnalyticPoly, basis: BlockBasis, s: float, q: float, inner: str = "hp",
             p: float = 2.0, norms: np.ndarray | None = None) -> float:
    """``(sum_n (2^{-ns} ||P_n * f||_X)^q)^{1/q}`` (sup for q = inf)."""
    if not q > 0:
        raise BlockError("q must lie in (0, inf]")
    b = block_norms(f, basis, inner, p) if norms is None else norms
    n = np.arange(b.size)
    return _lq(2.0 ** (-n * s) * b, q)


__all__ = [
    "CutoffSpec", "BlockSchedule", "BlockBasis", "BlockError", "build_vnk", "is_lacunary",
    "build_schedule", "choose_K", "build_block_basis", "block_project", "inner_norm",
    "block_norms", "decomposition_norm", "lqs_norm",
]
