"""Reproducing kernels, coefficient multipliers, projections and boundedness probes.

The kernel of the weighted Bergman space has Taylor coefficients
``c_n = 1/(2 omega_{2n+1})``; the area measure is ``dA = r dr dtheta / pi``
so that the projection reproduces polynomials exactly.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammaln

from .diskfn import AnalyticPoly, DiskDomainError, PolarSamples
from .quadrature import gauss_legendre
from .ratios import RatioReport, _jsonable, distance_grid, report_from_samples
from .weights import (
    RadialWeight,
    WeightDomainError,
    certify_lower_doubling,
    conjugate_exponent,
    power_transform,
)

log = logging.getLogger(__name__)

TRUNCATION_TOL = 1e-10
AUDIT_TOL = 1e-6


class TruncationError(ArithmeticError):
    """Kernel series truncated too early; ``required_degree`` estimates a safe D."""

    def __init__(self, message: str, required_degree: int):
        super().__init__(f"{message}; need D >= {required_degree}")
        self.required_degree = required_degree


# ---------------------------------------------------------------- kernels
@dataclass(frozen=True)
class KernelTruncation:
    weight: RadialWeight
    degree: int
    coeffs: np.ndarray

    def poly(self, a: complex) -> AnalyticPoly:
        """``B_a(z) = sum_n c_n conj(a)^n z^n`` truncated at the degree."""
        n = np.arange(self.degree + 1)
        return AnalyticPoly(self.coeffs * np.conj(np.complex128(a)) ** n)

    def head(self, D: int) -> "KernelTruncation":
        if D > self.degree:
            raise TruncationError("requested more coefficients than computed", D)
        return KernelTruncation(self.weight, D, self.coeffs[: D + 1])


def kernel_truncate(w: RadialWeight, D: int) -> KernelTruncation:
    """Kernel coefficients ``c_n = 1/(2 omega_{2n+1})`` for ``n <= D``."""
    if D < 0:
        raise DiskDomainError("truncation degree must be >= 0")
    n = np.arange(D + 1)
    c = 1.0 / (2.0 * w.moments(2.0 * n + 1.0))
    c.setflags(write=False)
    return KernelTruncation(w, int(D), c)


def _log_falling(m: np.ndarray, N: int) -> np.ndarray:
    """``log((m+N)!/m!)``."""
    return gammaln(m + N + 1.0) - gammaln(m + 1.0)


def _tail_bound(c: np.ndarray, D: int, N: int, s: float) -> float:
    """Bound for the discarded part ``sum_{j>D} j^N c_j s^j`` (geometric in s)."""
    if s == 0:
        return 0.0
    growth = c[D] / c[max(D // 2, 1)] if D >= 2 else 1.0
    beta = math.log(max(growth, 1.0)) / math.log(2.0) if D >= 2 else 1.0
    # c_j <= c_D (j/D)^beta beyond D; fold the extra power into the ratio
    q = s * (1.0 + 1.0 / max(D, 1)) ** (N + beta)
    if q >= 1:
        return math.inf
    return c[D] * max(D, 1) ** N * s ** (D + 1) / (1.0 - q)


def kernel_series_mean(ker: KernelTruncation, s_abs_a: float, r: float, N: int,
                       samples: int | None = None) -> tuple[float, float]:
    """``M_1(r, B_a^{(N)})`` for ``|a| = s_abs_a`` and the truncation bound used."""
    D = ker.degree
    if N > D:
        return 0.0, 0.0
    m = np.arange(D - N + 1)
    c = ker.coeffs
    t = s_abs_a * r
    with np.errstate(divide="ignore"):
        la = math.log(s_abs_a) if s_abs_a > 0 else -math.inf
        lr = math.log(r) if r > 0 else -math.inf
        logb = np.log(c[N:]) + _log_falling(m, N) + (m + N) * la + np.where(m > 0, m * lr, 0.0)
    b = np.exp(logb)
    if s_abs_a == 0:
        b = np.zeros_like(b)
        if N == 0:
            b[0] = c[0]
    if samples is None:
        need = max(m.size, int(64.0 / max(1.0 - t, 1e-12)), 256)
        samples = 1 << (need - 1).bit_length()
    if m.size > samples:
        pad = (-m.size) % samples
        b = np.concatenate([b, np.zeros(pad)]).reshape(-1, samples).sum(axis=0)
    vals = np.fft.ifft(b, n=samples) * samples
    M1 = float(np.mean(np.abs(vals)))
    bound = _tail_bound(c, D, N, t) / max(r, 1e-300) ** N if r > 0 else 0.0
    return M1, bound


def kernel_derivative_mean(ker: KernelTruncation, a: complex, r: float, N: int,
                           tol: float = TRUNCATION_TOL) -> float:
    """``M_1(r, (B_a)^{(N)})`` from the truncated series.

    Raises :class:`TruncationError` when the discarded tail could exceed
    ``tol`` times the computed mean.
    """
    if not 0 < r < 1 or abs(a) >= 1:
        raise DiskDomainError("kernel_derivative_mean needs 0 < r < 1 and |a| < 1")
    val, bound = kernel_series_mean(ker, abs(a), r, N)
    if bound > tol * val:
        raise TruncationError(
            f"tail bound {bound:.3e} exceeds tol*M1 at |a|r={abs(a) * r:.6g}",
            required_degree(ker.weight, abs(a) * r, N, tol),
        )
    return val


def required_degree(w: RadialWeight, s: float, N: int, tol: float = TRUNCATION_TOL) -> int:
    """Smallest degree (power-of-two search, then bisection) meeting the tail bound at ``s``."""
    if s == 0:
        return max(N, 1)
    D = max(64, 2 * N)
    while True:
        c = 1.0 / (2.0 * w.moments(2.0 * np.arange(D + 1) + 1.0))
        lvl = c[N] * math.exp(_log_falling(np.array([0]), N)[0]) * s ** N
        if _tail_bound(c, D, N, s) <= tol * max(lvl, c[0] * s ** N):
            break
        D *= 2
        if D > 1 << 24:
            raise TruncationError("degree search exceeded 2**24", D)
    lo, hi = D // 2, D
    while hi - lo > max(8, lo // 64):
        mid = (lo + hi) // 2
        if _tail_bound(c, mid, N, s) <= tol * max(lvl, c[0] * s ** N):
            hi = mid
        else:
            lo = mid
    return hi


def kernel_mean_rhs(w: RadialWeight, a: complex, r: float, N: int) -> float:
    """``1 + int_0^{r|a|} dt / ((1-t)^{N+1} omega_hat(t))``."""
    s = abs(a) * r
    if not 0 <= s < 1:
        raise DiskDomainError("kernel_mean_rhs needs r|a| < 1")
    if s == 0:
        return 1.0
    return 1.0 + float(w.inverse_tail_integral([1.0 - s], 1.0, N)[0])


# ---------------------------------------------------------------- multipliers
def moment_multiplier(w: RadialWeight, g: AnalyticPoly) -> AnalyticPoly:
    """``sum_n g_n omega_{2n+1} z^n``."""
    n = np.arange(g.coeffs.size)
    return AnalyticPoly(g.coeffs * w.moments(2.0 * n + 1.0))


def kernel_multiplier(w: RadialWeight, g: AnalyticPoly) -> AnalyticPoly:
    """``sum_n g_n / (2 omega_{2n+1}) z^n``; inverse of :func:`moment_multiplier` up to 1/2."""
    n = np.arange(g.coeffs.size)
    return AnalyticPoly(g.coeffs / (2.0 * w.moments(2.0 * n + 1.0)))


I_op = moment_multiplier
D_op = kernel_multiplier


# ---------------------------------------------------------------- projections
def weighted_radial_rule(w: RadialWeight, levels: int = 60, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Radii and weights ``W_i`` with ``sum W_i g(r_i) ~ int_0^1 g(r) omega(r) dr``.

    Dyadic Gauss-Legendre panels in ``u = 1 - r`` down to ``2**-levels``;
    one last node at ``u = 2**-(levels+1)`` carries the remaining mass.
    """
    x, wt = gauss_legendre(order)
    us, ws = [], []
    for j in range(levels):
        hi = 2.0 ** (-j)
        lo = 0.5 * hi
        u = lo + (hi - lo) * x
        us.append(u)
        ws.append((hi - lo) * wt * w.density_u(u))
    delta = 2.0 ** (-levels)
    us.append(np.array([0.5 * delta]))
    ws.append(np.array([float(w.tail_u(delta))]))
    u = np.concatenate(us)
    W = np.concatenate(ws)
    order_idx = np.argsort(-u)
    return 1.0 - u[order_idx], W[order_idx]


@dataclass
class WeightedSamples:
    """Polar samples whose radial rule already includes the weight density."""

    samples: PolarSamples
    omega_weights: np.ndarray
    weight_spec: str


def sample_for_weight(f, w: RadialWeight, angle_count: int, *, levels: int = 60,
                      order: int = 16) -> WeightedSamples:
    """Sample ``f(z)`` on the weighted radial rule of ``w``."""
    r, W = weighted_radial_rule(w, levels, order)
    # radii that round to 1.0 are merged into the last representable one
    keep = r < 1.0
    if not np.all(keep):
        W = np.concatenate([W[keep][:-1], [W[keep][-1] + W[~keep].sum()]])
        r = r[keep]
    r, inv = np.unique(r, return_inverse=True)
    W = np.bincount(inv, weights=W)
    ps = PolarSamples.from_function(f, r, angle_count)
    return WeightedSamples(ps, W, w.spec())


def _measure(w: RadialWeight, f: PolarSamples | WeightedSamples) -> tuple[PolarSamples, np.ndarray]:
    if isinstance(f, WeightedSamples):
        if f.weight_spec != w.spec():
            raise DiskDomainError("samples were prepared for a different weight")
        return f.samples, f.omega_weights
    return f, f.radial_weights() * w.density(f.radii)


def _project_coeffs(w: RadialWeight, f, ker: KernelTruncation) -> np.ndarray:
    """Taylor coefficients ``0..D`` of the truncated projection."""
    D = ker.degree
    if isinstance(f, AnalyticPoly):
        if f.degree > D:
            raise TruncationError("truncation degree below polynomial degree", f.degree)
        n = np.arange(f.coeffs.size)
        # (1/pi) int f conj(zeta)^n omega dA = 2 f_n omega_{2n+1}
        inner = 2.0 * f.coeffs * w.moments(2.0 * n + 1.0)
        out = np.zeros(D + 1, dtype=complex)
        out[: f.coeffs.size] = ker.coeffs[: f.coeffs.size] * inner
        return out
    ps, W = _measure(w, f)
    if ps.angle_count < 2 * (D + 1):
        raise DiskDomainError(f"angle_count {ps.angle_count} too small for degree {D}")
    F = ps.fourier()[:, : D + 1]
    n = np.arange(D + 1)
    with np.errstate(under="ignore"):
        rn = ps.radii[:, None] ** (n[None, :] + 1)
    inner = 2.0 * (W[:, None] * F * rn).sum(axis=0)
    return ker.coeffs * inner


def bergman_project(w: RadialWeight, f, ker: KernelTruncation,
                    eval_points: Sequence[complex]) -> np.ndarray:
    """``P_omega f`` at the evaluation points."""
    c = _project_coeffs(w, f, ker)
    return AnalyticPoly(c)(np.asarray(eval_points, dtype=complex))


def bergman_project_poly(w: RadialWeight, f, ker: KernelTruncation) -> AnalyticPoly:
    """The truncated projection as a polynomial of degree <= D."""
    return AnalyticPoly(_project_coeffs(w, f, ker))


def maximal_project(w: RadialWeight, f, ker: KernelTruncation,
                    eval_points: Sequence[complex]) -> np.ndarray:
    """``P^+_omega f(z) = int f(zeta) |B_z(zeta)| omega dA`` by full polar quadrature."""
    ps, W = _measure(w, f)
    A = ps.angle_count
    if A < ker.degree + 1:
        raise DiskDomainError(f"angle_count {A} too small for degree {ker.degree}")
    n = np.arange(ker.degree + 1)
    out = []
    for z in np.atleast_1d(np.asarray(eval_points, dtype=complex)):
        zc = np.conj(z)
        # B_z(rho e^{i theta}) = sum_n c_n (conj(z) rho)^n e^{i n theta}
        with np.errstate(under="ignore"):
            coeff = ker.coeffs[None, :] * (zc * ps.radii[:, None]) ** n[None, :]
        kvals = np.fft.ifft(coeff, n=A, axis=1) * A
        ang = np.mean(ps.values * np.abs(kvals), axis=1)
        out.append(2.0 * np.sum(W * ps.radii * ang))
    return np.array(out)


# ---------------------------------------------------------------- probes
class InverseTailTable:
    """Cubic spline of ``log(1 + J(u))`` in ``y = -log u`` for fast repeated evaluation.

    ``J(u) = int_u^1 dv / (v omega_hat(v))`` is the radial integral
    ``int_0^r ds / ((1-s) omega_hat(s))`` with ``u = 1 - r``.
    """

    def __init__(self, w: RadialWeight, y_max: float = 45.0, per_unit: int = 8):
        y = np.linspace(0.0, y_max, int(y_max * per_unit) + 1)
        J = w.inverse_tail_integral(np.exp(-y), 1.0, 0)
        if not np.all(np.isfinite(J)):
            raise WeightDomainError(f"inverse tail integral overflows for {w.spec()}")
        self.y_max = y_max
        self.spline = CubicSpline(y, np.log1p(J))

    def __call__(self, u) -> np.ndarray:
        y = -np.log(np.asarray(u, dtype=float))
        if np.any(y > self.y_max + 1e-9):
            raise WeightDomainError("distance below the tabulated range")
        return np.expm1(self.spline(np.clip(y, 0.0, None)))


def J_omega(w: RadialWeight, t: float) -> float:
    """``int_0^t ds / (omega_hat(s)(1-s))``."""
    if not 0 <= t < 1:
        raise DiskDomainError("J_omega needs t in [0, 1)")
    if t == 0:
        return 0.0
    return float(w.inverse_tail_integral([1.0 - t], 1.0, 0)[0])


def schur_weight(w: RadialWeight, q: float, r) -> float | np.ndarray:
    """``h(r) = omega_hat(r)^{-1/(q q')}``."""
    if not 1 < q < math.inf:
        raise DiskDomainError("schur_weight needs 1 < q < inf")
    qq = q * conjugate_exponent(q)
    out = np.asarray(w.tail(r), dtype=float) ** (-1.0 / qq)
    return float(out) if out.ndim == 0 else out


def annulus_test(t: float, q: float, radii_grid, angle_count: int = 8) -> PolarSamples:
    """``f_t = t^{-1/q}`` on ``|z| > t`` and 0 inside; the grid gains nodes at t and just above."""
    if not 0 < t < 1:
        raise DiskDomainError("annulus_test needs t in (0, 1)")
    if not q > 0:
        raise DiskDomainError("q must be positive")
    r = np.asarray(radii_grid, dtype=float)
    eps = 1e-12 * max(1.0, t)
    r = np.unique(np.concatenate([r, [t, t + eps]]))
    r = r[(r >= 0) & (r < 1)]
    val = t ** (-1.0 / q)
    # decided on the grid radius: |r e^{i theta}| rounds differently at r = t
    values = np.repeat(np.where(r > t, val, 0.0)[:, None], angle_count, axis=1).astype(complex)
    return PolarSamples(r, values)


def annulus_test_weighted(t: float, q: float, w: RadialWeight, angle_count: int = 8) -> WeightedSamples:
    """``f_t`` sampled on the weighted radial rule of ``w``."""
    val = t ** (-1.0 / q)
    ws = sample_for_weight(lambda z: np.where(np.abs(z) > t, val, 0.0) + 0j, w, angle_count)
    return ws


def annulus_norm_exact(w: RadialWeight, t: float, q: float) -> dict:
    """``||f_t||^q`` with the r-factor (``t^{-1} int_t^1 r omega``) and without it (``omega_hat(t)``)."""
    with_r = w.integrate(lambda r: r, t, 1.0) / t
    return {"with_r": with_r, "tail_convention": float(w.tail(t))}


def divergence_functional(w: RadialWeight, q: float, t: float,
                          table: InverseTailTable | None = None) -> float:
    """``Lambda(t) = (int_{1/2}^t (J(r)+1)^q omega(r) dr)^{1/q} omega_hat(t)^{1/q'}``."""
    if not 1 < q < math.inf:
        raise DiskDomainError("divergence_functional needs 1 < q < inf")
    if not 0.5 <= t < 1:
        raise DiskDomainError("divergence_functional needs t in [1/2, 1)")
    if t == 0.5:
        return 0.0
    return divergence_functional_u(w, q, 1.0 - t, table)


def divergence_functional_u(w: RadialWeight, q: float, u: float,
                            table: InverseTailTable | None = None) -> float:
    """:func:`divergence_functional` at distance ``u = 1 - t`` from the boundary."""
    if u >= 0.5:
        return 0.0
    J = table if table is not None else InverseTailTable(w)
    integral = w.integrate_u(lambda v: (J(v) + 1.0) ** q, u, 0.5)
    qp = conjugate_exponent(q)
    return integral ** (1.0 / q) * float(w.tail_u(u)) ** (1.0 / qp)


# ---------------------------------------------------------------- reports
@dataclass
class ProbeReport:
    grid: list
    lhs: list[float]
    rhs: list[float]
    ratio: RatioReport
    audit: dict = field(default_factory=dict)
    label: str = ""
    columns: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.audit.get("max_rel_change", 0.0) <= self.audit.get("tol", AUDIT_TOL)

    def to_dict(self) -> dict:
        r = self.ratio
        return _jsonable({
            "label": self.label,
            "grid": self.grid,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": {"min": r.ratio_min, "max": r.ratio_max, "argmin": r.argmin,
                      "argmax": r.argmax, "verdict": r.verdict, "stability": r.stability,
                      "n_points": r.n_points},
            "audit": self.audit,
            "columns": self.columns,
        })

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def to_csv(self, path: str | Path) -> None:
        extra = sorted(self.columns)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["point", "lhs", "rhs", "ratio", *extra])
            for i, (g, a, b) in enumerate(zip(self.grid, self.lhs, self.rhs)):
                ratio = a / b if b else float("nan")
                pt = ";".join(repr(float(x)) for x in g) if isinstance(g, (list, tuple)) else repr(float(g))
                wr.writerow([pt, repr(a), repr(b), repr(ratio), *[repr(self.columns[k][i]) for k in extra]])


def kernel_sweep_grid(n_points: int = 40, s_max: float = 0.999) -> np.ndarray:
    """``s_j = 1 - 10^{-3(j+1)/n}``, ending at ``s_max``."""
    e = -math.log10(1.0 - s_max)
    j = np.arange(n_points)
    return 1.0 - 10.0 ** (-e * (j + 1) / n_points)


def kernel_mean_sweep(w: RadialWeight, N: int, s_grid: Sequence[float] | None = None, *,
                      a_abs: float = 0.9995, tol: float = TRUNCATION_TOL,
                      coarse_s: float = 0.99, ker: KernelTruncation | None = None) -> ProbeReport:
    """LHS ``M_1(r, B_a^{(N)})`` against RHS for points ``s = r|a|``.

    Each point uses the smallest degree meeting the tail bound and is
    recomputed at twice that degree; the ratio report compares the two
    passes.  The audit also records the spread over ``s <= coarse_s``
    to expose slow drift toward the boundary.
    """
    s_grid = kernel_sweep_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    if np.any(s_grid >= a_abs) or np.any(s_grid < 0):
        raise DiskDomainError("sweep points must satisfy 0 <= s < |a|")
    Ds = [required_degree(w, float(s), N, tol) for s in s_grid]
    D_all = 2 * max(Ds)
    if ker is None or ker.degree < D_all:
        ker = kernel_truncate(w, D_all)
    lhs, lhs2, rhs = [], [], []
    for s, D in zip(s_grid, Ds):
        r = float(s) / a_abs
        if s == 0:
            # r = 0: the N-th derivative at the origin is N! c_N conj(a)^N
            lhs.append(math.exp(math.lgamma(N + 1)) * float(ker.coeffs[N]) * a_abs ** N)
            lhs2.append(lhs[-1])
        else:
            lhs.append(kernel_series_mean(ker.head(D), a_abs, r, N)[0])
            lhs2.append(kernel_series_mean(ker.head(2 * D), a_abs, r, N)[0])
        rhs.append(kernel_mean_rhs(w, a_abs, r, N))
    lhs, lhs2, rhs = map(np.array, (lhs, lhs2, rhs))
    change = np.abs(lhs2 - lhs) / np.maximum(np.abs(lhs2), 1e-300)
    pts = [float(s) for s in s_grid]
    # refinement axis: the truncation degree (D -> 2D) at every point
    rep = report_from_samples((pts, lhs, rhs), (pts, lhs2, rhs),
                              label=f"kernel-mean {w.spec()} N={N}")
    ratio = lhs2 / rhs
    inner = s_grid <= coarse_s
    audit = {
        "D": int(max(Ds)), "D2": int(2 * max(Ds)), "degrees": [int(d) for d in Ds],
        "max_rel_change": float(change.max()), "tol": AUDIT_TOL,
        "spread": float(ratio.max() / ratio.min()),
        "spread_inner": float(ratio[inner].max() / ratio[inner].min()) if inner.any() else None,
        "inner_s_max": coarse_s,
    }
    if audit["max_rel_change"] > AUDIT_TOL and rep.verdict == "bounded":
        rep.verdict = "unconverged"
    return ProbeReport(pts, lhs2.tolist(), rhs.tolist(), rep, audit,
                       label=rep.label, columns={"a_abs": [a_abs] * len(pts),
                                                 "r": [p / a_abs for p in pts],
                                                 "N": [N] * len(pts)})


def _schur_lhs(mu: RadialWeight, J: InverseTailTable, u_r: float) -> float:
    """``int_0^1 (1 + J(r s)) s mu(s) ds`` with ``u_r = 1 - r``."""

    def h(u_s):
        u_rs = u_r + u_s - u_r * u_s
        return (1.0 + J(u_rs)) * (1.0 - u_s)

    return mu.integrate_u(h, 0.0, 1.0, rtol=1e-9, breakpoints=[u_r])


def schur_test_check(w: RadialWeight, q: float = 2.0, ker: KernelTruncation | None = None,
                     r_grid=None, s_grid=None, *, coarse_levels: int = 80,
                     fine_levels: int = 240) -> ProbeReport:
    """Both Schur-test inequalities with the weight ``h = omega_hat^{-1/(q q')}``.

    The kernel mean ``M_1(s, B_r)`` is replaced by its two-sided proxy
    ``1 + J(rs)``.  The two integrals become integrals against the
    derived weights ``omega omega_hat^{-1/q}`` and ``omega omega_hat^{-1/q'}``.
    Radii run over ``1 - 2**(-j/4)``; the coarse grid stops at
    ``j = coarse_levels``, the refined one at ``j = fine_levels``.
    ``ker`` is accepted for interface symmetry and ignored.
    """
    if not 1 < q < math.inf:
        raise DiskDomainError("schur_test_check needs 1 < q < inf")
    if not certify_lower_doubling(w).certified:
        log.info("%s is not certified lower doubling; the Schur bounds may fail", w.spec())
    qp = conjugate_exponent(q)
    J = InverseTailTable(w, y_max=fine_levels / 4 * math.log(2) + 2.0)
    J_audit = InverseTailTable(w, y_max=fine_levels / 4 * math.log(2) + 2.0, per_unit=16)
    mu1 = power_transform(w, 1.0 / qp)  # omega * omega_hat^{-1/q}
    mu2 = power_transform(w, 1.0 / q)   # omega * omega_hat^{-1/q'}

    u_r = distance_grid(fine_levels) if r_grid is None else 1.0 - np.asarray(r_grid, dtype=float)
    u_r = u_r[u_r > 0]
    lhs1 = np.array([_schur_lhs(mu1, J, float(u)) for u in u_r])
    lhs2 = lhs1 if q == 2 else np.array([_schur_lhs(mu2, J, float(u)) for u in u_r])
    lt = np.asarray(w.log_tail_u(u_r))
    rhs1 = np.exp(-lt / q)
    rhs2 = np.exp(-lt / qp)
    # audit with a finer inverse-tail table at a few points
    probe = np.unique(np.linspace(0, u_r.size - 1, 6).astype(int))
    chk = np.array([_schur_lhs(mu1, J_audit, float(u_r[i])) for i in probe])
    change = float(np.max(np.abs(chk - lhs1[probe]) / chk))

    ratio = np.maximum(lhs1 / rhs1, lhs2 / rhs2)
    rhs_unit = np.ones_like(ratio)
    pts = [float(1.0 - u) for u in u_r]
    coarse = u_r >= 2.0 ** (-coarse_levels / 4)
    rep = report_from_samples(
        ([p for p, c in zip(pts, coarse) if c], ratio[coarse], rhs_unit[coarse]),
        (pts, ratio, rhs_unit),
        label=f"schur {w.spec()} q={q:g}",
        side="upper",
    )
    audit = {"D": int(J.spline.x.size), "D2": int(J_audit.spline.x.size),
             "max_rel_change": change, "tol": AUDIT_TOL}
    if change > AUDIT_TOL and rep.verdict == "bounded":
        rep.verdict = "unconverged"
    return ProbeReport(pts, ratio.tolist(), rhs_unit.tolist(), rep, audit,
                       label=rep.label,
                       columns={"lhs1": lhs1.tolist(), "rhs1": rhs1.tolist(),
                                "lhs2": lhs2.tolist(), "rhs2": rhs2.tolist()})


def divergence_trace(w: RadialWeight, q: float = 2.0, u_points: Sequence[float] | None = None,
                     *, coarse_u: float = 1e-5) -> ProbeReport:
    """``Lambda`` along ``t = 1 - u``: bounded for lower doubling weights, growing otherwise.

    The default trace runs over ``u = 10^-1 .. 10^-15``; the coarse pass
    keeps ``u >= coarse_u``, so logarithmic growth shows up as a factor
    of about three under refinement.
    """
    if u_points is None:
        u_points = 10.0 ** -np.arange(1.0, 15.25, 0.5)
    u_points = np.asarray(u_points, dtype=float)
    J = InverseTailTable(w, y_max=max(45.0, -math.log(u_points.min()) + 2.0))
    vals = np.array([divergence_functional_u(w, q, float(u), J) for u in u_points])
    pts = [float(1.0 - u) for u in u_points]
    coarse = u_points >= coarse_u
    ones = np.ones_like(vals)
    rep = report_from_samples(
        ([p for p, c in zip(pts, coarse) if c], vals[coarse], ones[coarse]),
        (pts, vals, ones),
        label=f"divergence {w.spec()} q={q:g}", side="upper",
    )
    return ProbeReport(pts, vals.tolist(), ones.tolist(), rep, {}, label=rep.label,
                       columns={"u": u_points.tolist()})


__all__ = [
    "KernelTruncation", "ProbeReport", "TruncationError", "InverseTailTable", "WeightedSamples",
    "kernel_truncate", "kernel_derivative_mean", "kernel_series_mean", "kernel_mean_rhs",
    "required_degree", "moment_multiplier", "kernel_multiplier", "I_op", "D_op",
    "weighted_radial_rule", "sample_for_weight", "bergman_project", "bergman_project_poly",
    "maximal_project", "J_omega", "schur_weight", "annulus_test", "annulus_test_weighted",
    "annulus_norm_exact", "divergence_functional", "divergence_functional_u",
    "kernel_sweep_grid", "kernel_mean_sweep", "schur_test_check", "divergence_trace",
]
