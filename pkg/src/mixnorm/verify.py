"""Equivalence and duality checks built on bounded-ratio reports.

Each check evaluates both sides of a norm equivalence over a seeded test
family, once on the family itself and once on a refined family with
twice the degree cap, and summarises the ratio as a :class:`RatioReport`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .blocks import BlockBasis, decomposition_norm, inner_norm
from .diskfn import (
    WITH_R,
    WITHOUT_R,
    AnalyticPoly,
    DiskDomainError,
    NormSpec,
    circle_samples,
    mixed_norm,
    space_norm_Xq,
)
from .operators import kernel_truncate, moment_multiplier
from .ratios import (
    BOUNDED,
    UNBOUNDED,
    UNCONVERGED,
    RatioReport,
    ratio_sweep,
    report_from_samples,
)
from .weights import RadialWeight, StandardWeight, conjugate_exponent, power_transform

ACCEPT_SEED = 0x5EED
DEFAULT_CAP = 4096
HOLDER_SLACK = 1e-12
THREADS_ENV = "MIXNORM_THREADS"


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def parallel_map(fn, items) -> list:
    """Ordered map; threads only when ``MIXNORM_THREADS`` > 1."""
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------- families
@dataclass
class TestFamily:
    """Seeded polynomials spanning single blocks, many blocks and near-boundary kernels."""

    __test__ = False  # keep pytest from collecting this class

    seed: int
    cap: int
    members: list[AnalyticPoly] = field(default_factory=list)
    kinds: list[str] = field(default_factory=list)

    @classmethod
    def build(cls, seed: int, M_seq: Sequence[int], cap: int = DEFAULT_CAP,
              weight: RadialWeight | None = None, *, n_random: int = 40,
              n_monomials: int = 10, n_lacunary: int = 5, n_kernels: int = 5) -> "TestFamily":
        """Random Gaussian polynomials (degree <= min(M_10, cap)), monomials ``z^{M_n}``,
        lacunary sums ``sum_{n<=m} z^{M_n}`` and dilated kernel sections."""
        rng = np.random.default_rng(seed)
        M = [int(m) for m in M_seq if m <= cap]
        top = min(M[min(10, len(M) - 1)], cap) if M else cap
        members, kinds = [], []
        for _ in range(n_random):
            d = int(rng.integers(0, top + 1))
            c = rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1)
            members.append(AnalyticPoly(c))
            kinds.append("random")
        for n in range(min(n_monomials, len(M))):
            members.append(AnalyticPoly.monomial(M[n]))
            kinds.append("monomial")
        for i in range(n_lacunary):
            m = min(2 * (i + 1), len(M) - 1)
            c = np.zeros(M[m] + 1, dtype=complex)
            c[M[: m + 1]] = 1.0
            members.append(AnalyticPoly(c))
            kinds.append("lacunary")
        if weight is None:
            weight = StandardWeight(0.0)
        rhos = [0.5, 0.8, 0.9, 0.95, 0.99][:n_kernels]
        d_k = min(cap, 4096)
        ker = kernel_truncate(weight, d_k)
        for rho in rhos:
            d = min(d_k, int(math.ceil(40.0 / (1.0 - rho))))
            members.append(AnalyticPoly(ker.coeffs[: d + 1] * rho ** np.arange(d + 1)))
            kinds.append("kernel")
        return cls(seed, cap, members, kinds)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def random_polys(seed: int, count: int, max_degree: int, *, exact_degree: bool = False) -> list[AnalyticPoly]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        d = max_degree if exact_degree else int(rng.integers(0, max_degree + 1))
        out.append(AnalyticPoly(rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1)))
    return out


# ---------------------------------------------------------------- pairings
def pairing_A2(w: RadialWeight, f: AnalyticPoly, g: AnalyticPoly) -> complex:
    """``sum_k f_k conj(g_k) omega_{2k+1}``."""
    n = min(f.coeffs.size, g.coeffs.size)
    k = np.arange(n)
    return complex(np.sum(f.coeffs[:n] * np.conj(g.coeffs[:n]) * w.moments(2.0 * k + 1.0)))


def pairing_small_p(w: RadialWeight, f: AnalyticPoly, g: AnalyticPoly, p: float, q: float) -> complex:
    """Pairing for ``0 < p < 1``: moments of ``nu_{1/p-2}`` times those of ``omega``
    (``q > 1``) or of ``omega omega_hat^{1/q}`` (``q <= 1``)."""
    if not 0 < p < 1:
        raise DiskDomainError("pairing_small_p needs 0 < p < 1")
    if not q > 0:
        raise DiskDomainError("q must be positive")
    n = min(f.coeffs.size, g.coeffs.size)
    x = 2.0 * np.arange(n) + 1.0
    nu = StandardWeight(1.0 / p - 2.0)
    mu = w if q > 1 else power_transform(w, 1.0 + 1.0 / q)
    return complex(np.sum(f.coeffs[:n] * np.conj(g.coeffs[:n]) * mu.moments(x) * nu.moments(x)))


def holder_pairing_check(w: RadialWeight, p: float, q: float, f: AnalyticPoly,
                         g: AnalyticPoly, convention: str = WITH_R) -> tuple[float, float]:
    """``(|<f, g>|, ||g||_{p,q} ||f||_{p',q'})`` with one measure for both factors."""
    if not (1 < p < math.inf and 1 < q < math.inf):
        raise DiskDomainError("holder_pairing_check needs 1 < p, q < inf")
    lhs = abs(pairing_A2(w, f, g))
    if f.is_zero or g.is_zero:
        return lhs, 0.0
    pp, qp = conjugate_exponent(p), conjugate_exponent(q)
    rhs = mixed_norm(g, w, p, q, convention) * mixed_norm(f, w, pp, qp, convention)
    return lhs, rhs


# ---------------------------------------------------------------- equivalences
def _family_report(values_coarse, values_fine, label: str, **kw) -> RatioReport:
    return report_from_samples(values_coarse, values_fine, label=label, **kw)


def block_multiplier_check(w: RadialWeight, alpha: float, basis: BlockBasis, family: TestFamily,
                           refined: TestFamily | None = None, *, inner: str = "hp", p: float = 2.0,
                           n_max: int = 12) -> tuple[RatioReport, RatioReport]:
    """``||I^mu(P_n * g)||_X`` against ``mu_{M_n} ||P_n * g||_X`` and ``K^{-alpha n} ||P_n * g||_X``
    with ``mu = omega omega_hat^{alpha-1}``; blocks with ``P_n * g = 0`` are skipped."""
    mu = power_transform(w, alpha)
    K = basis.schedule.K

    def one(item):
        i, g = item
        rows = []
        if g.degree > basis.coverage:
            return rows
        for n in basis.windows_for_degree(g.degree):
            if n > n_max:
                break
            blk = basis.project(n, g)
            b = 0.0 if blk.is_zero else inner_norm(blk, inner, p)
            if b == 0:
                continue
            rows.append(((i, n), inner_norm(moment_multiplier(mu, blk), inner, p),
                         float(mu.moment(basis.schedule.M(n))) * b, K ** (-alpha * n) * b))
        return rows

    def collect(fam: TestFamily):
        rows = [r for rs in parallel_map(one, enumerate(fam.members)) for r in rs]
        return tuple(list(col) for col in zip(*rows)) if rows else ([], [], [], [])

    c = collect(family)
    f = collect(refined) if refined is not None else c
    if refined is not None:
        # the refined pass contains the coarse members as well
        f = tuple(a + b for a, b in zip(c, f))
    tag = f"{w.spec()} alpha={alpha:g} {inner}{p:g}"
    rep1 = _family_report((c[0], c[1], c[2]), (f[0], f[1], f[2]), f"block-multiplier moment {tag}")
    rep2 = _family_report((c[0], c[1], c[3]), (f[0], f[1], f[3]), f"block-multiplier geometric {tag}")
    return rep1, rep2


def convention_equivalence_check(w: RadialWeight, p: float, q: float, family: TestFamily,
                                 refined: TestFamily | None = None) -> RatioReport:
    """``mixed_norm`` with the factor r against the ``H^p(q, omega)`` norm without it."""
    spec = NormSpec(q, w, "hp", p, WITHOUT_R)

    def collect(fam):
        a = parallel_map(lambda f: mixed_norm(f, w, p, q, WITH_R), fam.members)
        b = parallel_map(lambda f: space_norm_Xq(f, spec), fam.members)
        return list(range(len(fam))), a, b

    c = collect(family)
    f = c if refined is None else tuple(x + y for x, y in zip(c, collect(refined)))
    return _family_report(c, f, f"convention {w.spec()} p={p:g} q={q:g}")


def decomposition_equivalence_check(w: RadialWeight, basis: BlockBasis, q: float, family: TestFamily,
                                    refined: TestFamily | None = None, *, inner: str = "hp",
                                    p: float = 2.0) -> RatioReport:
    """``sum_n K^{-n} ||P_n * f||_X^q`` against ``||f||^q_{X(q, omega)}`` (sup form for q = inf)."""
    spec = NormSpec(q, w, inner, p, WITHOUT_R)
    power = 1.0 if math.isinf(q) else q

    def collect(fam):
        pts = [i for i, f in enumerate(fam.members) if f.degree <= basis.coverage and not f.is_zero]
        a = parallel_map(lambda i: decomposition_norm(fam.members[i], basis, q, inner, p) ** power, pts)
        b = parallel_map(lambda i: space_norm_Xq(fam.members[i], spec) ** power, pts)
        return pts, a, b

    c = collect(family)
    f = c if refined is None else tuple(x + y for x, y in zip(c, collect(refined)))
    return _family_report(c, f, f"decomposition {w.spec()} q={q:g}")


def cesaro_ratios(polys: Sequence[AnalyticPoly], n_max: int, p: float = 1.0) -> np.ndarray:
    """``||sigma_n f||_{H^p} / ||f||_{H^p}`` for ``n = 0..n_max`` (rows: polynomials)."""
    out = np.zeros((len(polys), n_max + 1))
    for i, f in enumerate(polys):
        d = f.degree
        N = circle_samples(d)
        n = np.arange(n_max + 1)[:, None]
        j = np.arange(d + 1)[None, :]
        fej = np.clip(1.0 - j / (n + 1.0), 0.0, None)
        vals = np.fft.ifft(fej * f.coeffs[None, :], n=N, axis=1) * N
        full = np.fft.ifft(f.coeffs, n=N) * N
        if math.isinf(p):
            num = np.abs(vals).max(axis=1)
            den = np.abs(full).max()
        else:
            num = np.mean(np.abs(vals) ** p, axis=1) ** (1.0 / p)
            den = np.mean(np.abs(full) ** p) ** (1.0 / p)
        out[i] = num / den
    return out


__all__ = [
    "RatioReport", "TestFamily", "ratio_sweep", "report_from_samples", "random_polys",
    "pairing_A2", "pairing_small_p", "holder_pairing_check", "block_multiplier_check",
    "convention_equivalence_check", "decomposition_equivalence_check", "cesaro_ratios",
    "BOUNDED", "UNBOUNDED", "UNCONVERGED", "ACCEPT_SEED", "parallel_map", "thread_count",
]
