"""Functions on the unit disk and their norms.

Analytic inputs are polynomials (:class:`AnalyticPoly`); everything else
is sampled on a tensor polar grid (:class:`PolarSamples`).  Circle
averages use the trapezoid rule on uniform angles, evaluated by FFT.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .quadrature import adaptive_gl, composite_gl
from .weights import RadialWeight

WITH_R = "with-r"
WITHOUT_R = "without-r"
MIN_SAMPLES = 256
RADIAL_RTOL = 1e-10


class DiskDomainError(ValueError):
    """Argument outside the domain of a disk-function operation."""


def _pow2_at_least(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def circle_samples(degree: int) -> int:
    """Number of uniform angles used for a polynomial of the given degree."""
    return _pow2_at_least(max(8 * (degree + 1), MIN_SAMPLES))


# ---------------------------------------------------------------- polynomials
class AnalyticPoly:
    """Polynomial ``sum_k c_k z^k`` with trailing zeros stripped."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[complex] | np.ndarray = (0.0,)):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex)).ravel()
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1, dtype=complex)
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def monomial(cls, k: int, c: complex = 1.0) -> "AnalyticPoly":
        a = np.zeros(k + 1, dtype=complex)
        a[k] = c
        return cls(a)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.polynomial.polynomial.polyval(z, self.coeffs)

    def __repr__(self) -> str:
        return f"AnalyticPoly(degree={self.degree})"

    def __eq__(self, other) -> bool:
        return isinstance(other, AnalyticPoly) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __add__(self, other: "AnalyticPoly") -> "AnalyticPoly":
        n = max(self.coeffs.size, other.coeffs.size)
        a = np.zeros(n, dtype=complex)
        a[: self.coeffs.size] += self.coeffs
        a[: other.coeffs.size] += other.coeffs
        return AnalyticPoly(a)

    def __sub__(self, other: "AnalyticPoly") -> "AnalyticPoly":
        return self + other * (-1.0)

    def __mul__(self, s: complex) -> "AnalyticPoly":
        return AnalyticPoly(self.coeffs * s)

    __rmul__ = __mul__

    def coeff(self, k: int) -> complex:
        return complex(self.coeffs[k]) if 0 <= k < self.coeffs.size else 0j

    def padded(self, n: int) -> np.ndarray:
        """Coefficients ``0..n-1`` (zero padded or truncated)."""
        out = np.zeros(n, dtype=complex)
        m = min(n, self.coeffs.size)
        out[:m] = self.coeffs[:m]
        return out

    def derivative(self) -> "AnalyticPoly":
        if self.degree == 0:
            return AnalyticPoly([0.0])
        k = np.arange(1, self.coeffs.size)
        return AnalyticPoly(self.coeffs[1:] * k)

    def circle_values(self, r: float, n: int | None = None) -> np.ndarray:
        """``f(r e^{2 pi i m/n})`` for ``m = 0..n-1``."""
        return circle_values_many(self, np.array([r]), n)[0]

    # serialization
    def to_json(self) -> str:
        return json.dumps([[float(c.real), float(c.imag)] for c in self.coeffs])

    @classmethod
    def from_json(cls, text: str) -> "AnalyticPoly":
        data = json.loads(text)
        if not isinstance(data, list):
            raise DiskDomainError("polynomial JSON must be a list of [re, im] pairs")
        coeffs = []
        for item in data:
            if isinstance(item, (int, float)):
                coeffs.append(complex(item))
            elif isinstance(item, list) and len(item) == 2:
                coeffs.append(complex(float(item[0]), float(item[1])))
            else:
                raise DiskDomainError(f"bad coefficient entry {item!r}")
        return cls(coeffs or [0.0])

    @classmethod
    def parse(cls, text: str) -> "AnalyticPoly":
        """Comma separated coefficients, e.g. ``"1,1"`` or ``"1,0,2+1j"``."""
        text = text.strip()
        if text.startswith("["):
            return cls.from_json(text)
        try:
            coeffs = [complex(t.strip().replace(" ", "")) for t in text.split(",") if t.strip()]
        except ValueError as exc:
            raise DiskDomainError(f"cannot parse coefficients {text!r}") from exc
        return cls(coeffs or [0.0])


def circle_values_many(f: AnalyticPoly, radii: np.ndarray, n: int | None = None) -> np.ndarray:
    """Matrix of values ``f(r_i e^{i theta_m})`` on uniform angles."""
    radii = np.asarray(radii, dtype=float)
    if n is None:
        n = circle_samples(f.degree)
    c = f.coeffs
    k = np.arange(c.size)
    with np.errstate(under="ignore"):
        scaled = c[None, :] * radii[:, None] ** k[None, :]
    if c.size > n:
        # fold frequencies modulo n (aliasing is exact for the sampled values)
        pad = (-c.size) % n
        scaled = np.concatenate([scaled, np.zeros((radii.size, pad), dtype=complex)], axis=1)
        scaled = scaled.reshape(radii.size, -1, n).sum(axis=1)
    return np.fft.ifft(scaled, n=n, axis=1) * n


def _mean_from_values(vals: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(vals)
    if math.isinf(p):
        return a.max(axis=-1)
    return np.mean(a ** p, axis=-1) ** (1.0 / p)


def _check_p(p: float) -> float:
    p = float(p)
    if not p > 0:
        raise DiskDomainError("exponent p must lie in (0, inf]")
    return p


def mean_profile(f: AnalyticPoly, radii, p: float, *, fast_parseval: bool = True) -> np.ndarray:
    """``M_p(r, f)`` for an array of radii (may include r = 1)."""
    p = _check_p(p)
    radii = np.asarray(radii, dtype=float)
    if p == 2 and fast_parseval:
        # the trapezoid rule is exact here, and so is Parseval
        a2 = np.abs(f.coeffs) ** 2
        k = np.arange(a2.size)
        with np.errstate(under="ignore"):
            return np.sqrt((radii[:, None] ** (2 * k[None, :])) @ a2)
    out = np.empty(radii.size)
    n = circle_samples(f.degree)
    for start in range(0, radii.size, 64):
        chunk = radii[start:start + 64]
        out[start:start + 64] = _mean_from_values(circle_values_many(f, chunk, n), p)
    return out


# ---------------------------------------------------------------- samples
@dataclass
class PolarSamples:
    """Samples on a tensor grid ``radii x (2 pi m / angle_count)``.

    ``dr_weights`` (optional) is a radial rule matching ``radii``; when
    absent, piecewise-linear (hat) weights are used, extended as a
    constant up to r = 1.
    """

    radii: np.ndarray
    values: np.ndarray
    dr_weights: np.ndarray | None = None

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.radii.ndim != 1 or self.radii.size == 0:
            raise DiskDomainError("radii must be a nonempty 1-d array")
        if np.any(np.diff(self.radii) <= 0) or self.radii[0] < 0 or self.radii[-1] >= 1:
            raise DiskDomainError("radii must increase strictly inside [0, 1)")
        if self.values.ndim != 2 or self.values.shape[0] != self.radii.size:
            raise DiskDomainError("values must have shape (len(radii), angle_count)")
        n = self.values.shape[1]
        if n < 1 or n & (n - 1):
            raise DiskDomainError("angle_count must be a power of two")
        if self.dr_weights is not None:
            self.dr_weights = np.asarray(self.dr_weights, dtype=float)
            if self.dr_weights.shape != self.radii.shape:
                raise DiskDomainError("dr_weights must match radii")

    @property
    def angle_count(self) -> int:
        return self.values.shape[1]

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.angle_count) / self.angle_count

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], radii, angle_count: int,
                      dr_weights=None) -> "PolarSamples":
        radii = np.asarray(radii, dtype=float)
        theta = 2.0 * np.pi * np.arange(angle_count) / angle_count
        z = radii[:, None] * np.exp(1j * theta)[None, :]
        return cls(radii, np.asarray(f(z), dtype=complex) * np.ones_like(z), dr_weights)

    @classmethod
    def on_gl_grid(cls, f: Callable[[np.ndarray], np.ndarray], breaks: Sequence[float],
                   angle_count: int, order: int = 16) -> "PolarSamples":
        """Samples at composite Gauss-Legendre radii with matching dr weights."""
        r, w = composite_gl(sorted(breaks), order)
        return cls.from_function(f, r, angle_count, w)

    def radial_weights(self) -> np.ndarray:
        if self.dr_weights is not None:
            return self.dr_weights
        r = self.radii
        w = np.zeros_like(r)
        if r.size > 1:
            h = np.diff(r)
            w[:-1] += 0.5 * h
            w[1:] += 0.5 * h
        w[0] += r[0]
        w[-1] += 1.0 - r[-1]
        return w

    def row(self, r: float) -> np.ndarray:
        i = int(np.searchsorted(self.radii, r))
        for j in (i - 1, i):
            if 0 <= j < self.radii.size and abs(self.radii[j] - r) <= 1e-14:
                return self.values[j]
        raise DiskDomainError(f"radius {r!r} is not a grid radius")

    def fourier(self) -> np.ndarray:
        """Angular Fourier coefficients per radius (index n <-> e^{i n theta})."""
        return np.fft.fft(self.values, axis=1) / self.angle_count

    def to_csv(self, path: str | Path) -> None:
        th = self.angles
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["r", "theta", "re", "im"])
            for i, r in enumerate(self.radii):
                for m, t in enumerate(th):
                    v = self.values[i, m]
                    wr.writerow([repr(float(r)), repr(float(t)), repr(float(v.real)), repr(float(v.imag))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "PolarSamples":
        rows = []
        with open(path, newline="") as fh:
            rd = csv.DictReader(fh)
            if rd.fieldnames is None or not {"r", "theta", "re", "im"} <= set(rd.fieldnames):
                raise DiskDomainError(f"{path}: CSV needs columns r, theta, re, im")
            for row in rd:
                rows.append((float(row["r"]), float(row["theta"]), complex(float(row["re"]), float(row["im"]))))
        if not rows:
            raise DiskDomainError(f"{path}: no samples")
        radii = sorted({r for r, _, _ in rows})
        n = len(rows) // len(radii)
        if n * len(radii) != len(rows):
            raise DiskDomainError(f"{path}: samples do not form a tensor grid")
        idx = {r: i for i, r in enumerate(radii)}
        vals = np.zeros((len(radii), n), dtype=complex)
        for r, t, v in rows:
            m = int(round(t * n / (2 * np.pi))) % n
            vals[idx[r], m] = v
        return cls(np.array(radii), vals)


# ---------------------------------------------------------------- means
def integral_mean(f: AnalyticPoly | PolarSamples, r: float, p: float) -> float:
    """``M_p(r, f)``: L^p average over the circle of radius r (max for p = inf)."""
    p = _check_p(p)
    if not 0 <= r < 1:
        raise DiskDomainError("integral_mean needs r in [0, 1)")
    if isinstance(f, PolarSamples):
        return float(_mean_from_values(f.row(r), p))
    return float(mean_profile(f, np.array([r]), p, fast_parseval=False)[0])


def hardy_norm(f: AnalyticPoly, p: float) -> float:
    """``||f||_{H^p} = M_p(1, f)`` for a polynomial."""
    return float(mean_profile(f, np.array([1.0]), p, fast_parseval=False)[0])


def _radial_factor(convention: str):
    if convention == WITH_R:
        return lambda r: r
    if convention == WITHOUT_R:
        return lambda r: np.ones_like(r)
    raise DiskDomainError(f"unknown measure convention {convention!r}")


def _radial_integral(profile_q: Callable[[np.ndarray], np.ndarray], w: RadialWeight,
                     convention: str, rtol: float) -> float:
    fac = _radial_factor(convention)
    return w.integrate(lambda r: profile_q(r) * fac(r), rtol=rtol)


def mixed_norm(f: AnalyticPoly | PolarSamples, w: RadialWeight, p: float, q: float,
               convention: str = WITH_R, *, rtol: float = RADIAL_RTOL) -> float:
    """``(int_0^1 M_p(r,f)^q r omega(r) dr)^{1/q}`` (drop ``r`` with ``without-r``)."""
    p = _check_p(p)
    if not (q > 0 and math.isfinite(q)):
        raise DiskDomainError("mixed_norm needs 0 < q < inf; use mixed_norm_weak for q = inf")
    if isinstance(f, PolarSamples):
        m = _mean_from_values(f.values, p)
        fac = _radial_factor(convention)(f.radii)
        val = float(np.sum(f.radial_weights() * m ** q * fac * w.density(f.radii)))
        return val ** (1.0 / q)
    if f.is_zero:
        return 0.0
    val = _radial_integral(lambda r: mean_profile(f, r, p) ** q, w, convention, rtol)
    return max(val, 0.0) ** (1.0 / q)


def _refine_sup(fun: Callable[[float], float], grid: np.ndarray) -> tuple[float, float]:
    """Grid maximum of ``fun`` followed by one bounded local refinement."""
    vals = np.array([fun(float(r)) for r in grid])
    i = int(np.argmax(vals))
    best_r, best = float(grid[i]), float(vals[i])
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, grid.size - 1)])
    if hi > lo:
        res = minimize_scalar(lambda r: -fun(r), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, hi)})
        if -res.fun > best:
            best, best_r = float(-res.fun), float(res.x)
    return best, best_r


def sup_grid(levels: int = 60, per_octave: int = 8) -> np.ndarray:
    """Radii for grid suprema: uniform on [0, 1/2], geometric toward 1 after."""
    lin = np.linspace(0.0, 0.5, 33)
    u = 0.5 * 2.0 ** (-np.arange(1, levels * per_octave + 1) / per_octave)
    return np.concatenate([lin, 1.0 - u])


def mixed_norm_weak(f: AnalyticPoly | PolarSamples, w: RadialWeight, p: float) -> float:
    """``sup_r M_p(r,f) omega_hat(r)``."""
    p = _check_p(p)
    if isinstance(f, PolarSamples):
        m = _mean_from_values(f.values, p)
        return float(np.max(m * w.tail(f.radii)))
    if f.is_zero:
        return 0.0

    def fun(r):
        return float(mean_profile(f, np.array([r]), p)[0] * w.tail(r))

    return _refine_sup(fun, sup_grid())[0]


# ---------------------------------------------------------------- spaces
@dataclass(frozen=True)
class NormSpec:
    """Norm of ``X(q, omega)`` (``inner`` is ``hp``, ``bloch`` or ``bmoa``)."""

    q: float
    weight: RadialWeight
    inner: str = "hp"
    p: float = 2.0
    convention: str = WITHOUT_R

    def __post_init__(self):
        if not self.q > 0:
            raise DiskDomainError("outer exponent q must lie in (0, inf]")
        if self.inner not in ("hp", "bloch", "bmoa"):
            raise DiskDomainError(f"unknown inner space {self.inner!r}")
        if self.inner == "hp":
            _check_p(self.p)
        _radial_factor(self.convention)

    def inner_norm(self, f: AnalyticPoly) -> float:
        if self.inner == "hp":
            return hardy_norm(f, self.p)
        if self.inner == "bloch":
            return bloch_norm(f)
        return bmoa_norm(f)


def space_norm_Xq(f: AnalyticPoly, spec: NormSpec, *, rtol: float = RADIAL_RTOL) -> float:
    """``(int_0^1 ||f_r||_X^q omega(r) dr)^{1/q}``, or ``sup_r ||f_r||_X omega_hat(r)`` for q = inf."""
    w = spec.weight
    if f.is_zero:
        return 0.0
    if spec.inner == "hp":
        if math.isinf(spec.q):
            return mixed_norm_weak(f, w, spec.p)
        return mixed_norm(f, w, spec.p, spec.q, spec.convention, rtol=rtol)

    def inner_at(r):
        return spec.inner_norm(dilate(f, r))

    if math.isinf(spec.q):
        grid = sup_grid(levels=30, per_octave=2)
        return _refine_sup(lambda r: inner_at(r) * float(w.tail(r)), grid)[0]
    val = _radial_integral(
        lambda r: np.array([inner_at(float(x)) for x in np.atleast_1d(r)]) ** spec.q,
        w, spec.convention, max(rtol, 1e-7),
    )
    return val ** (1.0 / spec.q)


def bloch_norm(f: AnalyticPoly) -> float:
    """``|f(0)| + sup_z (1-|z|^2)|f'(z)|`` by a radial grid with local refinement.

    The value is a lower bound for the true supremum; the angular
    sampling is doubled once and the larger value kept.
    """
    d = f.derivative()
    if d.is_zero:
        return abs(f.coeff(0))
    n = circle_samples(d.degree)

    def fun(r, nn=n):
        return (1.0 - r * r) * float(np.max(np.abs(circle_values_many(d, np.array([r]), nn))))

    grid = np.concatenate([np.linspace(0.0, 0.9, 46), 1.0 - 0.1 * 2.0 ** (-np.arange(1, 121) / 4)])
    best, r_best = _refine_sup(fun, grid)
    best = max(best, fun(r_best, 2 * n))
    return abs(f.coeff(0)) + best


def bmoa_norm(f: AnalyticPoly, *, rho_max: float = 0.99) -> float:
    """Garsia norm ``|f(0)| + sup_a (P[|f|^2](a) - |f(a)|^2)^{1/2}`` over a grid of a.

    ``P[|f|^2](a)`` is the Poisson integral of the boundary values, which
    equals ``||f o phi_a||_{H^2}^2``.
    """
    if f.degree == 0:
        return abs(f.coeff(0))
    rhos = np.concatenate([np.linspace(0.0, 0.9, 10), [0.95, 0.975, rho_max]])
    n = max(circle_samples(f.degree), _pow2_at_least(int(64 / (1 - rho_max))))
    theta = 2.0 * np.pi * np.arange(n) / n
    bvals = np.abs(f.circle_values(1.0, n)) ** 2
    eit = np.exp(1j * theta)
    phis = 2.0 * np.pi * np.arange(32) / 32
    best = 0.0
    for rho in rhos:
        for phi in phis if rho > 0 else [0.0]:
            a = rho * np.exp(1j * phi)
            poisson = (1.0 - rho * rho) / np.abs(eit - a) ** 2
            val = float(np.mean(bvals * poisson)) - abs(complex(f(a))) ** 2
            best = max(best, val)
    return abs(f.coeff(0)) + math.sqrt(max(best, 0.0))


# ---------------------------------------------------------------- transforms
def hadamard(f: AnalyticPoly, g: AnalyticPoly) -> AnalyticPoly:
    """Coefficientwise product."""
    n = min(f.coeffs.size, g.coeffs.size)
    return AnalyticPoly(f.coeffs[:n] * g.coeffs[:n])


def dilate(f: AnalyticPoly, s: complex) -> AnalyticPoly:
    """``z -> f(s z)``, ``|s| <= 1``."""
    if abs(s) > 1 + 1e-15:
        raise DiskDomainError("dilate needs |s| <= 1")
    k = np.arange(f.coeffs.size)
    with np.errstate(under="ignore"):
        return AnalyticPoly(f.coeffs * np.complex128(s) ** k)


def fejer_kernel(n: int) -> AnalyticPoly:
    """``sum_{j<=n} (1 - j/(n+1)) z^j``."""
    if n < 0:
        raise DiskDomainError("Cesaro index must be >= 0")
    j = np.arange(n + 1)
    return AnalyticPoly(1.0 - j / (n + 1.0))


def cesaro_mean(f: AnalyticPoly, n: int) -> AnalyticPoly:
    """``sigma_n f``: Hadamard product with the Fejer kernel."""
    return hadamard(fejer_kernel(n), f)


__all__ = [
    "AnalyticPoly", "PolarSamples", "NormSpec", "DiskDomainError", "WITH_R", "WITHOUT_R",
    "circle_samples", "circle_values_many", "mean_profile", "integral_mean", "hardy_norm",
    "mixed_norm", "mixed_norm_weak", "space_norm_Xq", "bloch_norm", "bmoa_norm",
    "hadamard", "dilate", "fejer_kernel", "cesaro_mean", "sup_grid",
]
