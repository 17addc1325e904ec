"""Radial weights on the unit disk: densities, tails, moments, doubling classes.

All families are implemented in the distance variable ``u = 1 - r``; the
public ``density``/``tail`` accept radii, the ``*_u`` methods accept
distances and keep full relative precision as ``u -> 0``.

Weight specification strings (shared with the command line)::

    std:<alpha>          (alpha+1)(1-r^2)^alpha
    log:<kappa>          1/((1-r) log^kappa(e/(1-r)))
    exp:<c>              exp(-c/(1-r))
    file:<path>          tabulated CSV with columns r, omega
    pow:<base>:<alpha>   omega * omega_hat^(alpha-1)
    beta:<base>:<beta>   (1-r^2)^beta * omega
"""

from __future__ import annotations

import csv
import json
import logging
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

from .quadrature import DyadicRule, QuadratureError, adaptive_gl
from .ratios import (
    BOUNDED,
    UNBOUNDED,
    RatioReport,
    distance_grid,
    report_from_samples,
)

log = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-10
_MOMENT_CHUNK = 256


class WeightDomainError(ValueError):
    """Argument outside the domain of a weight operation."""


def _as_float_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


def _log_integral(f: Callable[[np.ndarray], np.ndarray], u_lo: float, u_hi: float,
                  rtol: float = DEFAULT_RTOL) -> float:
    """``int_{u_lo}^{u_hi} f(v) dv`` computed in the variable ``y = log v``."""
    if u_hi <= u_lo:
        return 0.0
    a, b = math.log(u_lo), math.log(u_hi)
    n = max(1, int(math.ceil((b - a) / 2.0)))
    breaks = np.linspace(a, b, n + 1)

    def g(y):
        v = np.exp(y)
        return v * f(v)

    val, _ = adaptive_gl(g, a, b, rtol=rtol, breakpoints=breaks)
    return val


class RadialWeight:
    """Base class of radial weights.

    Subclasses implement :meth:`density_u` and :meth:`tail_u`, and may
    override :meth:`log_tail_u` when the tail underflows.
    """

    family: str = "generic"
    tail_mode: str = "closed-form"

    def __init__(self) -> None:
        self._moment_cache: dict[float, float] = {}
        self._lock = threading.Lock()

    # -- to implement -------------------------------------------------
    def density_u(self, u):
        raise NotImplementedError

    def tail_u(self, u):
        raise NotImplementedError

    @property
    def params(self) -> dict:
        return {}

    def spec(self) -> str:
        raise NotImplementedError

    # -- derived -------------------------------------------------------
    def log_tail_u(self, u):
        with np.errstate(divide="ignore"):
            return np.log(self.tail_u(u))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec()!r})"

    def to_dict(self) -> dict:
        return {"family": self.family, **self.params}

    def density(self, r):
        """Weight density at radius ``r`` in [0, 1)."""
        arr, scalar = _as_float_array(r)
        if np.any(arr < 0) or np.any(arr >= 1) or np.any(np.isnan(arr)):
            raise WeightDomainError(f"density needs r in [0, 1), got {r!r}")
        return _ret(np.asarray(self.density_u(1.0 - arr), dtype=float), scalar)

    def tail(self, r):
        """``omega_hat(r) = int_r^1 omega``; zero at ``r = 1``."""
        arr, scalar = _as_float_array(r)
        if np.any(arr < 0) or np.any(arr > 1) or np.any(np.isnan(arr)):
            raise WeightDomainError(f"tail needs r in [0, 1], got {r!r}")
        u = 1.0 - arr
        out = np.zeros_like(u)
        pos = u > 0
        if np.any(pos):
            out[pos] = self.tail_u(u[pos])
        return _ret(out, scalar)

    @property
    def total_mass(self) -> float:
        return float(self.tail_u(1.0))

    # -- moments -------------------------------------------------------
    def moment(self, x: float) -> float:
        """``omega_x = int_0^1 r^x omega(r) dr`` (cached)."""
        return float(self.moments(np.array([x]))[0])

    def moments(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if np.any(xs < 0) or np.any(np.isnan(xs)):
            raise WeightDomainError("moments need x >= 0")
        flat = xs.ravel()
        uniq = np.unique(flat)
        cache = self._moment_cache
        missing = np.array([x for x in uniq if float(x) not in cache])
        if missing.size:
            vals = self._compute_moments(missing)
            with self._lock:
                for x, v in zip(missing, vals):
                    cache.setdefault(float(x), float(v))
        out = np.array([cache[float(x)] for x in flat])
        return out.reshape(xs.shape)

    def _compute_moments(self, xs: np.ndarray) -> np.ndarray:
        return self._moments_by_parts(xs)

    def _rule_for(self, xs: np.ndarray) -> DyadicRule:
        x_max = float(np.max(xs)) if xs.size else 1.0
        levels = int(min(1000, max(60, math.ceil(math.log2(x_max + 2.0)) + 45)))
        return DyadicRule(levels=levels, order=24)

    def _moments_by_parts(self, xs: np.ndarray) -> np.ndarray:
        """``omega_x = x int_0^1 (1-u)^(x-1) omega_hat(u) du`` for x > 0.

        Tails are bounded and monotone, so this is better conditioned
        than integrating the density, which may be singular at u = 0.
        The neglected piece over ``[0, u_min]`` is below
        ``x * u_min * omega_hat(u_min)``.
        """
        rule = self._rule_for(xs)
        u, wt = rule.nodes()
        tw = wt * np.asarray(self.tail_u(u), dtype=float)
        lg = np.log1p(-u)
        out = np.empty(xs.size)
        zero = xs == 0
        out[zero] = self.total_mass
        nz = np.flatnonzero(~zero)
        delta = rule.u_min
        rem_tail = float(self.tail_u(delta))
        for start in range(0, nz.size, _MOMENT_CHUNK):
            idx = nz[start:start + _MOMENT_CHUNK]
            x = xs[idx]
            vals = np.exp(np.outer(x - 1.0, lg)) @ tw
            out[idx] = x * (vals + delta * rem_tail)
        return out

    def _moments_by_density(self, xs: np.ndarray) -> np.ndarray:
        rule = self._rule_for(xs)
        u, wt = rule.nodes()
        dw = wt * np.asarray(self.density_u(u), dtype=float)
        lg = np.log1p(-u)
        delta = rule.u_min
        rem = float(self.tail_u(delta))
        out = np.empty(xs.size)
        for start in range(0, xs.size, _MOMENT_CHUNK):
            x = xs[start:start + _MOMENT_CHUNK]
            vals = np.exp(np.outer(x, lg)) @ dw
            out[start:start + _MOMENT_CHUNK] = vals + rem * np.exp(x * math.log1p(-0.5 * delta))
        return out

    # -- integration ---------------------------------------------------
    def integrate(self, g: Callable[[np.ndarray], np.ndarray], r_lo: float = 0.0,
                  r_hi: float = 1.0, *, rtol: float = DEFAULT_RTOL,
                  breakpoints: Sequence[float] | None = None) -> float:
        """``int_{r_lo}^{r_hi} g(r) omega(r) dr`` with ``g`` vectorised in r."""
        if not (0 <= r_lo <= r_hi <= 1):
            raise WeightDomainError("integrate needs 0 <= r_lo <= r_hi <= 1")
        bps = None if breakpoints is None else [1.0 - b for b in breakpoints]
        return self.integrate_u(lambda u: g(1.0 - u), 1.0 - r_hi, 1.0 - r_lo,
                                rtol=rtol, breakpoints=bps)

    def integrate_u(self, h: Callable[[np.ndarray], np.ndarray], u_lo: float = 0.0,
                    u_hi: float = 1.0, *, rtol: float = DEFAULT_RTOL,
                    breakpoints: Sequence[float] | None = None) -> float:
        """``int_{u_lo}^{u_hi} h(u) omega(u) du`` in the distance variable.

        Integrates in ``log u``; the piece below ``delta = 2**-60`` is
        replaced by ``h`` at its midpoint times the mass it carries.
        """
        if not (0 <= u_lo <= u_hi <= 1):
            raise WeightDomainError("integrate_u needs 0 <= u_lo <= u_hi <= 1")
        delta = 2.0 ** -60
        rem = 0.0
        if u_lo < delta:
            top = min(delta, u_hi)
            inner = float(self.tail_u(top)) - (float(self.tail_u(u_lo)) if u_lo > 0 else 0.0)
            rem = float(np.asarray(h(np.array([0.5 * (u_lo + top)])))[0]) * inner
            u_lo = top
        if u_hi <= u_lo:
            return rem

        def f(y):
            v = np.exp(y)
            return v * h(v) * self.density_u(v)

        a, b = math.log(u_lo), math.log(u_hi)
        n = max(1, int(math.ceil((b - a) / 2.0)))
        breaks = list(np.linspace(a, b, n + 1))
        if breakpoints is not None:
            breaks += [math.log(e) for e in breakpoints if u_lo < e < u_hi]
        val, _ = adaptive_gl(f, a, b, rtol=rtol, breakpoints=breaks)
        return val + rem

    def inverse_tail_integral(self, u_points, gamma: float = 1.0, N: int = 0) -> np.ndarray:
        """``int_u^1 dv / (v^(N+1) omega_hat(v)^gamma)`` for each ``u``.

        In radii this is ``int_0^r ds / ((1-s)^(N+1) omega_hat(s)^gamma)``.
        Evaluated in ``y = -log v``, where the integrand
        ``exp(N y) * omega_hat(e^-y)^(-gamma)`` is smooth.  Values that
        overflow double precision are returned as ``inf``.
        """
        u = np.atleast_1d(np.asarray(u_points, dtype=float))
        if np.any(u <= 0) or np.any(u > 1):
            raise WeightDomainError("inverse_tail_integral needs u in (0, 1]")
        Y = -np.log(u)
        order = np.argsort(Y)
        out = np.empty_like(Y)
        acc = 0.0
        y_prev = 0.0

        def f(y):
            with np.errstate(over="ignore"):
                return np.exp(N * y - gamma * self.log_tail_u(np.exp(-y)))

        for i in order:
            y = Y[i]
            if math.isfinite(acc) and y > y_prev:
                n = max(1, int(math.ceil((y - y_prev) / 2.0)))
                try:
                    with np.errstate(over="ignore", invalid="ignore"):
                        piece, _ = adaptive_gl(f, y_prev, y,
                                               breakpoints=np.linspace(y_prev, y, n + 1))
                except QuadratureError as exc:
                    piece = exc.value if math.isfinite(exc.value) else math.inf
                if not math.isfinite(piece):
                    piece = math.inf
                acc += piece
            y_prev = max(y_prev, y)
            out[i] = acc
        return out


# ---------------------------------------------------------------- families
class StandardWeight(RadialWeight):
    """``nu_alpha(r) = (alpha+1)(1-r^2)^alpha``, alpha > -1."""

    family = "standard"

    def __init__(self, alpha: float = 0.0):
        if not alpha > -1:
            raise WeightDomainError("standard weight needs alpha > -1")
        super().__init__()
        self.alpha = float(alpha)
        a1 = self.alpha + 1.0
        self._tail_scale = 0.5 * a1 * special.beta(0.5, a1)

    @property
    def params(self) -> dict:
        return {"alpha": self.alpha}

    def spec(self) -> str:
        return f"std:{self.alpha:g}"

    def density_u(self, u):
        u = np.asarray(u, dtype=float)
        return (self.alpha + 1.0) * (u * (2.0 - u)) ** self.alpha

    def tail_u(self, u):
        u = np.asarray(u, dtype=float)
        # substitution t = 1 - s^2 turns the tail into an incomplete beta function
        return self._tail_scale * special.betainc(self.alpha + 1.0, 0.5, u * (2.0 - u))

    def _compute_moments(self, xs):
        a1 = self.alpha + 1.0
        return a1 * special.gamma(a1) / (2.0 * special.poch((xs + 1.0) / 2.0, a1))


class LogWeight(RadialWeight):
    """``1/((1-r) L^kappa)`` with ``L = log(e/(1-r))``; kappa > 1."""

    family = "logarithmic"

    def __init__(self, kappa: float = 2.0):
        if not kappa > 1:
            raise WeightDomainError("logarithmic weight needs kappa > 1")
        super().__init__()
        self.kappa = float(kappa)

    @property
    def params(self) -> dict:
        return {"kappa": self.kappa}

    def spec(self) -> str:
        return f"log:{self.kappa:g}"

    def density_u(self, u):
        u = np.asarray(u, dtype=float)
        L = 1.0 - np.log(u)
        return 1.0 / (u * L ** self.kappa)

    def tail_u(self, u):
        u = np.asarray(u, dtype=float)
        L = 1.0 - np.log(u)
        return L ** (1.0 - self.kappa) / (self.kappa - 1.0)

    def log_tail_u(self, u):
        u = np.asarray(u, dtype=float)
        L = 1.0 - np.log(u)
        return (1.0 - self.kappa) * np.log(L) - math.log(self.kappa - 1.0)


def _exp_tail_factor(z: np.ndarray) -> np.ndarray:
    """``1 - z e^z E1(z)``, accurate for all z > 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z <= 40.0
    if np.any(small):
        zs = z[small]
        out[small] = 1.0 - zs * np.exp(zs) * special.exp1(zs)
    big = ~small
    if np.any(big):
        zb = z[big]
        # asymptotic series sum_{k>=1} (-1)^(k+1) k! / z^k, truncated at 16 terms
        term = 1.0 / zb
        acc = term.copy()
        for k in range(2, 17):
            term = -term * k / zb
            acc += term
        out[big] = acc
    return out


class ExpWeight(RadialWeight):
    """``exp(-c/(1-r))``; decays faster than any power, so it is not doubling."""

    family = "exponential"

    def __init__(self, c: float = 1.0):
        if not c > 0:
            raise WeightDomainError("exponential weight needs c > 0")
        super().__init__()
        self.c = float(c)

    @property
    def params(self) -> dict:
        return {"c": self.c}

    def spec(self) -> str:
        return f"exp:{self.c:g}"

    def density_u(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            return np.exp(-self.c / u)

    def log_tail_u(self, u):
        u = np.asarray(u, dtype=float)
        z = self.c / u
        return np.log(u) - z + np.log(_exp_tail_factor(z))

    def tail_u(self, u):
        with np.errstate(under="ignore"):
            return np.exp(self.log_tail_u(u))


class TabulatedWeight(RadialWeight):
    """Piecewise-linear density through ``(r_i, omega_i)`` nodes on [0, 1].

    Tails and moments integrate the interpolant exactly.
    """

    family = "tabulated"

    def __init__(self, r: Sequence[float], omega: Sequence[float], source: str | None = None):
        super().__init__()
        r = np.asarray(r, dtype=float)
        w = np.asarray(omega, dtype=float)
        if r.ndim != 1 or r.shape != w.shape or r.size < 2:
            raise WeightDomainError("tabulated weight needs matching 1-d r and omega columns")
        if r[0] != 0.0 or r[-1] != 1.0 or np.any(np.diff(r) <= 0):
            raise WeightDomainError("tabulated radii must increase strictly from 0 to 1")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise WeightDomainError("tabulated densities must be finite and nonnegative")
        if w[-2] == 0 and w[-1] == 0:
            raise WeightDomainError("tabulated weight vanishes near r = 1 (zero tail)")
        self.r = r
        self.omega = w
        self.source = source
        seg = 0.5 * (w[:-1] + w[1:]) * np.diff(r)
        # cum[i] = int_{r_i}^1
        self._cum = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])

    @classmethod
    def from_csv(cls, path: str | Path) -> "TabulatedWeight":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"r", "omega"} <= set(reader.fieldnames):
                raise WeightDomainError(f"{path}: CSV needs columns r, omega")
            for row in reader:
                rows.append((float(row["r"]), float(row["omega"])))
        if not rows:
            raise WeightDomainError(f"{path}: empty table")
        r, w = zip(*rows)
        return cls(r, w, source=str(path))

    @property
    def params(self) -> dict:
        if self.source:
            return {"path": self.source}
        return {"r": self.r.tolist(), "omega": self.omega.tolist()}

    def spec(self) -> str:
        return f"file:{self.source}" if self.source else "file:<inline>"

    def density_u(self, u):
        return np.interp(1.0 - np.asarray(u, dtype=float), self.r, self.omega)

    def tail_u(self, u):
        u = np.asarray(u, dtype=float)
        rr = 1.0 - u
        i = np.clip(np.searchsorted(self.r, rr, side="right") - 1, 0, self.r.size - 2)
        r1 = self.r[i + 1]
        d = np.interp(rr, self.r, self.omega)
        partial = 0.5 * (d + self.omega[i + 1]) * (r1 - rr)
        return partial + self._cum[i + 1]

    def _compute_moments(self, xs):
        a, b = self.r[:-1], self.r[1:]
        wa, wb = self.omega[:-1], self.omega[1:]
        slope = (wb - wa) / (b - a)
        icpt = wa - slope * a
        x = xs[:, None]
        with np.errstate(divide="ignore", under="ignore"):
            p1 = (b ** (x + 1) - a ** (x + 1)) / (x + 1)
            p2 = (b ** (x + 2) - a ** (x + 2)) / (x + 2)
        return p1 @ icpt + p2 @ slope


class ProductWeight(RadialWeight):
    """``(1-r^2)^beta omega(r)``; tails by quadrature."""

    family = "product-modified"
    tail_mode = "quadrature"

    def __init__(self, base: RadialWeight, beta: float):
        if not beta > 0:
            raise WeightDomainError("beta_modulated needs beta > 0")
        super().__init__()
        self.base = base
        self.beta = float(beta)

    @property
    def params(self) -> dict:
        return {"base": self.base.to_dict(), "beta": self.beta}

    def spec(self) -> str:
        return f"beta:{self.base.spec()}:{self.beta:g}"

    def density_u(self, u):
        u = np.asarray(u, dtype=float)
        return (u * (2.0 - u)) ** self.beta * self.base.density_u(u)

    def _tail_scalar(self, u: float) -> float:
        delta = u * 2.0 ** -64
        # on [0, delta] the factor (v(2-v))^beta lies in [0, (2 delta)^beta]
        rem = 0.5 * (2.0 * delta) ** self.beta * float(self.base.tail_u(delta))
        return _log_integral(self.density_u, delta, u) + rem

    def tail_u(self, u):
        arr, scalar = _as_float_array(u)
        out = np.array([self._tail_scalar(float(v)) for v in arr.ravel()]).reshape(arr.shape)
        return _ret(out, scalar)

    def _compute_moments(self, xs):
        return self._moments_by_density(xs)


class PowerWeight(RadialWeight):
    """``mu = omega * omega_hat^(alpha-1)`` with ``mu_hat = omega_hat^alpha / alpha``."""

    family = "power-transform"

    def __init__(self, base: RadialWeight, alpha: float):
        if not alpha > 0:
            raise WeightDomainError("power_transform needs alpha > 0")
        super().__init__()
        self.base = base
        self.alpha = float(alpha)

    @property
    def params(self) -> dict:
        return {"base": self.base.to_dict(), "alpha": self.alpha}

    def spec(self) -> str:
        return f"pow:{self.base.spec()}:{self.alpha:g}"

    def density_u(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(under="ignore", over="ignore"):
            return self.base.density_u(u) * np.exp((self.alpha - 1.0) * self.base.log_tail_u(u))

    def log_tail_u(self, u):
        return self.alpha * np.asarray(self.base.log_tail_u(u)) - math.log(self.alpha)

    def tail_u(self, u):
        with np.errstate(under="ignore"):
            return np.exp(self.log_tail_u(u))


def beta_modulated(w: RadialWeight, beta: float) -> RadialWeight:
    """Weight with density ``(1-r^2)^beta omega(r)``."""
    if isinstance(w, StandardWeight) and beta > 0:
        # (a+1)(1-r^2)^(a+beta) is a rescaled standard weight
        return _ScaledStandard(w.alpha, beta)
    return ProductWeight(w, beta)


class _ScaledStandard(StandardWeight):
    """``(1-r^2)^beta nu_alpha = (alpha+1)/(alpha+beta+1) * nu_{alpha+beta}``."""

    family = "product-modified"

    def __init__(self, alpha: float, beta: float):
        super().__init__(alpha + beta)
        self.base_alpha = float(alpha)
        self.beta = float(beta)
        self._scale = (alpha + 1.0) / (alpha + beta + 1.0)

    @property
    def params(self) -> dict:
        return {"base": {"family": "standard", "alpha": self.base_alpha}, "beta": self.beta}

    def spec(self) -> str:
        return f"beta:std:{self.base_alpha:g}:{self.beta:g}"

    def density_u(self, u):
        return self._scale * super().density_u(u)

    def tail_u(self, u):
        return self._scale * super().tail_u(u)

    def _compute_moments(self, xs):
        return self._scale * super()._compute_moments(xs)


def power_transform(w: RadialWeight, alpha: float) -> RadialWeight:
    """Weight ``omega * omega_hat^(alpha-1)``; returns ``w`` itself for alpha = 1."""
    if alpha == 1:
        return w
    return PowerWeight(w, alpha)


# ---------------------------------------------------------------- parsing
def _split_last(text: str) -> tuple[str, float]:
    head, _, last = text.rpartition(":")
    if not head:
        raise WeightDomainError(f"missing parameter in weight spec {text!r}")
    return head, float(last)


def parse_weight(text: str) -> RadialWeight:
    """Build a weight from the mini-language described in the module docstring."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    try:
        if kind == "std":
            return StandardWeight(float(rest))
        if kind == "log":
            return LogWeight(float(rest))
        if kind == "exp":
            return ExpWeight(float(rest))
        if kind == "file":
            return TabulatedWeight.from_csv(rest)
        if kind == "pow":
            base, a = _split_last(rest)
            return PowerWeight(parse_weight(base), a)
        if kind == "beta":
            base, b = _split_last(rest)
            return beta_modulated(parse_weight(base), b)
    except (ValueError, OSError) as exc:
        raise WeightDomainError(f"bad weight spec {text!r}: {exc}") from exc
    raise WeightDomainError(f"unknown weight family in {text!r}")


def weight_from_dict(d: dict) -> RadialWeight:
    """Inverse of :meth:`RadialWeight.to_dict`."""
    fam = d.get("family")
    if fam == "standard":
        return StandardWeight(d.get("alpha", 0.0))
    if fam == "logarithmic":
        return LogWeight(d.get("kappa", 2.0))
    if fam == "exponential":
        return ExpWeight(d.get("c", 1.0))
    if fam == "tabulated":
        if "path" in d:
            return TabulatedWeight.from_csv(d["path"])
        return TabulatedWeight(d["r"], d["omega"])
    if fam == "product-modified":
        return beta_modulated(weight_from_dict(d["base"]), d["beta"])
    if fam == "power-transform":
        return PowerWeight(weight_from_dict(d["base"]), d["alpha"])
    raise WeightDomainError(f"unknown weight family {fam!r}")


def load_weight(arg: str) -> RadialWeight:
    """Accept either a spec string or a JSON record ``{"family": ...}``."""
    arg = arg.strip()
    if arg.startswith("{"):
        return weight_from_dict(json.loads(arg))
    return parse_weight(arg)


def conjugate_exponent(q: float) -> float:
    """``q'``: infinity for q <= 1, ``q/(q-1)`` for 1 < q < inf, 1 for q = inf."""
    if not q > 0:
        raise WeightDomainError("conjugate exponent needs q > 0")
    if math.isinf(q):
        return 1.0
    if q <= 1:
        return math.inf
    return q / (q - 1.0)


# ---------------------------------------------------------------- classes
DEFAULT_GRID_J = 120
COARSE_GRID_J = 80
CERT_TOL = 0.01


@dataclass
class ClassReport:
    class_name: str
    certified: bool
    best_constant: float
    witness_grid: list[float]
    params_used: dict = field(default_factory=dict)
    coarse_constant: float = float("nan")
    argbest: float = float("nan")

    def to_dict(self) -> dict:
        def num(x):
            x = float(x)
            if math.isinf(x):
                return "inf"
            if math.isnan(x):
                return None
            return x

        return {
            "class_name": self.class_name,
            "certified": self.certified,
            "best_constant": num(self.best_constant),
            "coarse_constant": num(self.coarse_constant),
            "argbest": num(self.argbest),
            "witness_grid": [num(r) for r in self.witness_grid],
            "params_used": self.params_used,
        }


def _grid_distances(grid) -> tuple[np.ndarray, int]:
    """Distances to the boundary for a radius grid and the coarse cut index."""
    if grid is None:
        u = distance_grid(DEFAULT_GRID_J)
        return u, COARSE_GRID_J
    r = np.sort(np.asarray(grid, dtype=float))
    if r.size == 0 or np.any(r < 0) or np.any(r >= 1):
        raise WeightDomainError("certification grid must lie in [0, 1)")
    u = 1.0 - r
    return u, int(round(2 * (u.size - 1) / 3))


def _certify(w: RadialWeight, grid, shrink: float, upper: bool, name: str, params: dict) -> ClassReport:
    u, cut = _grid_distances(grid)
    with np.errstate(invalid="ignore"):
        logr = np.asarray(w.log_tail_u(u)) - np.asarray(w.log_tail_u(u / shrink))
    logr = np.where(np.isnan(logr), np.inf if upper else -np.inf, logr)
    pick = np.argmax if upper else np.argmin
    i_full = int(pick(logr))
    i_coarse = int(pick(logr[: cut + 1]))
    with np.errstate(over="ignore"):
        full = float(np.exp(logr[i_full]))
        coarse = float(np.exp(logr[i_coarse]))
    stable = math.isfinite(full) and math.isfinite(coarse) and abs(full - coarse) <= CERT_TOL * coarse
    certified = stable and (upper or full > 1.0)
    return ClassReport(
        class_name=name,
        certified=bool(certified),
        best_constant=full,
        witness_grid=[float(1.0 - v) for v in u],
        params_used=params,
        coarse_constant=coarse,
        argbest=float(1.0 - u[i_full]),
    )


def certify_upper_doubling(w: RadialWeight, grid: Iterable[float] | None = None) -> ClassReport:
    """Sup of ``omega_hat(r)/omega_hat((1+r)/2)`` on a grid graded toward 1."""
    return _certify(w, grid, 2.0, True, "Dhat", {"map": "(1+r)/2"})


def certify_lower_doubling(w: RadialWeight, K: float = 2.0, grid: Iterable[float] | None = None) -> ClassReport:
    """Inf of ``omega_hat(r)/omega_hat(1-(1-r)/K)``; certified when it stays above 1."""
    if not K > 1:
        raise WeightDomainError("lower doubling needs K > 1")
    return _certify(w, grid, float(K), False, "Dcheck", {"K": float(K)})


# ---------------------------------------------------------------- diagnostics
DIAGNOSTIC_ITEMS = ("tail-power", "tail-moment", "moment-doubling", "moment-power", "modulated-moment")

def empirical_alpha0(w: RadialWeight, C: float = 2.0, grid: Iterable[float] | None = None) -> float:
    """Least alpha with ``omega_hat(s)/omega_hat(t) <= C((1-s)/(1-t))^alpha`` on grid pairs s <= t.

    Computed directly as the largest slope
    ``(log ratio - log C) / log((1-s)/(1-t))`` over the pairs, which is
    the limit a bisection on alpha would converge to.
    """
    u, _ = _grid_distances(grid)
    u = np.unique(u)[::-1]
    lt = np.asarray(w.log_tail_u(u), dtype=float)
    lu = np.log(u)
    num = lt[:, None] - lt[None, :] - math.log(C)
    den = lu[:, None] - lu[None, :]
    mask = den > 0
    with np.errstate(invalid="ignore"):
        slopes = np.where(mask, num / np.where(mask, den, 1.0), -np.inf)
    return max(0.0, float(np.max(slopes)))


def _exponent_verdict(rep: RatioReport, full: float, coarse: float) -> None:
    """Pairwise bounds hold with ratio <= C by construction; what can fail is the exponent."""
    change = abs(full - coarse) / max(abs(coarse), 1e-12)
    rep.stability = max(rep.stability, change)
    if rep.verdict == BOUNDED and change > 0.10:
        rep.verdict = "unconverged"


def _x_grids(x_max: float, per_decade: int = 8) -> tuple[np.ndarray, np.ndarray]:
    dec = math.log10(x_max)
    coarse = np.logspace(0, dec, int(round(dec * per_decade)) + 1)
    fine = np.logspace(0, 2 * dec, int(round(2 * dec * per_decade)) + 1)
    return coarse, fine


def doubling_diagnostics(
    w: RadialWeight,
    items: Iterable[str] = DIAGNOSTIC_ITEMS,
    *,
    x_max: float = 1e4,
    beta: float = 1.0,
    C: float = 2.0,
    grid: Iterable[float] | None = None,
) -> list[RatioReport]:
    """Bounded-ratio reports for the moment and tail estimates of doubling weights.

    Items: ``tail-power`` (reports the empirical alpha0),
    ``tail-moment`` ``omega_hat(1-1/x)/omega_x``, ``moment-doubling``
    ``omega_x/omega_2x``, ``moment-power`` (reports the empirical eta),
    ``modulated-moment`` ``x^beta (omega_{beta})_x / omega_x``.  Each x-sweep runs over
    ``[1, x_max]`` and is refined to ``[1, x_max^2]``.
    """
    reports = []
    xc, xf = _x_grids(x_max)
    for item in items:
        if item == "tail-power":
            u, cut = _grid_distances(grid)
            u = np.unique(u)[::-1]
            a0 = empirical_alpha0(w, C, 1.0 - u)
            a0_coarse = empirical_alpha0(w, C, 1.0 - u[: cut + 1])
            lt = np.asarray(w.log_tail_u(u))
            lu = np.log(u)

            def tri(n, a):
                # for each s, sup over t >= s of the normalised tail ratio
                d = lt[:n, None] - lt[None, :n] - a * (lu[:n, None] - lu[None, :n])
                d = np.where(np.triu(np.ones((n, n), dtype=bool)), d, -np.inf)
                return [float(1 - v) for v in u[:n]], np.exp(d.max(axis=1)), np.ones(n)

            rep = report_from_samples(tri(cut + 1, a0_coarse), tri(u.size, a0),
                                      label="tail-power", side="upper")
            rep.extra.update({"alpha0": a0, "alpha0_coarse": a0_coarse, "C": C})
            _exponent_verdict(rep, a0, a0_coarse)
        elif item == "tail-moment":
            def tri(x):
                return (list(x), w.tail_u(1.0 / x), w.moments(x))
            rep = report_from_samples(tri(xc), tri(xf), label="tail-moment")
        elif item == "moment-doubling":
            def tri(x):
                return (list(x), w.moments(x), w.moments(2 * x))
            rep = report_from_samples(tri(xc), tri(xf), label="moment-doubling", side="upper")
        elif item == "moment-power":
            def eta_of(x):
                lm = np.log(w.moments(x))
                lx = np.log(x)
                num = lm[:, None] - lm[None, :] - math.log(C)
                den = lx[None, :] - lx[:, None]
                mask = den > 0
                s = np.where(mask, num / np.where(mask, den, 1.0), -np.inf)
                return max(0.0, float(np.max(s)))

            eta = eta_of(xf)

            def tri(x, e):
                lm = np.log(w.moments(x))
                lx = np.log(x)
                n = x.size
                d = lm[:, None] - lm[None, :] - e * (lx[None, :] - lx[:, None])
                d = np.where(np.triu(np.ones((n, n), dtype=bool)), d, -np.inf)
                return list(x), np.exp(d.max(axis=1)), np.ones(n)

            eta_c = eta_of(xc)
            rep = report_from_samples(tri(xc, eta_c), tri(xf, eta), label="moment-power", side="upper")
            rep.extra.update({"eta": eta, "eta_coarse": eta_c, "C": C})
            _exponent_verdict(rep, eta, eta_c)
        elif item == "modulated-moment":
            wb = beta_modulated(w, beta)

            def tri(x):
                return (list(x), x ** beta * wb.moments(x), w.moments(x))
            rep = report_from_samples(tri(xc), tri(xf), label="modulated-moment", side="upper")
            rep.extra["beta"] = beta
        else:
            raise WeightDomainError(f"unknown diagnostic item {item!r}")
        reports.append(rep)
    return reports


def inverse_tail_diagnostic(w: RadialWeight, gamma: float = 1.0,
                      grid: Iterable[float] | None = None) -> RatioReport:
    """``omega_hat(r)^gamma * int_0^r ds/(omega_hat(s)^gamma (1-s))`` over a radial grid.

    The grid is refined from ``1-r >= 2**-20`` to ``1-r >= 2**-60``
    unless an explicit grid is given (then its last third is the refinement).
    """
    if not gamma > 0:
        raise WeightDomainError("gamma must be positive")
    if grid is None:
        u_full = distance_grid(240)
        cut = 80
    else:
        u_full, cut = _grid_distances(grid)
    u_full = u_full[u_full > 0]
    u_pos = u_full[u_full < 1]
    lhs = np.zeros_like(u_full)
    lhs[u_full < 1] = w.inverse_tail_integral(u_pos, gamma)
    with np.errstate(under="ignore"):
        lhs = lhs * np.exp(gamma * np.asarray(w.log_tail_u(u_full)))
    rhs = np.ones_like(lhs)
    pts = [float(1 - v) for v in u_full]
    order = np.argsort(-u_full, kind="stable")
    k = cut + 1
    ci = order[:k]
    return report_from_samples(
        ([pts[i] for i in ci], lhs[ci], rhs[ci]),
        (pts, lhs, rhs),
        label=f"inverse-tail-integral gamma={gamma:g}",
        side="upper",
    )


__all__ = [
    "RadialWeight", "StandardWeight", "LogWeight", "ExpWeight", "TabulatedWeight",
    "ProductWeight", "PowerWeight", "ClassReport", "WeightDomainError",
    "beta_modulated", "power_transform", "parse_weight", "weight_from_dict", "load_weight",
    "conjugate_exponent", "certify_upper_doubling", "certify_lower_doubling",
    "empirical_alpha0", "DIAGNOSTIC_ITEMS", "doubling_diagnostics", "inverse_tail_diagnostic",
    "BOUNDED", "UNBOUNDED",
]
