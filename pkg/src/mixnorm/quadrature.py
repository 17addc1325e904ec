"""Gauss-Legendre quadrature on graded panels.

Radial integrals over the disk concentrate their mass near r = 1, so
everything here is phrased in the distance-to-boundary variable
``u = 1 - r``.  Panels are dyadic in ``u`` and therefore resolve
integrands that behave like powers or logarithms of ``u``.

Two tools are provided:

* :func:`adaptive_gl` -- scalar integrals to a relative tolerance, with
  interval bisection and an explicit error estimate.
* :class:`DyadicRule` -- a fixed composite rule whose nodes are shared by
  many integrands (moments for thousands of exponents, integral-mean
  profiles), so that expensive integrand evaluations are done once.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_RTOL = 1e-10
DEFAULT_ORDER = 20
MAX_INTERVALS = 4000


class QuadratureError(ArithmeticError):
    """Raised when a quadrature does not reach its tolerance.

    The achieved value and error estimate are kept on the exception so
    callers can decide whether the result is still usable.
    """

    def __init__(self, message: str, value: float, error: float):
        super().__init__(f"{message} (value={value!r}, error estimate={error:.3e})")
        self.value = value
        self.error = error


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _panel(f, a: float, b: float, order: int) -> float:
    x, w = gauss_legendre(order)
    h = b - a
    vals = np.asarray(f(a + h * x))
    return float(h * np.dot(w, vals)) if not np.iscomplexobj(vals) else complex(h * np.dot(w, vals))


def graded_breakpoints(a: float, b: float, levels: int = 60) -> list[float]:
    """Breakpoints on [a, b] refined geometrically toward ``a``.

    Used with ``a = 0`` for integrands singular (or concentrated) at
    u = 0.  When ``a > 0`` the grading stops once panels reach the
    size of ``a`` itself.
    """
    if b <= a:
        return [a, b]
    pts = [b]
    length = b - a
    for j in range(1, levels + 1):
        p = a + length * 2.0 ** (-j)
        if a > 0 and p - a < 0.25 * a * 2.0 ** (-8):
            break
        if p <= a:
            break
        pts.append(p)
    pts.append(a)
    return sorted(set(pts))


def adaptive_gl(
    f,
    a: float,
    b: float,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = 0.0,
    order: int = DEFAULT_ORDER,
    breakpoints=None,
    max_intervals: int = MAX_INTERVALS,
    raise_on_fail: bool = True,
) -> tuple[float, float]:
    """Integrate ``f`` over [a, b] with adaptive Gauss-Legendre panels.

    Each panel is accepted when the ``order``-point estimate agrees with
    the sum over its two halves.  ``f`` must accept numpy arrays.

    Parameters
    ----------
    f : callable
        Vectorised integrand.
    a, b : float
        Integration limits, ``a <= b``.
    rtol, atol : float
        Target relative / absolute accuracy of the total.
    order : int
        Gauss-Legendre points per panel.
    breakpoints : sequence of float, optional
        Initial partition.  Defaults to :func:`graded_breakpoints`,
        i.e. geometric refinement toward ``a``.

    Returns
    -------
    value, error : float
        The integral and the summed panel error estimate.
    """
    if b < a:
        raise ValueError("adaptive_gl needs a <= b")
    if b == a:
        return 0.0, 0.0
    if breakpoints is None:
        pts = graded_breakpoints(a, b)
    else:
        pts = sorted({a, b, *[p for p in breakpoints if a < p < b]})

    heap = []
    total = 0.0
    err_total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        whole = _panel(f, lo, hi, order)
        mid = 0.5 * (lo + hi)
        halves = _panel(f, lo, mid, order) + _panel(f, mid, hi, order)
        err = abs(halves - whole)
        total += halves
        err_total += err
        heapq.heappush(heap, (-err, lo, hi, halves))

    n_int = len(heap)
    while err_total > max(atol, rtol * abs(total)) and heap:
        if n_int >= max_intervals:
            break
        neg_err, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            # panel cannot be split further in double precision
            continue
        total -= val
        err_total += neg_err
        for plo, phi in ((lo, mid), (mid, hi)):
            whole = _panel(f, plo, phi, order)
            pm = 0.5 * (plo + phi)
            halves = _panel(f, plo, pm, order) + _panel(f, pm, phi, order)
            err = abs(halves - whole)
            total += halves
            err_total += err
            heapq.heappush(heap, (-err, plo, phi, halves))
        n_int += 1

    if err_total > max(atol, rtol * abs(total)) and raise_on_fail:
        # floating-point noise floor: accept if the estimate is near machine precision
        if err_total > max(atol, 1e3 * np.finfo(float).eps * abs(total), rtol * abs(total)):
            raise QuadratureError("adaptive_gl did not converge", total, err_total)
    return total, err_total


@dataclass(frozen=True)
class DyadicRule:
    """Composite Gauss-Legendre rule on dyadic panels in ``u``.

    Panels are ``[2**-(j+1), 2**-j]`` for ``j = 0 .. levels-1``; the
    leftover ``[0, u_min]`` with ``u_min = 2**-levels`` is not covered
    and has to be handled by the caller (typically through a tail).
    """

    levels: int = 53
    order: int = DEFAULT_ORDER

    @property
    def u_min(self) -> float:
        return 2.0 ** (-self.levels)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return _dyadic_nodes(self.levels, self.order)


@lru_cache(maxsize=16)
def _dyadic_nodes(levels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(order)
    us, ws = [], []
    for j in range(levels):
        hi = 2.0 ** (-j)
        lo = 0.5 * hi
        us.append(lo + (hi - lo) * x)
        ws.append((hi - lo) * w)
    u = np.concatenate(us)
    wt = np.concatenate(ws)
    u.setflags(write=False)
    wt.setflags(write=False)
    return u, wt


def composite_gl(breaks, order: int = DEFAULT_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite rule on consecutive breakpoints."""
    x, w = gauss_legendre(order)
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1], breaks[1:]
    h = hi - lo
    nodes = (lo[:, None] + h[:, None] * x[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


def log_spaced(lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` points spaced uniformly in log between ``lo`` and ``hi``."""
    return np.exp(np.linspace(math.log(lo), math.log(hi), n))
