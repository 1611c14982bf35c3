"""Generalized inverses, the inverse-index law and the Pi(a, b) functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .funcmodel import DomainError, TailFunction, reciprocal
from .numlimit import (
    DEFAULT_GRID, DEFAULT_TOL, LimitEstimate, ProbeGrid, estimate_limit, estimate_limit_family, limit_from_values,
)
from .quadrature import integrate

BRACKET_CAP = 1e300
MONOTONE_SLACK = 0.05
PI_XS = (0.5, 2.0, 4.0)
# Reaches t ~ 1e296 so that the slow (log-rate) Pi limits can settle.
PI_GRID = ProbeGrid(8.0, 1e5, 60)
PI_TOL = 1e-2


class MonotonicityError(ValueError):
    """The source function is not ultimately monotone on the probe range."""


class BracketError(ArithmeticError):
    """The requested level is not reached below the bracket cap."""


def _count_violations(f: TailFunction, grid: ProbeGrid) -> tuple[int, int]:
    logs = []
    for t in grid.points:
        if t < f.t0:
            continue
        try:
            logs.append(f.log(float(t)))
        except (ArithmeticError, ValueError):
            break
    bad = sum(1 for a, b in zip(logs, logs[1:]) if b < a - 1e-12 * max(1.0, abs(a)))
    return bad, max(len(logs) - 1, 0)


@dataclass(frozen=True, eq=False)
class GeneralizedInverse:
    """``inf{t >= t0 : f(t) >= y}`` (left) or ``inf{t >= t0 : f(t) <= y}`` (right).

    The right inverse of ``f`` is evaluated as the left inverse of ``1/f`` at
    ``1/y``.  Bisection runs until the bracket endpoints are adjacent floats,
    so ``f(eval(y)) >= y`` (left) while any smaller representable ``t`` fails.
    """

    source: TailFunction
    side: str
    bracket_cap: float = BRACKET_CAP

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")

    @property
    def _increasing(self) -> TailFunction:
        return self.source if self.side == "left" else reciprocal(self.source)

    def __call__(self, y: float) -> float:
        y = float(y)
        if not y > 0:
            raise DomainError(f"inverse level must be positive, got {y!r}")
        src, ly = self.source, math.log(y)
        left = self.side == "left"

        def reached(t):
            # compare values when representable so the defining inequality
            # holds exactly; logs only where the values under- or overflow
            try:
                v = src(t)
            except (ArithmeticError, ValueError):
                v = None
            if v is not None and v > 1e-300 and math.isfinite(v):
                return v >= y if left else v <= y
            lv = src.log(t)
            return lv >= ly if left else lv <= ly

        return _first_reached(reached, src.t0, self.bracket_cap, y)

    def as_function(self, t0: Optional[float] = None) -> TailFunction:
        """The inverse as a :class:`TailFunction` with analytic log-derivative.

        ``v'(y)/v(y) = 1/(y v f'/f (v))`` for the left inverse of a
        differentiable ``f``; the right inverse follows with ``1/f``.
        """
        f = self._increasing
        sgn = 1.0 if self.side == "left" else -1.0

        def dlog(y):
            v = self(y)
            return 1.0 / (sgn * y * v * f.log_derivative(v))

        if t0 is None:
            t0 = self.source(self.source.t0 if self.source.t0 > 0 else 1.0)
        return TailFunction(self, float(t0), f"{self.side} inverse of {self.source.label}",
                            log_eval=lambda y: math.log(self(y)), dlog=dlog)


def _first_reached(reached, t0: float, cap: float, y: float) -> float:
    """Smallest float ``t >= t0`` with ``reached(t)``, for a monotone predicate."""
    lo = t0
    if reached(lo):
        return lo
    hi = max(2.0 * lo, 1.0)
    while not reached(hi):
        lo, hi = hi, 2.0 * hi
        if hi > cap:
            raise BracketError(f"level {y:.6g} not reached below the bracket cap {cap:g}")
    while True:
        mid = math.sqrt(lo * hi) if lo > 0 and hi / lo > 1.0 + 1e-9 else 0.5 * (lo + hi)
        if not lo < mid < hi:
            return hi
        if reached(mid):
            hi = mid
        else:
            lo = mid


def generalized_inverse(f: TailFunction, side: str, grid: ProbeGrid = DEFAULT_GRID) -> GeneralizedInverse:
    """Left inverse of an increasing or right inverse of a decreasing ``f``.

    Raises :class:`MonotonicityError` ("not ultimately monotone on probe
    range") when more than 5% of consecutive probe pairs go the wrong way.
    """
    inv = GeneralizedInverse(f, side)
    bad, pairs = _count_violations(inv._increasing, grid)
    if pairs and bad > MONOTONE_SLACK * pairs:
        raise MonotonicityError(f"{f.label}: not ultimately monotone on probe range ({bad} of {pairs} pairs)")
    return inv


def inverse_index_check(f: TailFunction, rho: float, grid: ProbeGrid = DEFAULT_GRID,
                        tol: float = DEFAULT_TOL) -> LimitEstimate:
    """Index of the inverse: ``1/rho`` for ``f^<-`` (rho > 0), ``-1/rho`` for ``f^->(1/t)`` (rho < 0).

    The y-probes are the images of the t-probes, so both grids cover the same
    part of the tail.
    """
    if rho == 0:
        raise ValueError("inverse index needs rho != 0")
    pts = [float(t) for t in grid.points if t > f.t0]
    logs = []
    for t in pts:
        try:
            logs.append(f.log(t))
        except (ArithmeticError, ValueError):
            break
    sign = 1.0 if rho > 0 else -1.0
    lo = max(sign * logs[0], math.log(2.0))
    hi = min(sign * logs[-1], math.log(1e300))
    if not hi > lo + 1.0:
        raise DomainError(f"{f.label}: range too narrow to probe the inverse")
    ygrid = ProbeGrid.between(math.exp(lo), math.exp(hi), grid.count)
    if rho > 0:
        v = generalized_inverse(f, "left", grid).as_function(t0=float(ygrid.points[0]))
        return estimate_limit(lambda y: y * v.log_derivative(y), ygrid, tol)
    inv = generalized_inverse(f, "right", grid).as_function(t0=1e-300)

    # w(t) = f^->(1/t); t w'/w = -(u v'/v)(u) at u = 1/t
    def index(t):
        u = 1.0 / t
        return -u * inv.log_derivative(u)

    return estimate_limit(index, ygrid, tol)


# --- the Pi class ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PiReport:
    a: TailFunction
    b: TailFunction
    pi_limits: tuple[tuple[float, LimitEstimate], ...]
    passed: bool
    route: str
    residual: float


def _mean_gap(v: TailFunction, lo: float):
    """``t -> v(t) - t^-1 int_lo^t v``, integrated in ``u = log z`` with caching per probe."""
    cache: dict[float, float] = {lo: 0.0}

    def integral(t):
        base = max(s for s in cache if s <= t)
        ub, ut = math.log(base), math.log(t)
        n = max(1, int(ut - ub))
        breaks = [ub + (ut - ub) * k / n for k in range(1, n)]
        # divide by t inside the integrand to keep magnitudes moderate
        piece = integrate(lambda u: v(math.exp(u)) * math.exp(u - ut), ub, ut, 1e-11, breaks=breaks)
        return cache[base] * (base / t) + piece

    def gap(t):
        mean = integral(t)
        cache.setdefault(t, mean)
        return v(t) - mean

    return gap


def pi_functional(
    f: TailFunction,
    t0: Optional[float] = None,
    g: Optional[TailFunction] = None,
    xs: Sequence[float] = PI_XS,
    grid: ProbeGrid = PI_GRID,
    tol: float = PI_TOL,
) -> PiReport:
    """Pi(a, b) limits of the inverse of ``f``.

    Increasing ``f``: ``v = f^<-``, ``b = v`` and the limits of
    ``(v(tx) - v(t))/a(t)`` must be ``log x``.  Decreasing ``f`` goes through
    ``1/f``: with ``w = (1/f)^<-`` (so ``w(t) = f^->(1/t)``) the limits of
    ``(w(t/x) - w(t))/a(t)`` must be ``-log x``.  ``a(t) = g(v(t))`` when the
    auxiliary ``g`` is supplied, else ``a(t) = v(t) - t^-1 int_{t0}^t v``.
    """
    pts = [float(t) for t in DEFAULT_GRID.points if t >= f.t0]
    logs = [f.log(t) for t in pts[:2]]
    increasing = logs[1] >= logs[0]
    src = f if increasing else reciprocal(f)
    v = generalized_inverse(src, "left").as_function(t0=1e-300)
    # default origin: the image of max(1, 2 t0), where the inverse is safely positive
    lo = float(t0) if t0 is not None else src(max(1.0, 2.0 * src.t0))

    if g is not None:
        a_fn = lambda t: g(v(t))
        a = TailFunction(a_fn, lo, f"g(v) for {f.label}")
    else:
        gap = _mean_gap(v, lo)
        a = TailFunction(gap, lo, f"v - mean v for {f.label}")
    sub = grid.restrict(lambda t: t / max(xs) > lo and t * max(xs) < 1e300)

    if increasing:
        fn = lambda t, x: (v(t * x) - v(t)) / a(t)
        target = math.log
        route = "increasing"
    else:
        fn = lambda t, x: (v(t / x) - v(t)) / a(t)
        target = lambda x: -math.log(x)
        route = "decreasing (through 1/f)"
    fam = estimate_limit_family(fn, xs, sub, tol)
    res = max((abs(est.value - target(x)) if est.is_finite else math.inf) for x, est in fam)
    b = TailFunction(v, lo, f"b = v for {f.label}")
    return PiReport(a, b, fam.items, res <= tol, route, res)


def pi_representation_check(v: TailFunction, a: TailFunction, t0: float, grid: ProbeGrid = PI_GRID,
                            tol: float = PI_TOL) -> tuple[bool, LimitEstimate]:
    """``v(t) = a(t) + int_{t0}^t a(z)/z dz + C`` asymptotically, relative to ``1 + |v|``.

    ``C`` is the residual at the median probe.  Returns the verdict and the
    limit estimate of the normalized residual.
    """
    sub = grid.restrict(lambda t: t > t0)
    pts = [float(t) for t in sub.points]
    cum, acc, prev = [], 0.0, float(t0)
    for t in pts:
        ul, uh = math.log(prev), math.log(t)
        acc += integrate(lambda u: a(math.exp(u)), ul, uh, 1e-11)
        cum.append(acc)
        prev = t
    resid = [v(t) - a(t) - i for t, i in zip(pts, cum)]
    c = resid[len(resid) // 2]
    vals = np.array([abs(r - c) / (1.0 + abs(v(t))) for t, r in zip(pts, resid)])
    est = limit_from_values(vals, sub, tol)
    return bool(est.is_finite and abs(est.value) <= tol), est


__all__ = [
    "BracketError", "GeneralizedInverse", "MonotonicityError", "PI_GRID", "PI_XS", "PiReport",
    "generalized_inverse", "inverse_index_check", "pi_functional", "pi_representation_check",
]
