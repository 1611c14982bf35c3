"""Hazard rate, reciprocal hazard, cumulative hazard and its inverse.

Cumulative hazards are integrals of ``1/g`` from a fixed origin ``t0``.  To keep
``H`` additive to quadrature precision and cheap to evaluate repeatedly, each
view integrates between fixed anchor points (``t0`` and the powers of two above
it) and caches the anchor values.  ``H(t)`` is then the cached value at the
nearest anchor below ``t`` plus one short integral.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional

from scipy import optimize

from .funcmodel import Distribution, DomainError, TailFunction
from .quadrature import ABS_FLOOR, DivergentTailError, QuadratureError, integrate, tail_ratio

H_REL_TOL = 1e-10
R_REL_TOL = 1e-8
HINV_CAP = 1e300


class SaturationError(ArithmeticError):
    """The cumulative hazard stays below the requested level up to the cap."""


def hazard_rate(d: Distribution) -> TailFunction:
    """``h = density / survival``, evaluated in log space.

    When the survival carries an analytic log-derivative, ``h = -(log
    survival)'`` is used instead: it is the same function, but avoids the
    cancellation between two huge logarithms far in light tails.  Without a
    density the finite-difference form of that identity is the fallback.
    """
    surv, dens = d.survival, d.density
    label = f"hazard of {d.label}"
    if dens is None or not surv.approximate_deriv:
        def log_h(t):
            v = -surv.log_derivative(t)
            if v > 0:
                return math.log(v)
            if dens is not None:  # the closed form underflowed
                return dens.log(t) - surv.log(t)
            raise DomainError(f"{label}: nonpositive hazard {v!r} at t={t!r}")
        t0 = surv.t0 if dens is None else max(surv.t0, dens.t0)
        return TailFunction(lambda t: math.exp(log_h(t)), t0, label, log_eval=log_h)

    t0 = max(surv.t0, dens.t0)

    def log_h(t):
        return dens.log(t) - surv.log(t)

    dlog = None
    if not dens.approximate_deriv:
        dlog = lambda t: dens.log_derivative(t) - surv.log_derivative(t)
    return TailFunction(lambda t: math.exp(log_h(t)), t0, label, log_eval=log_h, dlog=dlog)


def reciprocal_of(h: TailFunction, label: str = "") -> TailFunction:
    """``g = 1/h`` sharing the log-space forms of ``h``."""
    dlog = None if h.approximate_deriv else (lambda t: -h.log_derivative(t))
    return TailFunction(lambda t: math.exp(-h.log(t)), h.t0, label or f"1/({h.label})",
                        log_eval=lambda t: -h.log(t), dlog=dlog)


def reciprocal_hazard_R(d: Distribution, t: float) -> float:
    """Mean-excess ratio ``int_t^inf survival / survival(t)``.

    Raises :class:`~tailvar.quadrature.DivergentTailError` ("tail integral
    divergent or too heavy") when the survival is not integrable, which is the
    case for survivals regularly varying with index at least -1.
    """
    s = d.survival
    return tail_ratio(s.log, s.log_derivative, float(t), R_REL_TOL)


def _inv_g(g: TailFunction):
    def w(z):
        lg = g.log(z)
        v = math.exp(-lg) if lg > -709.0 else math.inf
        if not math.isfinite(v):
            raise DomainError(f"auxiliary {g.label!r} vanishes at t={z!r}")
        return v
    return w


def cumulative_hazard(g: TailFunction, t0: float, t: float) -> float:
    """``int_{t0}^t dz / g(z)`` by adaptive quadrature."""
    if t < t0:
        raise DomainError(f"cumulative hazard needs t >= t0, got t={t!r} < t0={t0!r}")
    try:
        return integrate(_inv_g(g), t0, t, H_REL_TOL)
    except QuadratureError as exc:
        raise DomainError(f"cumulative hazard of {g.label!r} on [{t0!r}, {t!r}]: {exc}") from None


@dataclass(eq=False)
class HazardView:
    """Hazard ``h``, its reciprocal ``g`` and the cumulative hazard from ``t0``."""

    g: TailFunction
    t0: float
    h: TailFunction = None
    survival: Optional[TailFunction] = None
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        self.t0 = float(self.t0)
        if self.t0 < self.g.t0:
            raise DomainError(f"view origin {self.t0!r} below the domain of {self.g.label!r}")
        if self.h is None:
            self.h = reciprocal_of(self.g, f"1/({self.g.label})")

    @classmethod
    def from_distribution(cls, d: Distribution, t0: Optional[float] = None) -> "HazardView":
        h = hazard_rate(d)
        t0 = h.t0 if t0 is None else t0
        return cls(reciprocal_of(h, f"reciprocal hazard of {d.label}"), t0, h, d.survival)

    @classmethod
    def from_aux(cls, g: TailFunction, t0: Optional[float] = None) -> "HazardView":
        return cls(g, g.t0 if t0 is None else t0)

    # Anchors are t0, then P, 2P, 4P, ... with P the first power of two above t0
    # (P = 1 when t0 <= 0).
    def _first_power(self) -> float:
        if self.t0 <= 0:
            return 1.0
        return 2.0 ** (math.floor(math.log2(self.t0)) + 1)

    def _anchor(self, j: int) -> float:
        return self.t0 if j == 0 else self._first_power() * 2.0 ** (j - 1)

    def _index_for(self, t: float) -> int:
        p = self._first_power()
        if t < p:
            return 0
        j = int(math.floor(math.log2(t / p))) + 1
        while j > 0 and self._anchor(j) > t:
            j -= 1
        return j

    def _anchor_value(self, j: int) -> float:
        with self._lock:
            if j in self._cache:
                return self._cache[j]
            known = max((k for k in self._cache if k <= j), default=0)
            value = self._cache.get(known, 0.0)
        w = _inv_g(self.g)
        for k in range(known + 1, j + 1):
            # accuracy is relative to the accumulated H, not to each tiny piece
            value = value + integrate(w, self._anchor(k - 1), self._anchor(k), H_REL_TOL,
                                      abs_tol=max(H_REL_TOL * value, ABS_FLOOR))
            with self._lock:
                self._cache.setdefault(k, value)
        return value

    def H(self, t: float) -> float:
        """Cumulative hazard ``int_{t0}^t 1/g``."""
        t = float(t)
        if t < self.t0:
            raise DomainError(f"cumulative hazard needs t >= t0, got t={t!r}")
        j = self._index_for(t)
        base = self._anchor(j)
        try:
            head = self._anchor_value(j)
            return head + integrate(_inv_g(self.g), base, t, H_REL_TOL, abs_tol=max(H_REL_TOL * head, ABS_FLOOR))
        except QuadratureError as exc:
            raise DomainError(f"cumulative hazard of {self.g.label!r} at t={t!r}: {exc}") from None

    def Hinv(self, y: float) -> float:
        return inverse_cumulative_hazard(self, y)

    def psi(self, y: float) -> float:
        return total_hazard_psi(self, y)

    def reconstructed_survival(self, t: float) -> float:
        """``survival(t0) exp(-H(t))``; requires a view built from a distribution."""
        if self.survival is None:
            raise ValueError("view has no survival function")
        return math.exp(self.survival.log(self.t0) - self.H(t))


def inverse_cumulative_hazard(view: HazardView, y: float) -> float:
    """Solve ``H(t) = y`` on a bracket doubled from ``max(2 t0, 1)``."""
    y = float(y)
    if not y >= 0:
        raise DomainError(f"cumulative hazard level must be nonnegative, got {y!r}")
    if y == 0:
        return view.t0
    lo, hi = view.t0, max(2.0 * view.t0, 1.0)
    while view.H(hi) < y:
        lo, hi = hi, 2.0 * hi
        if hi > HINV_CAP:
            raise SaturationError(f"cumulative hazard saturates below {y!r} (H bounded up to t=1e300)")
    return optimize.brentq(lambda t: view.H(t) - y, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=400)


def total_hazard_psi(view: HazardView, y: float) -> float:
    """``Psi(y) = g(H^{-1}(y))``."""
    return view.g(inverse_cumulative_hazard(view, y))


__all__ = [
    "DivergentTailError", "HazardView", "SaturationError", "cumulative_hazard", "hazard_rate",
    "inverse_cumulative_hazard", "reciprocal_hazard_R", "reciprocal_of", "total_hazard_psi",
]
