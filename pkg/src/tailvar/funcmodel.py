"""Tail functions, distributions and the reference catalog.

A :class:`TailFunction` is an exact oracle for a positive function on
``[t0, inf)``.  Besides the plain value it can carry a log-space evaluator and
an analytic logarithmic derivative ``f'/f``; the classifiers work almost
entirely with those two, because the functions of interest underflow or
overflow long before their asymptotics settle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import special

Scalar = Callable[[float], float]

FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


class DomainError(ValueError):
    """A function was evaluated outside its domain or returned a bad value."""


def _fd(fn: Scalar, t: float, t0: float) -> float:
    h = max(abs(t), 1.0) * FD_STEP
    if t - h >= t0:
        return (fn(t + h) - fn(t - h)) / (2.0 * h)
    return (fn(t + h) - fn(t)) / h


FD5_STEP = 1e-3


def _fd5(fn: Scalar, t: float, t0: float) -> float:
    # Five-point stencil for log-derivatives: limit sequences built from it are
    # accelerated downstream, which magnifies the noise of the plain stencil.
    h = max(abs(t), 1.0) * FD5_STEP
    if t - 2.0 * h < t0:
        return _fd(fn, t, t0)
    return (fn(t - 2 * h) - 8 * fn(t - h) + 8 * fn(t + h) - fn(t + 2 * h)) / (12.0 * h)


@dataclass(frozen=True, eq=False)
class TailFunction:
    """Positive function on ``[t0, inf)``.

    ``log_eval`` and ``dlog`` are optional numerically stable forms of
    ``log f`` and ``f'/f``.  When ``deriv`` is absent the derivative is a
    central finite difference and :attr:`approximate_deriv` is set.
    """

    eval: Scalar
    t0: float = 0.0
    label: str = ""
    deriv: Optional[Scalar] = None
    log_eval: Optional[Scalar] = None
    dlog: Optional[Scalar] = None

    @property
    def approximate_deriv(self) -> bool:
        return self.deriv is None and self.dlog is None

    def _check(self, t: float) -> None:
        if not t >= self.t0:
            raise DomainError(f"{self.label or 'function'}: t={t!r} below t0={self.t0!r}")

    def __call__(self, t: float) -> float:
        self._check(t)
        v = float(self.eval(t))
        if not (math.isfinite(v) and v > 0):
            raise DomainError(f"{self.label or 'function'}: value {v!r} at t={t!r} is not finite and positive")
        return v

    def log(self, t: float) -> float:
        self._check(t)
        if self.log_eval is not None:
            v = float(self.log_eval(t))
        else:
            raw = float(self.eval(t))
            if not (math.isfinite(raw) and raw > 0):
                raise DomainError(f"{self.label or 'function'}: value {raw!r} at t={t!r} is not finite and positive")
            v = math.log(raw)
        if not math.isfinite(v):
            raise DomainError(f"{self.label or 'function'}: log value {v!r} at t={t!r}")
        return v

    def derivative(self, t: float) -> float:
        self._check(t)
        if self.deriv is not None:
            return float(self.deriv(t))
        if self.dlog is not None:
            return float(self.dlog(t)) * self(t)
        return _fd(self.eval, t, self.t0)

    def log_derivative(self, t: float) -> float:
        """``f'(t)/f(t)``, the signed generalized hazard rate."""
        self._check(t)
        if self.dlog is not None:
            v = float(self.dlog(t))
        elif self.deriv is not None:
            v = float(self.deriv(t)) / self(t)
            if not math.isfinite(v) and self.log_eval is not None:
                v = _fd5(self.log_eval, t, self.t0)
        else:
            v = _fd5(self.log, t, self.t0)
        if not math.isfinite(v):
            raise DomainError(f"{self.label or 'function'}: log-derivative {v!r} at t={t!r}")
        return v

    def ratio(self, s: float, t: float) -> float:
        """``f(s)/f(t)`` computed in log space."""
        return math.exp(self.log(s) - self.log(t))


def _probe_points(t0: float) -> list[float]:
    step = max(1.0, abs(t0))
    return [t0 + step * k for k in (0.0, 0.5, 1.0, 2.0)]


def make_analytic(
    eval: Scalar,
    deriv: Optional[Scalar] = None,
    t0: float = 0.0,
    label: str = "",
    *,
    log_eval: Optional[Scalar] = None,
    dlog: Optional[Scalar] = None,
) -> TailFunction:
    """Wrap closed-form callables as a :class:`TailFunction`.

    The function is probed at a few points from ``t0`` on; a non-finite or
    non-positive value raises :class:`DomainError` naming the offending t.
    """
    f = TailFunction(eval, float(t0), label, deriv, log_eval, dlog)
    for t in _probe_points(float(t0)):
        if log_eval is not None:
            f.log(t)
        else:
            f(t)
    return f


# --- transformations ------------------------------------------------------


def power(f: TailFunction, beta: float) -> TailFunction:
    deriv = None
    if f.deriv is not None:
        deriv = lambda t: beta * f(t) ** (beta - 1.0) * f.deriv(t)
    dlog = None if f.approximate_deriv else (lambda t: beta * f.log_derivative(t))
    return TailFunction(
        lambda t: math.exp(beta * f.log(t)), f.t0, f"({f.label})^{beta:g}", deriv,
        lambda t: beta * f.log(t), dlog,
    )


def product(f: TailFunction, g: TailFunction) -> TailFunction:
    deriv = None
    if f.deriv is not None and g.deriv is not None:
        deriv = lambda t: f.deriv(t) * g(t) + f(t) * g.deriv(t)
    dlog = None
    if not (f.approximate_deriv or g.approximate_deriv):
        dlog = lambda t: f.log_derivative(t) + g.log_derivative(t)
    return TailFunction(
        lambda t: math.exp(f.log(t) + g.log(t)), max(f.t0, g.t0), f"({f.label})*({g.label})",
        deriv, lambda t: f.log(t) + g.log(t), dlog,
    )


def compose(f: TailFunction, g: TailFunction, t0: Optional[float] = None) -> TailFunction:
    """``t -> f(g(t))``; ``g`` must increase to infinity."""
    from .numlimit import DEFAULT_GRID

    pts = [float(t) for t in DEFAULT_GRID.points if t >= g.t0]
    vals = [g(t) for t in pts]
    # increasing, and growing by at least a decade across the grid
    if not all(b > a for a, b in zip(vals, vals[1:])) or vals[-1] < 10.0 * max(1.0, vals[0]):
        raise DomainError(f"compose: inner function {g.label!r} does not tend to infinity on the probe grid")
    if t0 is None:
        t0 = g.t0
        while g(t0) < f.t0:
            t0 = 2.0 * t0 if t0 > 0 else 1.0
    deriv = None
    if f.deriv is not None and g.deriv is not None:
        deriv = lambda t: f.deriv(g(t)) * g.deriv(t)
    dlog = None
    if not (f.approximate_deriv or g.approximate_deriv):
        dlog = lambda t: f.log_derivative(g(t)) * g.derivative(t)
    return TailFunction(
        lambda t: f(g(t)), t0, f"{f.label}∘{g.label}", deriv, lambda t: f.log(g(t)), dlog,
    )


def reciprocal(f: TailFunction) -> TailFunction:
    for t in _probe_points(f.t0):
        if f.eval(t) == 0:
            raise DomainError(f"reciprocal: zero of {f.label!r} at t={t!r}")
    deriv = None
    if f.deriv is not None:
        deriv = lambda t: -f.deriv(t) / f(t) ** 2
    dlog = None if f.approximate_deriv else (lambda t: -f.log_derivative(t))
    return TailFunction(
        lambda t: math.exp(-f.log(t)), f.t0, f"1/({f.label})", deriv, lambda t: -f.log(t), dlog,
    )


def shift_log(f: TailFunction) -> TailFunction:
    """``t -> f(log t)`` on ``[exp(t0), inf)``."""
    deriv = None
    if f.deriv is not None:
        deriv = lambda t: f.deriv(math.log(t)) / t
    dlog = None if f.approximate_deriv else (lambda t: f.log_derivative(math.log(t)) / t)
    return TailFunction(
        lambda t: f(math.log(t)), math.exp(f.t0), f"{f.label}(log t)", deriv,
        lambda t: f.log(math.log(t)), dlog,
    )


def scale(f: TailFunction, c: float) -> TailFunction:
    """``t -> c f(t)`` with ``c > 0``; the log-derivative is shared with ``f``."""
    if not c > 0:
        raise DomainError(f"scale factor must be positive, got {c}")
    deriv = None if f.deriv is None else (lambda t: c * f.deriv(t))
    return TailFunction(
        lambda t: c * f(t), f.t0, f"{c:g}*{f.label}", deriv,
        lambda t: math.log(c) + f.log(t), f.dlog,
    )


def transform(f: TailFunction, kind: str, arg=None) -> TailFunction:
    """Dispatch on ``kind``: power, product, compose, reciprocal, shift_log, scale."""
    if kind == "power":
        return power(f, float(arg))
    if kind == "product":
        return product(f, arg)
    if kind == "compose":
        return compose(f, arg)
    if kind == "reciprocal":
        return reciprocal(f)
    if kind == "shift_log":
        return shift_log(f)
    if kind == "scale":
        return scale(f, float(arg))
    raise ValueError(f"unknown transform {kind!r}")


def power_function(rho: float, t0: float = 1.0, c: float = 1.0) -> TailFunction:
    """``c t^rho``, a frequent test subject."""
    lc = math.log(c)
    return TailFunction(
        lambda t: c * t ** rho, t0, f"{c:g}*t^{rho:g}", lambda t: c * rho * t ** (rho - 1.0),
        lambda t: lc + rho * math.log(t), lambda t: rho / t,
    )


def constant(c: float, t0: float = 0.0) -> TailFunction:
    lc = math.log(c)
    return TailFunction(lambda t: c, t0, f"{c:g}", lambda t: 0.0, lambda t: lc, lambda t: 0.0)


# --- distributions ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Distribution:
    """Right tail of a distribution with support unbounded above.

    ``sampler`` maps an array of uniform(0, 1) draws to samples through the
    inverse CDF; it must be nondecreasing.
    """

    survival: TailFunction
    density: Optional[TailFunction] = None
    sampler: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""

    @property
    def hazard(self) -> TailFunction:
        from .hazard import hazard_rate

        return hazard_rate(self)

    def check(self, points) -> None:
        """Validate monotone survival and decay on the given probe points."""
        logs = []
        for t in points:
            try:
                logs.append(self.survival.log(float(t)))
            except DomainError:
                break
        if len(logs) < 2:
            return
        if any(b > a + 1e-12 * max(1.0, abs(a)) for a, b in zip(logs, logs[1:])):
            raise DomainError(f"{self.label}: survival function increases on the probe grid")
        if logs[0] > 1e-12:
            raise DomainError(f"{self.label}: survival exceeds 1 at t={float(points[0])!r}")


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    """A reference distribution together with its known classification.

    ``subject`` selects whether the survival function or the density is the
    function whose class ``truth`` records.
    """

    name: str
    distribution: Distribution
    truth: "object"
    truth_aux: Optional[TailFunction] = None
    subject: str = "survival"
    params: dict = field(default_factory=dict)
    # Probe grid for entries whose limits settle only at very large t.
    grid: Optional[object] = None

    @property
    def function(self) -> TailFunction:
        if self.subject == "density":
            return self.distribution.density
        return self.distribution.survival


# Inverse standard normal CDF: rational approximation (Acklam) followed by one
# Halley step against erfc.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_PLOW = 0.02425


def norm_ppf(u) -> np.ndarray:
    """Standard normal quantile, vectorized, accurate to about 1e-15."""
    u = np.asarray(u, dtype=float)
    x = np.empty_like(u)
    lo = u < _PLOW
    hi = u > 1 - _PLOW
    mid = ~(lo | hi)
    q = np.sqrt(-2 * np.log(u[lo]))
    x[lo] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
        ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1)
    q = np.sqrt(-2 * np.log1p(-u[hi]))
    x[hi] = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
        ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1)
    q = u[mid] - 0.5
    r = q * q
    x[mid] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1)
    # One Halley step on Phi(x) - u, taking the residual on the smaller tail.
    r2 = math.sqrt(2.0)
    e = np.where(x > 0, (1.0 - u) - 0.5 * special.erfc(x / r2), 0.5 * special.erfc(-x / r2) - u)
    d = e * math.sqrt(2 * math.pi) * np.exp(x * x / 2)
    x = x - d / (1 + x * d / 2)
    return x


_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _normal_hazard(t: float) -> float:
    # Mills ratio form: stable for all t.
    return _SQRT_2_OVER_PI / special.erfcx(t / math.sqrt(2.0))


def normal_survival_fn(t0: float = 0.0) -> TailFunction:
    return TailFunction(
        lambda t: float(special.ndtr(-t)), t0, "normal survival",
        lambda t: -math.exp(-t * t / 2 - _LOG_SQRT_2PI),
        lambda t: float(special.log_ndtr(-t)),
        lambda t: -_normal_hazard(t),
    )


def normal_density_fn(t0: float = 0.0) -> TailFunction:
    return TailFunction(
        lambda t: math.exp(-t * t / 2 - _LOG_SQRT_2PI), t0, "normal density",
        lambda t: -t * math.exp(-t * t / 2 - _LOG_SQRT_2PI),
        lambda t: -t * t / 2 - _LOG_SQRT_2PI,
        lambda t: -t,
    )


def exponential(lam: float = 1.0) -> Distribution:
    surv = TailFunction(lambda t: math.exp(-lam * t), 0.0, f"exp(-{lam:g}t)",
                        lambda t: -lam * math.exp(-lam * t), lambda t: -lam * t, lambda t: -lam)
    dens = TailFunction(lambda t: lam * math.exp(-lam * t), 0.0, f"{lam:g}exp(-{lam:g}t)",
                        lambda t: -lam * lam * math.exp(-lam * t),
                        lambda t: math.log(lam) - lam * t, lambda t: -lam)
    return Distribution(surv, dens, lambda u: -np.log1p(-np.asarray(u)) / lam, f"Exponential({lam:g})")


def pareto(alpha: float = 2.0) -> Distribution:
    surv = power_function(-alpha, 1.0)
    surv = replace(surv, label=f"t^-{alpha:g}")
    dens = power_function(-alpha - 1.0, 1.0, alpha)
    return Distribution(surv, dens, lambda u: (1.0 - np.asarray(u)) ** (-1.0 / alpha), f"Pareto({alpha:g})")


def standard_normal(t0: float = 0.0) -> Distribution:
    return Distribution(normal_survival_fn(t0), normal_density_fn(t0), norm_ppf, "StandardNormal")


def _exp_inverse_gap(u):
    # exp(1/(1-u)) overflows to inf for u within ~1/709 of 1, a legitimate sample
    with np.errstate(over="ignore"):
        return np.exp(1.0 / (1.0 - np.asarray(u)))


def log_tail() -> Distribution:
    """Survival ``1/log t`` and density ``t^-1 (log t)^-2`` on ``[e, inf)``."""
    e = math.e
    surv = TailFunction(lambda t: 1.0 / math.log(t), e, "1/log t",
                        lambda t: -1.0 / (t * math.log(t) ** 2),
                        lambda t: -math.log(math.log(t)), lambda t: -1.0 / (t * math.log(t)))
    dens = TailFunction(lambda t: 1.0 / (t * math.log(t) ** 2), e, "t^-1 (log t)^-2",
                        lambda t: -(math.log(t) + 2.0) / (t * math.log(t)) ** 2 / math.log(t),
                        lambda t: -math.log(t) - 2.0 * math.log(math.log(t)),
                        lambda t: -(1.0 + 2.0 / math.log(t)) / t)
    return Distribution(surv, dens, _exp_inverse_gap, "LogTail")


def slow_survival() -> Distribution:
    """``1/log t`` given as a bare oracle; derivatives come from finite differences."""
    surv = TailFunction(lambda t: 1.0 / math.log(t), math.e, "1/log t (oracle only)")
    return Distribution(surv, None, _exp_inverse_gap, "SlowSurvival")


def weibull_hazard(k: float = 1.0) -> Distribution:
    """Hazard rate ``t^k``: survival ``exp(-t^(k+1)/(k+1))``."""
    if not k > -1:
        raise ValueError("hazard exponent k must exceed -1")
    m = k + 1.0
    surv = TailFunction(lambda t: math.exp(-t ** m / m), 0.0, f"exp(-t^{m:g}/{m:g})",
                        lambda t: -t ** k * math.exp(-t ** m / m),
                        lambda t: -t ** m / m, lambda t: -t ** k)
    dens = TailFunction(lambda t: t ** k * math.exp(-t ** m / m), 0.0, f"t^{k:g} exp(-t^{m:g}/{m:g})",
                        None, lambda t: k * math.log(t) - t ** m / m, lambda t: k / t - t ** k)
    sampler = lambda u: (m * -np.log1p(-np.asarray(u))) ** (1.0 / m)
    return Distribution(surv, replace(dens, t0=1e-300), sampler, f"WeibullHazard({k:g})")


def frechet(alpha: float = 2.0) -> Distribution:
    surv = TailFunction(
        lambda t: -math.expm1(-t ** -alpha), 1e-3, f"1-exp(-t^-{alpha:g})",
        lambda t: -alpha * t ** (-alpha - 1) * math.exp(-t ** -alpha),
        lambda t: math.log(-math.expm1(-t ** -alpha)),
        lambda t: -alpha * t ** (-alpha - 1) * math.exp(-t ** -alpha) / -math.expm1(-t ** -alpha),
    )
    dens = TailFunction(
        lambda t: alpha * t ** (-alpha - 1) * math.exp(-t ** -alpha), 1e-3, "frechet density", None,
        lambda t: math.log(alpha) - (alpha + 1) * math.log(t) - t ** -alpha,
        lambda t: (-(alpha + 1) + alpha * t ** -alpha) / t,
    )
    sampler = lambda u: (-np.log(np.asarray(u))) ** (-1.0 / alpha)
    return Distribution(surv, dens, sampler, f"Frechet({alpha:g})")


def lognormal() -> Distribution:
    surv = TailFunction(
        lambda t: float(special.ndtr(-math.log(t))), 1e-3, "normal survival(log t)",
        lambda t: -math.exp(-math.log(t) ** 2 / 2 - _LOG_SQRT_2PI) / t,
        lambda t: float(special.log_ndtr(-math.log(t))),
        lambda t: -_normal_hazard(math.log(t)) / t,
    )
    dens = TailFunction(
        lambda t: math.exp(-math.log(t) ** 2 / 2 - _LOG_SQRT_2PI) / t, 1e-3, "lognormal density", None,
        lambda t: -math.log(t) ** 2 / 2 - _LOG_SQRT_2PI - math.log(t),
        lambda t: -(math.log(t) + 1.0) / t,
    )
    return Distribution(surv, dens, lambda u: np.exp(norm_ppf(u)), "Lognormal")


def reciprocal_power(k: float, t0: float = 1.0) -> TailFunction:
    """``t^-k``: the reciprocal hazard of :func:`weibull_hazard`."""
    return replace(power_function(-k, t0), label=f"t^-{k:g}")


def catalog() -> list[CatalogEntry]:
    """Reference distributions with their ground-truth tail classes."""
    from .classify import TailClass
    from .numlimit import ProbeGrid

    entries = []
    for lam in (1.0, 2.0):
        entries.append(CatalogEntry(f"Exponential({lam:g})", exponential(lam),
                                    TailClass.gamma(-1.0, constant(1.0 / lam)), constant(1.0 / lam),
                                    params={"lambda": lam}))
    for alpha in (0.5, 1.0, 2.0, 3.0):
        entries.append(CatalogEntry(f"Pareto({alpha:g})", pareto(alpha), TailClass.regular(-alpha),
                                    params={"alpha": alpha}))
    inv_t = replace(power_function(-1.0, 1.0), label="1/t")
    entries.append(CatalogEntry("StandardNormal", standard_normal(), TailClass.gamma(-1.0, inv_t), inv_t))
    entries.append(CatalogEntry("StandardNormalDensity", standard_normal(), TailClass.gamma(-1.0, inv_t),
                                inv_t, subject="density"))
    entries.append(CatalogEntry("LogTail", log_tail(), TailClass.slow()))
    entries.append(CatalogEntry("LogTailDensity", log_tail(), TailClass.regular(-1.0), subject="density"))
    entries.append(CatalogEntry("SlowSurvival", slow_survival(), TailClass.slow()))
    for k in (0.5, 1.0, 2.0):
        g = reciprocal_power(k)
        entries.append(CatalogEntry(f"WeibullHazard({k:g})", weibull_hazard(k), TailClass.gamma(-1.0, g), g,
                                    params={"k": k}))
    for alpha in (1.0, 2.0):
        entries.append(CatalogEntry(f"Frechet({alpha:g})", frechet(alpha), TailClass.regular(-alpha),
                                    params={"alpha": alpha}))
    g_ln = TailFunction(lambda t: t / math.log(t), math.e, "t/log t", None,
                        lambda t: math.log(t) - math.log(math.log(t)),
                        lambda t: 1.0 / t - 1.0 / (t * math.log(t)))
    entries.append(CatalogEntry("Lognormal", lognormal(), TailClass.gamma(-1.0, g_ln), g_ln,
                                grid=ProbeGrid(8.0, 64.0, 48)))
    return entries


def catalog_entry(name: str) -> CatalogEntry:
    for e in catalog():
        if e.name.lower() == name.lower():
            return e
    raise KeyError(name)


FAMILIES = {
    "exponential": (exponential, ("lambda",)),
    "pareto": (pareto, ("alpha",)),
    "standardnormal": (lambda: standard_normal(), ()),
    "logtail": (log_tail, ()),
    "slowsurvival": (slow_survival, ()),
    "weibullhazard": (weibull_hazard, ("k",)),
    "frechet": (frechet, ("alpha",)),
    "lognormal": (lognormal, ()),
}
