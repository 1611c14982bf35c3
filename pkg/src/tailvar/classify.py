"""Limit-based membership tests and the fused tail classification.

Every test reduces to one or more :func:`~tailvar.numlimit.estimate_limit`
calls on a geometric probe grid.  Ratios ``f(t + d)/f(t)`` are formed in log
space; when the shift ``d`` is small against ``t`` the log difference is the
integral of ``f'/f`` over ``[t, t + d]``, which stays accurate even when ``d``
drops below the floating-point spacing at ``t``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .funcmodel import DomainError, TailFunction
from .numlimit import (
    DEFAULT_GRID, DEFAULT_TOL, FamilyEstimate, GridError, LimitEstimate, ProbeGrid, Verdict,
    estimate_limit, estimate_limit_family,
)
from .quadrature import QuadratureError, integrate, log_increment, tail_ratio

GAMMA_XS = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)
RV_XS = (0.5, 1.0, 2.0, 4.0)
DEHAAN_XS = (0.5, 2.0, 4.0)
POTTER_XS = (1.0, 2.0, 4.0, 8.0)
SLOW_BAND = 1e-2
GAMMA_CONSISTENCY_TOL = 2e-2
# Shifts below this fraction of t are integrated through f'/f.
_SMALL_SHIFT = 0.25


class Kind(enum.Enum):
    SLOW = "Slow"
    REGULAR = "Regular"
    GAMMA = "Gamma"
    RAPID = "RapidDeHaan"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class Evidence:
    """One sub-test: its name, limit estimate (if any), outcome and a note."""

    name: str
    estimate: Optional[LimitEstimate]
    passed: Optional[bool]
    detail: str = ""

    @property
    def value(self) -> Optional[float]:
        return self.estimate.value if self.estimate is not None else None

    def row(self) -> tuple:
        est = self.estimate
        verdict = est.verdict.value if est is not None else ""
        value = repr(float(est.value)) if est is not None and est.value is not None else ""
        residual = repr(float(est.residual)) if est is not None else ""
        passed = "" if self.passed is None else ("pass" if self.passed else "fail")
        return self.name, verdict, value, residual, passed, self.detail


@dataclass(frozen=True, eq=False)
class TailClass:
    kind: Kind
    index: Optional[float] = None
    aux: Optional[TailFunction] = None
    evidence: tuple[Evidence, ...] = ()

    @classmethod
    def slow(cls, evidence=()) -> "TailClass":
        return cls(Kind.SLOW, 0.0, None, tuple(evidence))

    @classmethod
    def regular(cls, rho: float, evidence=()) -> "TailClass":
        return cls(Kind.REGULAR, float(rho), None, tuple(evidence))

    @classmethod
    def gamma(cls, alpha: float, g: TailFunction, evidence=()) -> "TailClass":
        return cls(Kind.GAMMA, float(alpha), g, tuple(evidence))

    @classmethod
    def rapid(cls, sign: int, evidence=()) -> "TailClass":
        return cls(Kind.RAPID, math.copysign(math.inf, sign), None, tuple(evidence))

    @classmethod
    def undetermined(cls, evidence=()) -> "TailClass":
        return cls(Kind.UNDETERMINED, None, None, tuple(evidence))

    @property
    def determinate(self) -> bool:
        return self.kind is not Kind.UNDETERMINED

    def same_kind(self, other: "TailClass") -> bool:
        return self.kind is other.kind

    def __str__(self) -> str:
        if self.kind is Kind.REGULAR:
            return f"Regular, rho = {self.index:.2f}"
        if self.kind is Kind.GAMMA:
            return f"Gamma, alpha = {self.index:g}, g = {self.aux.label}"
        if self.kind is Kind.RAPID:
            return f"RapidDeHaan, sign = {'+' if self.index > 0 else '-'}inf"
        return self.kind.value


@dataclass(frozen=True)
class SelfNeglectReport:
    passed: bool
    ratio_residual: float
    gt_over_t: LimitEstimate
    ratios: Optional[FamilyEstimate] = None
    skipped: int = 0
    detail: str = ""


# --- helpers ----------------------------------------------------------------


def log_shift(f: TailFunction, t: float, d: float) -> float:
    """``log f(t + d) - log f(t)``."""
    if d == 0:
        return 0.0
    if t > 0 and abs(d) <= _SMALL_SHIFT * t:
        return log_increment(f.log_derivative, t, d)
    return f.log(t + d) - f.log(t)


def _safe(fn: Callable[[float], float]) -> Callable[[float], bool]:
    def ok(t):
        try:
            return math.isfinite(fn(t))
        except (ArithmeticError, ValueError):
            return False
    return ok


def _restrict(grid: ProbeGrid, ok: Callable[[float], bool]) -> tuple[Optional[ProbeGrid], int]:
    """Restricted grid and the number of rejected probes (``None`` if unusable)."""
    pts = grid.points
    try:
        sub = grid.restrict(ok)
    except GridError:
        return None, len(pts)
    skipped = int(np.sum(pts < sub.start * (1 - 1e-12))) + int(np.sum(pts > sub.end * (1 + 1e-12)))
    return sub, skipped


def _aux_shift_ok(f: TailFunction, g: TailFunction, xs: Sequence[float]) -> Callable[[float], bool]:
    lo = min(xs)

    def ok(t):
        gt = g(t)
        if not (t >= f.t0 and t + lo * gt >= max(f.t0, g.t0)):
            return False
        return math.isfinite(f.log(t)) and math.isfinite(f.log_derivative(t))
    return ok


def _undetermined_estimate(grid: ProbeGrid, why: str) -> LimitEstimate:
    return LimitEstimate(Verdict.UNDETERMINED, None, (), (), math.inf, grid, why)


# --- regular variation -------------------------------------------------------


def von_mises_index(f: TailFunction, grid: ProbeGrid = DEFAULT_GRID, tol: float = DEFAULT_TOL) -> LimitEstimate:
    """Limit of ``t f'(t)/f(t)``."""
    fn = lambda t: t * f.log_derivative(t)
    sub, _ = _restrict(grid, lambda t: t >= f.t0 and _safe(fn)(t))
    if sub is None:
        return _undetermined_estimate(grid, "no probe where t f'/f is defined")
    return estimate_limit(fn, sub, tol)


def ratio_family(f: TailFunction, xs: Sequence[float] = RV_XS, grid: ProbeGrid = DEFAULT_GRID,
                 tol: float = DEFAULT_TOL) -> FamilyEstimate:
    """Limits of ``f(tx)/f(t)`` for each x."""
    sub, _ = _restrict(grid, lambda t: t * min(xs) >= f.t0 and _safe(f.log)(t * max(xs)))
    if sub is None:
        sub = grid
    return estimate_limit_family(lambda t, x: math.exp(f.log(t * x) - f.log(t)), xs, sub, tol)


def potter_check(f: TailFunction, rho: float, eps: float, xs: Sequence[float] = POTTER_XS,
                 grid: ProbeGrid = DEFAULT_GRID) -> bool:
    """Potter-type sandwich on a probe suffix covering at least half the grid.

    The suffix start plays the role of the threshold beyond which the bounds
    must hold; it is the first probe after the last violation.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if any(x < 1 for x in xs):
        raise ValueError("Potter check takes xs >= 1")
    pts = [float(t) for t in grid.points if t >= f.t0]
    if len(pts) < 2:
        return False
    held = []
    lo_c, hi_c = math.log1p(-eps), math.log1p(eps)
    for t in pts:
        ok = True
        for x in xs:
            try:
                lr = f.log(t * x) - f.log(t)
            except (ArithmeticError, ValueError):
                ok = False
                break
            lx = math.log(x)
            if not (lo_c + (rho - eps) * lx < lr < hi_c + (rho + eps) * lx):
                ok = False
                break
        held.append(ok)
    start = len(held)
    while start > 0 and held[start - 1]:
        start -= 1
    return len(held) - start >= max(2, len(grid.points) // 2)


def karamata_ratio(f: TailFunction, side: str, grid: ProbeGrid = DEFAULT_GRID, tol: float = DEFAULT_TOL,
                   t0: Optional[float] = None) -> LimitEstimate:
    """Limit of ``t f(t) / int f`` over the head ``[t0, t]`` or the tail ``[t, inf)``.

    A divergent tail integral raises
    :class:`~tailvar.quadrature.DivergentTailError`.
    """
    if side == "tail":
        def fn(t):
            return t / tail_ratio(f.log, f.log_derivative, t, 1e-10)
        fn(float(grid.points[0]) if grid.points[0] >= f.t0 else f.t0 + 1.0)
        sub, _ = _restrict(grid, lambda t: t >= f.t0)
        return estimate_limit(fn, sub or grid, tol)
    if side != "head":
        raise ValueError(f"side must be 'head' or 'tail', got {side!r}")
    a = f.t0 if t0 is None else float(t0)
    if a <= 0:
        a = 1.0
    ua = math.log(a)

    def fn(t):
        ref = f.log(t)
        ut = math.log(t)
        phi = lambda u: math.exp(u + f.log(math.exp(u)) - ref)
        n = max(1, int(ut - ua))
        breaks = [ua + (ut - ua) * k / n for k in range(1, n)]
        return t / integrate(phi, ua, ut, 1e-11, breaks=breaks)

    sub, _ = _restrict(grid, lambda t: t > a * 1.5)
    return estimate_limit(fn, sub or grid, tol)


# --- rapid variation ----------------------------------------------------------


def check_self_neglecting(g: TailFunction, xs: Sequence[float] = GAMMA_XS, grid: ProbeGrid = DEFAULT_GRID,
                          tol: float = DEFAULT_TOL) -> SelfNeglectReport:
    """``g(t)/t -> 0`` and ``g(t + x g(t))/g(t) -> 1`` for every x."""
    own, _ = _restrict(grid, lambda t: t >= g.t0 and _safe(g)(t))
    gt = (estimate_limit(lambda t: g(t) / t, own, tol) if own is not None
          else _undetermined_estimate(grid, "g undefined on the grid"))
    sub, skipped = _restrict(grid, _aux_shift_ok(g, g, xs))
    if sub is None:
        return SelfNeglectReport(False, math.inf, gt, None, skipped, "no probe with t + x g(t) inside the domain")
    ratios = estimate_limit_family(lambda t, x: math.exp(log_shift(g, t, x * g(t))), xs, sub, tol)
    residual = max((abs(est.value - 1.0) if est.is_finite else math.inf) for _, est in ratios)
    residual = max(residual, ratios.uniform_residual)
    passed = gt.near(0.0, tol) and residual <= tol
    detail = f"{skipped} probes skipped" if skipped else ""
    return SelfNeglectReport(passed, residual, gt, ratios, skipped, detail)


def gamma_index(f: TailFunction, g: TailFunction, grid: ProbeGrid = DEFAULT_GRID,
                tol: float = DEFAULT_TOL) -> LimitEstimate:
    """Limit of ``g(t) f'(t)/f(t)``."""
    fn = lambda t: g(t) * f.log_derivative(t)
    sub, _ = _restrict(grid, lambda t: t >= max(f.t0, g.t0) and _safe(fn)(t))
    if sub is None:
        return _undetermined_estimate(grid, "no probe where g f'/f is defined")
    return estimate_limit(fn, sub, tol)


@dataclass(frozen=True)
class GammaRatioCheck:
    limits: tuple[tuple[float, LimitEstimate], ...]
    alpha: Optional[float]
    consistency: float
    passed: bool

    def __iter__(self):
        return iter(self.limits)

    def __len__(self):
        return len(self.limits)


def gamma_ratio_check(f: TailFunction, g: TailFunction, xs: Sequence[float] = GAMMA_XS,
                      grid: ProbeGrid = DEFAULT_GRID, tol: float = DEFAULT_TOL,
                      alpha: Optional[float] = None) -> GammaRatioCheck:
    """Limits of ``f(t + x g(t))/f(t)`` and their agreement with ``exp(alpha x)``.

    ``alpha`` defaults to the :func:`gamma_index` estimate.  The consistency
    statistic is ``max |log(limit)/x - alpha|``; the check passes when at
    least three limits, of both signs of x, are finite and consistent.
    """
    if alpha is None:
        gi = gamma_index(f, g, grid, tol)
        alpha = gi.value if gi.is_finite else None
    sub, _ = _restrict(grid, _aux_shift_ok(f, g, xs))
    if sub is None:
        empty = tuple((float(x), _undetermined_estimate(grid, "no usable probes")) for x in xs)
        return GammaRatioCheck(empty, alpha, math.inf, False)
    fam = estimate_limit_family(lambda t, x: math.exp(log_shift(f, t, x * g(t))), xs, sub, tol)
    good = [(x, est) for x, est in fam if x != 0 and est.is_finite and est.value > 0]
    if alpha is None or not good:
        return GammaRatioCheck(fam.items, alpha, math.inf, False)
    stats = {x: abs(math.log(est.value) / x - alpha) for x, est in good}
    consistency = max(stats.values()) if len(good) == len(fam) else math.inf
    ok_xs = [x for x, s in stats.items() if s <= GAMMA_CONSISTENCY_TOL]
    passed = (len(ok_xs) >= 3 and any(x < 0 for x in ok_xs) and any(x > 0 for x in ok_xs)
              and len(ok_xs) == len(fam))
    return GammaRatioCheck(fam.items, alpha, consistency, passed)


def gamma_sandwich(f: TailFunction, alpha: float, g: TailFunction, eps: float = 0.05,
                   xs: Sequence[float] = GAMMA_XS, grid: ProbeGrid = DEFAULT_GRID) -> bool:
    """``(1-eps) e^{alpha x} < f(t + x g)/f(t) < (1+eps) e^{alpha x}`` at the largest usable probe."""
    sub, _ = _restrict(grid, _aux_shift_ok(f, g, xs))
    if sub is None:
        return False
    t = sub.end
    for x in xs:
        lr = log_shift(f, t, x * g(t)) - alpha * x
        if not (math.log1p(-eps) < lr < math.log1p(eps)):
            return False
    return True


class DeHaanOutcome(enum.Enum):
    RAPID_MINUS = "RapidDeHaan(-inf)"
    RAPID_PLUS = "RapidDeHaan(+inf)"
    NOT_RAPID = "NotRapid"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class DeHaanCheck:
    outcome: DeHaanOutcome
    limits: tuple[tuple[float, LimitEstimate], ...]

    @property
    def sign(self) -> Optional[int]:
        return {DeHaanOutcome.RAPID_MINUS: -1, DeHaanOutcome.RAPID_PLUS: 1}.get(self.outcome)


def dehaan_rapid_check(f: TailFunction, xs: Sequence[float] = DEHAAN_XS, grid: ProbeGrid = DEFAULT_GRID,
                       tol: float = DEFAULT_TOL) -> DeHaanCheck:
    """Pattern of the limits of ``log f(tx) - log f(t)`` on either side of ``x = 1``."""
    xs = [float(x) for x in xs]
    if 1.0 in xs or not (min(xs) < 1 < max(xs)):
        raise ValueError("xs must exclude 1 and straddle it")
    sub, _ = _restrict(grid, lambda t: t * min(xs) >= f.t0 and _safe(f.log)(t * max(xs)))
    if sub is None:
        return DeHaanCheck(DeHaanOutcome.UNDETERMINED, ())
    # the log ratio diverges linearly in t for exponential-type decay
    fam = estimate_limit_family(lambda t, x: f.log(t * x) - f.log(t), xs, sub, tol)
    pattern = set()
    for x, est in fam:
        below = x < 1
        if est.verdict is Verdict.PLUS_INFINITY:
            pattern.add("minus" if below else "plus")
        elif est.verdict is Verdict.MINUS_INFINITY:
            pattern.add("plus" if below else "minus")
        elif est.is_finite:
            pattern.add("finite")
        else:
            pattern.add("unknown")
    if pattern == {"minus"}:
        return DeHaanCheck(DeHaanOutcome.RAPID_MINUS, fam.items)
    if pattern == {"plus"}:
        return DeHaanCheck(DeHaanOutcome.RAPID_PLUS, fam.items)
    if pattern == {"finite"}:
        return DeHaanCheck(DeHaanOutcome.NOT_RAPID, fam.items)
    return DeHaanCheck(DeHaanOutcome.UNDETERMINED, fam.items)


@dataclass(frozen=True)
class TaylorReport:
    t: float
    errors: tuple[tuple[float, float], ...]

    @property
    def max_error(self) -> float:
        return max(e for _, e in self.errors)


def taylor_check(f: TailFunction, g: TailFunction, xs: Sequence[float] = (-1.0, -0.5, 0.5, 1.0),
                 grid: ProbeGrid = DEFAULT_GRID, resolution: float = 1e-8) -> TaylorReport:
    """Relative error of ``f(t + x g) - f(t) ~ x g f'(t)`` at the largest probe.

    The largest probe is the last one where ``min |x| g(t)`` still resolves
    to relative ``resolution`` of ``t``, so the plain difference of ``f`` is
    meaningful.
    """
    xmin = min(abs(x) for x in xs)
    sub, _ = _restrict(grid, lambda t: t + min(xs) * g(t) >= f.t0 and xmin * g(t) >= resolution * t)
    if sub is None:
        raise GridError("no probe resolves the Taylor increment")
    t = sub.end
    errs = []
    for x in xs:
        lin = x * g(t) * f.derivative(t)
        diff = f(t + x * g(t)) - f(t)
        errs.append((float(x), abs(diff - lin) / abs(lin)))
    return TaylorReport(t, tuple(errs))


# --- fused classification ------------------------------------------------------


def _auxiliary_from(f: TailFunction, grid: ProbeGrid) -> tuple[Optional[TailFunction], str]:
    """``g = |f/f'|`` beyond the last sign change of ``f'`` on the grid."""
    pts = [float(t) for t in grid.points if t >= f.t0]
    signs = []
    for t in pts:
        try:
            signs.append(np.sign(f.log_derivative(t)))
        except (ArithmeticError, ValueError):
            signs.append(0.0)
    last = 0
    for i in range(1, len(signs)):
        if signs[i] != signs[i - 1]:
            last = i
    if last >= len(signs) // 2 or signs[-1] == 0:
        return None, "sign changes of f' persist across the grid"
    start = pts[last]

    def log_g(t):
        d = abs(f.log_derivative(t))
        if not d > 0:
            raise DomainError(f"f' vanishes at t={t!r}")
        return -math.log(d)

    g = TailFunction(lambda t: math.exp(log_g(t)), start, f"|f/f'| of {f.label}", log_eval=log_g)
    return g, f"from t={start:.6g}" if last else ""


def _normalized(g: TailFunction, scale: float) -> TailFunction:
    if abs(scale - 1.0) < 1e-12:
        return g
    ls = math.log(scale)
    return TailFunction(lambda t: g(t) / scale, g.t0, f"({g.label})/{scale:.6g}",
                        log_eval=lambda t: g.log(t) - ls, dlog=None if g.approximate_deriv else g.log_derivative)


def classify_tail(
    f: TailFunction,
    g_hint: Optional[TailFunction] = None,
    grid: ProbeGrid = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
    gamma_xs: Sequence[float] = GAMMA_XS,
    rv_xs: Sequence[float] = RV_XS,
) -> TailClass:
    """Slow, Regular, Gamma, RapidDeHaan or Undetermined, with evidence.

    A finite von Mises index decides between slow and regular variation.  An
    infinite index, or one that drifts without settling, sends the function
    to the rapid branch: an auxiliary ``g`` (the hint, or ``|f/f'|``) must be
    self-neglecting and give a consistent Gamma index, which is then
    normalized to +-1 by rescaling ``g``.  Otherwise the de Haan pattern test
    decides.
    """
    ev: list[Evidence] = []
    vm = von_mises_index(f, grid, tol)
    ev.append(Evidence("von_mises_index", vm, None, vm.diagnostic))
    if vm.is_finite:
        rho = vm.value
        if abs(rho) <= SLOW_BAND:
            fam = ratio_family(f, [x for x in rv_xs if x != 1.0], grid, max(tol, SLOW_BAND))
            ok = fam.all_finite and all(abs(est.value - 1.0) <= SLOW_BAND for _, est in fam)
            ev.append(Evidence("slow_ratio_family", None, ok,
                               f"uniform residual {fam.uniform_residual:.3g}; band |rho| <= {SLOW_BAND:g}"))
            return TailClass.slow(ev)
        potter = potter_check(f, rho, 0.1, [x for x in rv_xs if x >= 1], grid)
        ev.append(Evidence("potter_check", None, potter, "eps = 0.1"))
        return TailClass.regular(rho, ev)

    oscillating = vm.diagnostic.startswith("oscillating")
    if not oscillating:
        if g_hint is not None:
            g, note = g_hint, "auxiliary from hint"
        else:
            g, note = _auxiliary_from(f, grid)
        if g is None:
            ev.append(Evidence("auxiliary", None, False, note))
        else:
            sn = check_self_neglecting(g, gamma_xs, grid, tol)
            ev.append(Evidence("self_neglect.g_over_t", sn.gt_over_t, sn.passed,
                               "; ".join(p for p in (f"ratio residual {sn.ratio_residual:.3g}", note, sn.detail) if p)))
            gi = gamma_index(f, g, grid, tol)
            ev.append(Evidence("gamma_index", gi, gi.is_finite and gi.value != 0, gi.diagnostic))
            if sn.passed and gi.is_finite and abs(gi.value) > SLOW_BAND:
                rc = gamma_ratio_check(f, g, gamma_xs, grid, tol, gi.value)
                ev.append(Evidence("gamma_ratio_check", None, rc.passed, f"consistency {rc.consistency:.3g}"))
                if rc.passed:
                    alpha = gi.value
                    return TailClass.gamma(math.copysign(1.0, alpha), _normalized(g, abs(alpha)), ev)

    dh = dehaan_rapid_check(f, DEHAAN_XS, grid, tol)
    ev.append(Evidence("dehaan_rapid_check", None, dh.sign is not None, dh.outcome.value))
    if dh.sign is not None:
        return TailClass.rapid(dh.sign, ev)
    return TailClass.undetermined(ev)


__all__ = [
    "DEHAAN_XS", "POTTER_XS", "DeHaanCheck", "DeHaanOutcome", "Evidence", "GAMMA_XS", "GammaRatioCheck", "Kind", "RV_XS",
    "SLOW_BAND", "SelfNeglectReport", "TailClass", "TaylorReport", "check_self_neglecting", "classify_tail",
    "dehaan_rapid_check", "gamma_index", "gamma_ratio_check", "gamma_sandwich", "karamata_ratio", "log_shift",
    "potter_check", "ratio_family", "taylor_check", "von_mises_index",
]
