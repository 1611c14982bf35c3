"""Karamata and Gamma representations, normalized slowly varying parts, envelopes."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .funcmodel import DomainError, TailFunction
from .hazard import HazardView
from .numlimit import DEFAULT_GRID, DEFAULT_TOL, LimitEstimate, ProbeGrid, limit_from_values
from .quadrature import QuadratureError, integrate

VALIDATION_COUNT = 8
LOG_F_LIMIT = 1e6
A_STEP = 1e-4
_PANEL_INTERVALS = 400

CSV_HEADER = ("t", "epsilon_or_A", "c_or_B", "residual")


@dataclass(frozen=True, eq=False)
class RepresentationReport:
    """Sampled representation components plus diagnostics.

    ``rows`` holds ``(t, epsilon or A, c or B, |reconstruction/f - 1|)``.  For
    the Gamma form the third column is ``g A'/A``.  ``trend`` is the sequence
    that must tend to zero (``epsilon`` or ``g A'/A``).
    """

    kind: str
    index: float
    rows: tuple[tuple[float, float, float, float], ...]
    residual: float
    calibration_residual: float
    auxiliary: Optional[TailFunction] = None
    c_limit: Optional[LimitEstimate] = None
    fallback_panels: int = 0
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ts(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def trend(self) -> np.ndarray:
        col = 1 if self.kind == "KaramataRV" else 2
        return np.array([r[col] for r in self.rows])

    def trend_halves(self) -> bool:
        """Final trend magnitude at most half the first (both zero counts)."""
        tr = np.abs(self.trend)
        return bool(tr[-1] <= 0.5 * tr[0])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self.rows:
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _origin(f: TailFunction, t0: Optional[float]) -> float:
    a = f.t0 if t0 is None else float(t0)
    if a < f.t0:
        raise DomainError(f"origin {a!r} below the domain of {f.label!r}")
    return a if a > 0 else 1.0


def _calibration_grid(grid: ProbeGrid, a: float, ok=None) -> ProbeGrid:
    def good(t):
        if t <= a:
            return False
        return ok(t) if ok is not None else True
    return grid.restrict(good)


def _validation_points(pts: np.ndarray) -> list[float]:
    idx = np.unique(np.linspace(0, len(pts) - 2, VALIDATION_COUNT).round().astype(int))
    return [float(math.sqrt(pts[i] * pts[i + 1])) for i in idx]


# --- Karamata form ---------------------------------------------------------------


class _EpsilonIntegral:
    """``I(t) = int_a^t eps(z)/z dz`` accumulated panel by panel in ``u = log z``.

    A panel where adaptive quadrature fails (e.g. an oscillating ``eps``) is
    closed with the exact difference ``log f - rho log t`` instead and counted.
    """

    def __init__(self, f: TailFunction, rho: float, a: float):
        self.f, self.rho, self.a = f, rho, a
        self.fallbacks = 0

    def eps(self, t: float) -> float:
        return t * self.f.log_derivative(t) - self.rho

    def panel(self, lo: float, hi: float) -> float:
        ul, uh = math.log(lo), math.log(hi)
        try:
            return integrate(lambda u: self.eps(math.exp(u)), ul, uh, 1e-12, abs_tol=1e-15 * (uh - ul),
                             max_intervals=_PANEL_INTERVALS)
        except QuadratureError:
            self.fallbacks += 1
            return self.f.log(hi) - self.f.log(lo) - self.rho * (uh - ul)

    def cumulative(self, pts: Sequence[float]) -> list[float]:
        out, acc, prev = [], 0.0, self.a
        for t in pts:
            acc += self.panel(prev, t)
            out.append(acc)
            prev = t
        return out


def karamata_decompose(f: TailFunction, rho: float, t0: Optional[float] = None,
                       grid: ProbeGrid = DEFAULT_GRID, tol: float = DEFAULT_TOL) -> RepresentationReport:
    """``f(t) = c(t) t^rho exp(int_{t0}^t eps(z)/z dz)`` with ``eps = t f'/f - rho``.

    ``c(t)`` follows from the identity.  The calibration residual compares
    ``c(t0) t^rho exp(I(t))`` against ``f`` on the probe grid; with an exact
    derivative the two differ only by quadrature error.  Validation probes
    sit between calibration probes and use the limit of ``c``.
    """
    a = _origin(f, t0)
    sub = _calibration_grid(grid, a)
    pts = [float(t) for t in sub.points]
    acc = _EpsilonIntegral(f, rho, a)
    try:
        eps = [acc.eps(t) for t in pts]
    except (ArithmeticError, ValueError) as exc:
        raise DomainError(f"karamata_decompose: derivative unusable: {exc}") from None
    if not all(math.isfinite(e) for e in eps):
        raise DomainError("karamata_decompose: derivative unusable (non-finite epsilon)")
    integral = acc.cumulative(pts)
    log_c0 = f.log(a) - rho * math.log(a)
    log_c = [f.log(t) - rho * math.log(t) - i for t, i in zip(pts, integral)]
    calib = [abs(math.expm1(lc0 - lc)) for lc0, lc in zip([log_c0] * len(log_c), log_c)]

    c_est = limit_from_values(np.exp(log_c), sub, tol)
    c_lim_log = math.log(c_est.value) if c_est is not None and c_est.is_finite and c_est.value > 0 else log_c0

    val_res = 0.0
    for tv in _validation_points(np.array(pts)):
        k = max(i for i, t in enumerate(pts) if t <= tv)
        iv = integral[k] + acc.panel(pts[k], tv)
        val_res = max(val_res, abs(math.expm1(c_lim_log + rho * math.log(tv) + iv - f.log(tv))))

    rows = tuple((t, e, math.exp(lc), r) for t, e, lc, r in zip(pts, eps, log_c, calib))
    notes = []
    if c_est is None or not c_est.is_finite:
        notes.append("c(t) not convergent on the probe range")
    if acc.fallbacks:
        notes.append(f"{acc.fallbacks} panels closed by exact log difference")
    return RepresentationReport("KaramataRV", float(rho), rows, val_res, max(calib), None, c_est,
                                acc.fallbacks, tuple(notes))


def normalized_sv(f: TailFunction, rho: float, t0: Optional[float] = None,
                  grid: ProbeGrid = DEFAULT_GRID, tol: float = DEFAULT_TOL) -> TailFunction:
    """``l1(t) = c exp(int_{t0}^t eps(z)/z dz)`` with ``c`` the limit of ``c(t)``."""
    rep = karamata_decompose(f, rho, t0, grid, tol)
    if rep.c_limit is None or not rep.c_limit.is_finite or not rep.c_limit.value > 0:
        raise ArithmeticError("normalized_sv: c(t) has no finite positive limit on the probe range")
    a = _origin(f, t0)
    acc = _EpsilonIntegral(f, rho, a)
    log_c = math.log(rep.c_limit.value)
    pts = [float(r[0]) for r in rep.rows]
    anchors = [a] + pts
    cum = [0.0] + acc.cumulative(pts)

    def log_l1(t):
        if t < a:
            raise DomainError(f"normalized_sv: t={t!r} below origin {a!r}")
        k = max(i for i, s in enumerate(anchors) if s <= t)
        return log_c + cum[k] + acc.panel(anchors[k], t)

    return TailFunction(lambda t: math.exp(log_l1(t)), a, f"l1 of {f.label}", log_eval=log_l1,
                        dlog=lambda t: acc.eps(t) / t)


# --- Gamma form ------------------------------------------------------------------


def gamma_decompose(f: TailFunction, alpha: float, g: TailFunction, t0: Optional[float] = None,
                    grid: ProbeGrid = DEFAULT_GRID, tol: float = DEFAULT_TOL) -> RepresentationReport:
    """``A(t) = f(t) exp(-alpha H(t))`` with ``H`` the cumulative hazard of ``g``.

    Rows carry ``A`` and ``g A'/A`` (central difference on ``log A`` with step
    ``1e-4 t``).  The probe range stops where ``|log f|`` exceeds 1e6, beyond
    which ``log A`` is a difference of huge numbers.  Validation probes
    reconstruct ``f`` from ``exp(alpha H)`` and ``A`` interpolated log-linearly
    in ``log t`` between neighbouring calibration probes.
    """
    a = f.t0 if t0 is None else float(t0)
    a = max(a, g.t0)
    view = HazardView.from_aux(g, a)

    def log_a(t):
        return f.log(t) - alpha * view.H(t)

    def ok(t):
        return t * (1 - 2 * A_STEP) > a and abs(f.log(t * (1 + A_STEP))) <= LOG_F_LIMIT

    sub = grid.restrict(lambda t: t > a and ok(t))
    pts = [float(t) for t in sub.points]
    la = [log_a(t) for t in pts]
    trend = []
    for t in pts:
        h = A_STEP * t
        trend.append(g(t) * (log_a(t + h) - log_a(t - h)) / (2.0 * h))
    rows = tuple((t, math.exp(l), d, 0.0) for t, l, d in zip(pts, la, trend))
    calib = max(abs(math.expm1(l + alpha * view.H(t) - f.log(t))) for t, l in zip(pts, la))
    val_res = 0.0
    for tv in _validation_points(np.array(pts)):
        k = max(i for i, t in enumerate(pts) if t <= tv)
        w = (math.log(tv) - math.log(pts[k])) / (math.log(pts[k + 1]) - math.log(pts[k]))
        la_v = (1 - w) * la[k] + w * la[k + 1]
        val_res = max(val_res, abs(math.expm1(la_v + alpha * view.H(tv) - f.log(tv))))
    return RepresentationReport("GammaOmey", float(alpha), rows, val_res, calib, g)


# --- envelopes and smooth equivalents ------------------------------------------------


def _envelope_pass(f: TailFunction, a: float, t: float, n: int, sign: float) -> float:
    pts = list(np.geomspace(max(a, 1.0), t, n)) if t > max(a, 1.0) else []
    if a < 1.0:
        pts = list(np.linspace(a, min(1.0, t), max(8, n // 8))) + pts
    pts = sorted(set(float(p) for p in pts if a <= p <= t) | {a, t})
    vals = np.array([sign * f.log(p) for p in pts])
    # candidates: sampled local maxima of sign*log f, best first
    cand = [i for i in range(len(pts))
            if (i == 0 or vals[i] >= vals[i - 1]) and (i == len(pts) - 1 or vals[i] >= vals[i + 1])]
    cand.sort(key=lambda i: -vals[i])
    best = float(vals.max())
    for i in cand[:8]:
        lo, hi = pts[max(i - 1, 0)], pts[min(i + 1, len(pts) - 1)]
        if hi <= lo:
            continue
        res = optimize.minimize_scalar(lambda s: -sign * f.log(s), bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12 * hi})
        best = max(best, -float(res.fun))
    return best


def monotone_envelope(f: TailFunction, direction: str, t: float, rel_tol: float = 1e-6) -> float:
    """``sup`` (or ``inf``) of ``f`` over ``[t0, t]``.

    The search doubles a geometric sampling grid, refining the best sampled
    local extrema with a bounded scalar search, until the value moves by at
    most ``rel_tol``.
    """
    if direction not in ("sup", "inf"):
        raise ValueError(f"direction must be 'sup' or 'inf', got {direction!r}")
    sign = 1.0 if direction == "sup" else -1.0
    a = f.t0
    if t <= a:
        return f(a)
    n, prev = 256, None
    while True:
        cur = _envelope_pass(f, a, t, n, sign)
        if prev is not None and abs(cur - prev) <= math.log1p(rel_tol):
            return math.exp(sign * max(cur, prev))
        prev = max(cur, prev) if prev is not None else cur
        n *= 2
        if n > 1 << 17:
            return math.exp(sign * prev)


def smooth_equivalent(f: TailFunction, rho: float, t0: Optional[float] = None) -> TailFunction:
    """``rho * int_{t0}^t f(s) ds/s`` for ``rho > 0``; through ``1/f`` for ``rho < 0``.

    The result is strictly monotone and tail equivalent to ``f``.
    """
    if rho == 0:
        raise ValueError("smooth_equivalent: rho = 0 is unsupported (degenerate Karamata ratio)")
    a = _origin(f, t0)
    s = 1.0 if rho > 0 else -1.0
    r = abs(rho)

    def log_bar(t):
        # log of r * int_a^t f(x)^s dx/x, integrated relative to f(t)^s
        if t <= a:
            raise DomainError(f"smooth_equivalent: t={t!r} must exceed {a!r}")
        ref = s * f.log(t)
        ua, ut = math.log(a), math.log(t)
        n = max(1, int(ut - ua))
        breaks = [ua + (ut - ua) * k / n for k in range(1, n)]
        body = integrate(lambda u: math.exp(s * f.log(math.exp(u)) - ref), ua, ut, 1e-12, breaks=breaks)
        return s * (math.log(r) + ref + math.log(body))

    def dlog(t):
        # d/dt log(r*gbar) = f^s(t) / (t * gbar(t)), with gbar = int f^s/x
        return s * r * math.exp(s * f.log(t) - s * log_bar(t)) / t

    label = f"smooth equivalent of {f.label}"
    return TailFunction(lambda t: math.exp(log_bar(t)), a, label,
                        log_eval=log_bar, dlog=dlog)


__all__ = [
    "CSV_HEADER", "RepresentationReport", "gamma_decompose", "karamata_decompose", "monotone_envelope",
    "normalized_sv", "smooth_equivalent",
]
