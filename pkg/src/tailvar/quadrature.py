"""Adaptive Gauss-Kronrod (7/15) quadrature with tail substitutions."""

from __future__ import annotations

import heapq
import math
from typing import Callable, Sequence

import numpy as np

# Kronrod nodes on [0, 1] (symmetric half) with Kronrod and Gauss weights.
_XK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                0.207784955007898467600689403773245, 0.0])
_WK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
W_KRONROD = np.concatenate([_WK[:-1], _WK[::-1]])
W_GAUSS = np.zeros(15)
W_GAUSS[[1, 3, 5]] = _WG[:3]
W_GAUSS[[13, 11, 9]] = _WG[:3]
W_GAUSS[7] = _WG[3]

ABS_FLOOR = 1e-300


class QuadratureError(ArithmeticError):
    """Adaptive refinement failed to reach the requested tolerance."""


def gk15(f: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    fx = np.array([f(c + h * x) for x in NODES])
    if not np.all(np.isfinite(fx)):
        raise QuadratureError(f"non-finite integrand on [{a!r}, {b!r}]")
    k = h * float(W_KRONROD @ fx)
    g = h * float(W_GAUSS @ fx)
    return k, abs(k - g)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    abs_tol: float = ABS_FLOOR,
    max_intervals: int = 4000,
    breaks: Sequence[float] = (),
) -> float:
    """Globally adaptive GK15 on ``[a, b]``.

    ``breaks`` optionally seeds the partition with interior points.

    The interval with the largest error estimate is bisected until the total
    error meets ``max(abs_tol, rel_tol * |I|)``.  Exceeding ``max_intervals``
    or bisecting below floating-point resolution raises
    :class:`QuadratureError`.
    """
    if a == b:
        return 0.0
    if b < a:
        return -integrate(f, b, a, rel_tol, abs_tol, max_intervals)
    cuts = [a] + sorted(x for x in breaks if a < x < b) + [b]
    heap = []
    for lo, hi in zip(cuts, cuts[1:]):
        val, err = gk15(f, lo, hi)
        heap.append((-err, lo, hi, val))
    heapq.heapify(heap)
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    n = len(heap)
    while total_err > max(abs_tol, rel_tol * abs(total)):
        if n >= max_intervals:
            raise QuadratureError(f"no convergence on [{a!r}, {b!r}] after {n} intervals")
        neg_err, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            raise QuadratureError(f"interval [{lo!r}, {hi!r}] cannot be bisected further")
        v1, e1 = gk15(f, lo, mid)
        v2, e2 = gk15(f, mid, hi)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        n += 1
    # Re-sum to shed the drift of incremental updates.
    return float(math.fsum(item[3] for item in heap))


def integrate_panels(
    f: Callable[[float], float], a: float, b: float, rel_tol: float = 1e-10, panel_ratio: float = 10.0,
) -> float:
    """Integrate over geometrically spaced panels when ``[a, b]`` spans decades.

    Panels break the range at ``a * panel_ratio**j`` (after an initial panel
    up to 1 when ``a <= 0``), so integrands whose scale varies over many
    orders of magnitude are refined panel by panel.
    """
    if b <= a:
        return -integrate_panels(f, b, a, rel_tol, panel_ratio) if b < a else 0.0
    cuts = [a]
    lo = a
    if lo <= 0 < b:
        lo = min(1.0, b)
        cuts.append(lo)
    while lo > 0 and lo * panel_ratio < b:
        lo *= panel_ratio
        cuts.append(lo)
    if cuts[-1] != b:
        cuts.append(b)
    return math.fsum(integrate(f, x, y, rel_tol) for x, y in zip(cuts, cuts[1:]))


LOG_X_MAX = math.log(1e300)
LIGHT_TAIL_INDEX = 20.0


class DivergentTailError(QuadratureError):
    """The tail integral diverges or decays too slowly to evaluate."""


def tail_ratio(
    log_f: Callable[[float], float],
    dlog_f: Callable[[float], float],
    t: float,
    rel_tol: float = 1e-10,
) -> float:
    """``int_t^inf f(x) dx / f(t)`` for a positive, eventually decreasing ``f``.

    Light tails (local index ``t f'/f`` below ``-LIGHT_TAIL_INDEX``) use the
    substitution ``x = t + L s/(1-s)`` with the natural length
    ``L = f/|f'|`` at ``t``.  Otherwise the integral runs in ``u = log x`` up
    to ``x = 1e300``; the remainder beyond is closed with the Karamata
    estimate ``U phi(U)/(-sigma-1)`` for the integrand ``phi(u) = x f(x)``
    with local index ``sigma`` in ``u``.  A remainder with ``sigma >= -1``
    means the integral diverges (or is too heavy to evaluate) and raises
    :class:`DivergentTailError`.
    """
    ref = log_f(t)
    slope = dlog_f(t)
    if slope >= 0:
        raise DivergentTailError(f"tail integral divergent or too heavy: integrand not decreasing at t={t!r}")
    if t > 0 and t * slope > -LIGHT_TAIL_INDEX and math.log(t) < LOG_X_MAX - 1:
        return _log_route(log_f, dlog_f, t, ref, rel_tol)
    L = -1.0 / slope
    # When one ulp of t moves log f by more than ~1e-12, log f(x) - log f(t)
    # is pure rounding noise; integrate the log-derivative over [t, x] instead.
    by_slope = abs(t * slope) * 2.2e-16 > 1e-12

    def linear(s):
        if s >= 1.0:
            return 0.0
        d = L * (s / (1.0 - s))
        if not math.isfinite(t + d):
            return 0.0
        if by_slope:
            try:
                expo = log_increment(dlog_f, t, d)
                w = math.exp(expo) if expo > -745.0 else 0.0
            except (ArithmeticError, ValueError):
                w = 0.0
        else:
            w = _safe_exp(log_f, t + d, ref)
        return w * L / (1.0 - s) ** 2

    try:
        return integrate(linear, 0.0, 1.0, rel_tol, breaks=(0.5, 0.75, 0.875, 0.9375))
    except QuadratureError:
        if t <= 0:
            raise DivergentTailError(f"tail integral divergent or too heavy at t={t!r}") from None
        return _log_route(log_f, dlog_f, t, ref, rel_tol)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def log_increment(dlog_f: Callable[[float], float], t: float, d: float) -> float:
    """``log f(t + d) - log f(t)`` as an 8-point Gauss-Legendre integral of ``dlog_f``.

    Unlike a difference of two logarithms this keeps full relative accuracy
    when ``d`` is far below the resolution of ``t``.
    """
    half = 0.5 * d
    return half * math.fsum(w * dlog_f(t + half * (1.0 + x)) for x, w in zip(_GL_X, _GL_W))


def _safe_exp(log_f, x, ref):
    try:
        return math.exp(log_f(x) - ref)
    except (ArithmeticError, ValueError):
        # beyond the representable range the integrand has underflowed
        return 0.0


def _log_route(log_f, dlog_f, t, ref, rel_tol):
    u0 = math.log(t)

    def phi(u):
        x = math.exp(u)
        return _safe_exp(log_f, x, ref - u)

    width = LOG_X_MAX - u0
    breaks = [u0 + width * k / 64.0 for k in range(1, 64)]
    try:
        body = integrate(phi, u0, LOG_X_MAX, rel_tol, breaks=breaks)
    except QuadratureError as exc:
        raise DivergentTailError(f"tail integral divergent or too heavy: {exc}") from None
    tail_phi = phi(LOG_X_MAX)
    if tail_phi <= rel_tol * 1e-3 * body:
        return body
    x_max = math.exp(LOG_X_MAX)
    sigma = LOG_X_MAX * (1.0 + x_max * dlog_f(x_max))
    if not sigma < -1.0:
        raise DivergentTailError(
            f"tail integral divergent or too heavy (log-scale index {sigma:.3g} at x=1e300)")
    return body + LOG_X_MAX * tail_phi / (-sigma - 1.0)
