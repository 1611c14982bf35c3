"""Numerical limits at infinity from geometric probe sequences.

Every ``lim_{t->inf}`` in the toolkit is realized here: a function is probed on
a geometric grid ``t_k = T0 * r**k``, the probe sequence is accelerated with
iterated Aitken delta-squared, and a verdict is issued (finite, +inf, -inf, or
undetermined).  The engine prefers an honest ``UNDETERMINED`` over a forced
answer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

DEFAULT_TOL = 5e-3
DIVERGENCE_THRESHOLD = 1e6
# Oscillations below this relative amplitude are treated as rounding noise.
NOISE_FLOOR = 1e-9
TAIL_WINDOW = 8
AITKEN_WINDOW = 16
_MAX_FLOAT = 1e300


class GridError(ValueError):
    """Raised for an invalid probe grid."""


@dataclass(frozen=True)
class ProbeGrid:
    """Geometric probe points ``start * ratio**k`` for ``k < count``."""

    start: float = 8.0
    ratio: float = 2.0
    count: int = 48

    def __post_init__(self):
        if not (self.start > 0 and math.isfinite(self.start)):
            raise GridError(f"grid start must be positive and finite, got {self.start}")
        if not (self.ratio > 1 and math.isfinite(self.ratio)):
            raise GridError(f"grid ratio must exceed 1, got {self.ratio}")
        if int(self.count) != self.count or self.count < 8:
            raise GridError(f"grid count must be an integer >= 8, got {self.count}")
        last = math.log(self.start) + (self.count - 1) * math.log(self.ratio)
        if last >= math.log(_MAX_FLOAT):
            raise GridError("grid end exceeds the floating-point range")

    @property
    def points(self) -> np.ndarray:
        return self.start * self.ratio ** np.arange(self.count, dtype=float)

    @property
    def end(self) -> float:
        return float(self.points[-1])

    @classmethod
    def between(cls, a: float, b: float, count: int) -> "ProbeGrid":
        """Geometric grid with ``count`` points from ``a`` to ``b``."""
        if not b > a > 0:
            raise GridError(f"cannot span [{a}, {b}] geometrically")
        return cls(a, (b / a) ** (1.0 / (count - 1)), count)

    def restrict(self, ok: Callable[[float], bool]) -> "ProbeGrid":
        """Sub-grid on the contiguous run of probes where ``ok`` holds.

        The run starts at the first acceptable probe and stops before the next
        rejected one.  When it holds fewer than ``count`` points the run is
        re-spaced so the grid keeps its size.
        """
        pts = self.points
        flags = []
        for t in pts:
            try:
                flags.append(bool(ok(float(t))))
            except (ArithmeticError, ValueError):
                flags.append(False)
        try:
            first = flags.index(True)
        except ValueError:
            raise GridError("no probe point satisfies the grid constraint") from None
        last = first
        while last + 1 < len(flags) and flags[last + 1]:
            last += 1
        if last == len(flags) - 1 and first == 0:
            return self
        lo, hi = float(pts[first]), float(pts[last])
        if last - first + 1 >= self.count:
            return ProbeGrid(lo, self.ratio, last - first + 1)
        if hi / lo < 1.5:
            raise GridError(f"usable probe range [{lo:g}, {hi:g}] is too narrow")
        return ProbeGrid.between(lo, hi, self.count)


DEFAULT_GRID = ProbeGrid()


class Verdict(enum.Enum):
    FINITE = "finite"
    PLUS_INFINITY = "+inf"
    MINUS_INFINITY = "-inf"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class LimitEstimate:
    verdict: Verdict
    value: float | None
    raw_tail: tuple[float, ...]
    accel_tail: tuple[float, ...]
    residual: float
    grid: ProbeGrid
    diagnostic: str = ""

    @property
    def is_finite(self) -> bool:
        return self.verdict is Verdict.FINITE

    @property
    def is_infinite(self) -> bool:
        return self.verdict in (Verdict.PLUS_INFINITY, Verdict.MINUS_INFINITY)

    def near(self, target: float, tol: float) -> bool:
        """True when the verdict is finite and within ``tol`` of ``target``."""
        return self.is_finite and abs(self.value - target) <= tol

    def describe(self) -> str:
        if self.is_finite:
            return f"Finite({self.value:.6g})"
        return self.verdict.value


def aitken(seq: np.ndarray) -> np.ndarray:
    """One Aitken delta-squared sweep; keeps ``s[k+2]`` where the denominator vanishes."""
    s0, s1, s2 = seq[:-2], seq[1:-1], seq[2:]
    d1 = s2 - s1
    denom = d1 - (s1 - s0)
    scale = np.maximum(np.abs(s2), 1.0)
    out = s2.copy()
    good = np.abs(denom) > 1e-13 * scale
    out[good] = s2[good] - d1[good] ** 2 / denom[good]
    out[~np.isfinite(out)] = s2[~np.isfinite(out)]
    return out


def _spread(vals: Sequence[float]) -> float:
    return float(np.max(vals) - np.min(vals))


EXACT_SPREAD = 1e-12


def _residual(level: np.ndarray, raw_last: float) -> float:
    spread = _spread(level[-4:])
    # A tail constant to rounding means the sequence was exactly geometric and
    # the extrapolation is exact; no penalty for the jump.
    if spread <= EXACT_SPREAD * max(1.0, abs(float(level[-1]))):
        return spread
    return max(spread, abs(float(level[-1]) - raw_last) / 10.0)


def _contracting(vals: np.ndarray, scale: float, tol: float) -> bool:
    """At least 2 of the last 3 successive difference magnitudes are nonincreasing.

    Differences far below the tolerance are noise and count as contracting.
    """
    d = np.abs(np.diff(vals[-5:]))
    if len(d) < 2:
        return True
    slack = max(1e-12, 1e-2 * tol) * scale
    steps = [d[i + 1] <= d[i] + slack for i in range(len(d) - 1)]
    return sum(steps) >= min(2, len(steps))


def _oscillating(values: np.ndarray) -> bool:
    tail = values[-TAIL_WINDOW:]
    d = np.diff(tail)
    floor = NOISE_FLOOR * max(1.0, float(np.max(np.abs(tail))))
    sig = d[np.abs(d) > floor]
    if len(sig) < 2:
        return False
    changes = int(np.sum(np.sign(sig[1:]) != np.sign(sig[:-1])))
    return changes >= len(tail) // 2


def _undetermined(grid, raw, why, accel=()) -> LimitEstimate:
    return LimitEstimate(Verdict.UNDETERMINED, None, tuple(raw), tuple(accel), math.inf, grid, why)


def estimate_limit(
    f: Callable[[float], float],
    grid: ProbeGrid = DEFAULT_GRID,
    tol_limit: float = DEFAULT_TOL,
    divergence: float = DIVERGENCE_THRESHOLD,
) -> LimitEstimate:
    """Estimate ``lim f(t)`` as ``t -> inf`` from probes on ``grid``.

    The finite value is the last entry of the accelerated sequence.  The
    residual of an Aitken iteration level is the larger of its tail spread and
    a tenth of the distance its last entry moved away from the last raw probe,
    so an aggressive extrapolation carries a proportionate uncertainty unless
    its tail is constant to rounding.
    The level with the tightest tail is kept (level 0 is the raw tail).  A finite verdict
    requires ``residual <= tol_limit * max(1, |value|)``.
    """
    pts = grid.points
    values = np.empty(len(pts))
    for k, t in enumerate(pts):
        try:
            v = float(f(float(t)))
        except (ArithmeticError, ValueError) as exc:
            return _undetermined(grid, values[:k][-4:], f"evaluation failed at t={t:.6g}: {exc}")
        if not math.isfinite(v):
            return _undetermined(grid, values[:k][-4:], f"non-finite value at t={t:.6g}")
        values[k] = v
    return limit_from_values(values, grid, tol_limit, divergence)


def limit_from_values(
    values: np.ndarray,
    grid: ProbeGrid,
    tol_limit: float = DEFAULT_TOL,
    divergence: float = DIVERGENCE_THRESHOLD,
) -> LimitEstimate:
    """Verdict for an already evaluated probe sequence."""
    values = np.asarray(values, dtype=float)
    raw_tail = tuple(float(v) for v in values[-4:])
    last4 = values[-4:]
    if abs(values[-1]) > divergence:
        diffs = np.diff(last4)
        if values[-1] > 0 and np.all(diffs > 0):
            return LimitEstimate(Verdict.PLUS_INFINITY, None, raw_tail, (), math.inf, grid,
                                 "raw probes exceed divergence threshold and increase")
        if values[-1] < 0 and np.all(diffs < 0):
            return LimitEstimate(Verdict.MINUS_INFINITY, None, raw_tail, (), math.inf, grid,
                                 "raw probes fall below -threshold and decrease")
    if _oscillating(values):
        return _undetermined(grid, raw_tail, "oscillating probe differences")

    window = values[-AITKEN_WINDOW:]
    levels = [window]
    while len(levels[-1]) >= 7:
        levels.append(aitken(levels[-1]))
    best = min(levels, key=lambda lv: _spread(lv[-4:]))
    accel_tail = tuple(float(v) for v in best[-4:])
    value = accel_tail[-1]
    residual = _residual(best, values[-1])
    scale = max(1.0, abs(value))
    if residual <= tol_limit * scale and _contracting(best, scale, tol_limit):
        return LimitEstimate(Verdict.FINITE, value, raw_tail, accel_tail, residual, grid)
    why = "residual above tolerance" if residual > tol_limit * scale else "accelerated tail not contracting"
    return LimitEstimate(Verdict.UNDETERMINED, None, raw_tail, accel_tail, residual, grid, why)


@dataclass(frozen=True)
class FamilyEstimate:
    """Per-x limits of ``f(t, x)`` plus the worst residual across ``xs``."""

    items: tuple[tuple[float, LimitEstimate], ...]
    uniform_residual: float = field(default=math.inf)

    def __iter__(self) -> Iterator[tuple[float, LimitEstimate]]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    @property
    def all_finite(self) -> bool:
        return all(est.is_finite for _, est in self.items)


def estimate_limit_family(
    f: Callable[[float, float], float],
    xs: Iterable[float],
    grid: ProbeGrid = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
) -> FamilyEstimate:
    xs = [float(x) for x in xs]
    if not xs:
        raise ValueError("xs must be nonempty")
    items = tuple((x, estimate_limit(lambda t, x=x: f(t, x), grid, tol)) for x in xs)
    return FamilyEstimate(items, max(est.residual for _, est in items))
