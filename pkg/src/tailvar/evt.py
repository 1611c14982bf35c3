"""Extreme-value domains of attraction, normalizing constants and Monte Carlo maxima.

Block maxima are simulated from counter-based Philox streams keyed by
``(seed, block)``; every block owns its stream, so the sample does not depend
on how blocks are scheduled across workers.  Only the maximum uniform of each
block is pushed through the (monotone) inverse-CDF sampler.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .classify import Kind, TailClass, classify_tail
from .funcmodel import Distribution
from .hazard import reciprocal_hazard_R
from .inverses import generalized_inverse
from .numlimit import DEFAULT_GRID, ProbeGrid

_HALF_ULP = 2.0 ** -54


@dataclass(frozen=True)
class Domain:
    kind: str  # "Frechet", "Gumbel" or "None"
    alpha: Optional[float] = None
    tail_class: Optional[TailClass] = None

    def __str__(self) -> str:
        if self.kind == "Frechet":
            return f"Frechet({self.alpha:.4g})"
        return self.kind

    def cdf(self, x: np.ndarray) -> np.ndarray:
        """Limit law: ``exp(-x^-alpha)`` (x > 0) or ``exp(-exp(-x))``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "Gumbel":
            return np.exp(-np.exp(-x))
        if self.kind == "Frechet":
            out = np.zeros_like(x)
            pos = x > 0
            out[pos] = np.exp(-x[pos] ** -self.alpha)
            return out
        raise ValueError("no limit law for an empty domain of attraction")


GUMBEL = Domain("Gumbel")


def frechet_domain(alpha: float) -> Domain:
    return Domain("Frechet", float(alpha))


def domain_of_attraction(d: Distribution, grid: Optional[ProbeGrid] = None) -> Domain:
    """Frechet(alpha) for a Regular(-alpha) survival, Gumbel for Gamma(-1, g), else None."""
    tc = classify_tail(d.survival, grid=grid or DEFAULT_GRID)
    if tc.kind is Kind.REGULAR and tc.index < 0:
        return Domain("Frechet", -tc.index, tc)
    if tc.kind is Kind.GAMMA and tc.index < 0:
        return Domain("Gumbel", None, tc)
    return Domain("None", None, tc)


def normalizing_constants(d: Distribution, n: int, domain: Domain) -> tuple[float, float]:
    """``(a_n, b_n)``.

    Frechet: ``a_n`` is the survival quantile at ``1/n`` and ``b_n = 0``.
    Gumbel: ``b_n`` is that quantile and ``a_n = R(b_n)``, the reciprocal
    hazard (mean excess ratio) at ``b_n``.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if domain.kind == "None":
        raise ValueError("no normalizing constants outside a domain of attraction")
    q = generalized_inverse(d.survival, "right")(1.0 / n)
    if domain.kind == "Frechet":
        return q, 0.0
    return reciprocal_hazard_R(d, q), q


def _block_max_uniform(seed: int, block: int, n: int) -> float:
    gen = np.random.Generator(np.random.Philox(key=[seed, block]))
    return float(gen.random(n).max()) + _HALF_ULP


def simulate_maxima(
    d: Distribution,
    n: int,
    blocks: int,
    seed: int,
    domain: Optional[Domain] = None,
    workers: int = 1,
    constants: Optional[tuple[float, float]] = None,
) -> np.ndarray:
    """``blocks`` normalized maxima of ``n`` samples: ``M/a_n`` or ``(M - b_n)/a_n``."""
    if d.sampler is None:
        raise ValueError(f"{d.label}: distribution has no sampler")
    if blocks < 1 or n < 1:
        raise ValueError("n and blocks must be positive")
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must fit in 64 bits")
    domain = domain or domain_of_attraction(d)
    a_n, b_n = constants or normalizing_constants(d, n, domain)
    idx = range(blocks)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            u = list(pool.map(lambda b: _block_max_uniform(seed, b, n), idx))
    else:
        u = [_block_max_uniform(seed, b, n) for b in idx]
    m = np.asarray(d.sampler(np.array(u)), dtype=float)
    return (m - b_n) / a_n


def ks_distance(sample: Sequence[float], domain: Domain) -> float:
    """Kolmogorov-Smirnov distance between the sample and the limit law of ``domain``."""
    x = np.sort(np.asarray(sample, dtype=float))
    if x.size == 0:
        raise ValueError("empty sample")
    n = x.size
    cdf = domain.cdf(x)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


@dataclass(frozen=True)
class EvtReport:
    domain: Domain
    an: tuple[tuple[int, float], ...]
    bn: tuple[tuple[int, float], ...]
    ks: tuple[tuple[int, float], ...]
    seed: int
    blocks: int
    maxima: tuple[tuple[int, np.ndarray], ...] = ()

    def ks_trend_ok(self) -> bool:
        """KS nonincreasing in n up to one inversion."""
        vals = [k for _, k in self.ks]
        return sum(1 for a, b in zip(vals, vals[1:]) if b > a) <= 1

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("n", "blocks", "a_n", "b_n", "ks", "seed"))
        for (n, a), (_, b), (_, k) in zip(self.an, self.bn, self.ks):
            w.writerow((n, self.blocks, repr(a), repr(b), repr(k), self.seed))
        return _emit(buf.getvalue(), path)

    def maxima_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("n", "block", "value"))
        for n, vals in self.maxima:
            for b, v in enumerate(vals):
                w.writerow((n, b, repr(float(v))))
        return _emit(buf.getvalue(), path)


def _emit(text: str, path) -> str:
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def run_evt(d: Distribution, ns: Sequence[int], blocks: int, seed: int, domain: Optional[Domain] = None,
            workers: int = 1) -> EvtReport:
    """Domain, constants, simulated maxima and KS distances for each block size."""
    domain = domain or domain_of_attraction(d)
    if domain.kind == "None":
        return EvtReport(domain, (), (), (), seed, blocks)
    an, bn, ks, mx = [], [], [], []
    for n in ns:
        a, b = normalizing_constants(d, int(n), domain)
        sample = simulate_maxima(d, int(n), blocks, seed, domain, workers, (a, b))
        an.append((int(n), a))
        bn.append((int(n), b))
        ks.append((int(n), ks_distance(sample, domain)))
        mx.append((int(n), sample))
    return EvtReport(domain, tuple(an), tuple(bn), tuple(ks), seed, blocks, tuple(mx))


__all__ = [
    "Domain", "EvtReport", "GUMBEL", "domain_of_attraction", "frechet_domain", "ks_distance",
    "normalizing_constants", "run_evt", "simulate_maxima",
]
