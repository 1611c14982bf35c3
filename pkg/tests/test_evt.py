import math

import numpy as np
import pytest
from scipy import stats

from tailvar.evt import (
    GUMBEL, Domain, domain_of_attraction, frechet_domain, ks_distance, normalizing_constants, run_evt,
    simulate_maxima,
)
from tailvar.funcmodel import Distribution, exponential, log_tail, pareto, standard_normal

import oracles

# [DERIVED] mpmath: normal upper quantile at 1e-4 and R there
NORMAL_B_1E4 = 3.7190164854556804
NORMAL_R_AT_B_1E4 = 0.2394631821436682
# [DERIVED] mpmath: median of M_n/n for Pareto(1), n = 1000, from (1 - 1/(n x))^n = 1/2
PARETO1_MEDIAN_1000 = 1.443195098651228
GUMBEL_MEDIAN = -math.log(math.log(2.0))


def dkw_bound(n, alpha=0.01):
    return math.sqrt(math.log(2 / alpha) / (2 * n))


def test_domains():
    d = domain_of_attraction(pareto(2.0))
    assert d.kind == "Frechet" and d.alpha == pytest.approx(2.0, abs=1e-9)
    assert str(d) == "Frechet(2)"
    assert domain_of_attraction(standard_normal()).kind == "Gumbel"
    assert domain_of_attraction(log_tail()).kind == "None"


def test_normalizing_constants():
    a, b = normalizing_constants(pareto(2.0), 100, frechet_domain(2.0))
    assert a == pytest.approx(10.0, rel=1e-12) and b == 0.0
    n = round(math.exp(10))
    a, b = normalizing_constants(exponential(1.0), n, GUMBEL)
    assert b == pytest.approx(math.log(n), rel=1e-12) and abs(b - 10) < 1e-4
    assert a == pytest.approx(1.0, rel=1e-8)


def test_normal_constants_against_oracle():
    a, b = normalizing_constants(standard_normal(), 10 ** 4, GUMBEL)
    assert b == pytest.approx(NORMAL_B_1E4, rel=1e-8)
    assert a == pytest.approx(NORMAL_R_AT_B_1E4, rel=1e-7)
    # a_n tends to 1/b_n, but at n = 1e4 the two still differ by about 11%
    assert 0.85 < a * b < 0.95


def test_constants_need_a_domain():
    with pytest.raises(ValueError):
        normalizing_constants(log_tail(), 10, Domain("None"))
    with pytest.raises(ValueError):
        normalizing_constants(pareto(2.0), 0, frechet_domain(2.0))


def test_degenerate_single_sample_blocks():
    d = exponential(1.0)
    got = simulate_maxima(d, 1, 3, 7, GUMBEL)
    a, b = normalizing_constants(d, 1, GUMBEL)
    assert b == 0.0 and a == pytest.approx(1.0)
    raw = [d.sampler(np.array([np.random.Generator(np.random.Philox(key=[7, k])).random(1)[0] + 2.0 ** -54]))[0]
           for k in range(3)]
    assert np.allclose(got, (np.array(raw) - b) / a, rtol=1e-12)


def test_pareto1_median():
    m = simulate_maxima(pareto(1.0), 1000, 1000, 3, frechet_domain(1.0))
    assert abs(np.median(m) - 1 / math.log(2)) <= 0.1 / math.log(2)
    assert abs(np.median(m) - PARETO1_MEDIAN_1000) <= 0.1 * PARETO1_MEDIAN_1000


def test_normal_median():
    m = simulate_maxima(standard_normal(), 10 ** 4, 1000, 5, GUMBEL)
    assert abs(np.median(m) - GUMBEL_MEDIAN) <= 0.1


def test_seed_determinism_and_worker_independence():
    d = standard_normal()
    a = simulate_maxima(d, 500, 200, 42, GUMBEL)
    b = simulate_maxima(d, 500, 200, 42, GUMBEL, workers=4)
    c = simulate_maxima(d, 500, 200, 43, GUMBEL)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_simulation_errors():
    no_sampler = Distribution(exponential(1.0).survival, label="bare")
    with pytest.raises(ValueError, match="sampler"):
        simulate_maxima(no_sampler, 10, 100, 1, GUMBEL)
    with pytest.raises(ValueError):
        simulate_maxima(exponential(1.0), 10, 100, -1, GUMBEL)


def test_ks_against_scipy():
    x = np.random.Generator(np.random.Philox(key=[1, 2])).gumbel(size=700)
    assert ks_distance(x, GUMBEL) == pytest.approx(stats.kstest(x, "gumbel_r").statistic, abs=1e-14)
    y = np.random.Generator(np.random.Philox(key=[1, 3])).random(500) ** -0.5 - 0.3
    ref = stats.kstest(y, lambda v: np.where(v > 0, np.exp(-np.maximum(v, 1e-300) ** -2.0), 0.0)).statistic
    assert ks_distance(y, frechet_domain(2.0)) == pytest.approx(ref, abs=1e-14)


def test_ks_exact_gumbel_samples():
    # exact Gumbel draws: every sample within 0.02, at most one outside the 99% DKW band
    outside = 0
    for k in range(5):
        u = np.random.Generator(np.random.Philox(key=[9, k])).random(10 ** 4)
        ks = ks_distance(-np.log(-np.log(u)), GUMBEL)
        assert ks <= 0.02
        outside += ks > dkw_bound(10 ** 4)
    assert outside <= 1


def test_ks_degenerate_cases():
    assert ks_distance([GUMBEL_MEDIAN], GUMBEL) == pytest.approx(0.5, abs=1e-15)
    assert ks_distance([1.0] * 7, GUMBEL) >= 0.5
    with pytest.raises(ValueError):
        ks_distance([], GUMBEL)


def test_convergence_trend_exponential_and_pareto():
    for d, dom in ((exponential(1.0), GUMBEL), (pareto(2.0), frechet_domain(2.0))):
        rep = run_evt(d, [100, 10 ** 4], 2000, 7, dom)
        ks = dict(rep.ks)
        assert ks[10 ** 4] <= ks[100] + 0.01


def test_report_csv(tmp_path):
    rep = run_evt(exponential(1.0), [100, 1000], 150, 5, GUMBEL)
    text = rep.to_csv(tmp_path / "evt.csv")
    lines = text.strip("\n").split("\n")
    assert lines[0] == "n,blocks,a_n,b_n,ks,seed"
    assert lines[1].startswith("100,150,") and lines[1].endswith(",5")
    mx = rep.maxima_csv()
    assert mx.count("\n") == 1 + 2 * 150
    assert run_evt(exponential(1.0), [100, 1000], 150, 5, GUMBEL).to_csv() == text


def test_run_evt_without_domain():
    rep = run_evt(log_tail(), [100], 100, 1)
    assert rep.domain.kind == "None" and rep.ks == ()


def test_frozen_oracles_current():
    b = oracles.normal_isf(1e-4)
    assert float(b) == pytest.approx(NORMAL_B_1E4, rel=1e-15)
    assert float(oracles.normal_R(b)) == pytest.approx(NORMAL_R_AT_B_1E4, rel=1e-14)
    assert float(oracles.pareto1_median_finite(1000)) == pytest.approx(PARETO1_MEDIAN_1000, rel=1e-14)
    assert float(oracles.gumbel_median()) == pytest.approx(GUMBEL_MEDIAN, rel=1e-15)
