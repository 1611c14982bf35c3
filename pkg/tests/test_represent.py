import math

import numpy as np
import pytest

from tailvar.classify import Kind
from tailvar.funcmodel import TailFunction, catalog, constant, exponential, make_analytic, power_function, scale, \
    standard_normal
from tailvar.numlimit import ProbeGrid
from tailvar.represent import (
    CSV_HEADER, gamma_decompose, karamata_decompose, monotone_envelope, normalized_sv, smooth_equivalent,
)

INV_T = power_function(-1.0, 1.0)


def t2logt():
    return TailFunction(lambda t: t * t * math.log(t), math.e, "t^2 log t",
                        log_eval=lambda t: 2 * math.log(t) + math.log(math.log(t)),
                        dlog=lambda t: 2 / t + 1 / (t * math.log(t)))


def test_pure_power_has_zero_epsilon_and_unit_c():
    rep = karamata_decompose(power_function(2.0), 2.0)
    assert all(r[1] == 0.0 for r in rep.rows)
    assert all(r[2] == pytest.approx(1.0, rel=1e-14) for r in rep.rows)
    assert rep.c_limit.near(1.0, 1e-12)


def test_t2logt_epsilon():
    rep = karamata_decompose(t2logt(), 2.0, t0=math.e, grid=ProbeGrid(math.e ** 8, 2.0, 30))
    assert rep.rows[0][0] == pytest.approx(math.e ** 8)
    assert rep.rows[0][1] == pytest.approx(0.125, rel=1e-12)
    for t, eps, c, _ in rep.rows:
        assert eps == pytest.approx(1 / math.log(t), rel=1e-10)
        assert c == pytest.approx(1.0, rel=1e-9)


def test_log_survival_epsilon_vanishes():
    f = next(e for e in catalog() if e.name == "LogTail").function
    rep = karamata_decompose(f, 0.0)
    for t, eps, _, _ in rep.rows:
        assert eps == pytest.approx(-1 / math.log(t), rel=1e-10)
    assert rep.trend_halves()


REGULAR = [e for e in catalog() if e.truth.kind in (Kind.REGULAR, Kind.SLOW)]


@pytest.mark.parametrize("entry", REGULAR, ids=lambda e: e.name)
def test_reconstruction_identity(entry):
    rep = karamata_decompose(entry.function, entry.truth.index)
    assert rep.calibration_residual <= 1e-6
    assert rep.residual <= 1e-2


def test_equivalence_class_stability():
    f = TailFunction(lambda t: t ** -2 * math.log(t + 1), 1.0, "f", log_eval=lambda t: -2 * math.log(t) + math.log(math.log(t + 1)),
                     dlog=lambda t: -2 / t + 1 / ((t + 1) * math.log(t + 1)))
    a = karamata_decompose(f, -2.0)
    b = karamata_decompose(scale(f, 2.0), -2.0)
    assert [r[1] for r in a.rows] == [r[1] for r in b.rows]
    for ra, rb in zip(a.rows, b.rows):
        assert rb[2] / ra[2] == pytest.approx(2.0, rel=1e-13)


def test_normalized_sv():
    l1 = normalized_sv(power_function(2.0), 2.0)
    assert l1(1e6) == pytest.approx(1.0, rel=1e-12)
    f = make_analytic(lambda t: 3 * math.log(t) / t, t0=2.0, dlog=lambda t: 1 / (t * math.log(t)) - 1 / t,
                      log_eval=lambda t: math.log(3 * math.log(t)) - math.log(t))
    l1 = normalized_sv(f, -1.0)
    for t in (1e10, 1e14):
        assert l1(t) / (3 * math.log(t)) == pytest.approx(1.0, rel=1e-6)
    wav = make_analytic(lambda t: (1 + math.sin(t) / t) * t * t, t0=2.0,
                        deriv=lambda t: (math.cos(t) / t - math.sin(t) / t ** 2) * t * t + (1 + math.sin(t) / t) * 2 * t)
    l1 = normalized_sv(wav, 2.0)
    assert abs(l1(1e14) - 1.0) <= 1e-2


def test_gamma_decompose_exponential_and_power_factor():
    rep = gamma_decompose(exponential(1.0).survival, -1.0, constant(1.0), 0.0)
    assert all(r[1] == pytest.approx(1.0, rel=1e-12) for r in rep.rows)
    f = TailFunction(lambda t: t ** 3 * math.exp(-t), 1.0, "t^3 e^-t", log_eval=lambda t: 3 * math.log(t) - t,
                     dlog=lambda t: 3 / t - 1)
    rep = gamma_decompose(f, -1.0, constant(1.0), 1.0)
    for t, A, trend, _ in rep.rows:
        assert A == pytest.approx(t ** 3 / math.e, rel=1e-8)
        assert trend == pytest.approx(3 / t, rel=1e-6)


def test_gamma_decompose_normal():
    rep = gamma_decompose(standard_normal().survival, -1.0, INV_T, 1.0)
    assert abs(rep.trend[-1]) <= 1e-2
    assert rep.calibration_residual <= 1e-6
    assert rep.trend_halves()


def test_envelopes():
    sq = power_function(2.0, 1.0)
    assert monotone_envelope(sq, "sup", 50.0) == pytest.approx(2500.0, rel=1e-12)
    inv = power_function(-2.0, 1.0)
    assert monotone_envelope(inv, "inf", 50.0) == pytest.approx(1 / 2500.0, rel=1e-12)
    wav = TailFunction(lambda t: t * t * (2 + math.sin(t)) / 3, 1.0, "wave")
    for k in (10, 100):
        t = math.pi / 2 + 2 * math.pi * k  # crest of the sine
        r = monotone_envelope(wav, "sup", t) / wav(t)
        assert 1.0 - 1e-9 <= r <= 1.0 + 3.0 / t
    with pytest.raises(ValueError):
        monotone_envelope(sq, "mid", 3.0)


def test_smooth_equivalent():
    s = smooth_equivalent(power_function(2.0, 1.0), 2.0, 1.0)
    assert s(10.0) == pytest.approx(99.0, rel=1e-10)
    pts = np.geomspace(2.0, 1e12, 30)
    vals = [s(float(t)) for t in pts]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    tl = TailFunction(lambda t: t * math.log(t), math.e, "t log t", log_eval=lambda t: math.log(t) + math.log(math.log(t)),
                      dlog=lambda t: 1 / t + 1 / (t * math.log(t)))
    s = smooth_equivalent(tl, 1.0, math.e)
    # the ratio approaches 1 like 1 - 1/log t
    assert abs(s(1e300) / tl(1e300) - 1.0) <= 1e-2
    cube = power_function(-3.0, 1.0)
    s = smooth_equivalent(cube, -3.0, 1.0)
    vals = [s(float(t)) for t in pts]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert s(1e12) / cube(1e12) == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(ValueError):
        smooth_equivalent(cube, 0.0)


def test_csv_format(tmp_path):
    rep = karamata_decompose(power_function(-2.0), -2.0)
    text = rep.to_csv(tmp_path / "r.csv")
    lines = text.split("\n")
    assert lines[0] == ",".join(CSV_HEADER)
    assert "\r" not in text and len(lines) == len(rep.rows) + 2
    assert (tmp_path / "r.csv").read_bytes() == text.encode()
