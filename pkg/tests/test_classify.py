import math

import pytest

from tailvar.classify import (
    DeHaanOutcome, Kind, TailClass, check_self_neglecting, classify_tail, dehaan_rapid_check, gamma_index,
    gamma_ratio_check, gamma_sandwich, karamata_ratio, log_shift, potter_check, ratio_family, taylor_check,
    von_mises_index,
)
from tailvar.funcmodel import (
    TailFunction, catalog, constant, exponential, log_tail, make_analytic, pareto, power_function,
    reciprocal_power, standard_normal, weibull_hazard,
)
from tailvar.hazard import DivergentTailError
from tailvar.numlimit import ProbeGrid, Verdict

# [DERIVED] mpmath: normal survival(50 + 1/50)/survival(50)
NORMAL_SHIFT_RATIO_50 = 0.36765892646257085

INV_T = power_function(-1.0, 1.0)


def exp_tail(rate=1.0):
    return TailFunction(lambda t: math.exp(-rate * t), 0.0, "exp(-t)", None, lambda t: -rate * t,
                        lambda t: -rate)


def test_von_mises_examples():
    est = von_mises_index(power_function(-2.0))
    assert est.is_finite and est.value == -2.0
    est = von_mises_index(log_tail().survival)
    assert est.near(0.0, 5e-3)
    est = von_mises_index(standard_normal().survival)
    assert est.verdict is Verdict.MINUS_INFINITY


def test_self_neglecting():
    assert check_self_neglecting(constant(3.0)).passed
    rep = check_self_neglecting(INV_T)
    assert rep.passed and rep.gt_over_t.near(0.0, 1e-6)
    rep = check_self_neglecting(power_function(1.0, 1.0))
    assert not rep.passed and rep.gt_over_t.near(1.0, 1e-9)


def test_self_neglecting_counts_skipped_probes():
    rep = check_self_neglecting(constant(10.0), grid=ProbeGrid(8.0, 2.0, 30))
    assert rep.skipped >= 1 and rep.passed


def test_gamma_index_examples():
    assert gamma_index(exp_tail(), constant(1.0)).value == -1.0
    assert gamma_index(standard_normal().survival, INV_T).near(-1.0, 1e-2)
    assert gamma_index(weibull_hazard(1.0).survival, reciprocal_power(1.0)).near(-1.0, 1e-9)


def test_gamma_ratio_check_examples():
    rc = gamma_ratio_check(exponential(1.0).survival, constant(1.0), [-1.0, -0.5, 0.5, 1.0])
    lim = dict(rc.limits)
    assert lim[1.0].value == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert rc.passed
    rc = gamma_ratio_check(standard_normal().survival, INV_T)
    assert abs(dict(rc.limits)[1.0].value - math.exp(-1.0)) <= 5e-3
    assert rc.passed and rc.consistency <= 2e-2


def test_normal_shift_ratio_against_oracle():
    f = standard_normal().survival
    assert math.exp(log_shift(f, 50.0, 1.0 / 50.0)) == pytest.approx(NORMAL_SHIFT_RATIO_50, rel=1e-10)


def test_regular_is_gamma_zero_with_sqrt_aux():
    g = power_function(0.5, 1.0)
    for e in catalog():
        if e.truth.kind is Kind.REGULAR and e.subject == "survival":
            rc = gamma_ratio_check(e.function, g, alpha=0.0)
            assert all(est.near(1.0, 1e-2) for _, est in rc.limits), e.name
            assert rc.passed, e.name


def test_dehaan_patterns():
    assert dehaan_rapid_check(exp_tail()).outcome is DeHaanOutcome.RAPID_MINUS
    assert dehaan_rapid_check(power_function(-2.0)).outcome is DeHaanOutcome.NOT_RAPID
    up = TailFunction(lambda t: math.exp(t * t), 1.0, "exp(t^2)", None, lambda t: t * t, lambda t: 2 * t)
    assert dehaan_rapid_check(up).outcome is DeHaanOutcome.RAPID_PLUS
    with pytest.raises(ValueError):
        dehaan_rapid_check(exp_tail(), [1.0, 2.0])


def test_karamata_ratios():
    assert karamata_ratio(power_function(2.0), "head").near(3.0, 1e-3)
    assert karamata_ratio(power_function(-3.0), "tail").near(2.0, 1e-3)
    assert karamata_ratio(log_tail().density, "tail").near(0.0, 1e-2)
    with pytest.raises(DivergentTailError):
        karamata_ratio(power_function(-1.0), "tail")
    with pytest.raises(ValueError):
        karamata_ratio(power_function(2.0), "middle")


def test_potter():
    assert potter_check(power_function(-2.0), -2.0, 0.1)
    f = make_analytic(lambda t: t ** -2 * math.log(t), t0=2.0, log_eval=lambda t: -2 * math.log(t) + math.log(math.log(t)),
                      dlog=lambda t: -2 / t + 1 / (t * math.log(t)))
    assert potter_check(f, -2.0, 0.1, [1.0, 2.0, 4.0, 8.0])
    assert not potter_check(exp_tail(), -2.0, 0.1, [2.0])
    with pytest.raises(ValueError):
        potter_check(f, -2.0, 0.1, [0.5])


def test_ratio_family_slow():
    fam = ratio_family(log_tail().survival, [0.5, 2.0], tol=1e-2)
    assert all(abs(est.value - 1.0) <= 1e-2 for _, est in fam)


def test_gamma_sandwich_for_gamma_verdicts():
    for e in catalog():
        if e.truth.kind is Kind.GAMMA and e.subject == "survival":
            tc = classify_tail(e.function, grid=e.grid or ProbeGrid())
            assert tc.kind is Kind.GAMMA
            assert gamma_sandwich(e.function, tc.index, tc.aux, 0.05, grid=e.grid or ProbeGrid()), e.name


def test_taylor_check_on_cumulative_hazard():
    # H = -log survival has derivative h in Gamma_0(1/t)
    s = standard_normal().survival
    H = TailFunction(lambda t: -s.log(t), 1.0, "H", lambda t: -s.log_derivative(t))
    rep = taylor_check(H, INV_T)
    assert rep.max_error <= 0.05
    assert rep.t > 1e3


def test_classify_examples():
    assert str(classify_tail(pareto(2.0).survival)) == "Regular, rho = -2.00"
    tc = classify_tail(standard_normal().survival)
    assert tc.kind is Kind.GAMMA and tc.index == -1.0
    t = 1e4
    assert tc.aux(t) * t == pytest.approx(1.0, rel=1e-6)
    assert classify_tail(log_tail().survival).kind is Kind.SLOW


def test_classify_with_hint_normalizes_aux():
    tc = classify_tail(exponential(2.0).survival, g_hint=constant(1.0))
    assert tc.kind is Kind.GAMMA and tc.index == -1.0
    assert tc.aux(5.0) == pytest.approx(0.5, rel=1e-12)


def test_rapid_but_not_gamma():
    # log-derivative -(1 + cos(t)/2): no self-neglecting auxiliary, but de Haan rapid
    f = TailFunction(lambda t: math.exp(-(t + 0.5 * math.sin(t))), 0.0, "wavy exp", None,
                     lambda t: -(t + 0.5 * math.sin(t)), lambda t: -(1.0 + 0.5 * math.cos(t)))
    tc = classify_tail(f)
    assert tc.kind is Kind.RAPID and tc.index == -math.inf
    names = [e.name for e in tc.evidence]
    assert "self_neglect.g_over_t" in names and names[-1] == "dehaan_rapid_check"


def test_oscillating_function_is_undetermined():
    wobble = TailFunction(lambda t: 2.0 + math.sin(math.log(t) * 5), 1.0, "wobble",
                          lambda t: math.cos(math.log(t) * 5) * 5 / t)
    assert classify_tail(wobble).kind is Kind.UNDETERMINED


def test_density_transfers_class():
    normal_density = next(e for e in catalog() if e.name == "StandardNormalDensity")
    tc = classify_tail(normal_density.function)
    assert tc.kind is Kind.GAMMA and tc.index == -1.0
    assert tc.aux(1e4) * 1e4 == pytest.approx(1.0, rel=1e-6)


def test_evidence_order_is_fixed():
    a = classify_tail(standard_normal().survival)
    b = classify_tail(standard_normal().survival)
    assert [e.name for e in a.evidence] == [e.name for e in b.evidence]
    assert [e.row() for e in a.evidence] == [e.row() for e in b.evidence]


def test_tailclass_strings():
    assert str(TailClass.slow()) == "Slow"
    assert str(TailClass.undetermined()) == "Undetermined"
    assert str(TailClass.rapid(-1)) == "RapidDeHaan, sign = -inf"
