import math

import pytest

from tailvar import SpecError, classify_tail, parse_spec
from tailvar.classify import Kind
from tailvar.specfile import expression_function
from scipy import special


def test_catalog_family_with_params_and_comments():
    s = parse_spec("# header\n\nfamily = Pareto   # trailing\nparams = alpha: 3\n")
    d = s.build()
    assert s.family == "pareto" and s.params == {"alpha": 3.0}
    assert d.survival(2.0) == pytest.approx(2.0 ** -3)


def test_t0_override():
    d = parse_spec("family = exponential\nparams = lambda:1\nt0 = 5\n").build()
    assert d.survival.t0 == 5.0
    with pytest.raises(SpecError, match=r":3: .*below"):
        parse_spec("family = pareto\nparams = alpha:2\nt0 = 0.5\n").build()


@pytest.mark.parametrize("text, line, pattern", [
    ("family = pareto\ncolour = red\n", 2, "unknown key"),
    ("family = pareto\nfamily = exponential\n", 2, "duplicate key"),
    ("\nfamily = cauchy\n", 2, "unknown family"),
    ("family = pareto\nparams = beta:2\n", 2, "no parameter"),
    ("family = pareto\nparams = alpha:two\n", 2, "not a number"),
    ("family = pareto\nparams = alpha\n", 2, "name:value"),
    ("family = pareto\nt0 = soon\n", 2, "not a number"),
    ("family = pareto\n\n\njust words\n", 4, "key = value"),
    ("family = expr\nexpr = sin(t)\n", 2, "unknown name|not allowed"),
    ("family = expr\nexpr = exp(-x*t)\n", 2, "unknown name"),
    ("family = expr\nexpr = (t +\n", 2, "cannot parse"),
    ("family = pareto\nexpr = t\n", 2, "only allowed"),
])
def test_errors_name_the_line(text, line, pattern):
    with pytest.raises(SpecError, match=pattern) as info:
        parse_spec(text, "x.spec")
    assert info.value.line == line
    assert str(info.value).startswith(f"x.spec:{line}: ")


def test_missing_family_and_expr():
    with pytest.raises(SpecError, match="missing required key"):
        parse_spec("params = alpha:2\n")
    with pytest.raises(SpecError, match="needs an 'expr'"):
        parse_spec("family = expr\n")


def test_expression_values_and_derivative():
    f = expression_function("t^2*exp(-sqrt(t))/log(t)", 2.0)
    t = 7.5
    ref = t ** 2 * math.exp(-math.sqrt(t)) / math.log(t)
    assert f(t) == pytest.approx(ref, rel=1e-14)
    assert f.log_derivative(t) == pytest.approx(2 / t - 0.5 / math.sqrt(t) - 1 / (t * math.log(t)), rel=1e-12)


def test_erfc_expression_stays_finite_in_log_space():
    f = expression_function("erfc(t/sqrt(2))/2", 1.0)
    assert f.log(40.0) == pytest.approx(float(special.log_ndtr(-40.0)), rel=1e-13)
    assert f.log_derivative(40.0) == pytest.approx(-40.0 - 1 / 40.0, rel=1e-3)


def test_expression_classifies():
    assert classify_tail(parse_spec("family = expr\nexpr = 5*t^-3\n").build().survival).kind is Kind.REGULAR
    d = parse_spec("family = expr\nexpr = erfc(t/sqrt(2))/2\n").build()
    assert classify_tail(d.survival).kind is Kind.GAMMA
    assert d.sampler is None
