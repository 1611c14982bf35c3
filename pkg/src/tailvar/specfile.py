"""Distribution spec files.

One ``key = value`` pair per line; blank lines and ``#`` comments are
ignored.  Keys:

``family``
    A catalog name (case-insensitive) or ``expr``.
``params``
    Comma-separated ``name:value`` pairs for the family.
``t0``
    Lower end of the domain.
``expr``
    With ``family = expr``: an expression in ``t`` built from ``+ - * / ^``,
    ``exp``, ``log``, ``sqrt`` and ``erfc``.  It is read as a survival-type
    tail function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import sympy
from scipy import special
from sympy.parsing.sympy_parser import auto_number, convert_xor, parse_expr

from .funcmodel import FAMILIES, Distribution, DomainError, TailFunction, make_analytic

KEYS = ("family", "params", "t0", "expr")
_T = sympy.Symbol("t", positive=True)


class SpecError(ValueError):
    """A malformed spec file; the message names the offending line."""

    def __init__(self, message: str, line: Optional[int] = None, source: str = "spec"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


class LogErfc(sympy.Function):
    """``log erfc(x)`` as a single node so it can be evaluated without underflow."""

    def fdiff(self, argindex=1):
        return -2 / sympy.sqrt(sympy.pi) / Erfcx(self.args[0])


class Erfcx(sympy.Function):
    """Scaled complementary error function ``exp(x^2) erfc(x)``."""


def _log_erfc(x: float) -> float:
    if x > 0:
        return math.log(special.erfcx(x)) - x * x
    return math.log(special.erfc(x))


_NUMERIC = {"LogErfc": _log_erfc, "Erfcx": lambda x: float(special.erfcx(x)),
            "erfc": lambda x: float(special.erfc(x))}


@dataclass(frozen=True)
class Spec:
    family: str
    params: dict
    t0: Optional[float]
    expr: Optional[str]
    lines: dict

    def build(self, source: str = "spec") -> Distribution:
        if self.family == "expr":
            f = expression_function(self.expr, 1.0 if self.t0 is None else self.t0,
                                    line=self.lines.get("expr"), source=source)
            return Distribution(f, None, None, f"expr: {self.expr}")
        ctor, names = FAMILIES[self.family]
        args = [self.params[n] for n in names if n in self.params]
        d = ctor(*args)
        if self.t0 is not None:
            if self.t0 < d.survival.t0:
                raise SpecError(f"t0 = {self.t0!r} is below the family's domain start {d.survival.t0!r}",
                                self.lines.get("t0"), source)
            d = replace(d, survival=replace(d.survival, t0=self.t0))
        return d


def parse_spec(text: str, source: str = "spec") -> Spec:
    """Parse spec text; every error carries the line number it refers to."""
    seen: dict[str, tuple[str, int]] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"expected 'key = value', got {raw.strip()!r}", no, source)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in KEYS:
            raise SpecError(f"unknown key {key!r} (expected one of {', '.join(KEYS)})", no, source)
        if key in seen:
            raise SpecError(f"duplicate key {key!r} (first on line {seen[key][1]})", no, source)
        seen[key] = (value, no)
    lines = {k: v[1] for k, v in seen.items()}
    if "family" not in seen:
        raise SpecError("missing required key 'family'", None, source)
    family = seen["family"][0].lower()
    if family != "expr" and family not in FAMILIES:
        raise SpecError(f"unknown family {seen['family'][0]!r}", lines["family"], source)

    params: dict[str, float] = {}
    if "params" in seen:
        value, no = seen["params"]
        allowed = () if family == "expr" else FAMILIES[family][1]
        for item in filter(None, (p.strip() for p in value.split(","))):
            if ":" not in item:
                raise SpecError(f"parameter {item!r} is not of the form name:value", no, source)
            name, num = (s.strip() for s in item.split(":", 1))
            if name not in allowed:
                raise SpecError(f"family {family!r} has no parameter {name!r}", no, source)
            try:
                params[name] = float(num)
            except ValueError:
                raise SpecError(f"parameter {name!r}: {num!r} is not a number", no, source) from None

    t0 = None
    if "t0" in seen:
        value, no = seen["t0"]
        try:
            t0 = float(value)
        except ValueError:
            raise SpecError(f"t0: {value!r} is not a number", no, source) from None
        if not math.isfinite(t0):
            raise SpecError("t0 must be finite", no, source)

    expr = seen.get("expr", (None, 0))[0]
    if family == "expr" and expr is None:
        raise SpecError("family 'expr' needs an 'expr' line", lines["family"], source)
    if family != "expr" and expr is not None:
        raise SpecError("'expr' is only allowed with family = expr", lines["expr"], source)
    if expr is not None:
        _parse_expression(expr, lines["expr"], source)
    return Spec(family, params, t0, expr, lines)


def load_spec(path: str) -> Spec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read(), str(path))


def _parse_expression(text: str, line: Optional[int] = None, source: str = "spec") -> sympy.Expr:
    names = {"t": _T, "exp": sympy.exp, "log": sympy.log, "sqrt": sympy.sqrt, "erfc": sympy.erfc,
             "pi": sympy.pi, "E": sympy.E}
    try:
        e = parse_expr(text, local_dict=names, global_dict={"Integer": sympy.Integer, "Float": sympy.Float,
                                                             "Rational": sympy.Rational, "Symbol": sympy.Symbol},
                       transformations=(auto_number, convert_xor))
    except NameError as exc:
        raise SpecError(f"unknown name in expression {text!r}: {exc}", line, source) from None
    except Exception as exc:  # sympy raises a zoo of exception types
        raise SpecError(f"cannot parse expression {text!r}: {exc}", line, source) from None
    if not isinstance(e, sympy.Expr) or e.free_symbols - {_T}:
        extra = sorted(str(s) for s in getattr(e, "free_symbols", set()) - {_T})
        raise SpecError(f"expression may only use the variable t (found {', '.join(extra) or type(e).__name__})",
                        line, source)
    allowed = (sympy.Add, sympy.Mul, sympy.Pow, sympy.exp, sympy.log, sympy.erfc)
    for node in sympy.preorder_traversal(e):
        if isinstance(node, sympy.Function) and not isinstance(node, allowed):
            raise SpecError(f"function {type(node).__name__!r} is not allowed", line, source)
    return e


def _log_form(e: sympy.Expr) -> sympy.Expr:
    lg = sympy.expand_log(sympy.log(e), force=True)
    return lg.replace(lambda n: isinstance(n, sympy.log) and isinstance(n.args[0], sympy.erfc),
                      lambda n: LogErfc(n.args[0].args[0]))


def expression_function(text: str, t0: float = 1.0, line: Optional[int] = None,
                        source: str = "spec") -> TailFunction:
    """Tail function for an expression in ``t`` with symbolic log and log-derivative."""
    e = _parse_expression(text, line, source)
    lg = _log_form(e)
    dlg = sympy.diff(lg, _T)
    modules = [_NUMERIC, "math"]
    f_num = sympy.lambdify(_T, e, modules=modules)
    log_num = sympy.lambdify(_T, lg, modules=modules)
    dlog_num = sympy.lambdify(_T, dlg, modules=modules)
    deriv_num = sympy.lambdify(_T, sympy.diff(e, _T), modules=modules)

    def guarded(fn):
        def call(t):
            try:
                return float(fn(t))
            except (ValueError, ZeroDivisionError, OverflowError) as exc:
                raise DomainError(f"{text}: {exc} at t={t!r}") from None
        return call

    try:
        return make_analytic(guarded(f_num), guarded(deriv_num), float(t0), text,
                             log_eval=guarded(log_num), dlog=guarded(dlog_num))
    except DomainError as exc:
        raise SpecError(str(exc), line, source) from None


__all__ = ["KEYS", "Spec", "SpecError", "expression_function", "load_spec", "parse_spec"]
