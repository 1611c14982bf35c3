"""Command-line front end.

``tailvar COMMAND SPEC [options]`` with COMMAND one of classify, represent,
invert, evt or report.  Every run writes ``report.txt`` and ``evidence.csv``
to ``--out``; the other commands add their own CSV files.  Exit status is 0
for a determinate verdict, 2 for Undetermined and 1 for any error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import classify as cl
from .evt import domain_of_attraction, run_evt
from .funcmodel import Distribution, catalog
from .inverses import generalized_inverse, inverse_index_check, pi_functional
from .numlimit import DEFAULT_GRID, DEFAULT_TOL, ProbeGrid
from .represent import gamma_decompose, karamata_decompose
from .specfile import SpecError, load_spec

COMMANDS = ("classify", "represent", "invert", "evt", "report")
EXIT_OK, EXIT_ERROR, EXIT_UNDETERMINED = 0, 1, 2
EVIDENCE_HEADER = ("name", "verdict", "value", "residual", "outcome", "detail")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    spec_path: str
    grid: Optional[ProbeGrid] = None
    tol: float = DEFAULT_TOL
    xs: Optional[tuple[float, ...]] = None
    seed: int = 0
    blocks: int = 2000
    ns: tuple[int, ...] = (1000,)
    output_dir: str = "."
    workers: int = 1


@dataclass
class _Run:
    config: RunConfig
    lines: list = field(default_factory=list)
    operation: str = "parse spec"

    def say(self, text: str = "") -> None:
        self.lines.append(text)


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _grid_for(d: Distribution, cfg: RunConfig) -> ProbeGrid:
    if cfg.grid is not None:
        return cfg.grid
    for e in catalog():
        if e.name == d.label and e.grid is not None:
            return e.grid
    return DEFAULT_GRID


def _evidence_table(tc: cl.TailClass) -> list[str]:
    rows = [ev.row() for ev in tc.evidence]
    cells = [EVIDENCE_HEADER] + [tuple(c if c else "-" for c in r) for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(EVIDENCE_HEADER) - 1)]
    return ["  ".join([c.ljust(w) for c, w in zip(r[:-1], widths)] + [r[-1]]).rstrip() for r in cells]


def _classify(run: _Run, d: Distribution, grid: ProbeGrid) -> cl.TailClass:
    cfg = run.config
    run.operation = "classify_tail"
    kw = {}
    if cfg.xs is not None:
        kw["gamma_xs"] = cfg.xs
        kw["rv_xs"] = tuple(x for x in cfg.xs if x > 0)
    tc = cl.classify_tail(d.survival, grid=grid, tol=cfg.tol, **kw)
    run.say(f"verdict: {tc}")
    run.say()
    run.say("evidence")
    for line in _evidence_table(tc):
        run.say("  " + line)
    _write(os.path.join(cfg.output_dir, "evidence.csv"), _csv(EVIDENCE_HEADER, [ev.row() for ev in tc.evidence]))
    return tc


def _represent(run: _Run, d: Distribution, tc: cl.TailClass, grid: ProbeGrid) -> None:
    run.say()
    run.say("representation")
    f = d.survival
    if tc.kind in (cl.Kind.REGULAR, cl.Kind.SLOW):
        run.operation = "karamata_decompose"
        rep = karamata_decompose(f, tc.index or 0.0, grid=grid, tol=run.config.tol)
    elif tc.kind is cl.Kind.GAMMA:
        run.operation = "gamma_decompose"
        rep = gamma_decompose(f, tc.index, tc.aux, grid=grid, tol=run.config.tol)
    else:
        run.say(f"  none for {tc.kind.value}")
        return
    run.say(f"  form: {rep.kind}")
    run.say(f"  calibration residual: {rep.calibration_residual:.3e}")
    run.say(f"  validation residual: {rep.residual:.3e}")
    run.say(f"  trend halves: {'yes' if rep.trend_halves() else 'no'}")
    if rep.c_limit is not None:
        run.say(f"  c limit: {rep.c_limit.describe()}")
    for note in rep.notes:
        run.say(f"  note: {note}")
    rep.to_csv(os.path.join(run.config.output_dir, "representation.csv"))


def _invert(run: _Run, d: Distribution, tc: cl.TailClass, grid: ProbeGrid) -> None:
    run.say()
    run.say("inverse")
    f = d.survival
    rows = []
    if tc.kind is cl.Kind.REGULAR:
        run.operation = "inverse_index_check"
        est = inverse_index_check(f, tc.index, grid, run.config.tol)
        run.say(f"  right inverse index: {est.describe()} (expected {-1.0 / tc.index:.4g})")
    elif tc.kind is cl.Kind.GAMMA:
        run.operation = "pi_functional"
        pi = pi_functional(f, g=tc.aux)
        run.say(f"  Pi route: {pi.route}")
        run.say(f"  Pi residual: {pi.residual:.3e} ({'pass' if pi.passed else 'fail'})")
        for x, est in pi.pi_limits:
            run.say(f"    x = {x:g}: {est.describe()}")
    else:
        run.say(f"  no inverse law for {tc.kind.value}")
    if tc.kind in (cl.Kind.REGULAR, cl.Kind.GAMMA, cl.Kind.SLOW):
        run.operation = "generalized_inverse"
        inv = generalized_inverse(f, "right", grid)
        top = f(f.t0)
        for k in range(1, 9):
            y = top * 10.0 ** -k
            try:
                rows.append((repr(y), repr(inv(y))))
            except ArithmeticError:
                break
    _write(os.path.join(run.config.output_dir, "inverse.csv"), _csv(("y", "inverse"), rows))


def _evt(run: _Run, d: Distribution, tc: cl.TailClass, grid: ProbeGrid) -> None:
    cfg = run.config
    run.say()
    run.say("extreme values")
    run.operation = "domain_of_attraction"
    dom = domain_of_attraction(d, grid)
    run.say(f"  domain: {dom}")
    out = cfg.output_dir
    if dom.kind == "None":
        _write(os.path.join(out, "evt.csv"), _csv(("n", "blocks", "a_n", "b_n", "ks", "seed"), []))
        _write(os.path.join(out, "maxima.csv"), _csv(("n", "block", "value"), []))
        return
    run.operation = "simulate_maxima"
    rep = run_evt(d, cfg.ns, cfg.blocks, cfg.seed, dom, cfg.workers)
    run.say(f"  seed = {cfg.seed}, blocks = {cfg.blocks}")
    for (n, a), (_, b), (_, k) in zip(rep.an, rep.bn, rep.ks):
        run.say(f"  n = {n}: a_n = {a:.6g}, b_n = {b:.6g}, ks = {k:.4f}")
    if len(rep.ks) > 1:
        run.say(f"  ks trend: {'ok' if rep.ks_trend_ok() else 'not decreasing'}")
    rep.to_csv(os.path.join(out, "evt.csv"))
    rep.maxima_csv(os.path.join(out, "maxima.csv"))


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the exit status."""
    r = _Run(cfg)
    try:
        os.makedirs(cfg.output_dir, exist_ok=True)
        spec = load_spec(cfg.spec_path)
        r.operation = "build distribution"
        d = spec.build(cfg.spec_path)
        grid = _grid_for(d, cfg)
        r.say(f"tailvar {cfg.command}")
        r.say(f"subject: {d.label} survival")
        r.say(f"grid: start = {grid.start:g}, ratio = {grid.ratio:g}, count = {grid.count}; tol = {cfg.tol:g}")
        tc = _classify(r, d, grid)
        if cfg.command in ("represent", "report"):
            _represent(r, d, tc, grid)
        if cfg.command in ("invert", "report"):
            _invert(r, d, tc, grid)
        if cfg.command == "evt" or (cfg.command == "report" and d.sampler is not None):
            _evt(r, d, tc, grid)
        status = EXIT_OK if tc.determinate else EXIT_UNDETERMINED
    except SpecError as exc:
        r.say(f"error: {exc}")
        status = EXIT_ERROR
    except (ArithmeticError, ValueError, OSError) as exc:
        r.say(f"error in {r.operation}: {exc}")
        status = EXIT_ERROR
    text = "\n".join(r.lines) + "\n"
    if status == EXIT_ERROR:
        sys.stderr.write(r.lines[-1] + "\n")
    try:
        _write(os.path.join(cfg.output_dir, "report.txt"), text)
    except OSError:
        pass
    if status != EXIT_ERROR:
        sys.stdout.write(text)
    return status


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is reserved for Undetermined.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or not all(math.isfinite(v) and v != 0 for v in vals):
        raise argparse.ArgumentTypeError("x values must be finite and nonzero")
    return vals


def _ints(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(float(v)) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("sample sizes must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tailvar", description="Classify tails, build representations and check extreme-value limits.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("spec", help="distribution spec file (key = value lines)")
    p.add_argument("--grid-start", type=float, help="first probe point T0 (> 0)")
    p.add_argument("--grid-ratio", type=float, help="geometric ratio between probes (> 1)")
    p.add_argument("--grid-count", type=int, help="number of probes (>= 8)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="limit tolerance")
    p.add_argument("--xs", type=_floats, help="comma-separated x values for the ratio tests")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--blocks", type=int, default=2000, help="simulated maxima per n (>= 100)")
    p.add_argument("--n", type=_ints, default=(1000,), help="comma-separated block sizes")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=".", help="output directory")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    grid = None
    if any(v is not None for v in (args.grid_start, args.grid_ratio, args.grid_count)):
        start = DEFAULT_GRID.start if args.grid_start is None else args.grid_start
        ratio = DEFAULT_GRID.ratio if args.grid_ratio is None else args.grid_ratio
        count = DEFAULT_GRID.count if args.grid_count is None else args.grid_count
        if not (math.isfinite(start) and start > 0):
            raise UsageError(f"--grid-start must be positive, got {start!r}")
        if not (math.isfinite(ratio) and ratio > 1):
            raise UsageError(f"--grid-ratio must exceed 1, got {ratio!r}")
        if count < 8:
            raise UsageError(f"--grid-count must be at least 8, got {count}")
        grid = ProbeGrid(start, ratio, count)
    if not (math.isfinite(args.tol) and args.tol > 0):
        raise UsageError(f"--tol must be positive, got {args.tol!r}")
    if args.blocks < 100:
        raise UsageError(f"--blocks must be at least 100, got {args.blocks}")
    if not 0 <= args.seed < 2 ** 64:
        raise UsageError("--seed must be a nonnegative 64-bit integer")
    if args.workers < 1:
        raise UsageError("--workers must be positive")
    return RunConfig(args.command, args.spec, grid, args.tol, args.xs, args.seed, args.blocks, args.n,
                     args.out, args.workers)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except UsageError as exc:
        parser.error(str(exc))
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
