import os
from pathlib import Path

import pytest

from tailvar.cli import main

SPECS = Path(__file__).resolve().parents[1] / "specs"


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*map(str, args), "--out", str(out)])
    return code, out


def test_pareto_classify(tmp_path, capsys):
    code, out = run(tmp_path, "classify", SPECS / "pareto2.spec")
    assert code == 0
    assert "Regular, rho = -2.00" in (out / "report.txt").read_text()
    assert (out / "evidence.csv").read_text().startswith("name,verdict,value,residual,outcome,detail\n")


def test_normal_classify_evidence(tmp_path):
    code, out = run(tmp_path, "classify", SPECS / "normal.spec")
    assert code == 0
    assert "Gamma, alpha = -1" in (out / "report.txt").read_text()
    names = [line.split(",")[0] for line in (out / "evidence.csv").read_text().splitlines()[1:]]
    assert any(n.startswith("self_neglect") for n in names)
    assert "gamma_index" in names


def test_undetermined_exits_2(tmp_path):
    code, out = run(tmp_path, "classify", SPECS / "slow_rapid.spec")
    assert code == 2
    assert "Undetermined" in (out / "report.txt").read_text()


def test_evt_exponential(tmp_path):
    code, out = run(tmp_path, "evt", SPECS / "exponential.spec", "--n", "1000", "--blocks", "2000", "--seed", "7")
    assert code == 0
    rows = (out / "maxima.csv").read_text().splitlines()
    assert rows[0] == "n,block,value" and len(rows) == 2001
    header, line = (out / "evt.csv").read_text().splitlines()
    assert header == "n,blocks,a_n,b_n,ks,seed"
    assert float(line.split(",")[4]) <= 0.03
    assert "ks = " in (out / "report.txt").read_text()


def test_represent_and_invert_outputs(tmp_path):
    code, out = run(tmp_path, "report", SPECS / "pareto2.spec", "--n", "100", "--blocks", "200")
    assert code == 0
    for f in ("report.txt", "evidence.csv", "representation.csv", "inverse.csv", "evt.csv", "maxima.csv"):
        assert (out / f).exists(), f


def test_unknown_key_is_error(tmp_path, capsys):
    spec = tmp_path / "bad.spec"
    spec.write_text("family = pareto\nparams = alpha:2\nshape = 4\n")
    code, out = run(tmp_path, "classify", spec)
    assert code == 1
    err = capsys.readouterr().err
    assert "bad.spec:3:" in err and "unknown key" in err
    assert "bad.spec:3:" in (out / "report.txt").read_text()


def test_missing_spec_file(tmp_path, capsys):
    code, _ = run(tmp_path, "classify", tmp_path / "nope.spec")
    assert code == 1
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("flags", [
    ["--grid-ratio", "1"], ["--grid-start", "0"], ["--grid-count", "7"], ["--tol", "-1"], ["--blocks", "10"],
    ["--seed", "-3"], ["--xs", "1,zero"], ["--n", "0"],
])
def test_bad_overrides_exit_1(tmp_path, flags):
    with pytest.raises(SystemExit) as info:
        main(["classify", str(SPECS / "pareto2.spec"), *flags, "--out", str(tmp_path)])
    assert info.value.code == 1


def test_grid_override_is_reported(tmp_path):
    code, out = run(tmp_path, "classify", SPECS / "pareto2.spec", "--grid-start", "4", "--grid-ratio", "3",
                    "--grid-count", "20")
    assert code == 0
    assert "start = 4, ratio = 3, count = 20" in (out / "report.txt").read_text()


def test_csv_outputs_byte_identical(tmp_path):
    args = ("report", SPECS / "normal.spec", "--n", "100,1000", "--blocks", "300", "--seed", "11")
    _, a = run(tmp_path, *args, name="a")
    _, b = run(tmp_path, *args, "--workers", "3", name="b")
    files = sorted(p.name for p in a.glob("*.csv"))
    assert "maxima.csv" in files
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
        assert b"\r" not in (a / f).read_bytes()
