"""Command-line interface: outputs, exit codes, determinism, help."""

from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from specband import cli
from specband.fibonacci import fib

SUBCOMMANDS = ["spectrum", "bound", "cluster", "dynamics", "fibonacci", "exponents", "verify"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_spectrum_csv_free_q3(capsys):
    code, out, _ = run(capsys, "spectrum", "--potential", "const:0", "--q", "3", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3
    np.testing.assert_allclose([float(r["width"]) for r in rows], [1, 2, 1], atol=1e-12)
    assert out.splitlines()[0] == "j,left,right,zero,width,dprime"
    assert "e+00" in out.splitlines()[1]


def test_spectrum_fibonacci_rows(capsys):
    code, out, _ = run(capsys, "spectrum", "--potential", "fib:5", "--q", "34")
    assert code == 0
    d = json.loads(out)
    assert d["q"] == fib(8) == len(d["bands"])


def test_missing_q_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["spectrum", "--potential", "const:0"])
    assert exc.value.code == 2
    assert "--q" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["spectrum", "--potential", "nope:1", "--q", "3"],
    ["spectrum", "--potential", "const:0", "--q", "0"],
    ["cluster", "--points", "/dev/null", "--eps", "0.1"],
    ["cluster", "--potential", "const:0", "--q", "3", "--eps", "-1"],
    ["dynamics", "--potential", "fib:5", "--T", "-1", "--q", "3"],
    ["dynamics", "--potential", "const:0", "--T", "50", "--q", "5", "--N", "60"],
    ["--threads", "0", "spectrum", "--potential", "const:0", "--q", "3"],
])
def test_validation_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    assert "error" in err


def test_potential_specs(tmp_path):
    f = tmp_path / "v.txt"
    f.write_text("1\n2\n3\n")
    assert cli.make_potential("file:%s" % f, 3).values.tolist() == [1, 2, 3]
    P = cli.make_potential("periodic:%s:2" % f, 5)
    assert P.values.tolist() == [1, 2, 1, 2, 1]
    assert cli.make_potential("const:0.5", 4).values.tolist() == [0.5] * 4
    assert cli.make_potential("fib:2", 5).values.tolist() == [2, 0, 2, 2, 0]


def test_bound_central_example(capsys):
    code, out, _ = run(capsys, "bound", "--kind", "central", "--potential", "const:0", "--q", "1", "--T", "2")
    d = json.loads(out)
    assert code == 0 and d["linear_value"] == pytest.approx(256.0, rel=1e-10)
    assert d["log_value"] == pytest.approx(np.log(256.0), rel=1e-12)


def test_bound_thouless(capsys):
    code, out, _ = run(capsys, "bound", "--kind", "thouless", "--potential", "const:0", "--q", "3", "--T", "1")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(11.2895, abs=5e-4)


def test_bound_cluster_reports_non_applicable(capsys):
    code, out, _ = run(capsys, "bound", "--kind", "cluster", "--potential", "const:0", "--q", "8",
                       "--T", "2", "--alpha", "0.5", "--xi", "0.9")
    d = json.loads(out)
    assert code == 0 and not d["applicable"] and d["value"] is None


def test_cluster_points(capsys, tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("0\n0.1\n0.9\n1.0\n")
    code, out, _ = run(capsys, "cluster", "--points", str(f), "--eps", "0.2", "--xi", "0.5", "--dp")
    d = json.loads(out)
    assert code == 0 and d["clustered"]
    assert [iv["count"] for iv in d["greedy"]["intervals"]] == [2, 2]
    assert d["greedy"]["xi"] == pytest.approx(0.5)
    assert "dp" in d


def test_dynamics_example(capsys):
    code, out, _ = run(capsys, "dynamics", "--potential", "fib:10", "--T", "20", "--q", "40",
                       "--geometry", "half")
    d = json.loads(out)
    assert code == 0 and d["reliable"]
    assert abs(d["sum_a"] - 1) < 1e-8
    assert 0 <= d["p_tail"] <= 1


def test_dynamics_full_line_reduction(capsys):
    code, out, _ = run(capsys, "dynamics", "--potential", "fib:5", "--T", "5", "--q", "20",
                       "--geometry", "full")
    d = json.loads(out)
    assert code == 0
    assert d["p_tail_resolvent"] <= d["full_line_bound"]


def test_dynamics_unreliable_exits_1(capsys):
    # N meets q + 10T + 100 but the ballistic front still leaves mass at the edge
    code, out, _ = run(capsys, "dynamics", "--potential", "const:0", "--T", "50", "--q", "5", "--N", "605")
    assert code == 1
    assert json.loads(out)["reliable"] is False


def test_fibonacci_hierarchy_counts(capsys):
    code, out, _ = run(capsys, "fibonacci", "--lambda", "10", "--depth", "12", "--report", "hierarchy")
    d = json.loads(out)
    assert code == 0
    assert d["counts"] == [fib(n) for n in range(13)]
    assert d["structure_violations"] == []


def test_fibonacci_constants(capsys):
    code, out, _ = run(capsys, "fibonacci", "--lambda", "17", "--report", "constants")
    d = json.loads(out)
    assert code == 0 and d["alpha_bound"] == pytest.approx(0.75875, abs=1e-5)


def test_exponents_from_bound_table(capsys, tmp_path):
    q = 2.0 ** np.arange(1, 10)
    f = tmp_path / "b.csv"
    f.write_text("q,bound\n" + "".join("%r,%r\n" % (float(x), float(1 / x)) for x in q))
    code, out, _ = run(capsys, "exponents", "--bounds", str(f), "--alpha", "0.5", "--eps", "1.0")
    d = json.loads(out)
    assert code == 0 and "alpha_l^+" in d["concluded"]


def test_exponents_scan_csv(capsys):
    code, out, err = run(capsys, "exponents", "--potential", "const:0", "--alphas", "0.5",
                         "--Ts", "4,8,16")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "alpha,T,beta" and len(lines) == 4
    assert err.startswith("alpha=5.000000000000e-01 trend=")


def test_out_file_and_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, out, _ = run(capsys, "spectrum", "--potential", "fib:10", "--q", "21", "--out", str(path))
        assert code == 0 and out == ""
    assert a.read_bytes() == b.read_bytes()
    x, y = tmp_path / "x.csv", tmp_path / "y.csv"
    for path in (x, y):
        run(capsys, "spectrum", "--potential", "fib:10", "--q", "21", "--format", "csv", "--out", str(path))
    assert x.read_bytes() == y.read_bytes()


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_exits_zero(capsys, cmd, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exc:
        cli.main([cmd, "--help"])
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out
    assert list(tmp_path.iterdir()) == []


def test_verify_quick_deterministic(capsys):
    code1, out1, _ = run(capsys, "verify", "--suite", "quick", "--seed", "7")
    code2, out2, _ = run(capsys, "verify", "--suite", "quick", "--seed", "7")
    assert code1 == 0 and out1 == out2
    assert "FAIL" not in out1 and "PASS" in out1


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "specband.cli", "spectrum", "--potential", "const:0",
                        "--q", "2", "--format", "csv"], capture_output=True, text=True, check=False)
    assert r.returncode == 0
    assert len(r.stdout.splitlines()) == 3


def test_json_output_is_strict(capsys):
    # non-applicable cluster bounds carry an undefined delta; it must serialise as null
    code, out, _ = run(capsys, "bound", "--kind", "cluster", "--potential", "fib:10", "--q", "89",
                       "--T", "50", "--alpha", "0.5", "--xi", "0.4")
    d = json.loads(out, parse_constant=lambda c: pytest.fail("non-standard JSON constant %s" % c))
    assert code == 0 and d["inputs"]["delta"] is None
    assert cli._strict({"a": np.array([1.0, np.inf, -np.inf])}) == {"a": [1.0, "inf", "-inf"]}
