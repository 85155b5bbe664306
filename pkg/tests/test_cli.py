import json
import subprocess
import sys

import pytest

from sawlattice.cli import main
from sawlattice.io import config_hash, read_csv_rows, strip_timestamp


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_enumerate_csv(tmp_path, capsys):
    path = tmp_path / "c.csv"
    code, _, _ = run(["enumerate", "--d", "2", "--n-max", "10", "--out", str(path)], capsys)
    assert code == 0
    rows = read_csv_rows(str(path))
    assert [int(r["c_n"]) for r in rows[1:]] == [4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100]
    assert rows[2]["msd_exact"] == "8/3"
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    assert raw.startswith(b"# generated=")


def test_enumerate_zero_and_json(capsys):
    code, out, _ = run(["enumerate", "--d", "2", "--n-max", "0"], capsys)
    lines = out.strip().splitlines()
    assert code == 0 and lines[1:] == ["n,c_n,sum_sq_end,msd_exact,msd", "0,1,0,0,0.0"]
    code, out, _ = run(["enumerate", "--d", "3", "--n-max", "2", "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["counts"] == {"0": 1, "1": 6, "2": 30}
    assert doc["config_hash"] == config_hash(doc["config"])


def test_usage_errors(capsys):
    code, _, err = run(["enumerate", "--d", "0", "--n-max", "3"], capsys)
    assert code == 2 and "reason=dimension" in err
    assert len(err.strip().splitlines()) == 1
    code, _, _ = run(["enumerate"], capsys)
    assert code == 2


def test_budget_exit_code(capsys):
    code, _, err = run(["enumerate", "--n-max", "12", "--node-limit", "100"], capsys)
    assert code == 3 and "reason=budget" in err
    code, _, _ = run(["fourier", "truncate", "--n", "4", "--samples", "1000"], capsys)
    assert code == 3


def test_recount(capsys):
    code, out, _ = run(["recount", "--d", "2", "--n", "5"], capsys)
    body = [l.split(",") for l in out.strip().splitlines()[2:]]
    assert code == 0
    assert [r[1] for r in body] == ["enum", "x_sum", "sigma_sum"]
    assert {r[2] for r in body} == {"284"} and {r[3] for r in body} == {"0"}
    code, out, _ = run(["recount", "--d", "2", "--n", "0"], capsys)
    assert code == 0 and {l.split(",")[2] for l in out.strip().splitlines()[2:]} == {"1"}


def test_recount_fault_injection(capsys):
    code, _, err = run(["recount", "--d", "2", "--n", "3", "--inject-fault"], capsys)
    assert code == 1 and "reason=verification" in err


def test_transform_check(capsys):
    code, out, _ = run(["transform-check", "--n", "5", "--trials", "500"], capsys)
    assert code == 0 and out.strip().splitlines()[-1] == "2,5,500,0"


def test_fourier_volume(capsys):
    code, out, _ = run(["fourier", "volume", "--n", "1", "--d", "2", "--samples", "200000"], capsys)
    row = out.strip().splitlines()[2].split(",")
    value, se = float(row[4]), float(row[5])
    assert code == 0 and abs(value - 2.356194490192345) <= 3 * se
    assert row[7] == "20240611" and len(row[8]) == 16


def test_fourier_verify(capsys):
    code, out, _ = run(["fourier", "verify", "--n", "2", "--points", "3", "--samples", "40000"], capsys)
    assert code == 0
    assert out.count("true") == 12


def test_fourier_poisson_and_msd(capsys):
    code, out, err = run(["fourier", "poisson", "--vmax", "3", "--eps", "0.05", "--samples", "50000"], capsys)
    assert code == 0 and "poisson estimate" in err
    assert "smoothed_count" in out and "partial_sum_v3" in out
    code, out, _ = run(["fourier", "poisson", "--n", "3"], capsys)
    assert code == 2
    code, out, _ = run(["fourier", "msd", "--n", "2", "--samples", "20000", "--format", "json"], capsys)
    assert code == 0 and json.loads(out)["exact_ratio"] == "8/3"


def test_fit(tmp_path, capsys):
    counts = tmp_path / "c.csv"
    run(["enumerate", "--d", "2", "--n-max", "10", "--out", str(counts)], capsys)
    plot = tmp_path / "plot.csv"
    code, out, _ = run(["fit", "--input", str(counts), "--plot-data", str(plot)], capsys)
    doc = json.loads(out)
    assert code == 0
    assert 2 < doc["nienhuis_free"]["params"]["mu"] < 3
    assert doc["envelope"]["params"]["c"] > 0
    assert 1.3 <= doc["flory"]["params"]["slope"] <= 1.6
    assert doc["submultiplicative"] is True
    assert read_csv_rows(str(plot))[0].keys() >= {"n", "c_n", "root", "kesten_ratio", "msd", "msd_over_n2"}


def test_fit_synthetic_recovery(tmp_path, capsys):
    path = tmp_path / "model.csv"
    lines = ["n,c_n,sum_sq_end"]
    for n in range(1, 13):
        lines.append(f"{n},{round(3 * 10 ** n * n ** (11 / 32) * 1e6)},{round(n ** 1.5 * 1e6)}")
    path.write_text("\n".join(lines) + "\n")
    code, out, _ = run(["fit", "--input", str(path), "--n-min", "2", "--n-max", "12"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["nienhuis_fixed"]["params"]["mu"] == pytest.approx(10, rel=1e-6)


def test_fit_missing_input(capsys):
    code, _, err = run(["fit", "--input", "/nonexistent/counts.csv"], capsys)
    assert code == 2 and "reason=input" in err


@pytest.mark.parametrize(
    "args",
    [
        ["enumerate", "--d", "2", "--n-max", "6"],
        ["fourier", "volume", "--n", "2", "--samples", "20000"],
        ["fourier", "poisson", "--samples", "20000", "--vmax", "2", "--format", "json"],
    ],
)
def test_reruns_are_byte_identical(tmp_path, capsys, args):
    a, b = tmp_path / "a", tmp_path / "b"
    run(args + ["--out", str(a)], capsys)
    run(args + ["--out", str(b), "--workers", "1"], capsys)
    assert strip_timestamp(a.read_text()) == strip_timestamp(b.read_text())


def test_worker_count_does_not_change_estimates(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["fourier", "volume", "--n", "2", "--samples", "20000"]
    run(base + ["--out", str(a), "--workers", "1"], capsys)
    run(base + ["--out", str(b), "--workers", "4"], capsys)
    va = read_csv_rows(str(a))[0]
    vb = read_csv_rows(str(b))[0]
    assert va["value"] == vb["value"] and va["std_error"] == vb["std_error"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sawlattice", "enumerate", "--n-max", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.strip().endswith("2,12,32,8/3,2.6666666666666665")
