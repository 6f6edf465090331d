import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from detwork.cli import RunConfig, main, run
from detwork.figures import figure_data
from detwork.formatting import fmt_decimal


def write_spectrum(path, levels, label=None):
    doc = {"levels": [{"energy": str(e), "degeneracy": d, "occupied": o} for e, d, o in levels]}
    if label:
        doc["label"] = label
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def s023(tmp_path):
    return write_spectrum(tmp_path / "s023.json", [(0, 1, 0), (2, 1, 1), (3, 1, 1)], "three-level")


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def kv(text):
    return dict(line.split("=", 1) for line in text.splitlines())


def test_rate_csv(s023, tmp_path):
    out = tmp_path / "r.csv"
    assert main(["rate", "--spectrum", s023, "--n-range", "1..12", "--out", str(out)]) == 0
    rows = read_csv(out.read_text())
    assert [r["n"] for r in rows] == [str(n) for n in range(1, 13)]
    assert rows[1]["rate"] == "1" and rows[2]["rate"] == "4/3"
    assert rows[2]["rate_decimal"] == "1.3333333333333333333"
    assert rows[2]["work_total"] == "4" and rows[2]["shift"] == "4"


def test_bounds_kv(s023, capsys):
    assert main(["bounds", "--spectrum", s023, "--n", "8"]) == 0
    d = kv(capsys.readouterr().out)
    assert d["lcm_lower"] == "3/2" and d["harmonic_lower"] == "6/5"
    assert d["finite_n_lower"] == "3/2" and d["K_S"] == "3" and d["M_S"] == "6"
    assert float(d["clt_estimate"]) == pytest.approx(1.86227, abs=1e-4)
    assert 4 / 3 < float(d["ergotropy_bound"]) <= 2


def test_counts_csv(s023, capsys):
    assert main(["counts", "--spectrum", s023, "--n", "3", "--weight", "occupied"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert {int(r["t"]): int(r["count"]) for r in rows} == {6: 1, 7: 3, 8: 3, 9: 1}


def test_protocol_and_simulate(s023, tmp_path, capsys):
    proto = tmp_path / "p.json"
    assert main(["protocol", "--spectrum", s023, "--n", "2", "--emit-mapping", "--out", str(proto)]) == 0
    doc = json.loads(proto.read_text())
    assert doc["shift"] == 2 and doc["unit"] == "1" and len(doc["explicit_map"]) == 4
    assert main(["simulate", "--spectrum", s023, "--protocol", str(proto)]) == 0
    d = kv(capsys.readouterr().out)
    assert d["deterministic"] == "true" and d["mean"] == "2" and d["variance"] == "0"


def test_protocol_without_mapping(s023, capsys):
    assert main(["protocol", "--spectrum", s023, "--lcm"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["n"] == 4 and doc["work"] == "6" and "explicit_map" not in doc


def test_simulate_needs_mapping(s023, tmp_path):
    proto = tmp_path / "p.json"
    assert main(["protocol", "--spectrum", s023, "--n", "2", "--out", str(proto)]) == 0
    assert main(["simulate", "--spectrum", s023, "--protocol", str(proto)]) == 1


def test_approx_kv(tmp_path, capsys):
    path = write_spectrum(tmp_path / "irr.json", [("0", 1, 0), ("1.41421356", 1, 1), ("3.14159265", 1, 1)])
    assert main(["approx", "--spectrum", path, "--delta", "0.05", "--n", "31", "--confidence", "0.5"]) == 0
    d = kv(capsys.readouterr().out)
    assert d["positive_shift"] == "true" and d["band_passed"] == "true"
    assert float(d["spread"]) <= 0.2


def test_figure_r100_small(capsys):
    assert main(["figure", "r100", "--eps2-from", "1.1", "--eps2-to", "1.3", "--step", "0.1", "--n", "20"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert [r["eps2"] for r in rows] == ["11/10", "6/5", "13/10"]
    for r in rows:
        assert Fraction(r["lcm_floor_lower"]) <= Fraction(r["R_n"]) <= Fraction(r["upper_bound"]) + Fraction(1, 10**9)


def test_figure_rates_vs_n(s023, capsys):
    assert main(["figure", "rates_vs_n", "--spectrum", s023, "--n-max", "30"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert len(rows) == 30
    assert Fraction(rows[29]["R_n"]) >= Fraction(rows[2]["R_n"]) == Fraction(4, 3)


def test_figure_gaussians(tmp_path, capsys):
    path = write_spectrum(tmp_path / "g.json", [(0, 1, 0), ("2/3", 1, 1), (1, 1, 1)])
    assert main(["figure", "gaussians", "--spectrum", path, "--n", "20"]) == 0
    rows = read_csv(capsys.readouterr().out)
    full = [r for r in rows if r["which"] == "full"]
    assert sum(int(r["exact_count"]) for r in full) == 3**20
    assert {r["which"] for r in rows} == {"full", "occupied"}


def test_figure_data_function():
    table = figure_data("r100", eps2_from=Fraction(3), eps2_to=Fraction(3), step=Fraction(1, 10), n=100)
    (row,) = table.rows
    rate = Fraction(row[2])
    assert Fraction(99, 100) <= rate <= 1


def test_exit_codes(tmp_path, s023):
    assert main([]) == 1
    assert main(["rate", "--spectrum", s023, "--n-range", "5..2"]) == 1
    assert main(["rate", "--spectrum", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"levels": [{"energy": "0", "degeneracy": 1, "occupied": 2}]}')
    assert main(["rate", "--spectrum", str(bad)]) == 2
    assert main(["protocol", "--spectrum", s023, "--n", "2", "--shift", "3"]) == 1
    assert main(["protocol", "--spectrum", s023, "--lcm", "--shift", "1"]) == 1


def test_guard_exit_and_no_partial_file(tmp_path, s023):
    out = tmp_path / "big.json"
    code = main(["protocol", "--spectrum", s023, "--n", "25", "--emit-mapping", "--out", str(out)])
    assert code == 3
    assert not out.exists()
    assert list(tmp_path.iterdir()) == [tmp_path / "s023.json"]


def test_invariant_exit(monkeypatch, s023):
    import detwork.cli as cli
    from detwork.errors import InvariantViolation

    def boom(*a, **k):
        raise InvariantViolation("forced")

    monkeypatch.setattr(cli, "rate_sweep", boom)
    assert run(RunConfig("rate", s023, None, {"n_range": (1, 2)})) == 4


def test_byte_identical_reruns(tmp_path, s023):
    cmds = [
        ["rate", "--spectrum", s023, "--n-range", "1..15"],
        ["bounds", "--spectrum", s023],
        ["protocol", "--spectrum", s023, "--lcm", "--emit-mapping"],
        ["figure", "rates_vs_n", "--spectrum", s023, "--n-max", "12"],
    ]
    for k, cmd in enumerate(cmds):
        a, b = tmp_path / f"a{k}", tmp_path / f"b{k}"
        assert main(cmd + ["--out", str(a)]) == 0
        assert main(cmd + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert b"\r" not in a.read_bytes()


def test_module_entry_point(s023):
    proc = subprocess.run(
        [sys.executable, "-m", "detwork", "rate", "--spectrum", s023, "--n-range", "3"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1] == "3,4,4,4/3,1.3333333333333333333"


def test_fmt_decimal():
    assert fmt_decimal(Fraction(1, 3)) == "0.33333333333333333333"
    assert fmt_decimal(Fraction(4)) == "4"
    assert fmt_decimal(0.0) == "0"
    assert fmt_decimal(float("inf")) == "inf"
    assert fmt_decimal(None) == ""
