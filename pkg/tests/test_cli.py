from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest
from conftest import load_extremal, naive_monomial_count

from diffsetlab.cli import main
from diffsetlab.core import PointSet, read_pointset, write_pointset
from diffsetlab.fourier import load_spectrum
from diffsetlab.planted import planted_coset_set

pytestmark = pytest.mark.filterwarnings("ignore::UserWarning")


def call(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    rec = json.loads(out.out) if code == 0 else None
    return code, rec, out.err


@pytest.fixture
def setfile(tmp_path, rng):
    B = PointSet.from_mask(rng.random((6, 36)) < 0.4, 6)
    path = tmp_path / "B.pts"
    write_pointset(B, path)
    return path, B


def test_count_both_backends(capsys, setfile):
    path, B = setfile
    for backend in ("direct", "fft"):
        code, rec, _ = call(capsys, "count", "--set", path, "--backend", backend)
        assert code == 0 and rec["result"]["count"] == naive_monomial_count(B, 6)
        assert len(rec["input_hash"]) == 16 and "runtime" in rec


def test_witness_and_greedy(capsys):
    code, rec, _ = call(capsys, "witness", "--A", "1,2", "--poly", "d^2")
    assert rec["result"]["witness"]["d"] == 1
    code, rec, _ = call(capsys, "witness", "--A", "5", "--poly", "d^2")
    assert rec["result"]["witness"] is None
    code, rec, _ = call(capsys, "greedy", "--N", 3, "--poly", "d^2")
    assert rec["result"]["set"] == [1, 3]


def test_exact_max_matches_fixture(capsys):
    table = load_extremal()
    code, rec, _ = call(capsys, "exact-max", "--N", 20, "--poly", "d^2")
    assert rec["result"]["size"] == table[20] and rec["result"]["exact"]
    code, rec, _ = call(capsys, "exact-max", "--N", 40, "--poly", "d^2", "--budget", 5)
    assert rec["result"]["lower_bound_only"]


def test_spectrum_files(capsys, setfile, tmp_path):
    path, B = setfile
    code, rec, _ = call(capsys, "spectrum", "--set", path, "--out", tmp_path / "sp", "--eta", "1/2")
    assert code == 0
    S, meta = load_spectrum(tmp_path / "sp" / "spectrum.c16")
    assert meta["M"] == 6 and meta["eta"] == "1/2"
    with open(tmp_path / "sp" / "spectrum_hist.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert sum(int(r["count"]) for r in rows) == S.values.size


def test_arcs_verbs(capsys):
    code, rec, _ = call(capsys, "classify", "--alpha", "1/2,0", "--eta", "1/2", "--M", 64)
    assert rec["result"]["major"] and rec["result"]["q"] == 2
    code, rec, _ = call(capsys, "gauss", "--a", "0,1", "--q", 4)
    assert rec["result"]["value"] == pytest.approx([2, 2])
    code, rec, _ = call(capsys, "vint", "--beta", "0,1", "--N", 1)
    assert rec["result"]["difference"] < 1e-8
    code, rec, _ = call(capsys, "sweep-minor", "--eta", "1/2", "--M", 64, "--trials", 8)
    assert rec["result"]["n_minor"] + rec["result"]["n_major"] == 8
    code, rec, _ = call(capsys, "sweep-major", "--q", 2, "--eta", "1/2", "--M", 64, "--trials", 4)
    assert rec["result"]["refined_le_plain"]
    code, rec, _ = call(capsys, "weyl-ratio", "--Ns", "100", "--trials", 2)
    assert len(rec["result"]["rows"]) == 2


def test_increment_verbs(capsys, tmp_path):
    B = planted_coset_set(64, 2, 37, c=1, residues=(1, 2))
    path = tmp_path / "P.pts"
    write_pointset(B, path)
    code, rec, _ = call(capsys, "dichotomy", "--set", path, "--eta", "1/2", "--sigma", 2)
    assert rec["result"]["outcome"] == "structured" and rec["result"]["grid"]["q"] == 2
    code, rec, _ = call(capsys, "l2table", "--set", path, "--eta", "1/2")
    assert rec["result"]["argmax"] == 4
    code, rec, _ = call(capsys, "iterate", "--set", path, "--eta", "1/2", "--sigma", 2, "--C-lab", "1/4",
                          "--max-steps", 1)
    assert rec["result"]["trace"][-1]["stop_reason"] == "step-limit"
    code, rec, _ = call(capsys, "bound", "--M", 10**6)
    assert 0.25 <= rec["result"]["ratio"] <= 4


def test_lift_and_sumset(capsys, tmp_path):
    code, rec, _ = call(capsys, "lift", "--A", "1,3,5,7,8", "--poly", "2*d, 2*d^2", "--out", tmp_path)
    assert rec["result"]["certificate"]
    B = read_pointset(tmp_path / "lifted.pts")
    assert B.cardinality == rec["result"]["size"] and B.mode == "signed"
    code, rec, _ = call(capsys, "sumset-reduce", "--A", "1,2,3", "--Bset", "1,2,3")
    assert rec["result"]["m"] == 4 and rec["result"]["containment"]


def test_int_list_from_file(capsys, tmp_path):
    (tmp_path / "A.txt").write_text("1 2\n")
    code, rec, _ = call(capsys, "witness", "--A", f"@{tmp_path / 'A.txt'}", "--poly", "d^2")
    assert rec["result"]["witness"]["d"] == 1


def test_exit_codes(capsys, tmp_path):
    code, _, err = call(capsys, "count")
    assert code == 2 and "--set" in err
    code, _, err = call(capsys, "greedy", "--N", 5, "--poly", "d^^2")
    assert code == 2 and "--poly" in err
    code, _, err = call(capsys, "lift", "--A", "1,2", "--poly", "d, 2*d")
    assert code == 2
    code, _, err = call(capsys, "count", "--set", tmp_path / "missing.pts")
    assert code == 3
    code, _, err = call(capsys, "gauss", "--a", "1", "--q", 0)
    assert code == 3
    code, _, err = call(capsys, "bound", "--M", 10)
    assert code == 3
    with pytest.raises(SystemExit) as e:
        main(["nonsense"])
    assert e.value.code == 2
    capsys.readouterr()


def test_run_usage_errors_name_the_field(capsys, tmp_path):
    code, _, err = call(capsys, "run", "dichotomy", "--M", 16, "--delta", "1/2", "--eps", "1/2",
                        "--out", tmp_path)
    assert code == 2 and "--eps" in err
    code, _, err = call(capsys, "run", "extremal", "--N", 5, "--out", tmp_path)
    assert code == 2 and "--poly" in err
    code, _, err = call(capsys, "run", "dichotomy", "--M", 16, "--delta", 2, "--out", tmp_path)
    assert code == 2 and "--delta" in err
    (tmp_path / "c.json").write_text(json.dumps({"bogus": 1}))
    code, _, err = call(capsys, "run", "bound", "--M", 10**6, "--config", tmp_path / "c.json")
    assert code == 2 and "--bogus" in err


def test_run_is_byte_identical(capsys, tmp_path):
    base = ["run", "dichotomy", "--M", 16, "--delta", "1/2", "--trials", 3, "--seed", 5]
    call(capsys, *base, "--out", tmp_path / "a", "--threads", 1)
    call(capsys, *base, "--out", tmp_path / "b", "--threads", 2)
    for name in ("dichotomy.jsonl", "dichotomy.csv", "dichotomy.config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = [json.loads(x) for x in (tmp_path / "a" / "dichotomy.jsonl").read_text().splitlines()]
    assert [r["set_seed"] for r in rows] == [5, 6, 7]
    assert all({"config_hash", "version", "seed", "schema"} <= set(r) for r in rows)
    assert all("runtime" not in r for r in rows)
    assert (tmp_path / "a" / "timings.jsonl").exists()


def test_run_config_file_round_trip(capsys, tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"M": 1000000, "C": "1/2"}))
    code, rec, _ = call(capsys, "run", "bound", "--config", tmp_path / "c.json", "--out", tmp_path / "o")
    assert code == 0
    cfg = json.loads((tmp_path / "o" / "bound.config.json").read_text())
    assert cfg["C"] == "1/2" and cfg["M"] == 10**6 and rec["result"]["config_hash"]


def test_run_extremal_csv(capsys, tmp_path):
    call(capsys, "run", "extremal", "--N", 24, "--poly", "d^2", "--out", tmp_path)
    with open(tmp_path / "extremal.csv") as fh:
        rows = list(csv.DictReader(fh))
    table = load_extremal()
    assert [int(r["exact_max"]) for r in rows] == [table[n] for n in range(1, 25)]
    assert all(int(r["greedy"]) * 2 >= int(r["exact_max"]) for r in rows)
    assert rows[0]["thm1_bound"] == "" and float(rows[-1]["thm1_bound"]) > 0


def test_run_other_kinds(capsys, tmp_path, setfile):
    path, B = setfile
    code, rec, _ = call(capsys, "run", "count", "--set", path, "--out", tmp_path)
    row = json.loads((tmp_path / "count.jsonl").read_text())
    assert row["count"] == naive_monomial_count(B, 6)
    for argv in (["sweep-minor", "--M", 64, "--eta", "1/2", "--trials", 4],
                 ["sweep-major", "--M", 64, "--eta", "1/2", "--q", 2, "--trials", 4],
                 ["lift", "--A", "1,2,4", "--poly", "d^2"],
                 ["iterate", "--set", path, "--eta", "1/2", "--max-steps", 2]):
        code, rec, err = call(capsys, "run", *argv, "--out", tmp_path)
        assert code == 0, err
        assert rec["result"]["rows"] >= 1


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "diffsetlab.cli", "gauss", "--a", "0,0", "--q", "3"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["result"]["abs"] == pytest.approx(3)
