import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from qnns import datasets
from qnns.bench import CSV_COLUMNS, BenchConfig, ConfigError, run_bench, run_validate, run_waydown
from qnns.cli import main


def small(**kw):
    base = dict(n=800, dims=(2,), q_count=500)
    base.update(kw)
    return BenchConfig(**base)


def test_validate_report_is_clean():
    rep = run_validate(small(dims=(2, 3)))
    assert rep.failures == 0
    assert {(r.method, r.d) for r in rep.results} == {(m, d) for m in
                                                       ("brute", "kd", "pat", "qtree-crude", "qtree-friends")
                                                       for d in (2, 3)}


def test_validate_high_dimension_without_friends():
    methods = ("brute", "kd", "pat", "qtree-crude")
    assert run_validate(small(methods=methods, dims=(8,))).failures == 0


def test_friends_rejected_above_seven():
    with pytest.raises(ConfigError, match="d <= 7"):
        run_validate(small(dims=(8,)))
    with pytest.raises(ConfigError):
        run_bench(small(methods=("kd", "sorting")))
    with pytest.raises(ConfigError):
        run_waydown(small(methods=("kd",)))


def test_csv_round_trip():
    rep = run_bench(small(methods=("brute", "kd", "pat")))
    rows = list(csv.DictReader(io.StringIO(rep.to_csv())))
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    assert [r["method"] for r in rows] == ["brute", "kd", "pat"]
    for r in rows:
        assert int(r["n"]) == 800 and int(r["d"]) == 2
        assert float(r["seconds"]) > 0 and float(r["qps"]) > 0
        float(r["mean_distance_evals"]), float(r["mean_nodes_visited"])
    assert rows[0]["n_c"] == "" and int(rows[2]["n_c"]) == 7
    assert float(rows[0]["mean_distance_evals"]) == 800.0


def test_table_layout():
    rep = run_bench(small(methods=("brute", "pat"), dims=(2, 3)))
    lines = rep.to_table().splitlines()
    assert lines[0].split("|")[2].strip() == "d = 2"
    assert lines[0].split("|")[3].strip() == "d = 3"
    assert lines[2].split("|")[1].strip() == "Brute force"
    assert lines[3].split("|")[1].strip() == "Principal axis tree"
    assert all(cell.strip().endswith("s") for cell in lines[3].split("|")[2:4])


def test_deterministic_reports():
    a = run_bench(small(methods=("pat", "qtree-crude")))
    b = run_bench(small(methods=("pat", "qtree-crude")))
    assert [r.mean_stats for r in a.results] == [r.mean_stats for r in b.results]


def test_waydown_single_leaf_is_exact():
    rep = run_waydown(small(methods=("pat", "qtree-crude"), n=5,
                            leaf_cap={"pat": 10, "qtree-crude": 10}))
    assert all(rate == 0.0 for rate in rep.rates.values())
    assert "false results: 0.00%" in rep.render()


def test_cli_exit_codes_and_output(tmp_path, capsys):
    assert main(["validate", "--n", "500", "--queries", "300", "--dim", "2,3"]) == 0
    assert capsys.readouterr().out.count(": ok") == 10
    assert main(["validate", "--n", "500", "--dim", "8"]) == 2
    assert "qtree-friends" in capsys.readouterr().err
    out = tmp_path / "b.csv"
    assert main(["bench", "--n", "500", "--queries", "300", "--method", "kd", "--method", "pat",
                 "--nc", "pat=5", "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["method"] for r in rows] == ["kd", "pat"] and rows[1]["n_c"] == "5"
    assert main(["waydown", "--n", "500", "--queries", "300", "--format", "csv"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("method,d,n,n_c,error_rate") and ",7," in text


def test_cli_gen_and_import(tmp_path, capsys):
    path = tmp_path / "d.qnns"
    assert main(["gen", "--n", "300", "--dim", "3", "--seed", "4", "--out", str(path)]) == 0
    X = datasets.load(path)
    assert np.array_equal(X, datasets.gen_dataset("gaussian", 300, 3, seed=4))
    capsys.readouterr()
    assert main(["validate", "--data", str(path), "--queries", "200", "--method", "kd"]) == 0
    assert "n=300 d=3" in capsys.readouterr().out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "qnns", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("gen", "validate", "bench", "waydown"):
        assert cmd in out.stdout
