import json
import subprocess
import sys

import numpy as np
import pytest

from gpspr import io
from gpspr.cli import main, parse_ratio_range
from gpspr.errors import ConfigurationError
from gpspr.model import gen_gaussian


def test_parse_ratio_range():
    assert parse_ratio_range("1:1:3") == [1, 2, 3]
    assert parse_ratio_range("2:0.5:2") == [2]
    assert parse_ratio_range("1.5:0.25:3.5") == [1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.25, 3.5]
    assert parse_ratio_range("1:0.1:1.3") == [1.0, 1.1, 1.2, 1.3]
    for bad in ("3:1:2", "1:0:2", "1:-1:2", "1:2", "a:1:2"):
        with pytest.raises(ConfigurationError):
            parse_ratio_range(bad)


def test_config_errors_exit_1(tmp_path, capsys):
    assert main(["phase-transition", "--bogus"]) == 1
    assert main(["phase-transition", "--m", "10", "--ratios", "1:1:2"]) == 1
    assert main(["phase-transition", "--ratios", "3:1:2"]) == 1
    assert main(["phase-transition", "--algos", "gps,newton"]) == 1
    assert main(["spectral", "--threads", "0"]) == 1
    assert main([]) == 1
    assert "error:" in capsys.readouterr().err


def test_runtime_errors_exit_2(tmp_path):
    assert main(["solve", "--matrix", str(tmp_path / "missing"), "--amplitudes", "x"]) == 2
    (tmp_path / "bad").write_bytes(b"GPSMAT0")
    assert main(["solve", "--matrix", str(tmp_path / "bad"), "--amplitudes", "x"]) == 2


def test_phase_transition_cell_count(tmp_path, capsys):
    out = tmp_path / "pt.csv"
    code = main(["phase-transition", "--n", "8", "--ratios", "1.5:0.25:3.5", "--trials", "1",
                 "--field", "real", "--algos", "gps,rgps,dr,rdr", "--seed", "1",
                 "--max-iters", "30", "--output", str(out), "--threads", "1"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 9 * 4
    printed = capsys.readouterr().out
    assert "config trials = 1" in printed and "config t = 0.1" in printed


def test_solve_round_trip(tmp_path):
    inst = gen_gaussian(10, 40, "complex", 0)
    io.save_matrix(tmp_path / "A.gpsmat", inst.ensemble.a_matrix)
    io.save_vector(tmp_path / "b.gpsvec", inst.amplitudes)
    io.save_vector(tmp_path / "t.gpsvec", inst.truth)
    x_path = tmp_path / "x.gpsvec"
    code = main(["solve", "--matrix", str(tmp_path / "A.gpsmat"), "--amplitudes",
                 str(tmp_path / "b.gpsvec"), "--algo", "rgps", "--t", "0.1", "--max-iters", "5000",
                 "--tol", "1e-3", "--output", str(x_path), "--quiet"])
    assert code == 0
    x = io.load_vector(x_path)
    assert x.shape == (10,)
    trace = (tmp_path / "x.gpsvec.trace.csv").read_text().splitlines()
    assert trace[0] == "iter,rel_err,residual,seconds"
    assert trace[-1].endswith(",") and float(trace[-1].split(",")[2]) < 1e-3

    io.write_amplitudes_csv(tmp_path / "b.csv", inst.amplitudes)
    code = main(["solve", "--matrix", str(tmp_path / "A.gpsmat"), "--amplitudes",
                 str(tmp_path / "b.csv"), "--truth", str(tmp_path / "t.gpsvec"), "--algo", "gps",
                 "--trace", str(tmp_path / "tr.csv"), "--timing", "--quiet"])
    assert code == 0
    last = (tmp_path / "tr.csv").read_text().splitlines()[-1].split(",")
    assert float(last[1]) < 1e-3 and last[3] != ""


def test_solve_prior_flags(tmp_path):
    inst = gen_gaussian(6, 30, "real", 1)
    io.save_matrix(tmp_path / "A", inst.ensemble.a_matrix)
    io.save_vector(tmp_path / "b", inst.amplitudes)
    base = ["solve", "--matrix", str(tmp_path / "A"), "--amplitudes", str(tmp_path / "b"), "--quiet"]
    assert main(base + ["--prior", "l1"]) == 1
    assert main(base + ["--prior", "l0"]) == 1
    assert main(base + ["--prior", "real"]) == 0
    assert main(base + ["--prior", "l0", "--s", "6"]) == 0
    assert main(base + ["--algo", "dr", "--prior", "real"]) == 1


def test_spectral(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["spectral", "--n", "8", "--m", "32", "--field", "complex", "--seed", "3",
                 "--output", str(out)]) == 0
    report = json.loads(out.read_text())
    assert 0 < report["t_max"] < 1
    captured = capsys.readouterr()
    assert "t_max:" in captured.out and "warning" not in captured.err
    assert main(["spectral", "--n", "8", "--m", "32", "--seed", "3", "--t", "0.9"]) == 0
    assert "warning" in capsys.readouterr().err


def test_other_subcommands(tmp_path):
    assert main(["noise-sweep", "--n", "8", "--m", "24", "--snr", "10,30", "--trials", "2",
                 "--max-iters", "20", "--output", str(tmp_path / "n.csv"), "--quiet"]) == 0
    assert len((tmp_path / "n.csv").read_text().splitlines()) == 1 + 2 * 2
    assert main(["sparse", "--n", "20", "--sparsity", "0,2", "--trials", "1", "--max-iters", "50",
                 "--variant", "l0", "--output", str(tmp_path / "s.csv"), "--quiet"]) == 0
    assert main(["tv", "--h", "4", "--w", "4", "--trials", "1", "--hio-iters", "20",
                 "--tv-steps", "2", "--format", "jsonl", "--output", str(tmp_path / "t.jsonl"),
                 "--quiet"]) == 0
    assert len((tmp_path / "t.jsonl").read_text().splitlines()) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gpspr", "spectral", "--n", "3", "--m", "9",
                           "--quiet"], capture_output=True, text=True)
    assert proc.returncode == 0 and "config n = 3" in proc.stdout
