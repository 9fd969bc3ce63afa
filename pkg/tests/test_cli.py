"""CLI: config parsing/round-trip, subcommands, exit codes, determinism."""

import os
import subprocess
import sys

import numpy as np
import pytest

from torusgl.cli import (
    ConfigError,
    RunConfig,
    main,
    parse_config,
    serialize_config,
    SWEEP_COLUMNS,
)

T2_CONFIG = """
[geometry]
dim = 2
sites = 12 12
lengths = 1 1

[bundle]
chern_01 = 1

[run]
epsilons = 0.3 0.25
seed = 7
out = {out}

[optimizer]
tol = 1e-8
max_iter = 40000

[ansatz]
windings = 1
positions = 0.5 0.5
"""


def write_config(tmp_path, text=None, **overrides):
    out = overrides.pop("out", tmp_path / "run_out")
    text = (text or T2_CONFIG).format(out=out)
    for key, val in overrides.items():
        text = text.replace(f"{key} = ", f"{key} = {val} #", 1)
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return path


def test_config_roundtrip(tmp_path):
    path = write_config(tmp_path)
    cfg = parse_config(path.read_text())
    again = parse_config(serialize_config(cfg))
    assert cfg == again
    # and a second serialize is byte-identical
    assert serialize_config(cfg) == serialize_config(again)


def test_config_validation_messages():
    base = T2_CONFIG.format(out="x")
    bad = base.replace("epsilons = 0.3 0.25", "epsilons = 0")
    with pytest.raises(ConfigError, match="epsilon > 0"):
        parse_config(bad)
    bad = base.replace("epsilons = 0.3 0.25", "epsilons = 0.25 0.3")
    with pytest.raises(ConfigError, match="decreasing"):
        parse_config(bad)
    bad = base.replace("sites = 12 12", "sites = 3 12")
    with pytest.raises(ConfigError, match="N_i >= 4"):
        parse_config(bad)
    bad = base.replace("seed = 7\n", "")
    with pytest.raises(ConfigError, match="seed"):
        parse_config(bad)


def test_cmd_minimize_trivial(tmp_path, capsys):
    out = tmp_path / "triv"
    text = T2_CONFIG.format(out=out)
    text = text.replace("chern_01 = 1", "chern_01 = 0")
    text = text.split("[ansatz]")[0]
    path = tmp_path / "t.cfg"
    path.write_text(text)
    code = main(["minimize", "--config", str(path)])
    captured = capsys.readouterr().out
    assert code == 0
    assert "converged = true" in captured
    total = [l for l in captured.splitlines() if l.startswith("total = ")][0]
    assert float(total.split("=")[1]) <= 1e-10
    for name in ("u.field", "A.field", "F.field", "mu.field", "summary.txt", "vorticity.txt"):
        assert (out / name).exists()
    assert (out / "vorticity.txt").read_text() == ""


def test_cmd_minimize_vortex_artifacts(tmp_path, capsys):
    out = tmp_path / "vrt"
    path = write_config(tmp_path, out=out)
    code = main(["minimize", "--config", str(path)])
    capsys.readouterr()
    assert code == 0
    triples = (out / "vorticity.txt").read_text().split()
    assert len(triples) == 4  # exactly one (component, x, y, winding) line
    assert triples[-1] == "1"
    # dumped fields round-trip through the repo-wide format
    from torusgl.lattice import read_field

    geom, degree, vals = read_field(out / "u.field")
    assert degree == 0 and vals.shape[0] == 2
    assert geom.sites == (12, 12)


def test_cmd_minimize_exit_codes(tmp_path, capsys):
    bad = write_config(tmp_path, text=T2_CONFIG.replace("epsilons = 0.3 0.25", "epsilons = 0"))
    assert main(["minimize", "--config", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "epsilon > 0" in err
    budget = write_config(tmp_path, max_iter=1)
    assert main(["minimize", "--config", str(budget)]) == 2
    capsys.readouterr()


def test_cmd_sweep_table(tmp_path, capsys):
    out = tmp_path / "swp"
    path = write_config(tmp_path, out=out)
    code = main(["sweep", "--config", str(path)])
    stdout = capsys.readouterr().out
    assert code == 0
    lines = stdout.strip().splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert len(lines) == 3
    table = (out / "sweep.csv").read_text()
    assert table == stdout


def test_cmd_sweep_determinism(tmp_path, capsys):
    out = tmp_path / "det"
    path = write_config(tmp_path, out=out)
    assert main(["sweep", "--config", str(path)]) == 0
    capsys.readouterr()
    first = (out / "sweep.csv").read_bytes()
    assert main(["sweep", "--config", str(path)]) == 0
    capsys.readouterr()
    assert (out / "sweep.csv").read_bytes() == first


def test_cmd_ansatz(tmp_path, capsys):
    out = tmp_path / "anz"
    path = write_config(tmp_path, out=out)
    code = main(["ansatz", "--config", str(path)])
    stdout = capsys.readouterr().out
    assert code == 0
    assert "total_winding = 1" in stdout
    assert (out / "ansatz.txt").exists()
    assert (out / "u.field").exists()


def test_cmd_hodge_test(capsys):
    assert main(["hodge-test"]) == 0
    out = capsys.readouterr().out
    assert "worst residual" in out


def test_cli_entrypoint_subprocess(tmp_path):
    # the console entry point works end to end in a fresh interpreter
    path = write_config(tmp_path)
    proc = subprocess.run(
        [sys.executable, "-m", "torusgl.cli", "ansatz", "--config", str(path), "--threads", "1"],
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    assert "total_winding = 1" in proc.stdout


def test_seed_and_out_overrides(tmp_path, capsys):
    out = tmp_path / "base"
    override = tmp_path / "override"
    path = write_config(tmp_path, out=out)
    assert main(["ansatz", "--config", str(path), "--out", str(override), "--seed", "9"]) == 0
    capsys.readouterr()
    assert override.exists()
    assert not out.exists()


def test_full_precision_output(tmp_path, capsys):
    out = tmp_path / "prec"
    path = write_config(tmp_path, out=out)
    main(["sweep", "--config", str(path)])
    capsys.readouterr()
    rows = (out / "sweep.csv").read_text().strip().splitlines()[1:]
    eps_cell = rows[0].split(",")[0]
    assert float(eps_cell) == 0.3
    assert len(eps_cell) >= 17  # 17 significant digits requested


def test_minimize_iteration_stream(tmp_path, capsys):
    out = tmp_path / "stream"
    text = T2_CONFIG.format(out=out).replace(
        "max_iter = 40000", "max_iter = 40000\nlog_every = 10"
    )
    path = tmp_path / "s.cfg"
    path.write_text(text)
    assert main(["minimize", "--config", str(path)]) == 0
    stdout = capsys.readouterr().out
    stream = [l for l in stdout.splitlines() if l.startswith("iteration ")]
    assert stream, "no per-iteration records emitted"
    assert "kinetic" in stream[0] and "grad_norm" in stream[0]


@pytest.mark.slow
def test_sweep_independent_of_thread_count(tmp_path):
    path = write_config(tmp_path, out=tmp_path / "thr")
    tables = []
    for threads in ("1", "2"):
        proc = subprocess.run(
            [sys.executable, "-m", "torusgl.cli", "sweep", "--config", str(path),
             "--threads", threads],
            capture_output=True,
            timeout=590,
        )
        assert proc.returncode == 0, proc.stderr.decode()
        tables.append(proc.stdout)
    assert tables[0] == tables[1]
