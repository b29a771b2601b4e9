import json

import numpy as np
import pytest

from dpcompress.cli import main
from dpcompress.io import read_model, read_thermo, read_tables, read_xyz


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_pipeline(workdir, capsys):
    assert run(capsys, "gen-model", "--preset", "tiny", "--seed", "3", "--out", "m.json")[0] == 0
    assert read_model("m.json").provenance["seed"] == 3
    assert run(capsys, "gen-config", "--preset", "tiny", "--jitter", "0.1", "--out", "c.xyz")[0] == 0
    assert read_xyz("c.xyz").n_atoms == 32

    code, out, _ = run(capsys, "compress", "--model", "m.json", "--interval", "0.01",
                       "--out", "t.dptb")
    assert code == 0 and "200 intervals" in out
    assert (workdir / "t.dptb").read_bytes()[:4] == b"DPTB"
    assert read_tables("t.dptb")[0].n == 200

    code, out, _ = run(capsys, "validate", "--model", "m.json", "--n-configs", "2")
    rows = [line.split() for line in out.splitlines()[1:4]]
    assert code == 0 and [r[0] for r in rows] == ["0.1", "0.01", "0.001"]
    assert "log-log slope" in out

    code, out, _ = run(capsys, "run", "--model", "m.json", "--table", "t.dptb", "--config", "c.xyz",
                       "--steps", "99", "--thermo", "th.csv", "--out", "final.xyz")
    assert code == 0
    assert "100 evaluations performed" in out
    thermo = read_thermo("th.csv")
    assert thermo["step"].tolist() == [0, 50]
    assert "# model_seed=3" in (workdir / "th.csv").read_text()
    assert not np.array_equal(read_xyz("final.xyz").positions, read_xyz("c.xyz").positions)


def test_flags_after_subcommand_and_json(workdir, capsys):
    code, out, _ = run(capsys, "run", "--preset", "tiny", "--steps", "3", "--thermo-every", "1",
                       "--format", "json", "--seed", "2")
    payload = json.loads(out)
    assert code == 0 and payload["evaluations"] == 4 and len(payload["thermo"]) == 4
    assert payload["md_seed"] == 2


def test_run_is_reproducible(workdir, capsys):
    outs = [run(capsys, "--seed", "4", "run", "--preset", "tiny", "--steps", "10",
                "--thermo-every", "5")[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_exact_route(workdir, capsys):
    code, out, _ = run(capsys, "run", "--preset", "tiny", "--exact", "--steps", "2",
                       "--format", "json")
    assert code == 0 and json.loads(out)["route"] == "exact"


def test_bench_reports_savings(workdir, capsys):
    code, out, _ = run(capsys, "bench", "--preset", "copper-like", "--repeats", "1")
    assert code == 0
    assert "savings 82.55%" in out
    assert "s/step/atom" in out


@pytest.mark.parametrize("argv", [
    [],
    ["gen-model", "--preset", "argon", "--out", "x.json"],
    ["run", "--model", "missing.json"],
    ["compress", "--model", "m.json", "--interval", "-1", "--out", "t"],
    ["validate", "--preset", "tiny", "--intervals", "0.1,abc"],
    ["--workers", "0", "run", "--preset", "tiny"],
    ["run", "--preset", "tiny", "--steps", "0"],
])
def test_usage_errors_exit_2(workdir, capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_failures_exit_1(workdir, capsys):
    (workdir / "bad.json").write_text('{"schema": "nope"}')
    code, _, err = run(capsys, "compress", "--model", "bad.json", "--interval", "0.01",
                       "--out", "t")
    assert code == 1 and "FormatError" in err
    code, _, err = run(capsys, "run", "--preset", "tiny", "--steps", "5", "--buffer", "0.01",
                       "--temperature", "3000")
    assert code == 1 and "StaleNeighborListError" in err
