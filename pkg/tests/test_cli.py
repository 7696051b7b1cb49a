import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from harsanyi.cli import main

FAKE_MODEL = Path(__file__).parent / "data" / "fake_model.py"


def run(*args, env=None):
    import os
    full_env = dict(os.environ)
    full_env.update(env or {})
    return subprocess.run([sys.executable, "-m", "harsanyi", *map(str, args)],
                          capture_output=True, text=True, env=full_env)


def write(path, doc):
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def vt(tmp_path):
    return write(tmp_path / "vt.json", {"format": "harsanyi-vt/1", "n": 2, "values": [0, 1, 1, 3]})


def test_compute_example(tmp_path, vt):
    out = tmp_path / "it.json"
    assert main(["compute", "--input", str(vt), "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["effects"] == [0.0, 1.0, 1.0, 1.0] and doc["format"] == "harsanyi-it/1"


def test_compute_csv(tmp_path, vt, capsys):
    assert main(["compute", "--input", str(vt), "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["mask,order,effect", "0,0,0.0", "1,1,1.0", "2,1,1.0", "3,2,1.0"]


def test_compute_planted_spec(tmp_path):
    spec = write(tmp_path / "gs.json", {"format": "harsanyi-gs/1", "kind": "planted", "n": 4,
                                        "planted": [{"mask": 6, "coefficient": 2.0}]})
    out = tmp_path / "it.json"
    assert main(["compute", "--input", str(spec), "--output", str(out)]) == 0
    effects = json.loads(out.read_text())["effects"]
    assert np.count_nonzero(effects) == 1 and effects[6] == 2.0


def test_compute_external_command(tmp_path):
    out = tmp_path / "it.json"
    cmd = f"{sys.executable} {FAKE_MODEL}"
    assert main(["compute", "--command", cmd, "--n", "3", "--output", str(out)]) == 0
    assert json.loads(out.read_text())["baseline"] == 0.5


def test_external_failure_exit_3(tmp_path):
    cmd = f"{sys.executable} {FAKE_MODEL} die-after:3"
    res = run("compute", "--command", cmd, "--n", "3", "--output", tmp_path / "it.json")
    assert res.returncode == 3 and "mask=3" in res.stderr


def test_malformed_json_names_key(tmp_path):
    bad = write(tmp_path / "bad.json", {"format": "harsanyi-vt/1", "n": 2})
    res = run("compute", "--input", bad)
    assert res.returncode == 2 and "'values'" in res.stderr
    (tmp_path / "broken.json").write_text("{not json")
    assert run("compute", "--input", tmp_path / "broken.json").returncode == 2
    assert run("compute", "--input", tmp_path / "missing.json").returncode == 2


def test_max_n_cap(tmp_path):
    spec = write(tmp_path / "gs.json", {"format": "harsanyi-gs/1", "kind": "parity", "n": 6})
    assert run("compute", "--input", spec, env={"HARSANYI_MAX_N": "5"}).returncode == 2
    assert run("compute", "--input", spec, env={"HARSANYI_MAX_N": "25"}).returncode == 2
    assert run("compute", "--input", spec, env={"HARSANYI_MAX_N": "6"}).returncode == 0


def test_sparsity_planted(tmp_path):
    spec = write(tmp_path / "gs.json", {"format": "harsanyi-gs/1", "kind": "planted", "n": 8, "planted": [
        {"mask": 1, "coefficient": 1.0}, {"mask": 6, "coefficient": 0.8}, {"mask": 240, "coefficient": 1.2}]})
    out, csv = tmp_path / "sr.json", tmp_path / "curve.csv"
    assert main(["sparsity", "--input", str(spec), "--output", str(out), "--csv", str(csv)]) == 0
    doc = json.loads(out.read_text())
    assert doc["R_total"] == 3 and doc["format"] == "harsanyi-sr/1"
    assert csv.read_text().splitlines()[0] == "rank,strength,mask,order,effect"
    rows = [line.split(",") for line in csv.read_text().splitlines()[1:]]
    assert [int(r[2]) for r in rows[:3]] == [240, 1, 6]
    assert all(float(r[1]) <= 1e-9 for r in rows[3:])


def test_sparsity_parity(tmp_path):
    spec = write(tmp_path / "gs.json", {"format": "harsanyi-gs/1", "kind": "parity", "n": 10})
    out = tmp_path / "sr.json"
    assert main(["sparsity", "--input", str(spec), "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert not doc["assumptions"]["weak_monotonicity"]["passed"]
    assert len(doc["curve"]) == 1023


def test_sparsity_zero_game_exit_4(tmp_path):
    zero = write(tmp_path / "z.json", {"format": "harsanyi-vt/1", "n": 3, "values": [0.0] * 8})
    assert run("sparsity", "--input", zero).returncode == 4


def test_sparsity_bad_flag(tmp_path, vt):
    assert run("sparsity", "--input", vt, "--tau", "abc").returncode == 2
    assert run("sparsity", "--input", vt, "--tau", "-1").returncode == 2


def test_attribution(tmp_path, vt):
    out = tmp_path / "attr.json"
    assert main(["attribution", "--input", str(vt), "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["shapley"]["definitional"] == [1.5, 1.5] and max(doc["shapley"]["delta"]) < 1e-12


def test_attribution_and_game(tmp_path):
    spec = write(tmp_path / "gs.json", {"format": "harsanyi-gs/1", "kind": "planted", "n": 5,
                                        "planted": [{"mask": 0b1011, "coefficient": 1.75}]})
    out = tmp_path / "attr.json"
    assert main(["attribution", "--input", str(spec), "--target", "0,1,3", "--order", "3",
                 "--output", str(out)]) == 0
    st = json.loads(out.read_text())["target"]["shapley_taylor"]
    assert st["definitional"] == pytest.approx(1.75) and st["harsanyi"] == pytest.approx(1.75)
    assert main(["attribution", "--input", str(spec), "--target", "0,1,3", "--order", "2",
                 "--output", str(out)]) == 0
    st = json.loads(out.read_text())["target"]["shapley_taylor"]
    assert st["definitional"] == 0.0 and st["harsanyi"] == 0.0


def test_attribution_out_of_range(vt):
    assert run("attribution", "--input", vt, "--target", "0,5").returncode == 2
    assert run("attribution", "--input", vt, "--target", "0", "--order", "3").returncode == 2


def test_verify_all_passes():
    res = run("verify", "--suite", "all", "--n", "8", "--trials", "100", "--seed", "1")
    assert res.returncode == 0, res.stdout
    assert "OK:" in res.stdout and "1/prod" in res.stdout


def test_verify_corrupted_interactions(tmp_path):
    rng = np.random.default_rng(3)
    values = rng.uniform(-1, 1, size=64).tolist()
    vt = write(tmp_path / "vt.json", {"format": "harsanyi-vt/1", "n": 6, "values": values})
    it = tmp_path / "it.json"
    assert main(["compute", "--input", str(vt), "--output", str(it)]) == 0
    assert run("verify", "--input", vt, "--interactions", it).returncode == 0
    doc = json.loads(it.read_text())
    doc["effects"][0b101101] += 1e-3
    corrupt = write(tmp_path / "corrupt.json", doc)
    res = run("verify", "--input", vt, "--interactions", corrupt)
    assert res.returncode == 1
    assert "worst_mask=" in res.stdout
    worst = int(res.stdout.split("worst_mask=")[1].split()[0])
    assert worst & 0b101101 == 0b101101


def test_verify_bad_n():
    assert run("verify", "--n", "13").returncode == 2


def test_synth_planted(tmp_path):
    spec, table = tmp_path / "gs.json", tmp_path / "vt.json"
    assert main(["synth", "planted", "--n", "14", "--concepts", "30", "--seed", "7",
                 "--spec-out", str(spec), "--out", str(table)]) == 0
    assert len(json.loads(spec.read_text())["planted"]) == 30
    assert len(json.loads(table.read_text())["values"]) == 1 << 14


def test_synth_parity(tmp_path):
    table = tmp_path / "vt.json"
    assert main(["synth", "parity", "--n", "10", "--out", str(table)]) == 0
    values = json.loads(table.read_text())["values"]
    for S in (0, 1, 3, 7, 1023):
        assert values[S] == (0 if S == 0 else (1 if bin(S).count("1") % 2 else -1))


def test_synth_or_empty_members(tmp_path):
    assert run("synth", "or", "--n", "4", "--members", "", "--out", tmp_path / "x.json").returncode == 2
    assert run("synth", "or", "--n", "4", "--out", tmp_path / "x.json").returncode == 2
    assert run("synth", "noisy", "--n", "4", "--out", tmp_path / "x.json").returncode == 2


SYNTH = [
    ["planted", "--n", "10", "--concepts", "8", "--seed", "3"],
    ["polynomial", "--n", "6", "--degree", "3", "--seed", "3"],
    ["noisy", "--n", "6", "--sigma", "0.1", "--seed", "3"],
    ["parity", "--n", "6"],
    ["or", "--n", "6", "--members", "0,2,4", "--payoff", "1.5"],
]


@pytest.mark.parametrize("argv", SYNTH, ids=lambda a: a[0])
def test_synth_rerun_is_byte_identical(tmp_path, argv):
    outs = []
    for tag in "ab":
        spec, table = tmp_path / f"gs_{tag}.json", tmp_path / f"vt_{tag}.json"
        assert main(["synth", *argv, "--spec-out", str(spec), "--out", str(table)]) == 0
        outs.append((spec.read_bytes(), table.read_bytes()))
    assert outs[0] == outs[1]


def test_every_subcommand_is_deterministic(tmp_path):
    spec = tmp_path / "gs.json"
    assert main(["synth", "noisy", "--n", "7", "--sigma", "0.05", "--seed", "9", "--spec-out", str(spec)]) == 0
    commands = [
        ["compute", "--input", spec],
        ["compute", "--input", spec, "--format", "csv"],
        ["sparsity", "--input", spec, "--csv", "CSV"],
        ["attribution", "--input", spec, "--target", "1,2", "--order", "2"],
        ["verify", "--suite", "all", "--n", "5", "--trials", "5", "--seed", "4"],
    ]
    for i, cmd in enumerate(commands):
        blobs = []
        for tag in "ab":
            out = tmp_path / f"{i}_{tag}.out"
            argv = [str(a).replace("CSV", str(tmp_path / f"{i}_{tag}.csv")) for a in cmd]
            res = run(*argv, "--output", out)
            assert res.returncode == 0, res.stderr
            extra = (tmp_path / f"{i}_{tag}.csv").read_bytes() if "--csv" in cmd else b""
            blobs.append((out.read_bytes(), extra, res.stdout))
        assert blobs[0] == blobs[1], cmd
