import json
import subprocess
import sys

import pytest

from rigidevo.cli import EXIT_FILE, EXIT_INTEGRITY, EXIT_USAGE, main, resolve_seed
from rigidevo.exceptions import IntegrityError
from rigidevo.graphs import complete_minus_edge, cycle_graph, empty_graph, write_edge_list


@pytest.fixture
def files(tmp_path):
    k4m = tmp_path / "k4m.txt"
    write_edge_list(complete_minus_edge(4), k4m)
    empty = tmp_path / "empty.txt"
    write_edge_list(empty_graph(3), empty)
    c5 = tmp_path / "c5.txt"
    write_edge_list(cycle_graph(5), c5)
    return {"k4m": str(k4m), "empty": str(empty), "c5": str(c5), "dir": tmp_path}


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def one_json(out):
    lines = out.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


def test_rigid_and_rank(files, capsys):
    code, out, _ = run_cli(capsys, "rigid", "--graph", files["k4m"], "--dim", "2", "--seed", "1")
    assert code == 0 and one_json(out)["rigid"] is True
    code, out, _ = run_cli(capsys, "rank", "--graph", files["empty"], "--dim", "2", "--seed", "1")
    assert code == 0 and one_json(out)["rank"] == 0


def test_closure_writes_file(files, capsys):
    dest = files["dir"] / "cl.txt"
    code, out, _ = run_cli(capsys, "closure", "--graph", files["k4m"], "--dim", "2", "--seed", "2", "--out", str(dest))
    res = one_json(out)
    assert code == 0 and res["complete"] and res["added"] == [[0, 1]]
    assert dest.read_text().splitlines()[0] == "4 6"


def test_graph_queries(files, capsys):
    assert one_json(run_cli(capsys, "global", "--graph", files["c5"], "--dim", "1", "--seed", "3")[1])["globally_rigid"]
    comps = one_json(run_cli(capsys, "components", "--graph", files["c5"], "--dim", "2", "--seed", "3")[1])
    assert sorted(map(tuple, comps["components"])) == [(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]
    assert one_json(run_cli(capsys, "core", "--graph", files["c5"], "--k", "2")[1])["size"] == 5
    assert one_json(run_cli(capsys, "extcore", "--graph", files["k4m"], "--dim", "1")[1])["size"] == 4
    o = one_json(run_cli(capsys, "orient", "--graph", files["k4m"], "--d", "1")[1])
    assert o == {"orientable": False, "witness": [0, 1, 2, 3]}
    o = one_json(run_cli(capsys, "orient", "--graph", files["k4m"], "--d", "2")[1])
    assert o["orientable"] and len(o["orientation"]) == 5


def test_hitting_n3(files, capsys):
    code, out, _ = run_cli(capsys, "hitting", "--n", "3", "--dim", "1", "--trials", "10", "--seed", "7")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 11
    header = lines[0].split(",")
    for line in lines[1:]:
        row = dict(zip(header, line.split(",")))
        assert row["M_d"] == row["M_rigid_d"] == "2"


def test_hitting_matches_theorem1_recipe(files, capsys):
    a, b = files["dir"] / "h.csv", files["dir"] / "t.csv"
    run_cli(capsys, "hitting", "--n", "8", "--dim", "1", "--trials", "5", "--seed", "4", "--out", str(a))
    run_cli(capsys, "exp", "--recipe", "theorem1", "--n", "8", "--d", "1", "--trials", "5", "--seed", "4", "--out", str(b))
    assert a.read_text() == b.read_text()
    assert (files["dir"] / "t.manifest.json").exists()


def test_exp_config_and_overrides(files, capsys):
    cfg = files["dir"] / "run.cfg"
    cfg.write_text("recipe = cor12\nn = 100\nd = 1\nc = 0, 3\ntrials = 50\nseed = 9\n")
    out1 = files["dir"] / "a.csv"
    code, out, _ = run_cli(capsys, "exp", "--config", str(cfg), "--trials", "4", "--out", str(out1))
    res = one_json(out)
    assert code == 0 and res["records"] == 8 and res["seed"] == 9
    out2 = files["dir"] / "b.csv"
    run_cli(capsys, "exp", "--config", str(cfg), "--trials", "4", "--out", str(out2))
    assert out1.read_bytes() == out2.read_bytes()
    assert len(out1.read_text().splitlines()) == 9


def test_seed_precedence(monkeypatch):
    monkeypatch.setenv("RIGIDEVO_SEED", "5")
    assert resolve_seed(1, "2") == 1
    assert resolve_seed(None, "2") == 2
    assert resolve_seed(None, None) == 5
    monkeypatch.delenv("RIGIDEVO_SEED")
    s = resolve_seed(None)
    assert 0 <= s < 2**63


def test_generated_seed_is_printed_and_replays(files, capsys, monkeypatch):
    monkeypatch.delenv("RIGIDEVO_SEED", raising=False)
    first = one_json(run_cli(capsys, "rank", "--graph", files["c5"], "--dim", "2")[1])
    again = one_json(run_cli(capsys, "rank", "--graph", files["c5"], "--dim", "2", "--seed", str(first["seed"]))[1])
    assert first == again


def test_exit_codes(files, capsys, monkeypatch):
    assert run_cli(capsys, "rank", "--dim", "2")[0] == EXIT_USAGE
    assert run_cli(capsys, "bogus")[0] == EXIT_USAGE
    assert run_cli(capsys, "rank", "--graph", "/nonexistent/g.txt", "--dim", "2")[0] == EXIT_FILE
    bad = files["dir"] / "bad.txt"
    bad.write_text("3 2\n0 1\n")
    assert run_cli(capsys, "rank", "--graph", str(bad), "--dim", "2")[0] == EXIT_FILE
    assert run_cli(capsys, "exp", "--recipe", "cor12", "--config", "/nonexistent.cfg")[0] == EXIT_FILE
    assert run_cli(capsys, "exp", "--recipe", "theorem1", "--n", "2", "--d", "1", "--trials", "1", "--seed", "1")[0] == EXIT_USAGE

    import rigidevo.experiments as E

    def broken(*a, **k):
        raise IntegrityError("planted")

    monkeypatch.setattr(E, "hitting_times", broken)
    code, _, err = run_cli(capsys, "hitting", "--n", "5", "--dim", "1", "--seed", "1")
    assert code == EXIT_INTEGRITY and "integrity" in err


def test_module_entry_point_byte_identical(files):
    cmd = [sys.executable, "-m", "rigidevo", "closure", "--graph", files["c5"], "--dim", "1", "--seed", "3"]
    a = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    assert a == b and json.loads(a)["complete"]
