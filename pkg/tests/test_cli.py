import csv
import json

import pytest

from menusize.cli import _argv_from_flags, main


@pytest.fixture
def menu_file(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("1 1 0.5\n0.5 1 0.4\n")
    return p


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_eval(tmp_path, menu_file, capsys):
    code, out, _ = run(capsys, "--outdir", str(tmp_path / "o"), "eval", "--menu", str(menu_file),
                       "--dist", "iid:beta12", "--mc-n", "20000")
    assert code == 0
    (r,) = rows(tmp_path / "o" / "eval.csv")
    assert r["menu_size"] == "3"
    assert abs(float(r["revenue_exact"]) - float(r["mc_estimate"])) <= 4 * float(r["mc_stderr"])
    man = json.loads((tmp_path / "o" / "eval.manifest.json").read_text())
    assert man["command"] == "eval" and man["seed"] == 0
    assert set(man["constants"]) == {"x_prime", "c_diag", "r", "d", "delta_max"}
    assert out.splitlines()[0].startswith("menu,dist,menu_size")


def test_outdir_from_environment(tmp_path, menu_file, capsys, monkeypatch):
    monkeypatch.setenv("MENUSIZE_OUTDIR", str(tmp_path / "env"))
    assert run(capsys, "hazard", "--dist", "iid:uniform")[0] == 0
    (r,) = rows(tmp_path / "env" / "hazard.csv")
    assert r["satisfied"] == "true" and float(r["min_value"]) == 3.0


def test_usage_errors(capsys):
    assert run(capsys, "bogus")[0] == 1
    assert run(capsys, "eval", "--menu")[0] == 1
    assert run(capsys, "eval", "--unknown-flag", "1")[0] == 1
    assert run(capsys)[0] == 1


def test_precondition_errors(tmp_path, menu_file, capsys):
    o = str(tmp_path / "o")
    assert run(capsys, "--outdir", o, "eval", "--menu", str(tmp_path / "missing.txt"), "--dist", "iid:uniform")[0] == 2
    assert run(capsys, "--outdir", o, "eval", "--menu", str(menu_file), "--dist", "iid:nope")[0] == 2
    code, _, err = run(capsys, "--outdir", o, "certify", "--menu", str(menu_file), "--kind", "coarse",
                       "--delta", "0.5")
    assert code == 2 and "delta" in err
    assert run(capsys, "--outdir", o, "round", "--menu", str(menu_file), "--epsilon", "1.5")[0] == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("1 1 -2\n")
    assert run(capsys, "--outdir", o, "eval", "--menu", str(bad), "--dist", "iid:uniform")[0] == 2
    # a failed run leaves no CSV behind
    assert not (tmp_path / "o" / "eval.csv").exists()


def test_round_and_certify(tmp_path, menu_file, capsys):
    o = str(tmp_path / "o")
    assert run(capsys, "--outdir", o, "round", "--menu", str(menu_file), "--epsilon", "0.1")[0] == 0
    (r,) = rows(tmp_path / "o" / "round.csv")
    assert float(r["guarantee_slack"]) > 0
    assert (tmp_path / "o" / "rounded_menu.txt").exists()
    assert run(capsys, "--outdir", o, "certify", "--menu", str(menu_file))[0] == 0
    (r,) = rows(tmp_path / "o" / "certify.csv")
    assert r["kind"] == "exact" and float(r["certified_gap"]) > 0


def test_plapprox_and_oracle(tmp_path, capsys):
    o = str(tmp_path / "o")
    assert run(capsys, "--outdir", o, "plapprox", "--deltas", "1e-6", "1e-7")[0] == 0
    rs = rows(tmp_path / "o" / "plapprox.csv")
    assert [int(r["greedy_segments"]) for r in rs] == [10, 30]
    assert run(capsys, "--outdir", o, "oracle", "--dist", "iid:uniform", "--n-grid", "4")[0] == 0
    (r,) = rows(tmp_path / "o" / "oracle.csv")
    assert float(r["upper_bound"]) >= float(r["lp_value"])
    assert (tmp_path / "o" / "grid_mechanism.csv").exists()


def test_curve_is_byte_deterministic(tmp_path, capsys):
    args = ["curve", "--dist", "iid:beta12", "--cmax", "3", "--seed", "7", "--n-grid", "4", "--restarts", "1"]
    assert run(capsys, "--outdir", str(tmp_path / "a"), *args)[0] == 0
    assert run(capsys, "--outdir", str(tmp_path / "b"), *args)[0] == 0
    a = (tmp_path / "a" / "curve.csv").read_bytes()
    assert a == (tmp_path / "b" / "curve.csv").read_bytes()
    assert a.splitlines()[0] == b"C,best_revenue,gap_vs_upper_bound,cert_exact"


def test_replay_reproduces_bytes(tmp_path, menu_file, capsys):
    o = tmp_path / "o"
    assert run(capsys, "--outdir", str(o), "eval", "--menu", str(menu_file), "--dist", "iid:uniform",
               "--mc-n", "5000", "--seed", "3")[0] == 0
    assert run(capsys, "--outdir", str(tmp_path / "r"), "replay", "--manifest", str(o / "eval.manifest.json"))[0] == 0
    assert (o / "eval.csv").read_bytes() == (tmp_path / "r" / "eval.csv").read_bytes()


def test_argv_round_trip():
    argv = _argv_from_flags({"command": "plapprox", "deltas": [1e-6], "dmin": 1e-9, "dmax": 1e-6, "num": 7,
                             "seed": 0})
    assert argv[0] == "plapprox" and "--deltas" in argv


def test_config_defaults_and_override(tmp_path, menu_file, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("# defaults\ndist = iid:uniform\nmc-n = 3000\n")
    o = str(tmp_path / "o")
    assert run(capsys, "--outdir", o, "--config", str(cfg), "eval", "--menu", str(menu_file))[0] == 0
    assert rows(tmp_path / "o" / "eval.csv")[0]["dist"] == "iid:uniform"
    assert run(capsys, "--outdir", o, "--config", str(cfg), "eval", "--menu", str(menu_file),
               "--dist", "iid:beta12")[0] == 0
    assert rows(tmp_path / "o" / "eval.csv")[0]["dist"] == "iid:beta12"
    cfg.write_text("no equals sign\n")
    assert run(capsys, "--outdir", o, "--config", str(cfg), "eval", "--menu", str(menu_file))[0] == 1


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0 and "FAIL" not in out


def test_plot(tmp_path, capsys):
    src = tmp_path / "c.csv"
    src.write_text("C,gap\n1,0.5\n2,0.1\n4,0.01\n")
    assert run(capsys, "plot", "--csv", str(src), "--loglog")[0] == 0
    assert (tmp_path / "c.svg").read_text().startswith("<svg")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1\n")
    assert run(capsys, "plot", "--csv", str(bad))[0] == 2
