import json

import pytest

from hclab import graphs as gr
from hclab.cli import main


def test_z_cycle4(capsys):
    assert main(["z", "--graph", "cycle:4"]) == 0
    out = capsys.readouterr().out
    assert "Z = 7" in out


def test_z_torus_flags_and_json(tmp_path, capsys):
    p = tmp_path / "z.json"
    assert main(["z", "--L", "4", "--d", "2", "--lambda", "1", "--json", str(p)]) == 0
    assert "Z = 743" in capsys.readouterr().out
    assert json.loads(p.read_text())["exact"] == "743/1"


def test_z_rejects_large_cap_without_unsafe(capsys):
    assert main(["z", "--graph", "cycle:4", "--cap", "1000"]) == 2
    assert "--unsafe-caps" in capsys.readouterr().err


def test_stochastic_check_needs_seed(capsys):
    assert main(["check", "shearer"]) == 2
    assert "--seed" in capsys.readouterr().err


def test_check_json_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["check", "shearer", "--seed", "3", "--trials", "20", "--json", str(p)]) == 0
    assert a.read_text() == b.read_text()
    assert json.loads(a.read_text())["passed"] is True


def test_unknown_check_and_list(capsys):
    assert main(["check", "no-such-check"]) == 2
    assert main(["check", "--list"]) == 0
    assert "trivial-bound" in capsys.readouterr().out


def test_graph_torus_out(tmp_path):
    p = tmp_path / "t.txt"
    assert main(["graph", "torus", "--L", "4", "--d", "2", "--out", str(p)]) == 0
    lines = p.read_text().splitlines()
    assert lines[0] == "n 16 delta 4"
    g = gr.load_graph(p)
    assert g.n == 16 and g.num_edges == 32


def test_graph_from_file_round_trip(tmp_path, capsys):
    p = tmp_path / "c.txt"
    gr.save_graph(gr.cycle(6), p)
    assert main(["z", "--in", str(p)]) == 0
    assert "Z = 18" in capsys.readouterr().out
    assert main(["z", "--in", str(tmp_path / "missing.txt")]) == 2


def test_sweep_free_energy_gap(capsys):
    assert main(["sweep", "free-energy-gap", "--lambdas", "0.5,1,2,4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# hclab-sweep v1")
    assert lines[1] == "L,d,lambda,log_z,gap"
    assert len(lines) == 2 + 4


def test_empty_sweep_is_header_only(capsys):
    assert main(["sweep", "free-energy-gap", "--lambdas", ""]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 2


def test_bad_sweep_kind(capsys):
    assert main(["sweep", "nonsense"]) == 2


def test_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"graph": "cycle:6", "lambda": "2"}))
    assert main(["z", "--config", str(cfg)]) == 0
    # 1 + 6*2 + 9*4 + 2*8
    assert "Z = 65" in capsys.readouterr().out
    assert main(["z", "--config", str(cfg), "--lambda", "1"]) == 0
    assert "Z = 18" in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert main(["z", "--config", str(bad)]) == 2


def test_order_phi_bits(capsys):
    # vertex 1 occupied on C_4
    assert main(["order", "phi", "--graph", "cycle:4", "--bits", "0100"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["sigma"] == 2 and out["odd"] == 1
    assert main(["order", "phi", "--graph", "cycle:4", "--bits", "1100"]) == 2


def test_expansion_green(capsys):
    assert main(["expansion", "green", "--graph", "cycle:4", "--M0", "2", "--C0", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["green_positivity"]["passed"] is True


def test_expansion_green_premise_failure(capsys):
    assert main(["expansion", "green", "--graph", "cycle:4", "--M0", "4", "--C0", "1"]) == 1
    assert "premise failed" in capsys.readouterr().err


def test_expansion_cheeger(capsys):
    assert main(["expansion", "cheeger", "--L", "4", "--d", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["cheeger"]["value"] == {"exact": "1/1", "value": 1.0}


def test_chess_seminorm_and_phase_scan(tmp_path, capsys):
    assert main(["chess", "seminorm", "--l", "1", "--L", "4", "--d", "1", "--obs", "one"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["seminorm"] == pytest.approx(7**0.25)
    p = tmp_path / "scan.csv"
    assert main(["chess", "phase-scan", "--l", "1", "--L", "4", "--d", "1", "--lambda-grid", "1,2", "--out", str(p)]) == 0
    lines = p.read_text().splitlines()
    assert lines[1].startswith("ell,L,d,lam") and len(lines) == 4


def test_fit_command(capsys):
    assert main(["fit", "torus-bad-event-tail"]) == 0
    assert "certified=True" in capsys.readouterr().out
    assert main(["fit", "no-such-fit"]) == 2


def test_suite_quick(tmp_path, capsys):
    p = tmp_path / "quick.json"
    assert main(["suite", "quick", "--seed", "0", "--json", str(p)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    reports = json.loads(p.read_text())
    assert all(r["passed"] for r in reports)
    assert all("runtime" not in json.dumps(r) for r in reports)
