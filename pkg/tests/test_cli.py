import csv

from coapcc.cli import main

CONFIG = "policy: [default, cocoa+]\ntopology: chain\nloads_kbps: [1]\nseeds: [1]\nduration: 20\nwarmup: 2\n"


def test_validate(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(CONFIG)
    assert main(["validate", str(cfg)]) == 0
    assert "ok: 2 cells" in capsys.readouterr().out


def test_validate_reports_line(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("policy: cocoa\ntopology: grid9\n")
    assert main(["validate", str(cfg)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_run_then_figure(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(CONFIG)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out), "--trace"]) == 0
    rows = list(csv.DictReader(open(out / "sweep.csv", newline="")))
    assert len(rows) == 4
    assert (out / "fig11.csv").exists()
    assert len(list((out / "traces").iterdir())) == 2
    assert main(["figure", "fig11", "--rows", str(out / "sweep.csv"), "--out", str(tmp_path / "f")]) == 0
    assert (tmp_path / "f" / "fig11.csv").exists()


def test_unknown_figure_exit_code(capsys):
    assert main(["figure", "fig42"]) == 2
    assert "fig8" in capsys.readouterr().err


def test_missing_config_is_fatal(tmp_path):
    assert main(["run", str(tmp_path / "nope.yaml")]) == 1


def test_oracle(capsys):
    assert main(["oracle", "--traces", "50"]) == 0
    assert capsys.readouterr().out.startswith("PASS")


def test_topology(capsys):
    assert main(["topology", "grid6"]) == 0
    assert len(capsys.readouterr().out.strip().split("\n")) == 37
