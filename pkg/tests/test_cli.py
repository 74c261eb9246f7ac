from steermet.cli import main
from steermet.harness import parse_csv


def bundled_params_path() -> str:
    import importlib.resources
    ref = importlib.resources.files("steermet") / "data" / "ibm-cairo.params"
    with importlib.resources.as_file(ref) as p:
        return str(p)


def test_theory_writes_csv(tmp_path):
    out = tmp_path / "theory.csv"
    rc = main(["theory", "--noise", "deph", "--control", "plus,mixed",
               "--w-grid", "0:1:0.5", "--eta", "0.5", "--theta", "0",
               "--out", str(out)])
    assert rc == 0
    records = parse_csv(out.read_text())
    assert len(records) == 6
    assert {r.control for r in records} == {"plus", "mixed"}


def test_theory_stdout(capsys):
    rc = main(["theory", "--noise", "depo", "--control", "plus",
               "--w-grid", "0:0.5:0.5"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("mode,noise,control,")
    assert len(out.strip().splitlines()) == 3


def test_circuit_command(tmp_path):
    out = tmp_path / "circ.csv"
    rc = main(["circuit", "--noise", "deph", "--control", "plus",
               "--w-grid", "0:0.5:0.5", "--shots", "200", "--seed", "4",
               "--rounds", "2", "--out", str(out)])
    assert rc == 0
    records = parse_csv(out.read_text())
    assert all(r.mode == "circuit" for r in records)


def test_circuit_with_device(tmp_path):
    out = tmp_path / "noisy.csv"
    rc = main(["circuit", "--noise", "deph", "--control", "plus",
               "--w-grid", "0.5:0.5:0.5", "--shots", "100", "--seed", "1",
               "--device", bundled_params_path(), "--out", str(out)])
    assert rc == 0
    records = parse_csv(out.read_text())
    assert records[0].mode == "circuit+devicenoise"


def test_report_table(tmp_path, capsys):
    csv_path = tmp_path / "t.csv"
    main(["theory", "--noise", "deph", "--control", "plus",
          "--w-grid", "0:1:0.5", "--out", str(csv_path)])
    capsys.readouterr()
    rc = main(["report", "--in", str(csv_path), "--emit", "table",
               "--out-dir", str(tmp_path), "--no-figures"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "mode=analytic" in out and "visibility" in out


def test_report_gnuplot_and_figures(tmp_path, capsys):
    csv_path = tmp_path / "t.csv"
    main(["theory", "--noise", "deph", "--control", "plus,mixed",
          "--w-grid", "0:1:0.25", "--out", str(csv_path)])
    rc = main(["report", "--in", str(csv_path), "--emit", "gnuplot",
               "--out-dir", str(tmp_path / "plots")])
    assert rc == 0
    dats = sorted((tmp_path / "plots").glob("*.dat"))
    pngs = sorted((tmp_path / "plots").glob("*.png"))
    assert len(dats) == 2
    assert len(pngs) == 1
    body = dats[0].read_text()
    assert body.startswith("#")
    assert len(body.strip().splitlines()) == 2 + 5  # two headers + 5 points


def test_check_errors(capsys):
    rc = main(["check-errors", "--circuit", "fig3",
               "--device", bundled_params_path()])
    assert rc == 0
    out = capsys.readouterr().out
    assert "gate error total" in out
    assert "expanded CNOTs:     12" in out
    rc = main(["check-errors", "--circuit", "appendix",
               "--device", bundled_params_path()])
    out = capsys.readouterr().out
    assert "expanded CNOTs:     328" in out


def test_config_file_with_cli_override(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("noise = depo\ncontrol = plus\nw_grid = 0:1:0.5\n")
    out = tmp_path / "o.csv"
    rc = main(["theory", "--config", str(conf), "--noise", "deph",
               "--out", str(out)])
    assert rc == 0
    records = parse_csv(out.read_text())
    assert all(r.noise == "deph" for r in records)  # CLI overrides file


def test_failed_points_reported(tmp_path, capsys):
    out = tmp_path / "f.csv"
    rc = main(["theory", "--noise", "deph", "--control", "plus",
               "--w-grid", "0.5:1.5:1.0", "--out", str(out)])
    assert rc == 1
    err = capsys.readouterr().err
    assert "FAILED point" in err
    assert len(parse_csv(out.read_text())) == 1
