import json

import pytest

from psminlab import cli


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    return code, out


def read_report(out):
    return json.loads((out / "report.json").read_text())


def test_gns_reports_constant_and_residuals(tmp_path):
    code, out = run(tmp_path, "gns", "--dim", "2")
    assert code == 0
    doc = read_report(out)
    assert abs(doc["G"] / 5.8545 - 1) < 5e-3
    assert doc["virial_residual_grad"] < 1e-5 and doc["curvature_coefficient"] > 0
    assert (out / "profile.csv").read_text().startswith("r,f,df\n")


def test_threshold_triangle(tmp_path, capsys):
    code, out = run(tmp_path, "threshold", "--domain", "triangle")
    assert code == 0
    assert "threshold = 0.73181" in capsys.readouterr().out
    doc = read_report(out)
    assert doc["formula"] == "corner" and doc["g_source"] == "literature"
    svg = (out / "dimension_table.svg").read_text()
    assert "<!-- data\ndim,T,S,S_over_4,smooth_floor" in svg


def test_threshold_verdict_for_cube(tmp_path):
    code, out = run(tmp_path, "threshold", "--domain", "hypercube", "--dim", "10",
                    "--estimate", "9.233")
    assert code == 0 and read_report(out)["verdict"] == "exists"


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("domain.kind = rectangle\ndomain.b = 4\np = 1\nn = 12  # coarse\nseed = 3\n")
    code, out = run(tmp_path, "solve", "--config", str(cfg), "--seed", "5")
    assert code == 0
    doc = read_report(out)
    assert doc["config.seed"] == 5 and doc["config.n"] == 12
    assert doc["config.domain.kind"] == "rectangle" and doc["quotient"] < 1.4636
    assert doc["monotone"] is True
    for name in ("history.csv", "field.csv", "history.svg", "report.txt"):
        assert (out / name).exists()


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    code, out = run(tmp_path, "solve", "--config", str(cfg))
    assert code != 0 and not out.exists()
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "unknown key" in err[0]


def test_failure_leaves_no_partial_artifacts(tmp_path):
    code, out = run(tmp_path, "scaling", "--dim", "2", "--p", "2", "--n", "16",
                    "--lambda-to", "64")
    assert code != 0
    assert not out.exists()
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".stage")]


def test_sweep_is_deterministic_across_pool_sizes(tmp_path, monkeypatch):
    args = ["sweep", "--param", "b", "--from", "1.5", "--to", "2.5", "--step", "0.5",
            "--p", "1", "--n", "12"]
    monkeypatch.setenv("PSMINLAB_THREADS", "3")
    _, a = run(tmp_path, *args, name="a")
    monkeypatch.setenv("PSMINLAB_THREADS", "1")
    _, b = run(tmp_path, *args, name="b")
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    assert (a / "sweep.svg").read_bytes() == (b / "sweep.svg").read_bytes()
    bs = [float(line.split(",")[0]) for line in (a / "sweep.csv").read_text().splitlines()[1:]]
    assert bs == sorted(bs)


def test_sweep_crossing_near_critical_aspect(tmp_path):
    code, out = run(tmp_path, "sweep", "--param", "b", "--from", "1", "--to", "4",
                    "--step", "0.25", "--p", "1", "--n", "24")
    assert code == 0
    assert 2.0 <= read_report(out)["crossing"] <= 2.12


def test_opt1d_triangle_and_scaling(tmp_path):
    code, out = run(tmp_path, "opt1d", "--n", "256", name="o")
    assert code == 0 and read_report(out)["value"] <= 6.1623
    code, out = run(tmp_path, "triangle", "--n", "12", "--max-iter", "50", name="t")
    assert code == 0
    trace = (out / "symmetry_trace.csv").read_text().splitlines()
    assert trace[0] == "iteration,quotient,alpha,beta,gamma,zeta,gap" and len(trace) > 2
    code, out = run(tmp_path, "scaling", "--dim", "1", "--p", "3", "--lambda-to", "64",
                    name="s")
    assert code == 0 and read_report(out)["exponent_error"] < 0.05


def test_report_collects_runs(tmp_path):
    run(tmp_path, "threshold", "--domain", "square", name="runs/a")
    code, out = run(tmp_path, "report", "--input", str(tmp_path / "runs"), name="summary")
    assert code == 0 and read_report(out)["runs"] == 1


def test_reproduce_quick_passes_and_detects_bad_constant(tmp_path):
    code, out = run(tmp_path, "reproduce", "--quick", name="good")
    assert code == 0 and read_report(out)["failed_published_checks"] == []
    code, out = run(tmp_path, "reproduce", "--quick", "--g2", "99", name="bad")
    assert code == 1
    failed = read_report(out)["failed_published_checks"]
    assert "triangle corner threshold G(2)/8" in failed


def test_help_lists_csv_schema(capsys):
    with pytest.raises(SystemExit):
        cli.main(["sweep", "--help"])
    assert "sweep.csv: b,quotient,converged,iterations" in capsys.readouterr().out
