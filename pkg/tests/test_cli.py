"""Command-line runner: artifacts, config echo, gates and exit codes."""

import csv
import json
import subprocess
import sys

import pytest

from iholab import __version__
from iholab.cli import (
    EXIT_GATE,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    RunConfig,
    UsageError,
    main,
    render,
    resolve_output,
)


@pytest.fixture
def seed_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("IOL_SEED_DIR", str(tmp_path))
    return tmp_path


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0], list(csv.DictReader(lines[1:]))


def test_defaults():
    cfg = RunConfig("spectrum")
    assert (cfg.dim, cfg.n_max, cfg.alpha_mod, cfg.t_max, cfg.dt, cfg.nodes) == (256, 6, 1.0, 1.0, 0.01, 200)
    assert (cfg.omega, cfg.mass, cfg.hbar, cfg.format) == (1.0, 1.0, 1.0, "csv")


def test_biorth_csv(seed_dir):
    assert main(["biorth", "--n-max", "6", "--dim", "128"]) == EXIT_OK
    header, rows = read_csv(seed_dir / "biorth.csv")
    assert header.startswith("# config: ")
    assert len(rows) == 49
    assert max(float(r["contour_dev"]) for r in rows) <= 1e-8
    assert complex(rows[0]["contour"]) == pytest.approx(1.0, abs=1e-12)


def test_spectrum_json(seed_dir):
    assert main(["spectrum", "--dim", "64", "--format", "json"]) == EXIT_OK
    doc = json.loads((seed_dir / "spectrum.json").read_text())
    assert doc["artifact_version"] == __version__
    recs = doc["records"]
    assert [r["n"] for r in recs] == list(range(7))
    for r in recs:
        assert r["expected"] == [0.0, r["n"] + 0.5]
        assert r["dilated_error"] <= 1e-8
        assert r["eigen_residual_block"] <= 1e-6


def test_json_fields_mirror_csv_columns(seed_dir):
    assert main(["classical", "--t-max", "0.5", "--dt", "0.1"]) == EXIT_OK
    assert main(["classical", "--t-max", "0.5", "--dt", "0.1", "--format", "json"]) == EXIT_OK
    _, rows = read_csv(seed_dir / "classical.csv")
    doc = json.loads((seed_dir / "classical.json").read_text())
    assert [sorted(r) for r in rows] == [sorted(r) for r in doc["records"]]
    assert [float(r["x_c"]) for r in rows] == [r["x_c"] for r in doc["records"]]


def test_classical_zero_duration_single_row(seed_dir):
    assert main(["classical", "--t-max", "0", "--alpha-mod", "0.5"]) == EXIT_OK
    _, rows = read_csv(seed_dir / "classical.csv")
    assert len(rows) == 1
    assert float(rows[0]["x_c"]) == 0.5 and float(rows[0]["t"]) == 0.0


def test_coherent_columns_and_values(seed_dir):
    assert main(["coherent", "--t-max", "0.2", "--dt", "0.1"]) == EXIT_OK
    header, rows = read_csv(seed_dir / "coherent.csv")
    assert list(rows[0]) == ["t", "x_mean", "p_mean", "x2_mean", "p2_mean", "dx", "dp", "product", "eta_norm"]
    assert len(rows) == 3
    for r in rows:
        assert float(r["product"]) == pytest.approx(0.5, abs=1e-12)
    assert complex(rows[0]["x_mean"]).real == pytest.approx(1.0, abs=1e-12)


def test_evolve_passes_all_gates(seed_dir):
    assert main(["evolve", "--dim", "256", "--t-max", "1", "--dt", "0.25"]) == EXIT_OK
    _, rows = read_csv(seed_dir / "evolve.csv")
    assert max(float(r["reconstruction_dev"]) for r in rows) <= 1e-5


def test_evolve_beyond_resolvable_time_fails_named_gate(seed_dir, capsys):
    assert main(["evolve", "--t-max", "1.5", "--dt", "0.5"]) == EXIT_GATE
    assert "NumericalConsistencyError" in capsys.readouterr().err


def test_quasiherm_reports_failing_gate(seed_dir, capsys):
    assert main(["quasiherm", "--dim", "64"]) == EXIT_GATE
    assert "gate failed: eta_similarity" in capsys.readouterr().err
    _, rows = read_csv(seed_dir / "quasiherm.csv")
    assert [r["check"] for r in rows] == ["ladder_form", "rho_similarity", "eta_similarity"]
    assert float(rows[0]["residual"]) <= 1e-8


def test_divergence(seed_dir):
    assert main(["divergence", "--n-max", "3"]) == EXIT_OK
    _, rows = read_csv(seed_dir / "divergence.csv")
    assert [float(r["exponent"]) for r in rows] == pytest.approx([1, 3, 5, 7], abs=0.1)


def test_config_echo_round_trip(seed_dir):
    args = ["coherent", "--dim", "128", "--alpha-mod", "0.5", "--t-max", "0.1", "--dt", "0.05", "--omega", "2"]
    assert main(args) == EXIT_OK
    assert main(args + ["--format", "json"]) == EXIT_OK
    header, _ = read_csv(seed_dir / "coherent.csv")
    cfg = RunConfig.from_header(header)
    assert cfg == RunConfig("coherent", dim=128, alpha_mod=0.5, t_max=0.1, dt=0.05, omega=2.0)
    cfg_json = RunConfig.from_header((seed_dir / "coherent.json").read_text())
    assert cfg_json == RunConfig("coherent", dim=128, alpha_mod=0.5, t_max=0.1, dt=0.05, omega=2.0, format="json")
    assert json.loads(header[len("# config: "):])["artifact_version"] == __version__


def test_determinism(seed_dir):
    args = ["biorth", "--dim", "64", "--n-max", "3", "--output", "run.csv"]
    assert main(args) == EXIT_OK
    first = (seed_dir / "run.csv").read_bytes()
    assert main(args) == EXIT_OK
    assert (seed_dir / "run.csv").read_bytes() == first


def test_no_temporary_files_left(seed_dir):
    assert main(["classical", "--t-max", "0.1"]) == EXIT_OK
    assert sorted(p.name for p in seed_dir.iterdir()) == ["classical.csv"]


def test_output_resolution(tmp_path, monkeypatch):
    monkeypatch.delenv("IOL_SEED_DIR", raising=False)
    assert str(resolve_output(RunConfig("biorth"))) == "biorth.csv"
    monkeypatch.setenv("IOL_SEED_DIR", str(tmp_path))
    assert resolve_output(RunConfig("biorth", format="json")) == tmp_path / "biorth.json"
    assert resolve_output(RunConfig("biorth", output_path="a/b.csv")) == tmp_path / "a" / "b.csv"
    assert resolve_output(RunConfig("biorth", output_path="/x/y.csv")).as_posix() == "/x/y.csv"


@pytest.mark.parametrize(
    "args",
    [
        ["spectrum", "--bogus"],
        ["nonsense"],
        [],
        ["spectrum", "--dim", "0"],
        ["spectrum", "--dim", "5"],
        ["coherent", "--dt", "0"],
        ["coherent", "--hbar", "-1"],
        ["classical", "--t-max", "-1"],
        ["biorth", "--n-max", "30"],
        ["evolve", "--t-max", "3.5"],
        ["spectrum", "--format", "xml"],
    ],
)
def test_usage_errors(seed_dir, args):
    assert main(args) == EXIT_USAGE


def test_io_error(tmp_path):
    missing = tmp_path / "nope" / "out.csv"
    assert main(["classical", "--t-max", "0.1", "--output", str(missing)]) == EXIT_IO


def test_empty_records_refused():
    with pytest.raises(UsageError):
        render(RunConfig("classical"), ["t"], [])


def test_csv_number_formatting():
    text = render(RunConfig("classical"), ["a", "b", "c"], [{"a": 0.1, "b": 1e-20 + 2j, "c": 3}])
    assert text.splitlines()[-1] == "0.1,1e-20+2j,3"


def test_module_entry_point(seed_dir):
    out = subprocess.run(
        [sys.executable, "-m", "iholab", "classical", "--t-max", "0"],
        capture_output=True,
        text=True,
        env={"IOL_SEED_DIR": str(seed_dir), "PATH": ""},
    )
    assert out.returncode == EXIT_OK
    assert (seed_dir / "classical.csv").exists()
