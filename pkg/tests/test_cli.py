import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from fastdiff.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main, manifest_path, RunManifest
from fastdiff.core import read_snapshot
from fastdiff.evolve import read_series_csv


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def one_row(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 1
    return rows[0]


def test_stationary_drift_roundtrip(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "stationary", "--variant", "drift", "--dim", 1, "--lambda", 2, "--q", 0.5,
                           "--mass", 2.2214415, "--radius", 2000, "--cells", 20000, "--outdir", tmp_path)
    assert code == EXIT_OK
    row = one_row(out)
    assert float(row["h_or_C"]) == pytest.approx(1.0, abs=1e-6)
    _, meta = read_snapshot(tmp_path / "stationary.csv")
    assert float(meta["h_or_C"]) == pytest.approx(1.0, abs=1e-6)
    assert (tmp_path / "stationary.png").stat().st_size > 0


def test_stationary_meanfield_constant(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "stationary", "--variant", "meanfield", "--dim", 1, "--lambda", 2, "--q", 0.5,
                           "--cells", 512, "--outdir", tmp_path)
    assert code == EXIT_OK
    _, meta = read_snapshot(tmp_path / "stationary.csv")
    assert float(meta["h_or_C"]) == pytest.approx((math.pi / math.sqrt(2)) ** (2 / 3), rel=1e-4)
    report = one_row((tmp_path / "stationary_report.csv").read_text())
    assert float(report["formula_C"]) == pytest.approx((math.pi / math.sqrt(2)) ** (2 / 3), rel=1e-12)


def test_missing_flag_is_usage_error(tmp_path, capsys):
    code, _, err = run_cli(capsys, "stationary", "--dim", 1, "--q", 0.5, "--outdir", tmp_path)
    assert code == EXIT_USAGE
    assert "usage:" in err and "--lambda" in err


def test_parameter_rejection_is_usage_error(tmp_path, capsys):
    code, _, err = run_cli(capsys, "stationary", "--dim", 1, "--lambda", 2, "--q", 1.3, "--outdir", tmp_path)
    assert code == EXIT_USAGE and "error" in err


def test_console_script_exit_code(tmp_path):
    res = subprocess.run([sys.executable, "-m", "fastdiff.cli", "hp", "--dim", "3"], capture_output=True, text=True)
    assert res.returncode == EXIT_USAGE and "usage:" in res.stderr


def test_evolve_columns(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "evolve", "--dim", 1, "--lambda", 2, "--q", 0.7, "--radius", 15, "--cells", 128,
                         "--t-end", 0.2, "--snapshot-every", 0.02, "--outdir", tmp_path)
    assert code == EXIT_OK
    cols = read_series_csv(tmp_path / "evolve_series.csv")
    assert np.all(np.diff(cols["free_energy"]) <= 0)
    assert np.all(np.diff(cols["rel_entropy"]) <= 0)
    mass = cols["mass"]
    assert np.max(np.abs(mass - mass[0])) <= 1e-12 * mass[0]
    for name in ("evolve_final.csv", "evolve_report.csv", "evolve_series.png", "evolve_profiles.png"):
        assert (tmp_path / name).exists()


def test_evolve_compare(tmp_path, capsys):
    common = ["--dim", 1, "--lambda", 2, "--q", 0.7, "--radius", 15, "--cells", 128]
    code, _, _ = run_cli(capsys, "evolve", *common, "--init", "perturbed", "--t-end", 0, "--outdir", tmp_path / "a")
    assert code == EXIT_OK
    code, _, _ = run_cli(capsys, "evolve", *common, "--t-end", 0.1, "--snapshot-every", 0.02,
                         "--compare", tmp_path / "a" / "evolve_final.csv", "--outdir", tmp_path / "b")
    assert code == EXIT_OK
    cols = read_series_csv(tmp_path / "b" / "evolve_series.csv")
    assert "l1_distance" in cols and "min_gap" in cols
    l1 = cols["l1_distance"]
    assert np.all(np.diff(l1) <= 1e-13 * l1[0])


def test_hp_echoes_both_conventions(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "hp", "--dim", 3, "--q", 0.8, "--lambda", 2, "--cells", 512, "--outdir", tmp_path)
    assert code == EXIT_OK
    row = one_row(out)
    constant, normalized = float(row["constant"]), float(row["normalized"])
    gap = float(row["gap"])
    assert constant == pytest.approx(1 / gap, rel=1e-12)
    assert normalized == pytest.approx(gap / (2 * 0.8), rel=1e-12)
    assert float(row["inverse_normalized"]) == pytest.approx(1 / normalized, rel=1e-12)
    assert float(row["formula"]) == pytest.approx(2.53125, rel=1e-14)
    assert row["bracket_ok"] == "true"
    assert (tmp_path / "hp_eigenvector.png").exists()


@pytest.mark.xfail(strict=True, reason="the discrete radial gap sits near 1.75, not at the closed form 2.53125")
def test_hp_matches_closed_form(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "hp", "--dim", 3, "--q", 0.8, "--lambda", 2, "--outdir", tmp_path)
    assert code == EXIT_OK
    assert float(one_row(out)["formula_relerr"]) <= 0.02


def test_positivity_lambda4(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "positivity", "--lambda", 4, "--seed", 7, "--trials", 100, "--outdir", tmp_path)
    assert code == EXIT_OK
    assert float(one_row(out)["min_value"]) >= -1e-10


def test_positivity_needs_seed(tmp_path, capsys):
    code, _, err = run_cli(capsys, "positivity", "--lambda", 4, "--outdir", tmp_path)
    assert code == EXIT_USAGE and "--seed" in err


def test_rhls_lambda3(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "rhls", "--lambda", 3, "--dim", 2, "--q", 0.8, "--seed", 1, "--cells", 256,
                           "--outdir", tmp_path)
    assert code == EXIT_OK
    assert int(one_row(out)["violations"]) == 0


def test_rates_from_series(tmp_path, capsys):
    t = np.linspace(0, 5, 51)
    lines = ["t,rel_entropy"] + [f"{a:.17g},{3 * math.exp(-2 * a):.17g}" for a in t]
    path = tmp_path / "series.csv"
    path.write_text("\n".join(lines) + "\n")
    code, out, _ = run_cli(capsys, "rates", "--series", path, "--kind", "exponential", "--outdir", tmp_path)
    assert code == EXIT_OK
    row = one_row(out)
    assert float(row["exponential_rate"]) == pytest.approx(2.0, rel=1e-10)
    code, _, _ = run_cli(capsys, "rates", "--series", path, "--window", "4.5,5", "--outdir", tmp_path)
    assert code == EXIT_NUMERIC


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep point\ndim=1\nlambda=2\nq=0.6\ncells=128\nradius=20\n")
    code, out, _ = run_cli(capsys, "stationary", "--config", cfg, "--q", 0.7, "--outdir", tmp_path)
    assert code == EXIT_OK
    row = one_row(out)
    assert float(row["q"]) == pytest.approx(0.7) and int(row["M"]) == 128


def test_determinism_and_check(tmp_path, capsys):
    argv = ["positivity", "--lambda", 3, "--seed", 3, "--trials", 20, "--cells", 64, "--no-figures"]
    run_cli(capsys, *argv, "--outdir", tmp_path / "a")
    run_cli(capsys, *argv, "--outdir", tmp_path / "b")
    assert (tmp_path / "a" / "positivity.csv").read_bytes() == (tmp_path / "b" / "positivity.csv").read_bytes()
    manifest = RunManifest.parse(open(manifest_path(tmp_path / "a", "positivity")).read())
    assert manifest.command == "positivity" and manifest.wall_clock >= 0
    assert "positivity.csv" in manifest.artifacts.values()
    code, out, _ = run_cli(capsys, *argv, "--outdir", tmp_path / "a", "--check")
    assert code == EXIT_OK and "check ok" in out
    (tmp_path / "a" / "positivity.csv").write_text("tampered\n")
    code, _, err = run_cli(capsys, *argv, "--outdir", tmp_path / "a", "--check")
    assert code == EXIT_NUMERIC and "check:" in err
