import json

import pytest

from cavity_lamb.cli import main
from cavity_lamb.params import dipole_for_eta
from cavity_lamb.sweep import parse_csv

FIG1A = ["--omega0", "1e7", "--q-factor", "1e7", "--volume", "1e-5", "--eta", "1e-9"]
# fixed dipole, so shrinking the volume raises g
SHRUNK = ["--omega0", "1e7", "--q-factor", "1e7", "--volume", "1e-11", "--dipole", repr(dipole_for_eta(1e-9, 1e-5))]
FIG2A = ["--omega0", "1e7", "--q-factor", "1e7", "--volume", "1e-8", "--eta", "1e-6", "--omega", "5e9", "--radius", "1e-5"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_shift_json(capsys):
    code, out, _ = run(capsys, "shift", *FIG1A, "--omega-c", "1.2e7", "--omega", "0")
    assert code == 0
    data = json.loads(out)
    assert data["delta0"] == pytest.approx(data["delta0_quadrature"], rel=1e-6)
    assert abs(data["delta_noninertial"]) <= 2 * data["err_estimate"]
    assert data["bad_cavity"]["passed"]


def test_fig1a_magnitude_near_resonance(capsys):
    code, out, _ = run(capsys, "shift", *FIG1A, "--omega-c", str(1e7 + 1.0))
    assert code == 0
    assert 1e-4 <= abs(json.loads(out)["delta0"]) <= 1e-2


def test_underscore_flags_work_too(capsys):
    code, out, _ = run(capsys, "shift", *FIG1A, "--omega_c", "1.2e7")
    assert code == 0 and json.loads(out)["derived"]["omega_c"] == 1.2e7


def test_overrides_win_over_config(tmp_path, capsys):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("omega0 = 1e7\nomega_c = 1.2e7\nq_factor = 1e7\nvolume = 1e-5\ndipole = 1e-30\n")
    code, out, _ = run(capsys, "validate", "--config", str(cfg), "--eta", "1e-9", "--omega-c", "1.3e7", "--json")
    data = json.loads(out)
    assert code == 0
    assert data["eta"] == pytest.approx(1e-9, rel=1e-14)
    assert data["kappa"] == pytest.approx(1.3, rel=1e-14)


def test_malformed_config_names_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("omega0 = 1e7\n\nthis is not a pair\n")
    code, _, err = run(capsys, "shift", "--config", str(cfg))
    assert code == 2
    assert "line 3" in err


def test_superluminal_rejected(capsys):
    code, _, err = run(capsys, "validate", *FIG1A, "--omega-c", "1e7", "--omega", "1e9", "--radius", "1")
    assert code == 3
    assert "subluminal" in err


def test_validate_bad_cavity(capsys):
    assert run(capsys, "validate", *FIG1A, "--omega-c", "1e7")[0] == 0
    code, out, _ = run(capsys, "validate", *SHRUNK, "--omega-c", "1e7")
    assert code == 3 and "FAIL" in out


def test_shift_refuses_bad_cavity_unless_allowed(capsys):
    assert run(capsys, "shift", *SHRUNK, "--omega-c", "1.2e7")[0] == 3
    assert run(capsys, "shift", *SHRUNK, "--omega-c", "1.2e7", "--allow-bad-cavity")[0] == 0


def test_quadrature_failure_exit_code(capsys):
    code, _, err = run(capsys, "shift", *FIG2A, "--omega-c", str(5e9 + 1e7), "--tol", "1e-300")
    assert code == 4
    assert "quadrature" in err


def test_unknown_figure(capsys, tmp_path):
    code, _, err = run(capsys, "figure", "fig9", "--out", str(tmp_path))
    assert code == 5 and "fig9" in err


def test_figure_fig2b_has_ratio(capsys, tmp_path):
    code, out, _ = run(capsys, "figure", "fig2b", "--out", str(tmp_path), "--points", "9")
    assert code == 0
    rows = parse_csv((tmp_path / "fig2b.csv").read_text())
    assert len(rows) == 9
    assert "ratio_noninertial" in rows[0] and "delta_noninertial_over_eta" in rows[0]
    assert (tmp_path / "fig2b.meta.json").exists()


def test_figure_fig3a_columns(capsys, tmp_path):
    assert run(capsys, "figure", "fig3a", "--out", str(tmp_path), "--points", "5")[0] == 0
    header = (tmp_path / "fig3a.csv").read_text().splitlines()[0].split(",")
    assert header[:4] == ["omega_c", "offset", "gamma0", "delta0"]


def test_sweep_to_stdout(capsys):
    code, out, _ = run(
        capsys, "sweep", *FIG1A, "--axis", "omega_c", "--start", "1.2e7", "--stop", "1.3e7",
        "--points", "3", "--quantities", "delta0,gamma0", "--normalize",
    )
    assert code == 0
    rows = parse_csv(out)
    assert len(rows) == 3
    assert rows[0]["delta0_over_eta"] == pytest.approx(rows[0]["delta0"] / 1e-9, rel=1e-14)


def test_sweep_json_file(capsys, tmp_path):
    dest = tmp_path / "s.json"
    code, _, _ = run(
        capsys, "sweep", *FIG1A, "--start", "1.2e7", "--stop", "1.3e7", "--points", "2",
        "--quantities", "delta0", "--out", str(dest),
    )
    assert code == 0
    assert len(json.loads(dest.read_text())) == 2


def test_sweep_bad_spacing_is_usage_error(capsys):
    code, _, _ = run(capsys, "sweep", *FIG1A, "--start", "1", "--stop", "0")
    assert code == 2


def test_selfcheck_command(capsys):
    code, out, _ = run(capsys, "selfcheck", "--json")
    assert code == 0
    assert all(c["passed"] for c in json.loads(out))
