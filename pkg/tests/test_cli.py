import re
import subprocess
import sys

import pytest

from tricolor.cli import EXIT_CONFIG, EXIT_MODEL, EXIT_OK, EXIT_USAGE, main, plot_stub
from tricolor.config import SCHEMA, load_config, parse_config, shipped
from tricolor.errors import ConfigError

OP = "paper_operating_point"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def deltas(text):
    return [float(x) for x in re.findall(r"Δ\d = ([0-9.]+)", text)]


# config ---------------------------------------------------------------------


def test_shipped_configs_load():
    for name in ("paper_operating_point.cfg", "vacuum_diagnostic.cfg", "fig3_calibration.cfg"):
        cfg = load_config(shipped(name)).cascade()
        assert cfg.nopo2.signal_wavelength == 1550.60


def test_units_are_optional_but_checked():
    base = shipped(OP + ".cfg").read_text()
    assert parse_config(base.replace("101.5 mm", "101.5")).nopo("nopo1").cavity_length == 101.5
    with pytest.raises(ConfigError, match=r"nopo1\.cavity_length.*mm"):
        parse_config(base.replace("101.5 mm", "10.15 cm"))
    with pytest.raises(ConfigError, match=r"nopo1\.finesse is dimensionless"):
        parse_config(base.replace("finesse = 195", "finesse = 195 mm"))


@pytest.mark.parametrize(
    "edit, match",
    [
        (("[cascade]", "[cascade]\nwarp = 1"), "unknown key 'warp'"),
        (("[cascade]", "[lasers]"), r"unknown section \[lasers\]"),
        (("finesse = 195", "finesse = fast"), r"nopo1\.finesse"),
        (("finesse = 195", "finesse = 195\nfinesse = 196"), "set twice"),
        (("finesse = 195", ""), r"missing required key nopo1\.finesse"),
        (("finesse = 195", "finesse = nan"), "finite"),
    ],
)
def test_config_errors_name_the_line(edit, match):
    text = shipped(OP + ".cfg").read_text().replace(*edit, 1)
    with pytest.raises(ConfigError, match=match):
        parse_config(text, "scenario.cfg")


def test_error_carries_line_number():
    text = shipped(OP + ".cfg").read_text()
    bad = text.replace("finesse = 195", "finesse = 195 GHz")
    lineno = bad.splitlines().index("finesse = 195 GHz") + 1
    with pytest.raises(ConfigError, match=rf"scenario.cfg:{lineno}:"):
        parse_config(bad, "scenario.cfg")


def test_every_key_documents_a_unit_or_none():
    for keys in SCHEMA.values():
        for key in keys.values():
            assert key.unit in (None, "nm", "mm", "mW", "MHz")


# simulate / criteria ---------------------------------------------------------


def test_simulate_operating_point(capsys):
    code, out, _ = run(capsys, "simulate", "--config", OP)
    assert code == EXIT_OK
    assert "physical: yes" in out and "verdict: entangled" in out
    assert all(d < 4 for d in deltas(out))


def test_simulate_vacuum_diagnostic(capsys):
    code, out, _ = run(capsys, "simulate", "--config", "vacuum_diagnostic", "--format", "csv")
    assert code == EXIT_OK
    rows = [line.split(",") for line in out.splitlines()[1:4]]
    assert [float(r[1]) for r in rows] == pytest.approx([4, 4, 4], abs=1e-9)
    assert "not-demonstrated" in out


def test_malformed_unit_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(shipped(OP + ".cfg").read_text().replace("101.5 mm", "101.5 furlong"))
    code, _, err = run(capsys, "simulate", "--config", str(bad))
    assert code == EXIT_CONFIG
    assert "nopo1.cavity_length" in err


def test_missing_config_file(capsys):
    code, _, err = run(capsys, "simulate", "--config", "/nonexistent/x.cfg")
    assert code == EXIT_CONFIG and "cannot read" in err


def test_below_threshold_is_model_error(tmp_path, capsys):
    bad = tmp_path / "low.cfg"
    bad.write_text(shipped(OP + ".cfg").read_text().replace("pump_power = 14.6 mW", "pump_power = 1 mW"))
    code, _, err = run(capsys, "simulate", "--config", str(bad))
    assert code == EXIT_MODEL and err


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == EXIT_USAGE
    assert run(capsys, "simulate")[0] == EXIT_USAGE
    assert run(capsys, "mz", "--format", "xml")[0] == EXIT_USAGE
    assert run(capsys)[0] == EXIT_USAGE
    assert run(capsys, "--help")[0] == EXIT_OK


def test_criteria_reference_table(capsys):
    code, out, _ = run(capsys, "criteria", "paper_fig3.csv")
    assert code == EXIT_OK
    assert "Δ1 = 3.031 ± 0.06" in out
    assert "Δ2 = 3.631 ± 0.07" in out
    assert "3.68" in out and "footnote" in out


def test_criteria_zeros_table(tmp_path, capsys):
    lines = shipped("paper_fig3.csv").read_text().splitlines()
    rows = [lines[0]]
    for line in filter(None, lines[1:]):
        cells = line.split(",")
        cells[1] = "0"
        if cells[3]:
            cells[3] = "1"
        rows.append(",".join(cells))
    path = tmp_path / "zeros.csv"
    path.write_text("\n".join(rows) + "\n")
    code, out, _ = run(capsys, "criteria", str(path))
    assert code == EXIT_OK
    assert deltas(out) == [5.0, 5.0, 5.0]
    assert "footnote" not in out


def test_criteria_wrong_row_count(tmp_path, capsys):
    path = tmp_path / "short.csv"
    path.write_text("\n".join(shipped("paper_fig3.csv").read_text().splitlines()[:4]) + "\n")
    code, _, err = run(capsys, "criteria", str(path))
    assert code == EXIT_CONFIG and "six rows" in err


def test_covariance_round_trip(tmp_path, capsys):
    cov = tmp_path / "cov.txt"
    _, direct, _ = run(capsys, "simulate", "--config", OP, "--format", "csv", "--out", str(cov))
    code, back, _ = run(capsys, "criteria", "--covariance", str(cov), "--format", "csv")
    assert code == EXIT_OK

    def values(text):
        return [float(line.split(",")[1]) for line in text.splitlines()[1:4]]

    assert values(back) == pytest.approx(values(direct), abs=1e-12)
    code, fixed, _ = run(capsys, "criteria", "--covariance", str(cov), "--gains", "1,1,1")
    assert code == EXIT_OK and "g1 = 1.0000" in fixed


def test_criteria_without_input(capsys):
    assert run(capsys, "criteria")[0] == EXIT_CONFIG


# calibrate -------------------------------------------------------------------


def test_calibrate_shipped_problem(capsys):
    code, out, _ = run(capsys, "calibrate", "--config", "fig3_calibration")
    assert code == EXIT_OK
    residuals = [float(line.split(",")[2]) for line in out.splitlines() if line.startswith(("X", "Y", "g1"))]
    assert len(residuals) == 6
    assert max(abs(r) for r in residuals) <= 0.3
    assert "converged,1" in out


def test_calibrate_needs_free_parameters(capsys):
    code, _, err = run(capsys, "calibrate", "--config", OP)
    assert code == EXIT_CONFIG and "calibration.free" in err


def test_calibrate_cap_warns(tmp_path, capsys):
    text = shipped("fig3_calibration.cfg").read_text().replace("max_evaluations = 10000", "max_evaluations = 3")
    cfg = tmp_path / "cal.cfg"
    cfg.write_text(text.replace("targets = paper_fig3.csv", f"targets = {shipped('paper_fig3.csv')}"))
    code, out, err = run(capsys, "calibrate", "--config", str(cfg))
    assert code == EXIT_OK
    assert "warning" in err and "warning" in out


# tuning / fiber / mz / oracle ------------------------------------------------


def test_tuning_curve_csv_and_plot(tmp_path, capsys):
    out = tmp_path / "tuning.csv"
    plot = tmp_path / "tuning.gp"
    code, _, _ = run(
        capsys, "tuning-curve", "--t-start", "154", "--t-stop", "156", "--t-step", "0.5",
        "--out", str(out), "--plot-script", str(plot),
    )
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "temperature_c,signal_nm,idler_nm"
    assert len(lines) == 6
    assert float(lines[1].split(",")[1]) == pytest.approx(1550.60, abs=1e-6)
    assert "temperature_c" in plot.read_text() and str(out) in plot.read_text()


def test_tuning_curve_without_root_is_model_error(capsys):
    code, _, err = run(capsys, "tuning-curve", "--t-start", "130", "--t-stop", "131")
    assert code == EXIT_MODEL
    assert "does not change sign" in err


def test_tuning_curve_unknown_material(capsys):
    assert run(capsys, "tuning-curve", "--material", "BBO")[0] == EXIT_CONFIG


def test_fiber_sweep(tmp_path, capsys):
    code, out, _ = run(capsys, "fiber-sweep", "--max-distance")
    assert code == EXIT_OK
    assert "1550,0.2,53.1931" in out
    plot = tmp_path / "fiber.gp"
    code, out, _ = run(capsys, "fiber-sweep", "--max-km", "2", "--plot-script", str(plot))
    assert code == EXIT_OK
    assert out.splitlines()[1] == "1550,0.0000,-3.200000"
    assert len(out.splitlines()) == 1 + 3 * 3
    assert "wavelength_nm" in plot.read_text()


def test_mz(capsys):
    code, out, _ = run(capsys, "mz")
    assert code == EXIT_OK and "47.9668 m" in out
    code, out, _ = run(capsys, "mz", "--lock", "short-arm-only", "--s-x", "2")
    assert code == EXIT_OK
    assert run(capsys, "mz", "--index", "0.5")[0] == EXIT_MODEL


def test_oracle_check_small(capsys):
    code, out, _ = run(capsys, "oracle-check", "--config", OP, "--frequencies", "0.5,2", "--seed", "1")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "combo,omega_over_kappa,analytic,simulated,std_error,pass"
    assert len(lines) == 5 and all(line.endswith(",1") for line in lines[1:])


def test_oracle_check_rejects_few_segments(capsys):
    code, _, err = run(capsys, "oracle-check", "--config", OP, "--segments", "10")
    assert code == EXIT_MODEL and "segments" in err


# determinism -----------------------------------------------------------------


@pytest.mark.parametrize(
    "argv",
    [
        ("simulate", "--config", OP, "--format", "csv"),
        ("criteria", "paper_fig3.csv", "--format", "csv"),
        ("tuning-curve", "--t-start", "154", "--t-stop", "155"),
        ("fiber-sweep",),
        ("oracle-check", "--config", OP, "--frequencies", "1", "--combo", "X3-X4", "--seed", "4"),
    ],
)
def test_reruns_are_byte_identical(tmp_path, capsys, argv):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for target in (a, b):
        code = main([*argv, "--out", str(target)]) if argv[0] != "simulate" else None
        if code is None:
            code, out, _ = run(capsys, *argv)
            target.write_text(out)
        assert code == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tricolor", "mz"], capture_output=True, text=True)
    assert res.returncode == 0 and "47.9668" in res.stdout


def test_plot_stub_group_hint():
    assert "one curve per value" in plot_stub("f.csv", "x", "y", group="g")
    assert "one curve" not in plot_stub("f.csv", "x", "y")
