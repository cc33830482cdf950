import subprocess
import sys

import numpy as np
import pytest

import balnet as bn
from balnet.cli import main, run_scenario
from balnet.config import preset_text


def test_parse_test1_preset():
    cfg = bn.load_preset("test1")
    assert cfg.name == "test1" and cfg.mode == "compare"
    assert cfg.n == 40000 and cfg.seed == 1234
    assert cfg.dt == 1e-3 and cfg.horizon == 5.0
    dyn = cfg.model.dynamics
    assert dyn.f_e.tau == 1.0 and dyn.f_i.tau == 1.0
    assert dyn.sigma_e.level == 1.0 and dyn.sigma_i.level == 1.0
    gains = cfg.model.gains
    assert gains.ee.kind == "constant" and gains.ee.a == 1.0
    assert gains.ei.kind == "linear" and gains.ei.a == 1.0
    assert gains.ie.kind == "linear" and gains.ie.a == 1.0
    assert gains.ii.kind == "linear" and gains.ii.a == 0.5
    assert cfg.k_e0 == 0.5 and cfg.k_i0 == 0.5


def test_parse_test3_preset():
    cfg = bn.load_preset("test3")
    assert cfg.model.basis.size == 3
    assert np.array_equal(cfg.model.kernel.block("e", "e"), np.diag([0.5, 2.0, 2.0]))
    assert np.array_equal(cfg.model.kernel.block("e", "i"), np.diag([4.0, 4.0, 4.0]))
    assert cfg.model.dynamics.f_e.tau == 0.5
    assert cfg.k_e0 == 0.0625


def test_parse_empty_text():
    with pytest.raises(bn.ParseError):
        bn.parse_config("")


def test_parse_unknown_key_reports_line():
    text = "[model]\ndomain = point\nwhatsthis = 3\n"
    with pytest.raises(bn.ParseError) as err:
        bn.parse_config(text)
    assert err.value.line == 3


def test_parse_duplicate_key():
    text = "[run]\nn = 10\nn = 20\n"
    with pytest.raises(bn.ParseError) as err:
        bn.parse_config(text)
    assert "duplicate" in str(err.value)


def test_parse_rejects_content_before_section():
    with pytest.raises(bn.ParseError):
        bn.parse_config("n = 10\n")


def test_validation_missing_keys():
    with pytest.raises(bn.ValidationError):
        bn.parse_config("[model]\ndomain = point\n")


def test_balance_feasibility_rule():
    # Raising the constant drive above the saturating inhibition ceiling
    # must be rejected at parse time.
    text = preset_text("test2").replace("gain_ee = constant:0.1",
                                        "gain_ee = constant:2.0")
    with pytest.raises(bn.ValidationError) as err:
        bn.parse_config(text)
    assert "feasibility" in str(err.value)


def test_validation_bad_dt():
    text = preset_text("test1").replace("dt = 0.001", "dt = -0.001")
    with pytest.raises(bn.ValidationError):
        bn.parse_config(text)


def test_validation_v_guess_length():
    text = preset_text("test1").replace("v_guess = 0,0", "v_guess = 0,0,0")
    with pytest.raises(bn.ValidationError):
        bn.parse_config(text)


def test_preset_names():
    assert bn.preset_names() == ["test1", "test2", "test3"]


SMALL_TEST1 = """
[model]
domain = point
basis = constant
kernel_ee = 1.0
kernel_ei = 1.0
kernel_ie = 1.0
kernel_ii = 1.0
gain_ee = constant:1.0
gain_ei = linear:1.0
gain_ie = linear:1.0
gain_ii = linear:0.5
tau_e = 1.0
tau_i = 1.0
sigma_e = 1.0
sigma_i = 1.0
[run]
name = smoke
mode = compare
n = 500
dt = 0.001
T = 0.5
seed = 99
observable_stride = 10
snapshot_stride = 250
tol_mean_e = 0.2
tol_mean_i = 0.2
tol_var = 0.2
tol_wasserstein = 0.5
[init]
K_e0 = 0.5
K_i0 = 0.5
v_guess = 0,0
[output]
csv_precision = 17
"""


def test_cli_compare_small_run(tmp_path, capsys):
    cfg_path = tmp_path / "smoke.ini"
    cfg_path.write_text(SMALL_TEST1)
    out = tmp_path / "out"
    code = main(["run", "--config", str(cfg_path), "--out", str(out)])
    assert code == 0
    assert (out / "limit.csv").exists()
    assert (out / "particle.csv").exists()
    verdict = (out / "verdict.txt").read_text()
    assert "passed = true" in verdict
    assert verdict.splitlines()[0] == "preset = smoke"


def test_cli_limit_mode_constant_rows(tmp_path):
    cfg_path = tmp_path / "smoke.ini"
    cfg_path.write_text(SMALL_TEST1)
    out = tmp_path / "out"
    code = main(["run", "--config", str(cfg_path), "--mode", "limit",
                 "--out", str(out)])
    assert code == 0
    lines = (out / "limit.csv").read_text().splitlines()
    assert lines[0].startswith("#") and "seed=99" in lines[0]
    header = lines[1].split(",")
    assert header[:3] == ["t", "v_e_1", "v_i_1"]
    data = np.array([[float(tok) for tok in row.split(",")] for row in lines[2:]])
    assert np.max(np.abs(data[:, 1] - 0.5)) < 1e-10
    assert np.max(np.abs(data[:, 2] - 1.0)) < 1e-10
    assert not (out / "particle.csv").exists()


def test_cli_csv_numbers_roundtrip(tmp_path):
    cfg_path = tmp_path / "smoke.ini"
    cfg_path.write_text(SMALL_TEST1)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_path), "--mode", "particle",
                 "--out", str(out)]) == 0
    rows = (out / "particle.csv").read_text().splitlines()[2:]
    for row in rows[:20]:
        for tok in row.split(","):
            assert "%.17g" % float(tok) == tok


def test_cli_runs_bundled_preset_by_name(tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--config", "test1", "--mode", "particle",
                 "--n", "200", "--seed", "7", "--out", str(out)])
    assert code == 0
    first = (out / "particle.csv").read_text().splitlines()[0]
    assert "preset=test1" in first and "seed=7" in first


def test_cli_spatial_limit_mode_fails_with_diagnostic(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--config", "test3", "--mode", "limit", "--out", str(out)])
    assert code != 0
    err = capsys.readouterr().err
    assert "no stable balanced root" in err


def test_cli_presets_listing(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("test1", "test2", "test3"):
        assert name in out


def test_cli_bad_config_path(capsys):
    assert main(["run", "--config", "nonexistent-preset"]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_module_entrypoint_subprocess(tmp_path):
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "balnet", "run", "--config", "test1",
         "--mode", "particle", "--n", "100", "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "particle.csv").exists()


def test_run_scenario_same_seed_identical_bytes(tmp_path):
    cfg = bn.parse_config(SMALL_TEST1)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_scenario(cfg, out_dir=str(out_a)) == 0
    assert run_scenario(cfg, out_dir=str(out_b)) == 0
    for name in ("limit.csv", "particle.csv", "verdict.txt"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
