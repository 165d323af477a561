import json
import subprocess
import sys

import pytest

from cdkernels import cli

CONFIGS = __import__("pathlib").Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _report(out, name):
    return json.loads((out / f"{name}-report.json").read_text())


def test_empty_indices_rejected(tmp_path, capsys):
    cfg = {"schema": 1, "kind": "universality-scalar", "model": "free-jacobi", "indices": []}
    assert cli.main(["run", _write(tmp_path, cfg)]) == 2
    assert "indices" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path):
    cfg = {"schema": 1, "kind": "mfun", "model": "free-jacobi", "colour": "blue"}
    assert cli.main(["run", _write(tmp_path, cfg)]) == 2


def test_wrong_schema_version(tmp_path):
    cfg = {"schema": 2, "kind": "mfun", "model": "free-jacobi"}
    assert cli.main(["run", _write(tmp_path, cfg)]) == 2


def test_missing_model_and_bad_model(tmp_path):
    assert cli.main(["run", _write(tmp_path, {"schema": 1, "kind": "mfun"})]) == 2
    bad = {"schema": 1, "kind": "mfun", "model": "no-such-model"}
    assert cli.main(["run", _write(tmp_path, bad)]) == 2


def test_unreadable_config(tmp_path):
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2


def test_mfun_log_periodic_reports_nonconvergence(tmp_path):
    out = tmp_path / "out"
    code = cli.main(["run", str(CONFIGS / "mfun-log-periodic.json"), "--out", str(out)])
    assert code == 0
    rep = _report(out, "mfun-log-periodic")
    assert rep["results"]["mfun"][0]["converged"] is False
    assert rep["pass"] is True


def test_defaults_recorded(tmp_path):
    cfg = {"schema": 1, "kind": "mfun", "model": "free-jacobi", "xi": [0.0, 3.0]}
    out = tmp_path / "out"
    assert cli.main(["run", _write(tmp_path, cfg), "--out", str(out)]) == 0
    rep = _report(out, "mfun")
    assert rep["config"]["grid"] == {"points": "default"}
    assert rep["config"]["tolerances"] == {}
    rows = rep["results"]["mfun"]
    assert rows[0]["rays"][0]["eta"] == pytest.approx([0.0, 1.0], abs=1e-6)
    assert rows[1]["rays"][0]["f_mu"] == 0.0
    meta = json.loads((out / "mfun-metadata.json").read_text())
    assert {"timestamp", "version", "backend"} <= set(meta)


def test_failed_assertion_exit_1(tmp_path, capsys):
    cfg = {
        "schema": 1, "kind": "subordinacy", "model": "free-jacobi", "xi": 0.0,
        "indices": [11], "expected": 0.4, "tolerances": {"ratio": 1e-6},
    }
    assert cli.main(["run", _write(tmp_path, cfg), "--out", str(tmp_path)]) == 1
    assert "FAIL: ratio_error" in capsys.readouterr().out


def test_kernel_tables_written(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", str(CONFIGS / "kernel-chebyshev.json"), "--out", str(out), "--jobs", "2"]) == 0
    csvs = sorted(p.name for p in out.glob("*.csv"))
    assert csvs == [f"kernel-chebyshev-x{i}-i{j}.csv" for i in range(2) for j in range(2)]
    header = (out / csvs[0]).read_text().splitlines()[0]
    assert header.endswith("re_k22,im_k22")


def test_equivalence_ring_config(tmp_path):
    assert cli.main(["run", str(CONFIGS / "equivalence-ring.json"), "--out", str(tmp_path)]) == 0


def test_cansys_check_config(tmp_path):
    assert cli.main(["run", str(CONFIGS / "cansys-rotating.json"), "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path, "cansys-rotating")
    assert all(row["det_drift"] < 1e-9 for row in rep["results"]["cansys"])


def test_opuc_config(tmp_path):
    assert cli.main(["run", str(CONFIGS / "opuc-free.json"), "--out", str(tmp_path)]) == 0


def test_clock_and_subordinacy_configs(tmp_path):
    assert cli.main(["run", str(CONFIGS / "clock-free.json"), "--out", str(tmp_path)]) == 0
    assert cli.main(["run", str(CONFIGS / "subordinacy-free.json"), "--out", str(tmp_path)]) == 0


def test_matrix_config(tmp_path):
    assert cli.main(["run", str(CONFIGS / "matrix-free.json"), "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path, "matrix-free")
    assert rep["results"]["reports"][0]["sup_errors"][-1] < 0.02


def test_all_example_configs_validate():
    for path in CONFIGS.glob("*.json"):
        cli.load_config(path)


def test_jobs_flag_validation(tmp_path):
    assert cli.main(["run", str(CONFIGS / "mfun-log-periodic.json"), "--jobs", "0"]) == 2


def test_list_models_and_help(capsys):
    assert cli.main(["--list-models"]) == 0
    assert "free-jacobi" in capsys.readouterr().out
    assert cli.main([]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "cdkernels.cli", "--list-models"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and "opuc-free" in proc.stdout
