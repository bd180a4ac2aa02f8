import csv
import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from lidarfog import cli
from lidarfog.pointcloud_io import read_kitti_bin
from lidarfog.units import SPEED_OF_LIGHT

REFERENCE = [
    ("strong_advection", "mor", 0.028995, 0.046 / 40),
    ("strong_advection", "mie_psd", 0.028996, 0.020243),
    ("moderate_advection", "mor", 0.018721, 0.046 / 80),
    ("moderate_advection", "mie_psd", 0.018721, 0.012894),
    ("moderate_junge", "mie_psd", 0.026201, 0.019104),
]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_coeffs_all(capsys):
    code, out, _ = run(capsys, "coeffs", "--all")
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 5
    for row, (preset, source, alpha, beta) in zip(rows, REFERENCE):
        assert (row["preset"], row["source"]) == (preset, source)
        assert float(row["alpha_m^-1"]) == pytest.approx(alpha, rel=0.03)
        if source == "mor":
            assert abs(float(row["beta_m^-1"]) - beta) <= 1e-12
        else:
            assert float(row["beta_m^-1"]) == pytest.approx(beta, rel=0.10)


def test_coeffs_single_mor(capsys):
    code, out, _ = run(capsys, "coeffs", "--preset", "strong_advection", "--mode", "mor")
    assert code == 0
    (row,) = read_csv(out)
    assert float(row["beta_m^-1"]) == 0.00115
    assert row["mor_m"] == "40.0"


def test_coeffs_unknown_preset(capsys):
    code, _, err = run(capsys, "coeffs", "--preset", "nofog")
    assert code == cli.EXIT_USAGE
    assert "strong_advection" in err and "moderate_junge" in err


def test_coeffs_all_with_preset_is_usage_error(capsys):
    assert run(capsys, "coeffs", "--all", "--preset", "strong_advection")[0] == cli.EXIT_USAGE


def test_coeffs_json(capsys, tmp_path, validate_json):
    out = tmp_path / "c.json"
    code, _, _ = run(capsys, "coeffs", "--all", "--format", "json", "--output", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    validate_json(doc, "coeffs.schema.json")
    assert len(doc["rows"]) == 5


def test_coeffs_accuracy_exit_code(capsys):
    code, _, err = run(capsys, "coeffs", "--preset", "strong_advection", "--step-um", "1.0")
    assert code == cli.EXIT_ACCURACY
    assert "not converged" in err


def test_usage_errors_from_argparse(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["coeffs", "--mode", "koschmieder"])
    assert info.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        cli.main([])
    assert info.value.code == cli.EXIT_USAGE


def test_curves(capsys, tmp_path):
    code, _, _ = run(capsys, "curves", "--output", str(tmp_path), "--d-min-um", "0.1", "--d-max-um", "60", "--points", "2997")
    assert code == 0
    eff = read_csv((tmp_path / "efficiency.csv").read_text())
    assert list(eff[0]) == ["D_um", "Q_ext", "Q_sca", "Q_back"]
    assert len(eff) == 2997

    step_r = 0.5 * (60 - 0.1) / 2996
    for name, r_c in (("strong_advection", 10.0), ("moderate_advection", 8.0)):
        rows = read_csv((tmp_path / f"psd_{name}.csv").read_text())
        r = np.array([float(x["r_um"]) for x in rows])
        n = np.array([float(x["N_per_cm3_um"]) for x in rows])
        assert abs(r[np.argmax(n)] - r_c) <= step_r

    rows = read_csv((tmp_path / "psd_moderate_junge.csv").read_text())
    n = np.array([float(x["N_per_cm3_um"]) for x in rows])
    assert np.all(np.diff(n) < 0)


def test_curves_unwritable(capsys, tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert run(capsys, "curves", "--output", str(blocker / "sub"))[0] == cli.EXIT_IO


def power_rows(capsys, *extra):
    code, out, _ = run(capsys, "power", *extra)
    assert code == 0
    rows = read_csv(out)
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def test_power_no_fog(capsys):
    cols = power_rows(capsys, "--alpha", "0", "--beta", "0", "--r0", "20")
    assert np.array_equal(cols["P_total"], cols["P_clear"])


def test_power_total_is_sum(capsys):
    cols = power_rows(capsys, "--preset", "strong_advection", "--r0", "25", "--points", "301")
    assert np.array_equal(cols["P_total"], cols["P_hard"] + cols["P_soft"])
    assert cols["P_soft"].max() > 0


def test_power_clear_peak_at_midpoint(capsys):
    L = SPEED_OF_LIGHT * 10e-9
    cols = power_rows(capsys, "--alpha", "0", "--beta", "0", "--r0", "30", "--r-min", "30", "--r-max", str(30 + L), "--points", "101")
    assert np.argmax(cols["P_clear"]) == 50
    assert cols["R_m"][50] == pytest.approx(30 + L / 2)


def test_power_alpha_without_beta(capsys):
    assert run(capsys, "power", "--alpha", "0.01")[0] == cli.EXIT_USAGE


def simulate(capsys, src, dst, *extra):
    return run(capsys, "simulate", "--input", str(src), "--output", str(dst), "--workers", "2", *extra)


def test_simulate_toy_dataset(capsys, toy_dataset, tmp_path, validate_json):
    dst = tmp_path / "out"
    code, _, _ = simulate(capsys, toy_dataset, dst, "--seed", "4")
    assert code == 0
    outputs = sorted(p.relative_to(dst).as_posix() for p in dst.rglob("*.bin"))
    assert outputs == [f"seq/{k:06d}.bin" for k in range(10)]
    manifest = json.loads((dst / "manifest.json").read_text())
    validate_json(manifest, "manifest.schema.json")
    files = manifest["files"]
    for key in ("points_in", "points_out", "retained", "scattered", "dropped"):
        assert manifest["totals"][key] == sum(f[key] for f in files)
    for f in files:
        assert f["points_in"] == f["retained"] + f["scattered"] + f["dropped"]
        assert f["points_out"] == f["retained"] + f["scattered"]
        assert len(read_kitti_bin(dst / f["output"])) == f["points_out"]
    assert manifest["seed"] == 4 and manifest["workers"] == 2
    assert manifest["optics"]["psd_name"] == "strong_advection"


def test_simulate_deterministic(capsys, toy_dataset, tmp_path):
    blobs = []
    for k, workers in enumerate(("1", "2", "8")):
        dst = tmp_path / f"o{k}"
        assert run(capsys, "simulate", "--input", str(toy_dataset), "--output", str(dst), "--workers", workers)[0] == 0
        blobs.append({p.relative_to(dst): p.read_bytes() for p in dst.rglob("*.bin")})
    assert blobs[0] == blobs[1] == blobs[2]


def test_simulate_distribution_vs_mor(capsys, toy_dataset, tmp_path):
    assert simulate(capsys, toy_dataset, tmp_path / "d", "--mode", "distribution")[0] == 0
    assert simulate(capsys, toy_dataset, tmp_path / "m", "--mode", "mor")[0] == 0
    d = json.loads((tmp_path / "d" / "manifest.json").read_text())["files"]
    m = json.loads((tmp_path / "m" / "manifest.json").read_text())["files"]
    assert [f["input"] for f in d] == [f["input"] for f in m]
    assert all(a["scattered"] >= b["scattered"] for a, b in zip(d, m))


def test_simulate_partial_failure(capsys, toy_dataset, tmp_path, validate_json):
    (toy_dataset / "seq" / "broken.bin").write_bytes(b"\0" * 33)
    dst = tmp_path / "out"
    code, _, _ = simulate(capsys, toy_dataset, dst)
    assert code == cli.EXIT_PARTIAL
    manifest = json.loads((dst / "manifest.json").read_text())
    validate_json(manifest, "manifest.schema.json")
    failed = [f for f in manifest["files"] if f["status"] == "failed"]
    assert [f["input"] for f in failed] == ["seq/broken.bin"]
    assert manifest["totals"]["files_ok"] == 10


def test_simulate_bad_config_touches_nothing(capsys, toy_dataset, tmp_path):
    dst = tmp_path / "out"
    assert simulate(capsys, toy_dataset, dst, "--preset", "nofog")[0] == cli.EXIT_USAGE
    assert simulate(capsys, toy_dataset, dst, "--noise-floor", "2")[0] == cli.EXIT_USAGE
    assert not dst.exists()


def test_simulate_missing_input(capsys, tmp_path):
    assert simulate(capsys, tmp_path / "none", tmp_path / "out")[0] == cli.EXIT_IO
    assert run(capsys, "simulate", "--output", str(tmp_path / "o"))[0] == cli.EXIT_USAGE


def test_config_file_and_flag_precedence(capsys, toy_dataset, tmp_path):
    conf = tmp_path / "run.json"
    conf.write_text(json.dumps({"seed": 11, "mode": "mor", "workers": 1}))
    dst = tmp_path / "out"
    code, _, _ = run(capsys, "--config", str(conf), "simulate", "--input", str(toy_dataset), "--output", str(dst), "--seed", "12")
    assert code == 0
    manifest = json.loads((dst / "manifest.json").read_text())
    assert manifest["seed"] == 12
    assert manifest["workers"] == 1
    assert manifest["optics"]["source"] == "mor"


def test_config_file_after_subcommand(capsys, tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"preset": "moderate_advection", "mode": "mor"}))
    code, out, _ = run(capsys, "coeffs", "--config", str(conf))
    assert code == 0
    (row,) = read_csv(out)
    assert row["preset"] == "moderate_advection" and float(row["beta_m^-1"]) == 0.000575


def test_config_file_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "--config", str(bad), "coeffs")[0] == cli.EXIT_USAGE
    bad.write_text(json.dumps({"sed": 1}))
    assert run(capsys, "--config", str(bad), "coeffs")[0] == cli.EXIT_USAGE
    assert run(capsys, "--config", str(tmp_path / "missing.json"), "coeffs")[0] == cli.EXIT_IO


def test_file_seed_depends_on_path():
    assert cli.file_seed(0, "a/000001.bin") != cli.file_seed(0, "a/000002.bin")
    assert cli.file_seed(3, "x.bin") == cli.file_seed(3, "x.bin")


def test_console_script_and_numpy_backend(toy_dataset, tmp_path):
    env = dict(os.environ, LIDARFOG_BACKEND="numpy")
    probe = subprocess.run(
        [sys.executable, "-c", "import lidarfog; print(lidarfog.BACKEND)"], env=env, capture_output=True, text=True, check=True
    )
    assert probe.stdout.strip() == "numpy"
    counts = []
    for k, backend in enumerate(("numpy", "numba")):
        dst = tmp_path / backend
        proc = subprocess.run(
            [sys.executable, "-m", "lidarfog.cli", "simulate", "--input", str(toy_dataset), "--output", str(dst), "--workers", "1"],
            env=dict(os.environ, LIDARFOG_BACKEND=backend),
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        counts.append(json.loads((dst / "manifest.json").read_text())["totals"])
    assert counts[0] == counts[1]
