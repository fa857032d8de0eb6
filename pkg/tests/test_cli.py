import csv
import json
import math
import os

import pytest

from vacpol import cli, config
from vacpol.errors import QuadratureError
from vacpol.units import EULER_GAMMA


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    rc = cli.main([*argv, "--out", str(out)])
    return rc, out


def read_csv(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], [[float(x) for x in r] for r in rows[1:]]


def header(path):
    with open(path) as fh:
        return dict(ln[2:].rstrip("\n").split(": ", 1) for ln in fh if ln.startswith("# "))


UEHLING = ("uehling", "--n-r", "4", "--r-min", "1e-4", "--r-max", "3", "--n-k", "5")


def test_uehling_csv_small_r_matches_log_law(tmp_path):
    rc, out = run(tmp_path, *UEHLING)
    assert rc == 0
    cols, rows = read_csv(out / "uehling_position.csv")
    assert cols == ["r", "value", "abs_error_estimate"]
    r, u = rows[0][0], rows[0][1]
    law = -2 / (3 * math.pi * r) * (math.log(r) + 5 / 6 + EULER_GAMMA)
    assert u / law == pytest.approx(1, abs=0.01)
    cols, rows = read_csv(out / "uehling_momentum.csv")
    assert cols == ["k", "C", "rho_vac_hat", "U_hat"]
    assert len(rows) == 5


def test_every_output_embeds_hash_and_provenance(tmp_path):
    rc, out = run(tmp_path, *UEHLING)
    cfg = config.RunConfig.default().updated(
        {"uehling": {"n_r": 4, "r_min": 1e-4, "r_max": 3.0, "n_k": 5}})
    for f in ("uehling_position.csv", "uehling_momentum.csv"):
        h = header(out / f)
        assert h["config_sha256"] == cfg.sha256()
        assert h["provenance"]


def test_z_doubling_doubles_every_value(tmp_path):
    _, a = run(tmp_path, *UEHLING, "--Z", "1", name="a")
    _, b = run(tmp_path, *UEHLING, "--Z", "2", name="b")
    _, ra = read_csv(a / "uehling_position.csv")
    _, rb = read_csv(b / "uehling_position.csv")
    assert [x[1] * 2 for x in ra] == [x[1] for x in rb]
    _, ma = read_csv(a / "uehling_momentum.csv")
    _, mb = read_csv(b / "uehling_momentum.csv")
    assert [x[2] * 2 for x in ma] == [x[2] for x in mb]
    assert [x[3] * 2 for x in ma] == [x[3] for x in mb]


def test_json_has_identical_numbers(tmp_path):
    _, a = run(tmp_path, *UEHLING, name="a")
    _, b = run(tmp_path, *UEHLING, "--format", "json", name="b")
    _, rows = read_csv(a / "uehling_momentum.csv")
    doc = json.loads((b / "uehling_momentum.json").read_text())
    for i, c in enumerate(["k", "C", "rho_vac_hat", "U_hat"]):
        assert doc[c] == [r[i] for r in rows]
    _, rows = read_csv(a / "uehling_position.csv")
    tab = json.loads((b / "uehling_position.json").read_text())["table"]
    assert tab["value"] == [r[1] for r in rows]


def test_byte_identical_across_runs_and_threads(tmp_path):
    argv = ("uehling", "--n-r", "6", "--n-k", "4", "--kind", "gaussian", "--width", "0.5")
    _, a = run(tmp_path, *argv, "--threads", "1", name="a")
    _, b = run(tmp_path, *argv, "--threads", "3", name="b")
    _, c = run(tmp_path, *argv, "--threads", "1", name="c")
    for f in os.listdir(a):
        assert (a / f).read_bytes() == (b / f).read_bytes() == (c / f).read_bytes()


def test_env_var_sets_output_directory(tmp_path, monkeypatch):
    monkeypatch.setenv(config.OUT_DIR_ENV, str(tmp_path / "env"))
    assert cli.main(list(UEHLING)) == 0
    assert (tmp_path / "env" / "uehling_position.csv").exists()


def test_config_error_has_line_and_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "uehling": {"bogus": 1}\n}\n')
    rc, out = run(tmp_path, "uehling", "--config", str(bad))
    assert rc == 1
    assert f"{bad}:2: unknown key 'bogus' in uehling" in capsys.readouterr().err
    assert not out.exists() or not os.listdir(out)


def test_config_file_values_are_used(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"uehling": {"n_r": 3, "n_k": 2}, "format": "json"}))
    rc, out = run(tmp_path, "uehling", "--config", str(good))
    assert rc == 0
    assert len(json.loads((out / "uehling_momentum.json").read_text())["k"]) == 2


def test_numerical_failure_exit_2_without_partial_files(tmp_path, monkeypatch, capsys):
    def failing(cfg, writer, threads):
        writer.add("uehling_position.csv", "half written")
        raise QuadratureError("did not converge")

    monkeypatch.setattr(cli, "cmd_uehling", failing)
    rc, out = run(tmp_path, "uehling")
    assert rc == 2
    assert "did not converge" in capsys.readouterr().err
    assert os.listdir(out) == []


def test_spectrum_supercritical_refused(tmp_path, capsys):
    rc, out = run(tmp_path, "spectrum", "--zalpha", "1.2")
    assert rc == 1
    assert "Z alpha < 1" in capsys.readouterr().err


def test_spectrum_zero_coupling_is_empty(tmp_path):
    rc, out = run(tmp_path, "spectrum", "--zalpha", "0", "--n-points", "200", "--format", "json")
    assert rc == 0
    doc = json.loads((out / "spectrum.json").read_text())
    assert all(s["gap_indices"] == [] for s in doc["spectra"].values())


def test_spectrum_extended_above_coulomb_with_convergence(tmp_path):
    rc, out = run(tmp_path, "spectrum", "--kind", "gaussian", "--width", "0.5", "--zalpha", "0.5",
                  "--kappa", "-1", "--n-points", "400")
    assert rc == 0
    cols, rows = read_csv(out / "spectrum_comparison.csv")
    assert "convergence" in cols and "energy_2N" in cols
    i_ext, i_ref = cols.index("extrapolated"), cols.index("coulomb_reference")
    assert rows and all(r[i_ext] >= r[i_ref] for r in rows)
    assert all(r[cols.index("energy")] > 0 for r in rows)


def test_shift_hydrogen_preset(tmp_path):
    rc, out = run(tmp_path, "shift", "--preset", "hydrogen-2s2p")
    assert rc == 0
    cols, rows = read_csv(out / "shift.csv")
    by = {(int(r[0]), int(r[1])): r[cols.index("delta_E")] for r in rows}
    assert by[(2, 0)] == pytest.approx(-2.196e-13, rel=0.02)
    assert abs(by[(2, 1)]) < 1e-3 * abs(by[(2, 0)])
    assert "pi times" in (out / "shift.txt").read_text()


def test_shift_l1_only_is_near_zero(tmp_path):
    rc, out = run(tmp_path, "shift", "--state", "2,1", "--state", "3,1")
    cols, rows = read_csv(out / "shift.csv")
    assert all(abs(r[cols.index("delta_E")]) < 1e-17 for r in rows)
    assert all(r[cols.index("point_limit")] == 0 for r in rows)


def test_muonic_with_unit_mass_matches_electronic(tmp_path):
    _, a = run(tmp_path, "shift", "--preset", "muonic", "--m-eff", "1", name="a")
    _, b = run(tmp_path, "shift", "--preset", "hydrogen-2s2p", name="b")
    assert read_csv(a / "shift.csv")[1] == read_csv(b / "shift.csv")[1]


def test_bad_state_is_config_error(tmp_path):
    with pytest.raises(SystemExit):
        cli.main(["shift", "--state", "two"])
    rc, _ = run(tmp_path, "shift", "--state", "1,1")
    assert rc == 1


def test_verify_only_single_criterion(tmp_path, capsys):
    rc, out = run(tmp_path, "verify", "--only", "c-dual-form")
    assert rc == 0
    doc = json.loads((out / "verify.json").read_text())
    assert [c["id"] for c in doc["checks"]] == ["c-dual-form"]
    assert capsys.readouterr().out.startswith("PASS")


def test_verify_unknown_id(tmp_path):
    rc, _ = run(tmp_path, "verify", "--only", "no-such-check")
    assert rc == 1


def test_verify_golden_and_tampered_golden(tmp_path, capsys):
    rc, _ = run(tmp_path, "verify", "--only", "golden", name="good")
    assert rc == 0
    from vacpol import verify
    doc = verify.load_golden(None)
    doc["values"]["C(3.7)"]["value"] *= 1 + 1e-6
    bad = tmp_path / "golden.json"
    bad.write_text(json.dumps(doc))
    capsys.readouterr()
    rc, out = run(tmp_path, "verify", "--only", "golden", "--golden", str(bad), name="bad")
    assert rc == 3
    captured = capsys.readouterr()
    assert "C(3.7)" in captured.out and "golden" in captured.err
    assert json.loads((out / "verify.json").read_text())["failed"] == ["golden"]


def test_spectral_lab_small_run(tmp_path):
    cfgfile = tmp_path / "lab.json"
    cfgfile.write_text(json.dumps({"model": {"kind": "gaussian", "Z": 1.0, "width": 1.0},
                                   "spectral_lab": {"n_points": 128, "r_max": 12.0,
                                                    "hs_points": [64, 128], "n_momenta": 2}}))
    rc, out = run(tmp_path, "spectral-lab", "--config", str(cfgfile), "--format", "json")
    assert rc == 0
    doc = json.loads((out / "spectral_lab.json").read_text())
    assert doc["contour"]["relative_frobenius_vs_spectral"] < 1e-6
    assert len(doc["q1_trace"]) == 2 and len(doc["hs_norm_study"]["rows"]) == 2
    assert doc["config_sha256"] and doc["provenance"]


def test_spectral_lab_needs_extended_model(tmp_path):
    rc, _ = run(tmp_path, "spectral-lab")
    assert rc == 1
