"""File formats, reports and the command-line entry point."""

import json

import numpy as np
import pytest
import yaml

from kinres import Baseline, ResonanceParams, SweepTrace, s21_model
from kinres.cli import main
from kinres.errors import ValidationError
from kinres.io import Report, hash_file, load_config, read_trace, write_trace


def _write_config(path, payload):
    path.write_text(yaml.safe_dump(payload))
    return str(path)


def _synthetic_trace(f0=6.0, q_int=1e5, q_ext=6e4, n=101, **meta):
    params = ResonanceParams(f0, q_int, q_ext)
    width = f0 / params.q_tot
    f = np.linspace(f0 - 10 * width, f0 + 10 * width, n)
    return SweepTrace(f, s21_model(params, Baseline.unit(f0), f), **meta)


# ---------------------------------------------------------------------------
# io


def test_trace_round_trip(tmp_path):
    trace = _synthetic_trace(drive_power_dbm=-15.0,
                             line_attenuation=[(4.0, 60.0), (6.0, 63.0),
                                               (8.0, 68.0)])
    for polar in (False, True):
        path = tmp_path / ("t_polar.csv" if polar else "t_cart.csv")
        write_trace(path, trace, polar=polar)
        back = read_trace(path)
        assert np.allclose(back.frequencies, trace.frequencies, atol=1e-12)
        assert np.abs(back.s21 - trace.s21).max() < 1e-10
        assert back.drive_power_dbm == -15.0
        assert back.line_attenuation[1] == [6.0, 63.0]
        assert back.sweep_direction == "up"


def test_read_trace_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("frequency_hz,s21_real,s21_imag\n1e9,0.5,oops\n")
    with pytest.raises(ValidationError, match="non-numeric"):
        read_trace(bad)
    bad.write_text("freq,real,imag\n1e9,0.5,0.1\n")
    with pytest.raises(ValidationError, match="unrecognized header"):
        read_trace(bad)


def test_report_round_trip():
    report = Report("fit-s21", {"q_int": 1.2e5}, {"a.csv": "ff" * 32},
                    {"k": 1}, "0.1.0")
    back = Report.from_json(report.to_json())
    assert back == report
    payload = json.loads(report.to_json())
    assert payload["format_version"] == 1


def test_load_config_versioning(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("format_version: 99\n")
    with pytest.raises(ValidationError, match="format_version"):
        load_config(path)
    path.write_text("- not\n- a\n- mapping\n")
    with pytest.raises(ValidationError, match="mapping"):
        load_config(path)
    with pytest.raises(ValidationError, match="does not exist"):
        load_config(tmp_path / "missing.yaml")


def test_hash_file_stable(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"payload")
    assert hash_file(p) == hash_file(p)
    assert len(hash_file(p)) == 64


# ---------------------------------------------------------------------------
# cli


def test_cli_validate(tmp_path):
    good = _write_config(tmp_path / "good.yaml", {
        "circuit": {"e_c": 0.88, "e_j": 2.65, "e_l": 0.72},
        "flux": {"start": 0.0, "stop": 0.5, "points": 3},
    })
    assert main(["validate", "--config", good]) == 0
    bad = _write_config(tmp_path / "bad.yaml", {"circuit": {"e_c": 0.88}})
    assert main(["validate", "--config", bad]) == 1


def test_cli_simulate_spectrum(tmp_path):
    config = _write_config(tmp_path / "c.yaml", {
        "circuit": {"e_c": 0.88, "e_j": 2.65, "e_l": 0.72, "basis_size": 60},
        "flux": {"start": 0.0, "stop": 0.5, "points": 5},
        "levels": 2,
    })
    out = tmp_path / "out"
    assert main(["simulate-spectrum", "--config", config, "--out", str(out)]) == 0
    rows = (out / "spectrum.csv").read_text().strip().splitlines()
    assert rows[0] == "flux_phi0,f_01_ghz,f_02_ghz"
    assert len(rows) == 6
    report = json.loads((out / "report.json").read_text())
    assert report["command"] == "simulate-spectrum"


def test_cli_synthesize_and_fit(tmp_path):
    config = _write_config(tmp_path / "c.yaml", {
        "synthesize": {"count": 3, "points": 201, "snr_db": 60.0},
    })
    data = tmp_path / "data"
    assert main(["synthesize", "--config", config, "--out", str(data),
                 "--seed", "7"]) == 0
    truth = json.loads((data / "ground_truth.json").read_text())
    assert len(truth) == 3

    fit_cfg = _write_config(tmp_path / "fit.yaml",
                            {"traces": {"directory": str(data)}})
    out = tmp_path / "fits"
    assert main(["fit-s21", "--config", fit_cfg, "--out", str(out),
                 "--jobs", "2"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["results"]["n_ok"] == 3
    for row in report["results"]["traces"]:
        ref = truth[row["file"]]
        assert abs(row["f0_ghz"] - ref["f0_ghz"]) / ref["f0_ghz"] < 1e-4
        assert abs(row["q_int"] - ref["q_int"]) / ref["q_int"] < 0.05


def test_cli_synthesize_requires_seed(tmp_path):
    config = _write_config(tmp_path / "c.yaml", {"synthesize": {"count": 1}})
    assert main(["synthesize", "--config", config, "--out", str(tmp_path)]) == 1


def test_cli_fit_s21_partial_failure(tmp_path):
    config = _write_config(tmp_path / "c.yaml", {
        "synthesize": {"count": 2, "points": 201},
    })
    data = tmp_path / "data"
    assert main(["synthesize", "--config", config, "--out", str(data),
                 "--seed", "11"]) == 0
    (data / "broken.csv").write_text("frequency_hz,s21_real,s21_imag\nnope,1,2\n")

    fit_cfg = _write_config(tmp_path / "fit.yaml",
                            {"traces": {"directory": str(data)}})
    out = tmp_path / "fits"
    assert main(["fit-s21", "--config", fit_cfg, "--out", str(out)]) == 1
    report = json.loads((out / "report.json").read_text())
    assert report["results"]["n_ok"] == 2  # the healthy traces still fit
    errors = [r for r in report["results"]["traces"] if "error" in r]
    assert len(errors) == 1 and errors[0]["error_kind"] == "validation"


def test_cli_fit_power_sweep(tmp_path):
    from kinres import PowerLossSpec, q_int_power
    spec = PowerLossSpec(q0=66000.0, beta=28.9e-6, gamma=0.1334)
    n = np.logspace(-2, 4, 20)
    lines = ["mean_n,q_int,a"] + [
        f"{v},{float(q_int_power(spec, v))},0.0" for v in n]
    points = tmp_path / "points.csv"
    points.write_text("\n".join(lines) + "\n")
    config = _write_config(tmp_path / "c.yaml", {
        "power_sweep": {"points_file": str(points), "f0": 6.398},
    })
    out = tmp_path / "out"
    assert main(["fit-power-sweep", "--config", config, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["results"]["q0"] == pytest.approx(66000.0, rel=1e-4)
    table = (out / "power_loss.csv").read_text().splitlines()
    assert table[0] == "f0_ghz,beta,gamma,delta0"


def test_cli_predict_t1(tmp_path):
    config = _write_config(tmp_path / "c.yaml", {
        "circuit": {"e_c": 0.88, "e_j": 2.65, "e_l": 0.72, "basis_size": 60},
        "flux": {"start": 0.3, "stop": 0.5, "points": 4},
        "loss": {"channels": [
            {"type": "inductive_qp", "x_qp": 3.9e-5},
            {"type": "dielectric", "q_cap": 1e4},
        ]},
    })
    out = tmp_path / "out"
    assert main(["predict-t1", "--config", config, "--out", str(out)]) == 0
    rows = (out / "t1_curves.csv").read_text().strip().splitlines()
    assert rows[0] == ("flux_phi0,f01_ghz,t1_inductive_qp_us,"
                       "t1_dielectric_us,t1_total_us")
    assert len(rows) == 5

    empty = _write_config(tmp_path / "e.yaml", {
        "circuit": {"e_c": 0.88, "e_j": 2.65, "e_l": 0.72},
        "flux": {"start": 0.3, "stop": 0.5, "points": 2},
        "loss": {"channels": []},
    })
    assert main(["predict-t1", "--config", empty, "--out", str(out)]) == 1
