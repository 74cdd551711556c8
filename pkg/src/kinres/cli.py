"""Command-line interface tying the toolkit into reproducible runs.

Subcommands: simulate-spectrum, fit-s21, fit-power-sweep, fit-spectrum,
predict-t1, synthesize, validate.  Every command is deterministic given
(config, seed); reports embed input hashes and a config echo.

Exit codes: 0 success, 1 validation failure, 2 fit failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .circuits import (
    CircuitSpec,
    CoupledSystemSpec,
    ResonatorMode,
    coupled_spectrum,
    fluxonium_model,
    fluxonium_spectrum,
)
from .errors import FitError, KinresError, ValidationError
from .fitting import (
    PowerSweepFitInput,
    PowerSweepPoint,
    SpectrumPoint,
    fit_power_sweep,
    fit_s21,
    fit_spectrum,
)
from .io import (
    Report,
    hash_file,
    load_config,
    read_trace,
    require,
    write_csv,
    write_trace,
)
from .loss import (
    DielectricChannel,
    InductiveQPChannel,
    QuasiparticleSpec,
    SingleJunctionQPChannel,
    t1_budget,
)
from .quantum import PhaseBasis
from .response import (
    Baseline,
    ResonanceParams,
    SweepTrace,
    incident_power_w,
    photon_number,
    s21_model,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_FIT = 2
EXIT_IO = 3


def _circuit(block: dict, context: str = "circuit") -> CircuitSpec:
    for key in ("e_c", "e_j", "e_l"):
        require(block, key, context)
    basis = PhaseBasis.harmonic(int(block.get("basis_size", 120)))
    return CircuitSpec(
        e_c=float(block["e_c"]),
        e_j=float(block["e_j"]),
        e_l=float(block["e_l"]),
        phi_ext=float(block.get("phi_ext", 0.0)),
        truncation=basis,
    )


def _modes(blocks) -> tuple:
    modes = []
    for m, block in enumerate(blocks):
        require(block, "frequency", f"modes[{m}]")
        modes.append(ResonatorMode(
            bare_frequency=float(block["frequency"]),
            photon_truncation=int(block.get("photon_truncation", 6)),
            g=float(require(block, "g", f"modes[{m}]")),
        ))
    return tuple(modes)


def _flux_grid(block: dict) -> np.ndarray:
    for key in ("start", "stop", "points"):
        require(block, key, "flux")
    points = int(block["points"])
    if points < 1:
        raise ValidationError("flux: points must be >= 1")
    return np.linspace(float(block["start"]), float(block["stop"]), points)


def _report(command, config, results, inputs=None) -> Report:
    return Report(
        command=command,
        results=results,
        inputs=inputs or {},
        config=config,
        toolkit_version=__version__,
    )


def _trace_paths(config: dict) -> list:
    block = require(config, "traces")
    if isinstance(block, dict) and "directory" in block:
        directory = Path(block["directory"])
        if not directory.is_dir():
            raise ValidationError(f"traces: {directory} is not a directory")
        return sorted(directory.glob("*.csv"))
    if isinstance(block, list):
        paths = [Path(p) for p in block]
        missing = [p for p in paths if not p.exists()]
        if missing:
            raise ValidationError(f"traces: missing files {missing}")
        return paths
    raise ValidationError("traces: expected a list of paths or {directory: ...}")


# ---------------------------------------------------------------------------


def cmd_validate(config, out_dir, seed, jobs) -> int:
    if "circuit" in config:
        _circuit(config["circuit"])
    if "modes" in config:
        _modes(config["modes"])
    if "flux" in config:
        _flux_grid(config["flux"])
    if "traces" in config:
        _trace_paths(config)
    print("configuration valid")
    return EXIT_OK


def cmd_simulate_spectrum(config, out_dir, seed, jobs) -> int:
    circuit = _circuit(require(config, "circuit"))
    flux = _flux_grid(require(config, "flux"))
    levels = int(config.get("levels", 3))

    if config.get("modes"):
        spec = CoupledSystemSpec(circuit, _modes(config["modes"]))
        spectrum = coupled_spectrum(spec, levels=levels, flux_points=flux)
        header = ["flux_phi0"] + [f"f_{i}{j}_ghz" for i, j in spectrum.labels]
        header.append("resonator_ghz")
        rows = [
            [float(flux[k])] + [float(v) for v in spectrum.transitions[k]]
            + [float(spectrum.dressed_resonator_freq[k])]
            for k in range(len(flux))
        ]
        results = {"labels": [list(l) for l in spectrum.labels]}
    else:
        header = ["flux_phi0"] + [f"f_0{j}_ghz" for j in range(1, levels + 1)]
        rows = []
        for phi in flux:
            sol = fluxonium_spectrum(circuit.at_flux(float(phi)), levels=levels + 1)
            rows.append([float(phi)] + [sol.transition(0, j)
                                        for j in range(1, levels + 1)])
        results = {"labels": [[0, j] for j in range(1, levels + 1)]}

    write_csv(out_dir / "spectrum.csv", header, rows)
    results["spectrum_csv"] = "spectrum.csv"
    results["n_flux_points"] = len(flux)
    _report("simulate-spectrum", config, results).save(out_dir / "report.json")
    return EXIT_OK


def _fit_one_trace(path) -> dict:
    trace = read_trace(path)
    out = fit_s21(trace, allow_nonlinear=True)
    params, result = out["params"], out["result"]
    row = {
        "f0_ghz": params.f0,
        "q_int": params.q_int,
        "q_ext": params.q_ext,
        "q_tot": params.q_tot,
        "x_a": params.x_a,
        "a": params.a,
        "converged": result.converged,
        "residual_norm": result.residual_norm,
    }
    if trace.drive_power_dbm is not None and trace.line_attenuation is not None:
        p_in = incident_power_w(trace.drive_power_dbm, trace.line_attenuation,
                                params.f0)
        row["mean_n"] = photon_number(params, p_in).mean_n
    return row


def cmd_fit_s21(config, out_dir, seed, jobs) -> int:
    paths = _trace_paths(config)
    if not paths:
        raise ValidationError("traces: no trace files found")

    def job(path):
        try:
            return {"file": path.name, **_fit_one_trace(path)}
        except ValidationError as exc:
            return {"file": path.name, "error": str(exc), "error_kind": "validation"}
        except KinresError as exc:
            return {"file": path.name, "error": str(exc), "error_kind": "fit"}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(job, paths))
    else:
        rows = [job(p) for p in paths]

    good = [r for r in rows if "error" not in r]
    good.sort(key=lambda r: r["f0_ghz"])
    header = ["file", "f0_ghz", "q_int", "q_ext", "q_tot", "x_a", "a", "mean_n"]
    write_csv(out_dir / "resonances.csv", header,
              [[r["file"]] + [float(r.get(k, np.nan)) for k in header[1:]]
               for r in good])

    inputs = {p.name: hash_file(p) for p in paths}
    _report("fit-s21", config, {"traces": rows, "n_ok": len(good)},
            inputs).save(out_dir / "report.json")

    if any(r.get("error_kind") == "validation" for r in rows):
        return EXIT_VALIDATION
    if any(r.get("error_kind") == "fit" for r in rows):
        return EXIT_FIT
    return EXIT_OK


def _read_power_points(path) -> list:
    rows = list(csv.reader(Path(path).open(newline="")))
    if not rows or [h.strip() for h in rows[0]] != ["mean_n", "q_int", "a"]:
        raise ValidationError(f"{path}: expected header mean_n,q_int,a")
    points = []
    for row in rows[1:]:
        if row:
            points.append(PowerSweepPoint(float(row[0]), float(row[1]),
                                          float(row[2])))
    return points


def cmd_fit_power_sweep(config, out_dir, seed, jobs) -> int:
    block = require(config, "power_sweep")
    path = Path(require(block, "points_file", "power_sweep"))
    if not path.exists():
        raise ValidationError(f"power_sweep: {path} does not exist")
    points = _read_power_points(path)
    if not points:
        raise ValidationError(f"{path}: no data points")

    unique = {}
    for p in points:
        key = (p.mean_n, p.q_int, p.a)
        if key in unique:
            warnings.warn(f"duplicate photon-number point {key} dropped")
        unique[key] = p
    points = list(unique.values())

    data = PowerSweepFitInput(points,
                              a_crit_fraction=float(block.get("a_crit_fraction",
                                                              0.01)))
    out = fit_power_sweep(data)
    spec, result = out["spec"], out["result"]
    delta0 = 1.0 / spec.q0
    f0 = float(block.get("f0", np.nan))
    write_csv(out_dir / "power_loss.csv",
              ["f0_ghz", "beta", "gamma", "delta0"],
              [[f0, spec.beta, spec.gamma, delta0]])
    results = {
        "q0": spec.q0, "beta": spec.beta, "gamma": spec.gamma, "delta0": delta0,
        "window_mean_n": list(out["window"]), "points_used": out["points_used"],
        "a_crit_fraction": data.a_crit_fraction,
        "converged": result.converged,
        "diagnostics": result.diagnostics,
    }
    _report("fit-power-sweep", config, results,
            {path.name: hash_file(path)}).save(out_dir / "report.json")
    return EXIT_OK if result.converged else EXIT_FIT


def _read_spectrum_points(path) -> list:
    rows = list(csv.reader(Path(path).open(newline="")))
    expected = ["flux_phi0", "frequency_ghz", "kind", "i", "j"]
    if not rows or [h.strip() for h in rows[0]] != expected:
        raise ValidationError(f"{path}: expected header {','.join(expected)}")
    points = []
    for row in rows[1:]:
        if not row:
            continue
        kind = row[2].strip()
        pair = None
        if kind == "qubit" and row[3] != "" and row[4] != "":
            pair = (int(row[3]), int(row[4]))
        points.append(SpectrumPoint(float(row[0]), float(row[1]), kind, pair))
    return points


def cmd_fit_spectrum(config, out_dir, seed, jobs) -> int:
    block = require(config, "spectrum_fit")
    path = Path(require(block, "observed_file", "spectrum_fit"))
    if not path.exists():
        raise ValidationError(f"spectrum_fit: {path} does not exist")
    observed = _read_spectrum_points(path)
    circuit = _circuit(require(block, "initial", "spectrum_fit"))
    initial = CoupledSystemSpec(circuit, _modes(require(block, "modes",
                                                        "spectrum_fit")))
    out = fit_spectrum(observed, initial,
                       levels=int(block.get("levels", 3)),
                       qubit_levels=int(block.get("qubit_levels", 8)))
    spec, result = out["spec"], out["result"]
    errs = result.uncertainties()
    results = {
        "e_c": spec.qubit.e_c, "e_j": spec.qubit.e_j, "e_l": spec.qubit.e_l,
        "modes": [{"frequency": m.bare_frequency, "g": m.g}
                  for m in spec.modes],
        "uncertainties": None if errs is None else errs.tolist(),
        "residual_norm": result.residual_norm,
        "converged": result.converged,
        "diagnostics": result.diagnostics,
    }
    _report("fit-spectrum", config, results,
            {path.name: hash_file(path)}).save(out_dir / "report.json")
    return EXIT_OK if result.converged else EXIT_FIT


def _channels(blocks) -> list:
    channels = []
    for block in blocks:
        kind = require(block, "type", "loss channel")
        if kind == "inductive_qp":
            channels.append(InductiveQPChannel(QuasiparticleSpec(
                x_qp=float(require(block, "x_qp", kind)),
                delta=float(block.get("delta_uev", 600.0)),
            )))
        elif kind == "single_junction_qp":
            channels.append(SingleJunctionQPChannel(QuasiparticleSpec(
                x_qp=float(require(block, "x_qp", kind)),
                delta=float(block.get("delta_uev", 600.0)),
            )))
        elif kind == "dielectric":
            channels.append(DielectricChannel(
                q_cap=float(require(block, "q_cap", kind))))
        else:
            raise ValidationError(f"unknown loss channel type '{kind}'")
    return channels


def cmd_predict_t1(config, out_dir, seed, jobs) -> int:
    circuit = _circuit(require(config, "circuit"))
    flux = _flux_grid(require(config, "flux"))
    loss_block = require(config, "loss")
    channels = _channels(require(loss_block, "channels", "loss"))
    if not channels:
        raise ValidationError("loss: at least one channel required")

    names = [ch.name for ch in channels]
    header = (["flux_phi0", "f01_ghz"] + [f"t1_{n}_us" for n in names]
              + ["t1_total_us"])
    rows = []
    for phi in flux:
        model = fluxonium_model(circuit.at_flux(float(phi)), levels=4)
        budget = t1_budget(channels, model)
        f01 = model.sol.transition(0, 1)
        t1s = [np.inf if budget.channels[n] == 0 else 1.0 / budget.channels[n]
               for n in names]
        rows.append([float(phi), f01] + [float(t) for t in t1s]
                    + [float(budget.total_t1)])

    write_csv(out_dir / "t1_curves.csv", header, rows)
    results = {"channels": names, "t1_csv": "t1_curves.csv",
               "n_flux_points": len(flux)}
    _report("predict-t1", config, results).save(out_dir / "report.json")
    return EXIT_OK


def cmd_synthesize(config, out_dir, seed, jobs) -> int:
    if seed is None:
        seed = config.get("seed")
    if seed is None:
        raise ValidationError("synthesize requires a seed (--seed or config)")
    block = require(config, "synthesize")
    kind = block.get("kind", "s21")
    if kind != "s21":
        raise ValidationError(f"unknown synthesize kind '{kind}'")

    count = int(block.get("count", 10))
    n_points = int(block.get("points", 401))
    snr_db = block.get("snr_db")
    directions = list(block.get("directions", ["up"]))
    span = float(block.get("span_linewidths", 10.0))

    rng = np.random.default_rng(int(seed))
    f0_range = block.get("f0_range", [4.0, 8.0])
    qint_range = block.get("q_int_range", [2e4, 2e5])
    qext_range = block.get("q_ext_range", [2e4, 2e5])
    a_value = block.get("a")
    a_range = block.get("a_range", [0.0, 0.0])

    tasks = []
    for k in range(count):
        f0 = float(rng.uniform(*f0_range))
        q_int = float(np.exp(rng.uniform(np.log(qint_range[0]),
                                         np.log(qint_range[1]))))
        q_ext = float(np.exp(rng.uniform(np.log(qext_range[0]),
                                         np.log(qext_range[1]))))
        x_a = float(rng.uniform(-1e-6, 1e-6))
        a = float(a_value) if a_value is not None else float(rng.uniform(*a_range))
        noise_seed = int(rng.integers(0, 2**63 - 1))
        tasks.append((k, f0, q_int, q_ext, x_a, a, noise_seed))

    def render(task):
        k, f0, q_int, q_ext, x_a, a, noise_seed = task
        params = ResonanceParams(f0, q_int, q_ext, x_a=x_a, a=a)
        linewidth = f0 / params.q_tot
        freqs = np.linspace(f0 - span * linewidth, f0 + span * linewidth, n_points)
        baseline = Baseline.unit(f_m=float(np.median(freqs)))
        outputs = []
        for d, direction in enumerate(directions):
            z = s21_model(params, baseline, freqs, sweep_direction=direction)
            if snr_db is not None:
                noise_rng = np.random.default_rng(noise_seed + d)
                sigma = 10.0 ** (-float(snr_db) / 20.0) / np.sqrt(2.0)
                z = z + sigma * (noise_rng.standard_normal(n_points)
                                 + 1j * noise_rng.standard_normal(n_points))
            suffix = f"_{direction}" if len(directions) > 1 else ""
            name = f"trace_{k:03d}{suffix}.csv"
            outputs.append((name, SweepTrace(freqs, z, sweep_direction=direction)))
        truth = {"f0_ghz": f0, "q_int": q_int, "q_ext": q_ext, "x_a": x_a, "a": a}
        return [(name, trace, truth) for name, trace in outputs]

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rendered = list(pool.map(render, tasks))
    else:
        rendered = [render(t) for t in tasks]

    ground_truth = {}
    for group in rendered:
        for name, trace, truth in group:
            write_trace(out_dir / name, trace)
            ground_truth[name] = truth
    (out_dir / "ground_truth.json").write_text(
        json.dumps(ground_truth, sort_keys=True, indent=2) + "\n")
    _report("synthesize", {**config, "seed": int(seed)},
            {"files": sorted(ground_truth)}).save(out_dir / "report.json")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "simulate-spectrum": cmd_simulate_spectrum,
    "fit-s21": cmd_fit_s21,
    "fit-power-sweep": cmd_fit_power_sweep,
    "fit-spectrum": cmd_fit_spectrum,
    "predict-t1": cmd_predict_t1,
    "synthesize": cmd_synthesize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kinres",
        description="Kinetic-inductance resonator and fluxonium analysis toolkit",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        code = COMMANDS[args.command](config, out_dir, args.seed, max(args.jobs, 1))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except KinresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return code


if __name__ == "__main__":
    sys.exit(main())
