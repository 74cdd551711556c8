"""File ingestion, configuration and report emission.

Trace files are CSV with a mandatory header, frequencies in Hz, in one
of two column layouts (auto-detected):

    frequency_hz, s21_real, s21_imag
    frequency_hz, s21_mag_db, s21_phase_deg

Optional sidecar metadata lives next to the trace as ``<stem>.meta.yaml``
(drive power, attenuation table, sweep direction).  Reports are JSON
documents with a provenance block (input hashes, config echo, toolkit
version) and round-trip losslessly through their serialized form.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .errors import ValidationError
from .response import SweepTrace

FORMAT_VERSION = 1

_REAL_IMAG = ("frequency_hz", "s21_real", "s21_imag")
_MAG_PHASE = ("frequency_hz", "s21_mag_db", "s21_phase_deg")


def hash_file(path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".meta.yaml")


def read_trace(path) -> SweepTrace:
    """Read one trace CSV plus its sidecar metadata, if present."""
    path = Path(path)
    try:
        rows = list(csv.reader(path.open(newline="")))
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read ({exc})") from exc
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header = tuple(h.strip().lower() for h in rows[0])
    if header == _REAL_IMAG:
        polar = False
    elif header == _MAG_PHASE:
        polar = True
    else:
        raise ValidationError(
            f"{path}: unrecognized header {header}; expected "
            f"{_REAL_IMAG} or {_MAG_PHASE}"
        )
    try:
        body = np.array([[float(v) for v in row] for row in rows[1:] if row])
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric value ({exc})") from exc
    if body.ndim != 2 or body.shape[1] != 3:
        raise ValidationError(f"{path}: expected 3 columns")

    freqs_ghz = body[:, 0] / 1e9
    if polar:
        mag = 10.0 ** (body[:, 1] / 20.0)
        s21 = mag * np.exp(1j * np.deg2rad(body[:, 2]))
    else:
        s21 = body[:, 1] + 1j * body[:, 2]

    meta = {}
    sidecar = _sidecar_path(path)
    if sidecar.exists():
        meta = yaml.safe_load(sidecar.read_text()) or {}
    try:
        return SweepTrace(
            freqs_ghz,
            s21,
            drive_power_dbm=meta.get("drive_power_dbm"),
            line_attenuation=meta.get("line_attenuation"),
            sweep_direction=meta.get("sweep_direction", "up"),
        )
    except Exception as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def write_trace(path, trace: SweepTrace, polar: bool = False) -> None:
    """Write one trace (and sidecar, when it carries metadata)."""
    path = Path(path)
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if polar:
        writer.writerow(_MAG_PHASE)
        mag_db = 20.0 * np.log10(np.abs(trace.s21))
        phase = np.rad2deg(np.angle(trace.s21))
        for f, m, p in zip(trace.frequencies * 1e9, mag_db, phase):
            writer.writerow([f"{f:.6f}", f"{m:.12e}", f"{p:.12e}"])
    else:
        writer.writerow(_REAL_IMAG)
        for f, z in zip(trace.frequencies * 1e9, trace.s21):
            writer.writerow([f"{f:.6f}", f"{z.real:.12e}", f"{z.imag:.12e}"])
    path.write_text(buf.getvalue())

    meta = {"format_version": FORMAT_VERSION, "sweep_direction": trace.sweep_direction}
    if trace.drive_power_dbm is not None:
        meta["drive_power_dbm"] = float(trace.drive_power_dbm)
    if trace.line_attenuation is not None:
        meta["line_attenuation"] = [[float(a), float(b)]
                                    for a, b in trace.line_attenuation]
    _sidecar_path(path).write_text(
        yaml.safe_dump(meta, sort_keys=True, default_flow_style=False)
    )


def write_csv(path, header, rows) -> None:
    """Deterministic CSV emission for plot data."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])
    Path(path).write_text(buf.getvalue())


def load_config(path) -> dict:
    """Load and minimally validate a YAML run configuration."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file {path} does not exist")
    try:
        config = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ValidationError(f"{path}: invalid YAML ({exc})") from exc
    if not isinstance(config, dict):
        raise ValidationError(f"{path}: config must be a mapping")
    version = config.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ValidationError(
            f"{path}: unsupported format_version {version} (expected "
            f"{FORMAT_VERSION})"
        )
    return config


def require(config: dict, key: str, context: str = "config"):
    if key not in config:
        raise ValidationError(f"{context}: missing required key '{key}'")
    return config[key]


@dataclass
class Report:
    """Structured results document with provenance."""

    command: str
    results: dict
    inputs: dict = field(default_factory=dict)  # path -> sha256
    config: dict = field(default_factory=dict)
    toolkit_version: str = ""
    format_version: int = FORMAT_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2,
                          default=_json_default) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "Report":
        payload = json.loads(text)
        return cls(**payload)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")
