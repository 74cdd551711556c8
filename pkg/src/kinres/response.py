"""Forward model of hanger-type nonlinear resonator transmission.

The response follows the standard asymmetric hanger form

    S21(f) = 1 - (Q_tot/Q_ext - 2i Q_tot x_a) / (1 + 2i Q_tot x)

where the actual reduced detuning x is obtained, at each probe
frequency, from the cubic self-consistency condition

    4 y^3 - 4 y0 y^2 + y - y0 - a = 0,     y = Q_tot x,

with y0 = Q_tot (f - f0)/f0 the applied detuning and ``a`` the Duffing
nonlinearity.  Above a = 4*sqrt(3)/9 the cubic develops a bistable
window and the observed branch depends on the sweep direction: an
up-sweep follows the branch continuously connected from below (smallest
root) and jumps at the upper fold; a down-sweep is the mirror rule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .constants import A_CRIT, HBAR_J_S, dbm_to_watts
from .errors import ParameterDomainError, PreprocessingError

WING_FRACTION = 0.1
MIN_TRACE_POINTS = 20


@dataclass(frozen=True)
class ResonanceParams:
    """One resonator at one drive power.

    The asymmetry is stored canonically as ``x_a = delta_f / f0``;
    construct from the frequency form with :meth:`from_delta_f`.
    """

    f0: float
    q_int: float
    q_ext: float
    x_a: float = 0.0
    a: float = 0.0

    def __post_init__(self):
        if self.f0 <= 0:
            raise ParameterDomainError("f0 must be positive")
        if self.q_int <= 0 or self.q_ext <= 0:
            raise ParameterDomainError("quality factors must be positive")
        if self.a < 0:
            raise ParameterDomainError("nonlinearity a must be >= 0")

    @classmethod
    def from_delta_f(cls, f0, q_int, q_ext, delta_f, a=0.0):
        return cls(f0, q_int, q_ext, x_a=delta_f / f0, a=a)

    @property
    def q_tot(self) -> float:
        return 1.0 / (1.0 / self.q_int + 1.0 / self.q_ext)

    @property
    def delta_f(self) -> float:
        return self.x_a * self.f0

    @property
    def bifurcated(self) -> bool:
        return self.a >= A_CRIT


@dataclass(frozen=True)
class Baseline:
    """Smooth transmission background: quadratic gain, linear phase.

    Evaluated in the reduced frequency x_m = (f - f_m)/f_m.
    """

    g0: float = 1.0
    g1: float = 0.0
    g2: float = 0.0
    p0: float = 0.0
    p1: float = 0.0
    f_m: float = 1.0

    def __post_init__(self):
        if self.g0 <= 0:
            raise ParameterDomainError("baseline g0 must be positive")

    @classmethod
    def unit(cls, f_m: float = 1.0) -> "Baseline":
        return cls(f_m=f_m)

    def __call__(self, f) -> np.ndarray:
        x_m = (np.asarray(f, dtype=float) - self.f_m) / self.f_m
        gain = self.g0 + self.g1 * x_m + self.g2 * x_m**2
        return gain * np.exp(1j * (self.p0 + self.p1 * x_m))


@dataclass(frozen=True)
class SweepTrace:
    """Complex transmission samples on a monotone frequency grid (GHz)."""

    frequencies: np.ndarray
    s21: np.ndarray
    drive_power_dbm: Optional[float] = None
    line_attenuation: Optional[Sequence[Tuple[float, float]]] = None
    sweep_direction: str = "up"

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        z = np.asarray(self.s21, dtype=complex)
        if f.ndim != 1 or len(f) != len(z) or len(f) < 3:
            raise ParameterDomainError(
                "trace needs matching 1-d frequency/s21 arrays of length >= 3"
            )
        if np.any(np.diff(f) <= 0):
            bad = int(np.argmax(np.diff(f) <= 0)) + 1
            raise ParameterDomainError(
                f"frequency column not strictly increasing at row {bad}"
            )
        if self.sweep_direction not in ("up", "down"):
            raise ParameterDomainError("sweep_direction must be 'up' or 'down'")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "s21", z)


@dataclass(frozen=True)
class PhotonNumber:
    mean_n: float

    def __post_init__(self):
        if not np.isfinite(self.mean_n) or self.mean_n < 0:
            raise ParameterDomainError("mean photon number must be finite and >= 0")


def _cubic_pq(y0, a):
    """Depressed-cubic coefficients of 4y^3 - 4y0 y^2 + y - y0 - a = 0."""
    p = 0.25 - y0**2 / 3.0
    q = -2.0 * y0**3 / 27.0 + y0 / 12.0 - (y0 + a) / 4.0
    return p, q


def _cubic_newton_polish(y, y0, a, steps=2):
    for _ in range(steps):
        val = 4 * y**3 - 4 * y0 * y**2 + y - y0 - a
        der = 12 * y**2 - 8 * y0 * y + 1.0
        y = y - np.where(der != 0, val / np.where(der != 0, der, 1.0), 0.0)
    return y


def solve_detuning(y0: float, a: float) -> np.ndarray:
    """All real roots y of the detuning cubic, sorted ascending.

    The cubic always has one or three real roots; the tangent (double
    root) case at the fold collapses to two distinct values.
    """
    if a < 0:
        raise ParameterDomainError("nonlinearity a must be >= 0")
    if a == 0.0:
        return np.array([float(y0)])
    roots = np.roots([4.0, -4.0 * y0, 1.0, -(y0 + a)])
    real = roots[np.abs(roots.imag) < 1e-7 * np.maximum(1.0, np.abs(roots))].real
    real = np.sort(_cubic_newton_polish(real, y0, a))
    kept = [real[0]]
    for y in real[1:]:
        if y - kept[-1] > 1e-9 * (1.0 + abs(y)):
            kept.append(y)
    return np.asarray(kept)


def detuning_branch(y0, a: float, sweep_direction: str = "up") -> np.ndarray:
    """Sweep-direction branch of the detuning cubic, vectorized over y0.

    Where the cubic is single-valued the unique real root is returned;
    inside the bistable window the up-sweep takes the smallest root and
    the down-sweep the largest (adiabatic following).
    """
    y0 = np.asarray(y0, dtype=float)
    if a == 0.0:
        return y0.copy()
    p, q = _cubic_pq(y0, a)
    shift = y0 / 3.0
    disc = -4.0 * p**3 - 27.0 * q**2

    out = np.empty_like(y0)

    multi = disc > 0
    if np.any(multi):
        pm, qm = p[multi], q[multi]
        m = 2.0 * np.sqrt(-pm / 3.0)
        theta = np.arccos(np.clip(3.0 * qm / (pm * m), -1.0, 1.0))
        ks = np.array([0.0, 1.0, 2.0])
        t = m[:, None] * np.cos(theta[:, None] / 3.0 - 2.0 * np.pi * ks / 3.0)
        pick = t.min(axis=1) if sweep_direction == "up" else t.max(axis=1)
        out[multi] = pick + shift[multi]

    single = ~multi
    if np.any(single):
        ps, qs = p[single], q[single]
        rad = np.sqrt(np.maximum((qs / 2.0) ** 2 + (ps / 3.0) ** 3, 0.0))
        u = np.cbrt(-qs / 2.0 + rad)
        v = np.cbrt(-qs / 2.0 - rad)
        out[single] = u + v + shift[single]

    return _cubic_newton_polish(out, y0, a)


def bistable_window(a: float) -> Optional[Tuple[float, float]]:
    """Applied-detuning interval (y0_low, y0_high) with three real roots.

    Returns None below the critical nonlinearity.  The fold points are
    the local extrema of y0(y) = y - a/(1 + 4 y^2).
    """
    if a <= A_CRIT:
        return None
    # d y0 / d y = 1 + 8 a y / (1 + 4 y^2)^2 = 0.
    roots = np.roots([16.0, 0.0, 8.0, 8.0 * a, 1.0])
    y_folds = np.sort(roots[np.abs(roots.imag) < 1e-9].real)
    y0_folds = y_folds - a / (1.0 + 4.0 * y_folds**2)
    return float(y0_folds.min()), float(y0_folds.max())


def s21_model(
    params: ResonanceParams,
    baseline: Baseline,
    f,
    drive_scale: float = 1.0,
    sweep_direction: str = "up",
) -> np.ndarray:
    """Complex transmission of the nonlinear hanger resonator.

    ``drive_scale`` multiplies the stored nonlinearity (a scales linearly
    with applied power); with a = 0 and a unit baseline the expression
    reduces exactly to the standard asymmetric hanger form.
    """
    f = np.asarray(f, dtype=float)
    q_tot = params.q_tot
    y0 = q_tot * (f - params.f0) / params.f0
    y = detuning_branch(y0, params.a * drive_scale, sweep_direction)
    x = y / q_tot
    dip = (q_tot / params.q_ext - 2j * q_tot * params.x_a) / (1.0 + 2j * q_tot * x)
    return (1.0 - dip) * baseline(f)


def photon_number(params: ResonanceParams, p_in: float, f0: Optional[float] = None
                  ) -> PhotonNumber:
    """Mean circulating photon number for incident power ``p_in`` in watts.

    <n> = 2/(hbar w0^2) * (Q_tot^2 / Q_ext) * P_in,  w0 = 2 pi f0.
    The room-temperature attenuation correction makes this a lower
    estimate of the true occupancy.
    """
    if p_in < 0:
        raise ParameterDomainError("incident power must be >= 0")
    f0 = params.f0 if f0 is None else f0
    omega0 = 2.0 * np.pi * f0 * 1e9
    mean_n = 2.0 / (HBAR_J_S * omega0**2) * params.q_tot**2 / params.q_ext * p_in
    return PhotonNumber(float(mean_n))


def attenuation_db(table: Sequence[Tuple[float, float]], f) -> np.ndarray:
    """Line attenuation (dB) at frequency f, from a measured table.

    A quadratic is least-squares fitted through the tabulated
    (frequency GHz, dB) points; three points reproduce them exactly.
    """
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[0] < 3:
        raise ParameterDomainError("attenuation table needs >= 3 (freq, dB) rows")
    coeffs = np.polyfit(table[:, 0], table[:, 1], 2)
    return np.polyval(coeffs, np.asarray(f, dtype=float))


def incident_power_w(drive_power_dbm: float,
                     table: Sequence[Tuple[float, float]],
                     f0: float) -> float:
    """Power reaching the resonator: instrument output minus line attenuation."""
    return float(dbm_to_watts(drive_power_dbm - attenuation_db(table, f0)))


def _wing_mask(n: int) -> np.ndarray:
    k = max(2, int(round(WING_FRACTION * n)))
    mask = np.zeros(n, dtype=bool)
    mask[:k] = True
    mask[-k:] = True
    return mask


def normalize_trace(trace: SweepTrace) -> SweepTrace:
    """Scale magnitude to unity off resonance and remove the cable-delay
    phase slope, both estimated on the off-resonant wings.

    Returns a new trace; the input is untouched.
    """
    n = len(trace.frequencies)
    if n < MIN_TRACE_POINTS:
        raise PreprocessingError(
            f"trace has {n} points; need >= {MIN_TRACE_POINTS} to identify wings"
        )
    wings = _wing_mask(n)
    scale = np.median(np.abs(trace.s21[wings]))
    if scale <= 0:
        raise PreprocessingError("off-resonant magnitude is zero")

    phase = np.unwrap(np.angle(trace.s21))
    slope, offset = np.polyfit(trace.frequencies[wings], phase[wings], 1)
    correction = np.exp(-1j * (offset + slope * trace.frequencies))
    return replace(trace, s21=trace.s21 / scale * correction)
