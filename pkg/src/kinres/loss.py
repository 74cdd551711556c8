"""Loss and relaxation models: quasiparticle-limited resonator quality
factors, the photon-number-dependent quality factor of localized
quasiparticles, tunneling rates in a junction / junction-array picture,
the equivalent phenomenological inductive loss, dielectric loss, and
composed T1 budgets.

All rates are zero-temperature (k_B T << h f); energies are GHz (E/h)
and rates are reported in 1/us.  The square-root frequency dependence of
every quasiparticle channel uses the dimensionless ratio 2*Delta/(h*f)
with the gap in ueV.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .constants import DELTA_WSI_UEV, H_UEV_PER_GHZ, gap_ratio
from .errors import ParameterDomainError
from .quantum import EigenSolution, OperatorMatrix, matrix_element

# 1 GHz of E/h expressed as an angular rate in 1/us: 2*pi*1e3.
_GHZ_TO_PER_US = 2.0 * np.pi * 1e3


@dataclass(frozen=True)
class QuasiparticleSpec:
    """Quasiparticle bath: density ratio, gap (ueV), kinetic fraction."""

    x_qp: float
    delta: float = DELTA_WSI_UEV
    alpha: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.x_qp < 1.0:
            raise ParameterDomainError("x_qp must be in [0, 1)")
        if self.delta <= 0:
            raise ParameterDomainError("gap must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise ParameterDomainError("kinetic fraction must be in (0, 1]")


@dataclass(frozen=True)
class PowerLossSpec:
    """Parameters of the photon-number-dependent internal loss."""

    q0: float
    beta: float
    gamma: float

    def __post_init__(self):
        if self.q0 <= 0:
            raise ParameterDomainError("q0 must be positive")
        if self.beta < 0 or self.gamma < 0:
            raise ParameterDomainError("beta and gamma must be >= 0")


@dataclass(frozen=True)
class LossBudget:
    """Per-channel relaxation rates (1/us) and the composed T1 (us)."""

    channels: dict  # name -> rate
    total_t1: float

    @property
    def total_rate(self) -> float:
        return sum(self.channels.values())


def _check_regime(delta_uev: float, f_ghz: float):
    if H_UEV_PER_GHZ * f_ghz > delta_uev / 5.0:
        warnings.warn(
            f"h*f = {H_UEV_PER_GHZ * f_ghz:.1f} ueV approaches the gap "
            f"{delta_uev:.0f} ueV; the h*f << Delta approximation degrades",
            stacklevel=3,
        )


def q_int_quasiparticle(qp: QuasiparticleSpec, q0: float, f0) -> np.ndarray:
    """Internal quality factor limited by quasiparticles:

        1/Q_int = 1/Q0 + (alpha/pi) sqrt(2 Delta / h f0) * x_qp.

    ``q0`` may be ``inf`` for a purely quasiparticle-limited device.
    """
    f0 = np.asarray(f0, dtype=float)
    if np.any(f0 <= 0):
        raise ParameterDomainError("f0 must be positive")
    inv = 1.0 / q0 + qp.alpha / np.pi * np.sqrt(gap_ratio(qp.delta, f0)) * qp.x_qp
    return 1.0 / inv


def q_int_power(spec: PowerLossSpec, n) -> np.ndarray:
    """Photon-number-dependent internal quality factor:

        1/Q_int = 1/Q0 + beta * [1/(1 + g n / (1 + (sqrt(1+4 g n)-1)/2)) - 1].

    Monotone nondecreasing in n; saturates at 1/Q0 - beta.
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ParameterDomainError("photon number must be >= 0")
    gn = spec.gamma * n
    bracket = 1.0 / (1.0 + gn / (1.0 + 0.5 * (np.sqrt(1.0 + 4.0 * gn) - 1.0))) - 1.0
    return 1.0 / (1.0 / spec.q0 + spec.beta * bracket)


def loss_tangent_scaling(spec: PowerLossSpec, n_values) -> tuple:
    """Collapse coordinates for the photon-number loss model.

    Returns (gamma * n, scaled loss tangent) where the scaled value is
    (delta(n) - (delta_0 - beta)) / beta with delta = 1/Q_int; every
    parameter set lands on the same universal curve of gamma * n.
    """
    n_values = np.asarray(n_values, dtype=float)
    delta_n = 1.0 / q_int_power(spec, n_values)
    delta_0 = 1.0 / spec.q0
    return spec.gamma * n_values, (delta_n - (delta_0 - spec.beta)) / spec.beta


def q_ind(qp: QuasiparticleSpec, f) -> np.ndarray:
    """Inductor quality factor from quasiparticle tunneling:

        1/Q_ind = (1/pi) sqrt(2 Delta / h f) * x_qp.

    Equal to the alpha = 1 quasiparticle term of the resonator formula.
    Returns ``inf`` when x_qp = 0.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ParameterDomainError("frequency must be positive")
    inv = np.sqrt(gap_ratio(qp.delta, f)) * qp.x_qp / np.pi
    with np.errstate(divide="ignore"):
        return 1.0 / inv


def gamma_qp_single_junction(
    sol: EigenSolution,
    sin_half: OperatorMatrix,
    e_j: float,
    qp: QuasiparticleSpec,
    f01: float,
    i: int = 0,
    f: int = 1,
) -> float:
    """Relaxation rate (1/us) from quasiparticle tunneling across one
    junction of Josephson energy ``e_j`` (GHz):

        Gamma = |<i| sin(phi/2) |f>|^2 * x_qp * (8 E_J / pi hbar)
                * sqrt(2 Delta / hbar w).
    """
    if f01 <= 0:
        raise ParameterDomainError("transition frequency must be positive")
    _check_regime(qp.delta, f01)
    elem = abs(matrix_element(sin_half, sol, i, f)) ** 2
    spectral = qp.x_qp * 8.0 * e_j / np.pi * np.sqrt(gap_ratio(qp.delta, f01))
    return float(elem * spectral * _GHZ_TO_PER_US)


def gamma_qp_array(
    sol: EigenSolution,
    phi_op: OperatorMatrix,
    e_l: float,
    qp: QuasiparticleSpec,
    f01: float,
    i: int = 0,
    f: int = 1,
) -> float:
    """Relaxation rate (1/us) from quasiparticle tunneling in the
    linearized junction array forming the inductor (E_L = E_{J,A}/N):

        Gamma = |<i| phi |f>|^2 * x_qp * (2 E_L / pi hbar)
                * sqrt(2 Delta / hbar w).
    """
    if f01 <= 0:
        raise ParameterDomainError("transition frequency must be positive")
    _check_regime(qp.delta, f01)
    elem = abs(matrix_element(phi_op, sol, i, f)) ** 2
    spectral = qp.x_qp * 2.0 * e_l / np.pi * np.sqrt(gap_ratio(qp.delta, f01))
    return float(elem * spectral * _GHZ_TO_PER_US)


def gamma_inductive(
    sol: EigenSolution,
    phi_op: OperatorMatrix,
    e_l: float,
    qp: QuasiparticleSpec,
    f01: float,
    i: int = 0,
    f: int = 1,
) -> float:
    """Phenomenological inductive-loss route:

        Gamma = |<i| phi |f>|^2 * 2 E_L / (hbar Q_ind(w)),

    algebraically identical to :func:`gamma_qp_array`.
    """
    elem = abs(matrix_element(phi_op, sol, i, f)) ** 2
    return float(elem * 2.0 * e_l / float(q_ind(qp, f01)) * _GHZ_TO_PER_US)


def gamma_dielectric(
    sol: EigenSolution,
    phi_op: OperatorMatrix,
    e_c: float,
    q_cap: float,
    f01: float,
    i: int = 0,
    f: int = 1,
) -> float:
    """Dielectric relaxation rate (1/us):

        Gamma = |<i| phi |f>|^2 * hbar w^2 / (4 E_C Q_cap),

    growing as w^2 at fixed matrix element (opposite frequency trend to
    the quasiparticle channels).
    """
    if f01 <= 0 or q_cap <= 0:
        raise ParameterDomainError("need f01 > 0 and q_cap > 0")
    elem = abs(matrix_element(phi_op, sol, i, f)) ** 2
    # hbar w^2 / (4 E_C) = (pi/2) * f01^2 / e_c * 1e9 in 1/s.
    return float(elem * 0.5 * np.pi * f01**2 / e_c * 1e3 / q_cap)


@dataclass(frozen=True)
class InductiveQPChannel:
    """Quasiparticle tunneling in the array inductor."""

    qp: QuasiparticleSpec
    name: str = "inductive_qp"

    def rate(self, model, f01: float, i: int = 0, f: int = 1) -> float:
        return gamma_qp_array(model.sol, model.ops["phi"], model.spec.e_l,
                              self.qp, f01, i, f)


@dataclass(frozen=True)
class SingleJunctionQPChannel:
    """Quasiparticle tunneling across the single junction (off by default
    in budgets; its contribution is small)."""

    qp: QuasiparticleSpec
    name: str = "single_junction_qp"

    def rate(self, model, f01: float, i: int = 0, f: int = 1) -> float:
        return gamma_qp_single_junction(model.sol, model.ops["sin_half_phi"],
                                        model.spec.e_j, self.qp, f01, i, f)


@dataclass(frozen=True)
class DielectricChannel:
    """Capacitive loss with quality factor q_cap."""

    q_cap: float
    name: str = "dielectric"

    def rate(self, model, f01: float, i: int = 0, f: int = 1) -> float:
        return gamma_dielectric(model.sol, model.ops["phi"], model.spec.e_c,
                                self.q_cap, f01, i, f)


def t1_budget(channels: Sequence, model, f01: Optional[float] = None,
              i: int = 0, f: int = 1) -> LossBudget:
    """Sum channel rates for the i -> f transition and report T1 = 1/total.

    ``f01`` defaults to the model's own transition frequency.
    """
    if not channels:
        raise ParameterDomainError("at least one loss channel required")
    if f01 is None:
        f01 = model.sol.transition(i, f)
    rates = {ch.name: ch.rate(model, f01, i, f) for ch in channels}
    total = sum(rates.values())
    return LossBudget(rates, np.inf if total == 0 else 1.0 / total)
