"""Fluxonium and coupled qubit-resonator models plus kinetic-inductance
wire bookkeeping.

The coupled system is built in the product of the fluxonium eigenbasis
and Fock spaces of up to two bosonic modes.  Dressed branches are labeled
by maximal overlap with bare product states (ties broken by the lower
bare index); ambiguous labelings caused by too small a photon truncation
raise :class:`~kinres.errors.TruncationError`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .constants import GEOMETRIC_SHEET_PH
from .errors import ParameterDomainError, TruncationError
from .quantum import (
    EigenSolution,
    OperatorMatrix,
    PhaseBasis,
    build_operators,
    diagonalize,
)


@dataclass(frozen=True)
class CircuitSpec:
    """Fluxonium parameters: energies in GHz, flux in flux quanta."""

    e_c: float
    e_j: float
    e_l: float
    phi_ext: float = 0.0
    truncation: PhaseBasis = field(default_factory=PhaseBasis.harmonic)

    def __post_init__(self):
        if self.e_c <= 0 or self.e_l <= 0 or self.e_j < 0:
            raise ParameterDomainError(
                "circuit energies must satisfy e_c > 0, e_l > 0, e_j >= 0"
            )
        if not np.isfinite(self.phi_ext):
            raise ParameterDomainError("phi_ext must be finite")

    def at_flux(self, phi_ext: float) -> "CircuitSpec":
        return CircuitSpec(self.e_c, self.e_j, self.e_l, phi_ext, self.truncation)


@dataclass(frozen=True)
class ResonatorMode:
    """One bosonic mode coupled to the qubit through its charge operator."""

    bare_frequency: float
    photon_truncation: int = 6
    g: Optional[float] = None
    g_matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.bare_frequency <= 0:
            raise ParameterDomainError("mode frequency must be positive")
        if self.photon_truncation < 2:
            raise ParameterDomainError("photon truncation must be >= 2")
        if (self.g is None) == (self.g_matrix is None):
            raise ParameterDomainError("give exactly one of g or g_matrix")


@dataclass(frozen=True)
class CoupledSystemSpec:
    qubit: CircuitSpec
    modes: Sequence[ResonatorMode]

    def __post_init__(self):
        if not 1 <= len(self.modes) <= 2:
            raise ParameterDomainError("between 1 and 2 bosonic modes supported")


@dataclass(frozen=True)
class FluxSpectrum:
    """Flux-swept transition frequencies of the coupled system."""

    flux_points: np.ndarray
    transitions: np.ndarray  # [flux, pair], GHz
    dressed_resonator_freq: np.ndarray  # readout mode, GHz
    labels: list  # (i, j) qubit level pairs matching transitions columns


@dataclass(frozen=True)
class WireGeometry:
    """High-kinetic-inductance strip geometry (lengths in um, sheet in pH/sq)."""

    sheet_inductance: float
    length: float
    width: float
    geometric_sheet_inductance: float = GEOMETRIC_SHEET_PH

    def __post_init__(self):
        if min(self.sheet_inductance, self.length, self.width,
               self.geometric_sheet_inductance) <= 0:
            raise ParameterDomainError("all geometry values must be positive")
        if self.width > self.length:
            raise ParameterDomainError("width must not exceed length")


@dataclass(frozen=True)
class WireInductance:
    total_inductance: float  # nH
    kinetic_inductance: float  # nH
    kinetic_fraction: float


@dataclass(frozen=True)
class FluxoniumModel:
    """Bundle of a circuit spec with its operators and eigensolution."""

    spec: CircuitSpec
    ops: dict
    sol: EigenSolution


def fluxonium_spectrum(spec: CircuitSpec, levels: int = 6) -> EigenSolution:
    """Diagonalize the fluxonium Hamiltonian for the given spec."""
    ops = build_operators(spec.truncation, spec.e_c, spec.e_j, spec.e_l, spec.phi_ext)
    return diagonalize(ops["H"], levels)


def fluxonium_model(spec: CircuitSpec, levels: int = 6) -> FluxoniumModel:
    """Like :func:`fluxonium_spectrum` but keeping the operators around."""
    ops = build_operators(spec.truncation, spec.e_c, spec.e_j, spec.e_l, spec.phi_ext)
    return FluxoniumModel(spec, ops, diagonalize(ops["H"], levels))


def wire_inductance(geom: WireGeometry) -> WireInductance:
    """Total and kinetic inductance of a strip, from sheet values.

    total = (L_sheet + L_geom) * length / width, converted pH -> nH;
    the kinetic fraction is L_sheet / (L_sheet + L_geom).
    """
    squares = geom.length / geom.width
    sheet_total = geom.sheet_inductance + geom.geometric_sheet_inductance
    return WireInductance(
        total_inductance=sheet_total * squares * 1e-3,
        kinetic_inductance=geom.sheet_inductance * squares * 1e-3,
        kinetic_fraction=geom.sheet_inductance / sheet_total,
    )


def _mode_operators(n_ph: int):
    lower = np.diag(np.sqrt(np.arange(1, n_ph)), k=1)
    number = np.diag(np.arange(n_ph, dtype=float))
    return lower + lower.T, number  # (a + a^dag), a^dag a


def _coupled_hamiltonian(spec: CoupledSystemSpec, qubit_levels: int):
    """Assemble H_total in the (qubit eigenbasis) x Fock product space."""
    qspec = spec.qubit
    ops = build_operators(qspec.truncation, qspec.e_c, qspec.e_j, qspec.e_l,
                          qspec.phi_ext)
    qsol = diagonalize(ops["H"], qubit_levels)
    eps = qsol.energies - qsol.energies[0]
    n_eig = qsol.states.conj().T @ ops["n"].entries @ qsol.states

    dims = [qubit_levels] + [m.photon_truncation for m in spec.modes]
    total = int(np.prod(dims))
    ham = np.zeros((total, total), dtype=complex)

    def embed(op, slot):
        mats = [np.eye(d, dtype=complex) for d in dims]
        mats[slot] = op
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    ham += embed(np.diag(eps).astype(complex), 0)
    for k, mode in enumerate(spec.modes, start=1):
        quad, number = _mode_operators(mode.photon_truncation)
        ham += mode.bare_frequency * embed(number.astype(complex), k)
        coupling = (mode.g * n_eig if mode.g is not None
                    else np.asarray(mode.g_matrix, dtype=complex))
        mats = [np.eye(d, dtype=complex) for d in dims]
        mats[0] = coupling
        mats[k] = quad.astype(complex)
        term = mats[0]
        for m in mats[1:]:
            term = np.kron(term, m)
        ham += term
    return 0.5 * (ham + ham.conj().T), dims


def _bare_index(dims, qubit_level, photons):
    idx = qubit_level
    for d, p in zip(dims[1:], photons):
        idx = idx * d + p
    return idx


def _locate(states, dims, qubit_level, photons, label):
    """Eigenstate index with maximal overlap on one bare product state."""
    weights = np.abs(states[_bare_index(dims, qubit_level, photons), :]) ** 2
    order = np.argsort(weights)[::-1]
    return int(order[0]), weights[order[0]], order


def coupled_spectrum(
    spec: CoupledSystemSpec,
    levels: int = 4,
    flux_points: Sequence[float] = (0.0,),
    qubit_levels: int = 8,
) -> FluxSpectrum:
    """Dressed transition frequencies of the coupled system over a flux scan.

    ``levels`` is the number of qubit-like excited states reported; the
    readout mode is always the first entry of ``spec.modes``.
    """
    flux_points = np.asarray(flux_points, dtype=float)
    if flux_points.size == 0:
        raise ParameterDomainError("flux_points must be nonempty")

    labels = [(0, j) for j in range(1, levels + 1)]
    transitions = np.zeros((flux_points.size, len(labels)))
    res_freq = np.zeros(flux_points.size)

    for k, flux in enumerate(flux_points):
        sys_k = CoupledSystemSpec(spec.qubit.at_flux(flux), spec.modes)
        ham, dims = _coupled_hamiltonian(sys_k, qubit_levels)
        energies, states = np.linalg.eigh(ham)

        zeros = tuple(0 for _ in spec.modes)
        ground, _, _ = _locate(states, dims, 0, zeros, "ground")

        one_photon = tuple(1 if m == 0 else 0 for m in range(len(spec.modes)))
        ridx, rweight, rorder = _locate(states, dims, 0, one_photon, "resonator")
        runner = int(rorder[1])
        second = np.abs(states[_bare_index(dims, 0, one_photon), runner]) ** 2
        if (abs(energies[ridx] - energies[runner]) < 1e-3
                and second > 0.25 and abs(rweight - second) < 0.1):
            raise TruncationError(
                "dressed resonator branch ambiguous (two candidates within "
                "1 MHz); raise photon_truncation or qubit_levels"
            )
        # Population of the top Fock layer flags an under-truncated mode.
        top = _top_fock_population(states[:, ridx], dims)
        if top > 1e-3:
            raise TruncationError(
                f"top Fock level holds {top:.2e} of the resonator branch; "
                "raise photon_truncation"
            )
        res_freq[k] = energies[ridx] - energies[ground]

        for col, (_, j) in enumerate(labels):
            sidx, _, _ = _locate(states, dims, j, zeros, f"qubit {j}")
            transitions[k, col] = energies[sidx] - energies[ground]

    return FluxSpectrum(flux_points, transitions, res_freq, labels)


def _top_fock_population(state, dims):
    """Weight of the readout mode's highest Fock level in one eigenstate."""
    shaped = state.reshape(dims)
    return float(np.sum(np.abs(np.take(shaped, -1, axis=1)) ** 2))
