"""Basis construction, operator matrices and dense Hermitian diagonalization
for one-dimensional superconducting circuit Hamiltonians.

Two interchangeable representations are provided:

* ``harmonic``: the eigenbasis of the linear (L-C) part of the circuit.
  The phase operator is expressed through ladder operators with zero-point
  amplitude set by the oscillator length ``(8 E_C / E_L)**0.25``; the
  cosine and half-angle sine are evaluated through the eigendecomposition
  of the phase matrix itself, which is exact within the truncation.

* ``grid``: a uniform discretization of the phase interval
  ``[-extent, +extent]`` with the charge operator built spectrally
  (Fourier-grid method), giving near machine-precision derivatives for
  wavefunctions that decay well inside the interval.

The harmonic backend is the production default; the grid backend serves
as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractError, ParameterDomainError, TruncationError

HERMITICITY_RTOL = 1e-12


@dataclass(frozen=True)
class PhaseBasis:
    """Representation choice for phase-space operators.

    kind is either ``"harmonic"`` or ``"grid"``; ``grid_extent`` (radians)
    is required for the grid basis and must be absent for the harmonic one.
    ``oscillator_length`` is filled in by :func:`build_operators` for the
    harmonic basis.
    """

    kind: str
    dimension: int
    grid_extent: Optional[float] = None
    oscillator_length: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("harmonic", "grid"):
            raise ParameterDomainError(f"unknown basis kind {self.kind!r}")
        if self.dimension < 2:
            raise ParameterDomainError("basis dimension must be >= 2")
        if self.kind == "grid":
            if self.grid_extent is None or self.grid_extent <= 0:
                raise ParameterDomainError("grid basis requires grid_extent > 0")
        elif self.grid_extent is not None:
            raise ParameterDomainError("harmonic basis takes no grid_extent")

    @classmethod
    def harmonic(cls, dimension: int = 120) -> "PhaseBasis":
        return cls("harmonic", dimension)

    @classmethod
    def grid(cls, dimension: int = 801, extent: float = 12 * np.pi) -> "PhaseBasis":
        return cls("grid", dimension, grid_extent=extent)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense operator with its construction basis attached."""

    basis: PhaseBasis
    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (self.basis.dimension, self.basis.dimension):
            raise ContractError(
                f"operator shape {m.shape} does not match basis dimension "
                f"{self.basis.dimension}"
            )
        object.__setattr__(self, "entries", m)
        if self.hermitian:
            scale = np.abs(m).max() or 1.0
            dev = np.abs(m - m.conj().T).max()
            if dev > HERMITICITY_RTOL * scale:
                raise ContractError(
                    f"matrix flagged hermitian deviates by {dev:.3e} "
                    f"(allowed {HERMITICITY_RTOL * scale:.3e})"
                )


@dataclass(frozen=True)
class EigenSolution:
    """Lowest eigenpairs of a circuit Hamiltonian.

    ``energies`` are in GHz (E/h) and ascending; ``states`` holds the
    corresponding column eigenvectors in the construction basis.
    """

    energies: np.ndarray
    states: np.ndarray
    basis: PhaseBasis

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        v = np.asarray(self.states, dtype=complex)
        if np.any(np.diff(e) < 0):
            raise ContractError("eigenvalues must be nondecreasing")
        norms = np.linalg.norm(v, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise ContractError("eigenvectors must be unit-norm")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "states", v)

    @property
    def levels(self) -> int:
        return len(self.energies)

    def transition(self, i: int, j: int) -> float:
        """Transition frequency E_j - E_i in GHz (ground state at zero)."""
        return float(self.energies[j] - self.energies[i])


def _harmonic_phase_charge(basis: PhaseBasis, e_c: float, e_l: float):
    n_dim = basis.dimension
    length = (8.0 * e_c / e_l) ** 0.25
    lad = np.diag(np.sqrt(np.arange(1, n_dim)), k=1)  # annihilation
    phi = length / np.sqrt(2.0) * (lad + lad.T)
    charge = 1j / (length * np.sqrt(2.0)) * (lad.T - lad)
    return phi.astype(complex), charge.astype(complex), length


def _grid_phase_charge(basis: PhaseBasis):
    n_dim = basis.dimension
    extent = basis.grid_extent
    step = 2.0 * extent / n_dim
    points = -extent + step * np.arange(n_dim)
    # Spectral derivative on the periodic grid: n = F^H diag(k) F.
    k = 2.0 * np.pi * np.fft.fftfreq(n_dim, d=step)
    eye = np.eye(n_dim)
    charge = np.fft.ifft(k[:, None] * np.fft.fft(eye, axis=0), axis=0)
    charge = 0.5 * (charge + charge.conj().T)
    n_sq = np.fft.ifft((k**2)[:, None] * np.fft.fft(eye, axis=0), axis=0)
    n_sq = 0.5 * (n_sq + n_sq.conj().T)
    return points, charge, n_sq


def build_operators(
    basis: PhaseBasis,
    e_c: float,
    e_j: float,
    e_l: float,
    phi_ext: float,
) -> dict:
    """Build the circuit Hamiltonian and companion operators.

    Parameters
    ----------
    basis : PhaseBasis
    e_c, e_j, e_l : float
        Charging, Josephson and inductive energies in GHz (E/h).
        ``e_j`` may be zero (harmonic limit); the others must be positive.
    phi_ext : float
        External flux in units of the flux quantum.

    Returns
    -------
    dict with keys ``H``, ``phi``, ``n``, ``sin_half_phi``, each an
    :class:`OperatorMatrix`.  The Hamiltonian is

        H = 4 e_c n^2 - e_j cos(phi) + e_l/2 (phi - 2 pi phi_ext)^2.
    """
    if e_c <= 0 or e_l <= 0 or e_j < 0:
        raise ParameterDomainError(
            f"need e_c > 0, e_l > 0, e_j >= 0; got ({e_c}, {e_j}, {e_l})"
        )
    phase_offset = 2.0 * np.pi * phi_ext

    if basis.kind == "harmonic":
        if basis.dimension < 4:
            raise TruncationError(
                "harmonic basis needs at least 4 levels to represent cos(phi)"
            )
        phi, charge, length = _harmonic_phase_charge(basis, e_c, e_l)
        basis = PhaseBasis("harmonic", basis.dimension, oscillator_length=length)
        # Exact-within-truncation matrix functions of phi.
        lam, vec = np.linalg.eigh(phi)
        cos_phi = (vec * np.cos(lam)) @ vec.conj().T
        sin_half = (vec * np.sin(lam / 2.0)) @ vec.conj().T
        ham = (
            4.0 * e_c * (charge @ charge)
            - e_j * cos_phi
            + 0.5 * e_l * ((vec * (lam - phase_offset) ** 2) @ vec.conj().T)
        )
    else:
        points, charge, n_sq = _grid_phase_charge(basis)
        phi = np.diag(points).astype(complex)
        cos_phi = np.diag(np.cos(points)).astype(complex)
        sin_half = np.diag(np.sin(points / 2.0)).astype(complex)
        ham = (
            4.0 * e_c * n_sq
            - e_j * cos_phi
            + 0.5 * e_l * np.diag((points - phase_offset) ** 2)
        )

    ham = 0.5 * (ham + ham.conj().T)
    return {
        "H": OperatorMatrix(basis, ham, hermitian=True),
        "phi": OperatorMatrix(basis, phi, hermitian=True),
        "n": OperatorMatrix(basis, charge, hermitian=True),
        "sin_half_phi": OperatorMatrix(basis, sin_half, hermitian=True),
    }


def diagonalize(op: OperatorMatrix, levels: int) -> EigenSolution:
    """Dense Hermitian eigendecomposition, keeping the lowest ``levels`` pairs."""
    if not op.hermitian:
        raise ContractError("diagonalize requires a hermitian-flagged operator")
    if not 1 <= levels <= op.basis.dimension:
        raise ParameterDomainError(
            f"levels must be in [1, {op.basis.dimension}], got {levels}"
        )
    all_energies, states = np.linalg.eigh(op.entries)
    energies = all_energies[:levels]
    states = states[:, :levels]
    states = states / np.linalg.norm(states, axis=0)

    scale = max(abs(all_energies[0]), abs(all_energies[-1]))
    residual = np.abs(op.entries @ states - states * energies).max()
    if residual > 1e-8 * max(scale, 1.0):
        raise ContractError(f"eigenpair residual {residual:.3e} too large")
    return EigenSolution(energies, states, op.basis)


def matrix_element(op: OperatorMatrix, sol: EigenSolution, i: int, j: int) -> complex:
    """Return <i| op |j> between retained eigenstates."""
    if not (0 <= i < sol.levels and 0 <= j < sol.levels):
        raise IndexError(
            f"level index ({i}, {j}) out of range for {sol.levels} retained levels"
        )
    return complex(sol.states[:, i].conj() @ op.entries @ sol.states[:, j])
