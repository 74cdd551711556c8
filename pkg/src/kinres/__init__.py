"""Kinetic-inductance resonator and fluxonium analysis toolkit."""

from .circuits import (
    CircuitSpec,
    CoupledSystemSpec,
    FluxSpectrum,
    FluxoniumModel,
    ResonatorMode,
    WireGeometry,
    coupled_spectrum,
    fluxonium_model,
    fluxonium_spectrum,
    wire_inductance,
)
from .constants import A_CRIT, DELTA_WSI_UEV, H_UEV_PER_GHZ
from .fitting import (
    FitProblem,
    FitResult,
    PowerSweepFitInput,
    PowerSweepPoint,
    SpectrumPoint,
    fit_power_sweep,
    fit_s21,
    fit_spectrum,
    fit_xqp_frequency,
    least_squares,
)
from .loss import (
    DielectricChannel,
    InductiveQPChannel,
    LossBudget,
    PowerLossSpec,
    QuasiparticleSpec,
    SingleJunctionQPChannel,
    gamma_dielectric,
    gamma_inductive,
    gamma_qp_array,
    gamma_qp_single_junction,
    loss_tangent_scaling,
    q_ind,
    q_int_power,
    q_int_quasiparticle,
    t1_budget,
)
from .quantum import (
    EigenSolution,
    OperatorMatrix,
    PhaseBasis,
    build_operators,
    diagonalize,
    matrix_element,
)
from .response import (
    Baseline,
    PhotonNumber,
    ResonanceParams,
    SweepTrace,
    attenuation_db,
    bistable_window,
    detuning_branch,
    incident_power_w,
    normalize_trace,
    photon_number,
    s21_model,
    solve_detuning,
)

__version__ = "0.1.0"
