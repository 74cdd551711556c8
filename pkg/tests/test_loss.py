"""Loss channels: quasiparticle, power-dependent, dielectric; T1 budgets."""

import numpy as np
import pytest

from kinres import (
    CircuitSpec,
    DielectricChannel,
    InductiveQPChannel,
    PowerLossSpec,
    QuasiparticleSpec,
    SingleJunctionQPChannel,
    fluxonium_model,
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
from kinres.errors import ParameterDomainError

from conftest import loss_specs

GAMMA_ARRAY_REGRESSION = 9.71839102844873  # 1/us, reference circuit A, half flux


def test_spec_validation():
    with pytest.raises(ParameterDomainError):
        QuasiparticleSpec(-1e-5)
    with pytest.raises(ParameterDomainError):
        QuasiparticleSpec(1e-5, delta=0.0)
    with pytest.raises(ParameterDomainError):
        QuasiparticleSpec(1e-5, alpha=1.5)
    with pytest.raises(ParameterDomainError):
        PowerLossSpec(q0=-1.0, beta=1e-6, gamma=1e-3)


def test_quasiparticle_free_limit():
    qp = QuasiparticleSpec(0.0)
    assert q_int_quasiparticle(qp, 2e5, 6.0) == pytest.approx(2e5)
    assert np.isinf(q_ind(qp, 6.0))


def test_q_int_increases_with_frequency():
    qp = QuasiparticleSpec(3.9e-5, alpha=0.99)
    f = np.linspace(4.0, 8.0, 20)
    q = q_int_quasiparticle(qp, np.inf, f)
    assert np.all(np.diff(q) > 0)
    assert 5e3 < q[0] < 5e4  # 1e4 scale


def test_density_ratio_scaling():
    f = 6.0
    q_thick = q_int_quasiparticle(QuasiparticleSpec(1.2e-5, alpha=0.975), np.inf, f)
    q_thin = q_int_quasiparticle(QuasiparticleSpec(3.9e-5, alpha=0.99), np.inf, f)
    assert 2.5 < q_thick / q_thin < 3.5


def test_resonator_inductor_identity(rng):
    """At alpha = 1 and Q0 -> inf the resonator formula equals Q_ind."""
    for _ in range(200):
        qp = QuasiparticleSpec(float(rng.uniform(1e-7, 1e-3)),
                               delta=float(rng.uniform(100, 1000)))
        f = float(rng.uniform(1, 10))
        a = q_int_quasiparticle(qp, np.inf, f)
        b = q_ind(qp, f)
        assert abs(a - b) <= 1e-12 * abs(b)


def test_power_loss_contract():
    for _, spec in loss_specs():
        assert q_int_power(spec, 0.0) == pytest.approx(spec.q0, rel=1e-15)
        n = np.logspace(-2, 6, 60)
        q = q_int_power(spec, n)
        assert np.all(np.diff(q) >= 0)
        saturated = 1.0 / q_int_power(spec, 1e4 / spec.gamma)
        assert saturated == pytest.approx(1.0 / spec.q0 - spec.beta,
                                          abs=0.01 * spec.beta)


def test_loss_tangent_collapse_pair():
    (_, s1), (_, s2) = loss_specs()[0], loss_specs()[20]
    gn = np.logspace(-2, 3, 30)
    _, y1 = loss_tangent_scaling(s1, gn / s1.gamma)
    _, y2 = loss_tangent_scaling(s2, gn / s2.gamma)
    assert np.abs(y1 - y2).max() < 1e-9


def test_gamma_route_identity(rng):
    """Microscopic array rate == phenomenological inductive rate."""
    for _ in range(20):
        e_c = float(rng.uniform(0.5, 1.5))
        e_j = float(rng.uniform(1.0, 5.0))
        e_l = float(rng.uniform(0.3, 1.5))
        model = fluxonium_model(
            CircuitSpec(e_c, e_j, e_l, float(rng.uniform(0, 0.5))), 3)
        qp = QuasiparticleSpec(float(rng.uniform(1e-6, 1e-4)))
        f01 = model.sol.transition(0, 1)
        a = gamma_qp_array(model.sol, model.ops["phi"], e_l, qp, f01)
        b = gamma_inductive(model.sol, model.ops["phi"], e_l, qp, f01)
        assert abs(a - b) <= 1e-12 * abs(b)


def test_gamma_array_regression(light_circuit):
    model = fluxonium_model(light_circuit.at_flux(0.5), 2)
    qp = QuasiparticleSpec(3.9e-5)
    rate = gamma_qp_array(model.sol, model.ops["phi"], light_circuit.e_l, qp,
                          model.sol.transition(0, 1))
    assert rate == pytest.approx(GAMMA_ARRAY_REGRESSION, rel=1e-10)


def test_rates_linear_in_xqp(light_circuit):
    model = fluxonium_model(light_circuit.at_flux(0.4), 2)
    f01 = model.sol.transition(0, 1)
    r1 = gamma_qp_array(model.sol, model.ops["phi"], 0.72,
                        QuasiparticleSpec(1e-5), f01)
    r3 = gamma_qp_array(model.sol, model.ops["phi"], 0.72,
                        QuasiparticleSpec(3e-5), f01)
    assert r3 == pytest.approx(3.0 * r1, rel=1e-12)
    assert r1 >= 0


def test_single_junction_subdominant(light_circuit):
    """The single-junction channel is small next to the array channel."""
    model = fluxonium_model(light_circuit.at_flux(0.5), 2)
    qp = QuasiparticleSpec(3.9e-5)
    f01 = model.sol.transition(0, 1)
    single = gamma_qp_single_junction(model.sol, model.ops["sin_half_phi"],
                                      light_circuit.e_j, qp, f01)
    array = gamma_qp_array(model.sol, model.ops["phi"], light_circuit.e_l, qp, f01)
    assert single < array


def test_dielectric_frequency_square(light_circuit):
    """At pinned matrix element the dielectric rate grows as f^2."""
    model = fluxonium_model(light_circuit.at_flux(0.5), 2)
    r1 = gamma_dielectric(model.sol, model.ops["phi"], light_circuit.e_c, 1e4, 2.0)
    r2 = gamma_dielectric(model.sol, model.ops["phi"], light_circuit.e_c, 1e4, 4.0)
    assert r2 == pytest.approx(4.0 * r1, rel=1e-12)


def test_regime_warning(light_circuit):
    model = fluxonium_model(light_circuit.at_flux(0.5), 2)
    qp = QuasiparticleSpec(1e-5)
    with pytest.warns(UserWarning, match="approaches the gap"):
        gamma_qp_array(model.sol, model.ops["phi"], 0.72, qp, 40.0)


def test_t1_budget(light_circuit):
    model = fluxonium_model(light_circuit.at_flux(0.5), 4)
    channels = [InductiveQPChannel(QuasiparticleSpec(3.9e-5)),
                DielectricChannel(1e4),
                SingleJunctionQPChannel(QuasiparticleSpec(3.9e-5))]
    budget = t1_budget(channels, model)
    assert set(budget.channels) == {"inductive_qp", "dielectric",
                                    "single_junction_qp"}
    assert budget.total_t1 == pytest.approx(1.0 / budget.total_rate)
    lone = t1_budget([channels[0]], model)
    assert lone.total_t1 > budget.total_t1
    with pytest.raises(ParameterDomainError):
        t1_budget([], model)
