"""Nonlinear hanger response: cubic branches, S21 model, photon number."""

import numpy as np
import pytest

from kinres import (
    A_CRIT,
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
from kinres.errors import ParameterDomainError, PreprocessingError

from oracles import duffing_cubic_roots_bisect

MEAN_N_REGRESSION = 66.72085476549834  # f0=6 GHz, Qtot=1e4, Qext=2e4, 1 fW


def _poly(y, y0, a):
    return 4.0 * y**3 - 4.0 * y0 * y**2 + y - y0 - a


def test_linear_limit_identity():
    assert solve_detuning(0.37, 0.0) == pytest.approx([0.37])
    y0 = np.linspace(-3, 3, 11)
    assert np.allclose(detuning_branch(y0, 0.0), y0)


def test_roots_satisfy_polynomial(rng):
    for _ in range(100):
        y0 = rng.uniform(-4, 4)
        a = rng.uniform(0, 1.5)
        for y in solve_detuning(y0, a):
            assert abs(_poly(y, y0, a)) < 1e-10 * (1 + abs(y) ** 3)


def test_roots_match_bisection_oracle(rng):
    for _ in range(200):
        y0 = rng.uniform(-4, 4)
        a = rng.uniform(0, 1.5)
        got = solve_detuning(y0, a)
        ref = duffing_cubic_roots_bisect(y0, a)
        assert len(got) == len(ref)
        assert np.abs(got - ref).max() < 1e-9


def test_bistable_window_threshold():
    assert bistable_window(0.0) is None
    assert bistable_window(A_CRIT * 0.999) is None
    window = bistable_window(0.9)
    assert window is not None and window[0] < window[1]
    inside = 0.5 * (window[0] + window[1])
    assert len(solve_detuning(inside, 0.9)) == 3
    assert len(solve_detuning(window[1] + 1.0, 0.9)) == 1


def test_branch_rules_in_bistable_window():
    a = 0.9
    lo, hi = bistable_window(a)
    y0 = np.linspace(lo + 1e-4, hi - 1e-4, 7)
    up = detuning_branch(y0, a, "up")
    down = detuning_branch(y0, a, "down")
    for k, y0k in enumerate(y0):
        roots = solve_detuning(float(y0k), a)
        assert up[k] == pytest.approx(roots[0], abs=1e-9)
        assert down[k] == pytest.approx(roots[-1], abs=1e-9)
    outside = np.array([lo - 1.0, hi + 1.0])
    assert np.allclose(detuning_branch(outside, a, "up"),
                       detuning_branch(outside, a, "down"))


def test_s21_linear_closed_form():
    params = ResonanceParams(6.0, 1e5, 5e4, x_a=2e-6)
    f = np.linspace(5.999, 6.001, 101)
    q_tot = params.q_tot
    x = (f - 6.0) / 6.0
    expected = 1.0 - (q_tot / 5e4 - 2j * q_tot * 2e-6) / (1.0 + 2j * q_tot * x)
    got = s21_model(params, Baseline.unit(), f)
    assert np.abs(got - expected).max() < 1e-12


def test_s21_sweep_hysteresis():
    params = ResonanceParams(6.0, 1e5, 5e4, a=1.2)
    f = np.linspace(5.9995, 6.0005, 301)
    up = s21_model(params, Baseline.unit(), f, sweep_direction="up")
    down = s21_model(params, Baseline.unit(), f, sweep_direction="down")
    assert np.abs(up - down).max() > 1e-3  # hysteretic window present
    linear = ResonanceParams(6.0, 1e5, 5e4)
    assert np.allclose(s21_model(linear, Baseline.unit(), f, sweep_direction="up"),
                       s21_model(linear, Baseline.unit(), f, sweep_direction="down"))


def test_drive_scale_scales_nonlinearity():
    params = ResonanceParams(6.0, 1e5, 5e4, a=0.2)
    doubled = ResonanceParams(6.0, 1e5, 5e4, a=0.4)
    f = np.linspace(5.9995, 6.0005, 51)
    assert np.allclose(s21_model(params, Baseline.unit(), f, drive_scale=2.0),
                       s21_model(doubled, Baseline.unit(), f))


def test_resonance_params():
    p = ResonanceParams.from_delta_f(6.0, 1e5, 5e4, delta_f=6e-6)
    assert p.x_a == pytest.approx(1e-6)
    assert p.delta_f == pytest.approx(6e-6)
    assert p.q_tot == pytest.approx(1.0 / (1e-5 + 2e-5))
    assert not p.bifurcated
    assert ResonanceParams(6.0, 1e5, 5e4, a=0.8).bifurcated
    with pytest.raises(ParameterDomainError):
        ResonanceParams(6.0, 1e5, 5e4, a=-0.1)


def test_photon_number_regression():
    params = ResonanceParams(6.0, 2e4, 2e4)  # q_tot = 1e4
    out = photon_number(params, 1e-15)
    assert out.mean_n == pytest.approx(MEAN_N_REGRESSION, rel=1e-12)
    assert photon_number(params, 0.0).mean_n == 0.0
    with pytest.raises(ParameterDomainError):
        PhotonNumber(-1.0)


def test_attenuation_interpolation():
    table = [(4.0, 60.0), (6.0, 63.0), (8.0, 68.0)]
    assert attenuation_db(table, 6.0) == pytest.approx(63.0)
    assert attenuation_db(table, [4.0, 8.0]) == pytest.approx([60.0, 68.0])
    with pytest.raises(ParameterDomainError):
        attenuation_db([(4.0, 60.0), (8.0, 68.0)], 6.0)
    # -10 dBm drive minus 63 dB line loss.
    watts = incident_power_w(-10.0, table, 6.0)
    assert watts == pytest.approx(10 ** ((-10.0 - 63.0 - 30.0) / 10.0))


def test_trace_validation():
    f = np.array([6.0, 6.1, 6.05, 6.2])
    with pytest.raises(ParameterDomainError, match="row 2"):
        SweepTrace(f, np.ones(4, dtype=complex))
    with pytest.raises(ParameterDomainError):
        SweepTrace(np.array([6.0, 6.1, 6.2]), np.ones(3), sweep_direction="sideways")


def test_normalize_trace():
    params = ResonanceParams(6.0, 1e5, 5e4)
    f = np.linspace(5.9995, 6.0005, 101)
    base = Baseline(g0=3.2, p0=0.4, p1=12.0, f_m=6.0)
    trace = SweepTrace(f, s21_model(params, base, f))
    normed = normalize_trace(trace)
    wings = np.r_[np.abs(normed.s21[:10]), np.abs(normed.s21[-10:])]
    assert np.median(wings) == pytest.approx(1.0, abs=1e-3)
    assert trace.s21[0] != normed.s21[0]  # input untouched
    with pytest.raises(PreprocessingError):
        normalize_trace(SweepTrace(f[:10], np.ones(10, dtype=complex)))
