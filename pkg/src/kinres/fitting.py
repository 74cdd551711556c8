"""Complex-valued nonlinear least squares and the extraction pipelines:
S21 trace -> resonance parameters, Q_int(<n>) -> power-loss parameters
with the critical-nonlinearity fit window, two-tone flux spectra ->
circuit parameters, and the frequency scan -> quasiparticle density.

The optimizer is a damped Gauss-Newton (Levenberg-Marquardt) iteration:
damping grows on rejected steps and shrinks on accepted ones; the
Jacobian is forward finite differences scaled per parameter unless an
analytic Jacobian is supplied.  Complex residuals are always stacked
into real and imaginary components by the callers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .circuits import CircuitSpec, CoupledSystemSpec, ResonatorMode, coupled_spectrum
from .constants import A_CRIT, H_UEV_PER_GHZ
from .errors import BifurcatedTraceError, FitError, NoResonanceError, ParameterDomainError
from .loss import PowerLossSpec, q_int_power
from .response import (
    Baseline,
    ResonanceParams,
    SweepTrace,
    normalize_trace,
    s21_model,
)

MAX_ITERATIONS = 500
COST_RTOL = 1e-10
STEP_RTOL = 1e-12
FD_STEP = 1e-7


@dataclass
class FitProblem:
    """Residual function with starting point, bounds and scales."""

    residual: Callable[[np.ndarray], np.ndarray]
    initial_guess: np.ndarray
    bounds: Optional[tuple] = None  # (lo, hi) arrays
    scale: Optional[np.ndarray] = None
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        x0 = np.asarray(self.initial_guess, dtype=float)
        self.initial_guess = x0
        if self.scale is None:
            self.scale = np.where(np.abs(x0) > 0, np.abs(x0), 1.0)
        else:
            self.scale = np.asarray(self.scale, dtype=float)
            if np.any(self.scale <= 0):
                raise ParameterDomainError("parameter scales must be positive")
        if self.bounds is not None:
            lo, hi = (np.asarray(b, dtype=float) for b in self.bounds)
            if np.any(x0 < lo) or np.any(x0 > hi):
                raise ParameterDomainError("initial guess outside bounds")
            self.bounds = (lo, hi)


@dataclass
class FitResult:
    parameters: np.ndarray
    covariance: Optional[np.ndarray]
    residual_norm: float
    converged: bool
    iterations: int
    diagnostics: list = field(default_factory=list)

    def uncertainties(self) -> Optional[np.ndarray]:
        if self.covariance is None:
            return None
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def _clip(x, bounds):
    if bounds is None:
        return x
    return np.clip(x, bounds[0], bounds[1])


def _fd_jacobian(residual, x, r0, scale, bounds):
    jac = np.empty((len(r0), len(x)))
    for k in range(len(x)):
        step = FD_STEP * scale[k]
        xk = x.copy()
        xk[k] += step
        if bounds is not None and xk[k] > bounds[1][k]:
            xk[k] = x[k] - step
            step = -step
        jac[:, k] = (residual(xk) - r0) / step
    return jac


def least_squares(problem: FitProblem) -> FitResult:
    """Minimize ||residual(x)||^2 with a damped Gauss-Newton iteration."""
    x = _clip(problem.initial_guess.copy(), problem.bounds)
    r = np.asarray(problem.residual(x), dtype=float)
    if len(r) < len(x):
        raise FitError("residual dimension smaller than parameter dimension")
    if not np.all(np.isfinite(r)):
        raise FitError("fit aborted: non-finite residual at initial guess")
    cost = float(r @ r)

    lam = 1e-3
    diagnostics = []
    converged = False
    iterations = 0
    jac = None

    while iterations < MAX_ITERATIONS:
        iterations += 1
        if problem.jacobian is not None:
            jac = np.asarray(problem.jacobian(x), dtype=float)
        else:
            jac = _fd_jacobian(problem.residual, x, r, problem.scale, problem.bounds)
        normal = jac.T @ jac
        grad = jac.T @ r
        damp_diag = np.maximum(np.diag(normal), 1e-14)

        accepted = False
        for _ in range(25):
            try:
                step = np.linalg.solve(normal + lam * np.diag(damp_diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = _clip(x + step, problem.bounds)
            r_new = np.asarray(problem.residual(x_new), dtype=float)
            if not np.all(np.isfinite(r_new)):
                lam *= 10.0
                continue
            cost_new = float(r_new @ r_new)
            if cost_new <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            converged = True  # no downhill direction left at this damping range
            diagnostics.append("terminated: no further decrease found")
            break

        step_norm = np.max(np.abs(x_new - x) / problem.scale)
        rel_drop = (cost - cost_new) / max(cost, 1e-300)
        x, r, cost = x_new, r_new, cost_new
        lam = max(lam / 3.0, 1e-14)
        if rel_drop < COST_RTOL or step_norm < STEP_RTOL:
            converged = True
            break

    residual_norm = float(np.sqrt(cost))
    covariance = None
    dof = len(r) - len(x)
    if converged:
        try:
            inv = np.linalg.inv(jac.T @ jac)
            sigma2 = cost / dof if dof > 0 else 0.0
            covariance = sigma2 * inv
        except np.linalg.LinAlgError:
            diagnostics.append("covariance unavailable: singular normal equations")
    if iterations >= MAX_ITERATIONS and not converged:
        diagnostics.append("iteration limit reached")

    return FitResult(x, covariance, residual_norm, converged, iterations, diagnostics)


# ---------------------------------------------------------------------------
# S21 trace fitting


def _initial_s21_guess(trace: SweepTrace):
    freqs, s21 = trace.frequencies, trace.s21
    dip = 1.0 - np.abs(s21)
    idx = int(np.argmax(dip))
    f0 = freqs[idx]
    depth = dip[idx]

    half = depth / 2.0
    above = dip >= half
    lo = idx
    while lo > 0 and above[lo - 1]:
        lo -= 1
    hi = idx
    while hi < len(freqs) - 1 and above[hi + 1]:
        hi += 1
    width = max(freqs[hi] - freqs[lo], freqs[1] - freqs[0])
    q_tot = f0 / width
    ratio = min(depth, 0.95)  # Q_tot/Q_ext from the dip depth
    q_ext = q_tot / ratio
    q_int = 1.0 / max(1.0 / q_tot - 1.0 / q_ext, 1e-12)
    return f0, q_int, q_ext


def _detect_jump(trace: SweepTrace):
    """Index of a bifurcation discontinuity, or None.

    A genuine jump is a single-sample step that towers over both the
    trace-wide median and its immediate neighborhood; a steep but smooth
    resonance has comparable adjacent steps and is not flagged.
    """
    steps = np.abs(np.diff(trace.s21))
    med = np.median(steps)
    if med <= 0:
        return None
    idx = int(np.argmax(steps))
    neighbors = np.r_[steps[max(0, idx - 3):idx], steps[idx + 1:idx + 4]]
    if steps[idx] > 10.0 * med and steps[idx] > 5.0 * neighbors.max():
        return idx
    return None


def fit_s21(trace: SweepTrace, allow_nonlinear: bool = False) -> dict:
    """Fit the nonlinear hanger model to one trace.

    Returns ``{"params": ResonanceParams, "baseline": Baseline,
    "result": FitResult}``.  The reported baseline refers to the trace as
    passed in (normalization is folded back into it).
    """
    norm = normalize_trace(trace)
    n = len(norm.frequencies)
    wings = np.zeros(n, dtype=bool)
    k = max(2, int(round(0.1 * n)))
    wings[:k] = True
    wings[-k:] = True
    noise = float(np.std(np.abs(norm.s21[wings])))
    depth = float(np.max(1.0 - np.abs(norm.s21)))
    if depth < 3.0 * max(noise, 1e-12):
        raise NoResonanceError(
            f"no resonance feature detected (dip {depth:.3g} < 3 x noise "
            f"{noise:.3g})"
        )

    mask = np.ones(n, dtype=bool)
    jump = _detect_jump(norm)
    if jump is not None:
        if not allow_nonlinear:
            raise BifurcatedTraceError(
                "trace shows a bifurcation discontinuity; refit with "
                "allow_nonlinear=True"
            )
        # The branch model reproduces the discontinuity itself; exclude
        # only its immediate vicinity, where a small mismatch in the fold
        # position would otherwise dominate the cost.
        mask[max(0, jump - 2):jump + 4] = False

    f0_g, q_int_g, q_ext_g = _initial_s21_guess(norm)
    f_m = float(np.median(norm.frequencies))
    fit_a = allow_nonlinear

    names = ["f0", "q_int", "q_ext", "x_a"] + (["a"] if fit_a else []) + [
        "g0", "g1", "g2", "p0", "p1"]
    x0 = [f0_g, q_int_g, q_ext_g, 0.0] + ([0.0] if fit_a else []) + [
        1.0, 0.0, 0.0, 0.0, 0.0]
    scale = [f0_g * 1e-4, q_int_g, q_ext_g, 0.01] + ([0.1] if fit_a else []) + [
        0.1, 0.1, 1.0, 0.1, 100.0]
    lo = [norm.frequencies[0], 1.0, 1.0, -1.0] + ([0.0] if fit_a else []) + [
        1e-6, -100.0, -1e4, -10.0, -1e6]
    hi = [norm.frequencies[-1], 1e12, 1e12, 1.0] + ([2.0] if fit_a else []) + [
        100.0, 100.0, 1e4, 10.0, 1e6]

    freqs = norm.frequencies[mask]
    data = norm.s21[mask]
    sweep = norm.sweep_direction

    def unpack(x):
        f0, q_int, q_ext, x_a = x[:4]
        a = x[4] if fit_a else 0.0
        g0, g1, g2, p0, p1 = x[-5:]
        params = ResonanceParams(f0, q_int, q_ext, x_a=x_a, a=a)
        base = Baseline(g0, g1, g2, p0, p1, f_m)
        return params, base

    def residual(x):
        params, base = unpack(x)
        model = s21_model(params, base, freqs, sweep_direction=sweep)
        diff = model - data
        return np.concatenate([diff.real, diff.imag])

    starts = [np.array(x0)]
    if jump is not None:
        # A visible jump means a > a_crit; the truncated segment also
        # biases the width-based guesses, so probe several nonlinearity
        # seeds and keep the best-scoring fit.
        for a_seed in (0.9 * A_CRIT, 1.5 * A_CRIT, 1.95 * A_CRIT):
            seeded = np.array(x0)
            seeded[4] = a_seed
            starts.append(seeded)

    result = None
    for start in starts:
        problem = FitProblem(residual, start,
                             bounds=(np.array(lo), np.array(hi)),
                             scale=np.array(scale))
        candidate = least_squares(problem)
        if result is None or candidate.residual_norm < result.residual_norm:
            result = candidate
    params, base = unpack(result.parameters)

    # Fold the normalization (gain scale, phase line) back so the baseline
    # describes the original trace: both corrections are representable in
    # the baseline parameterization exactly.
    mag_scale = np.median(np.abs(trace.s21[wings]))
    phase = np.unwrap(np.angle(trace.s21))
    slope, offset = np.polyfit(trace.frequencies[wings], phase[wings], 1)
    base = Baseline(
        g0=base.g0 * mag_scale,
        g1=base.g1 * mag_scale,
        g2=base.g2 * mag_scale,
        p0=base.p0 + offset + slope * f_m,
        p1=base.p1 + slope * f_m,
        f_m=f_m,
    )
    return {"params": params, "baseline": base, "result": result}


# ---------------------------------------------------------------------------
# Power-sweep (photon-number) fitting


@dataclass(frozen=True)
class PowerSweepPoint:
    mean_n: float
    q_int: float
    a: float = 0.0

    def __post_init__(self):
        if self.mean_n < 0:
            raise ParameterDomainError("mean photon number must be >= 0")


@dataclass(frozen=True)
class PowerSweepFitInput:
    points: Sequence[PowerSweepPoint]
    a_crit_fraction: float = 0.01


def fit_power_sweep(data: PowerSweepFitInput) -> dict:
    """Fit (Q0, beta, gamma) to 1/Q_int(<n>) inside the low-nonlinearity
    window a <= a_crit_fraction * a_crit.

    Returns ``{"spec": PowerLossSpec, "result": FitResult, "window": ...}``.
    """
    threshold = data.a_crit_fraction * A_CRIT
    window = sorted(
        (p for p in data.points if p.a <= threshold), key=lambda p: p.mean_n
    )
    if len(window) < 4:
        raise FitError(
            f"only {len(window)} points inside the a <= {threshold:.4g} window; "
            "need >= 4"
        )
    n_vals = np.array([p.mean_n for p in window])
    inv_q = np.array([1.0 / p.q_int for p in window])

    q0_guess = 1.0 / inv_q[np.argmin(n_vals)]
    beta_guess = max(inv_q.max() - inv_q.min(), 0.05 * inv_q.mean())
    positive = n_vals[n_vals > 0]
    gamma_guess = 1.0 / np.median(positive) if positive.size else 1.0
    inv_scale = inv_q.mean()

    def residual(x):
        spec = PowerLossSpec(q0=x[0], beta=x[1], gamma=x[2])
        return (1.0 / q_int_power(spec, n_vals) - inv_q) / inv_scale

    problem = FitProblem(
        residual,
        np.array([q0_guess, beta_guess, gamma_guess]),
        bounds=(np.array([1.0, 0.0, 0.0]), np.array([1e12, 1.0, 1e6])),
        scale=np.array([q0_guess, max(beta_guess, 1e-8), max(gamma_guess, 1e-6)]),
    )
    result = least_squares(problem)
    spec = PowerLossSpec(*result.parameters)

    err = result.uncertainties()
    if err is not None and spec.gamma > 0 and err[2] > spec.gamma:
        result.diagnostics.append("gamma poorly constrained by the sampled window")
    return {
        "spec": spec,
        "result": result,
        "window": (float(n_vals.min()), float(n_vals.max())),
        "points_used": len(window),
    }


# ---------------------------------------------------------------------------
# Two-tone spectrum fitting


@dataclass(frozen=True)
class SpectrumPoint:
    """One observed point: resonator branch or a qubit transition."""

    flux: float
    frequency: float
    kind: str = "qubit"  # "resonator" or "qubit"
    pair: Optional[tuple] = None  # (i, j) level pair; nearest branch if None
    sigma: float = 1e-3  # GHz


def fit_spectrum(
    observed: Sequence[SpectrumPoint],
    initial: CoupledSystemSpec,
    levels: int = 3,
    qubit_levels: int = 8,
    fit_couplings: bool = True,
) -> dict:
    """Fit circuit energies, bare mode frequencies and couplings to a
    flux-swept spectrum.

    Residuals are (model - observed)/sigma; observations with no model
    branch within 0.5 GHz are excluded with a diagnostic.
    """
    observed = list(observed)
    if fit_couplings and any(m.g is None for m in initial.modes):
        raise FitError("coupling fitting requires scalar g on every mode")
    n_free = 3 + len(initial.modes) * (2 if fit_couplings else 1)
    if len(observed) < n_free:
        raise FitError(f"{len(observed)} observations for {n_free} parameters")
    flux_points = np.array(sorted({p.flux for p in observed}))
    flux_index = {flux: k for k, flux in enumerate(flux_points)}
    dropped: list = []

    def build_spec(x):
        e_c, e_j, e_l = x[:3]
        modes = []
        for m, mode in enumerate(initial.modes):
            f_res = x[3 + m]
            g = x[3 + len(initial.modes) + m] if fit_couplings else mode.g
            modes.append(replace(mode, bare_frequency=f_res, g=g))
        qubit = replace(initial.qubit, e_c=e_c, e_j=e_j, e_l=e_l)
        return CoupledSystemSpec(qubit, tuple(modes))

    def residual(x):
        spec = build_spec(x)
        spectrum = coupled_spectrum(spec, levels=levels, flux_points=flux_points,
                                    qubit_levels=qubit_levels)
        res = []
        dropped.clear()
        for p in observed:
            k = flux_index[p.flux]
            if p.kind == "resonator":
                model_f = spectrum.dressed_resonator_freq[k]
            elif p.pair is not None:
                i, j = p.pair
                col = spectrum.labels.index((i, j))
                model_f = spectrum.transitions[k, col]
            else:
                cand = spectrum.transitions[k]
                model_f = cand[np.argmin(np.abs(cand - p.frequency))]
            if abs(model_f - p.frequency) > 0.5:
                # Zero residual keeps the vector length fixed across
                # evaluations; the point is reported as excluded.
                dropped.append(p)
                res.append(0.0)
                continue
            res.append((model_f - p.frequency) / p.sigma)
        if all(r == 0.0 for r in res):
            raise FitError("no observation within 0.5 GHz of any model branch")
        return np.asarray(res)

    x0 = [initial.qubit.e_c, initial.qubit.e_j, initial.qubit.e_l]
    x0 += [m.bare_frequency for m in initial.modes]
    if fit_couplings:
        x0 += [m.g for m in initial.modes]
    x0 = np.array(x0, dtype=float)
    lo = np.full_like(x0, 1e-3)
    hi = np.full_like(x0, 100.0)

    result = least_squares(FitProblem(residual, x0, bounds=(lo, hi)))
    if dropped:
        result.diagnostics.append(
            f"excluded {len(dropped)} unassignable observation(s) "
            "(no model branch within 0.5 GHz)"
        )
    return {"spec": build_spec(result.parameters), "result": result}


# ---------------------------------------------------------------------------
# Quasiparticle density from a frequency scan


def fit_xqp_frequency(points, alpha: float, delta: float) -> dict:
    """Linear two-parameter fit of 1/Q_int against the quasiparticle basis
    (alpha/pi) sqrt(2 Delta / h f).

    ``points`` is a sequence of (f0 GHz, low-power Q_int).  Returns
    x_qp and Q0 with their standard errors.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 3:
        raise FitError(">=3 (f0, Q_int) points required")
    f0, q = points[:, 0], points[:, 1]
    basis = alpha / np.pi * np.sqrt(2.0 * delta / (H_UEV_PER_GHZ * f0))
    design = np.column_stack([np.ones_like(f0), basis])
    y = 1.0 / q
    coef, res_sq, *_ = np.linalg.lstsq(design, y, rcond=None)
    inv_q0, x_qp = coef

    resid = design @ coef - y
    dof = len(y) - 2
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(design.T @ design)
    errs = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    diagnostics = []
    if x_qp < 0:
        diagnostics.append("fitted x_qp is negative (physically x_qp >= 0)")
    result = FitResult(coef, cov, float(np.linalg.norm(resid)), True, 1, diagnostics)
    q0 = np.inf if inv_q0 <= 0 else 1.0 / inv_q0
    return {
        "x_qp": float(x_qp),
        "x_qp_err": float(errs[1]),
        "q0": float(q0),
        "q0_err": float(errs[0] / inv_q0**2) if inv_q0 > 0 else np.inf,
        "result": result,
    }
