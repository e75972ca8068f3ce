"""Noise models: phenomenological decay, the two-qubit Lindblad solver with
T1/T2 extraction, and Ornstein-Uhlenbeck classical noise."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import qla
from .errors import ConfigurationError, DomainError, StepSizeError
from .estimation import ProbabilityVector
from .model import EffectiveModel, SensorParams, bessel_j, field_amplitude_factor
from .series import TimeGrid, TimeSeries

TRACE_TOL = 1e-8
HERM_TOL = 1e-10
POS_TOL = 1e-8
NO_DECAY_T = 1e6


@dataclass(frozen=True)
class PhenomNoise:
    """Relaxation (T1) and dephasing (T2) timescales; ``math.inf`` switches a channel off."""

    T1: float
    T2: float

    def __post_init__(self):
        if not (self.T1 > 0 and self.T2 > 0):
            raise ConfigurationError("T1 and T2 must be positive")

    def f1(self, t):
        return 0.5 * (1 + np.exp(-np.asarray(t, dtype=float) / self.T1))

    def f2(self, t):
        return np.exp(-np.asarray(t, dtype=float) / self.T2)

    def F(self, t):
        return self.f1(t) * self.f2(t)


@dataclass(frozen=True)
class LindbladParams:
    gamma1: float
    gamma2: float

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ConfigurationError("Lindblad rates must be non-negative")

    def collapse_operators(self) -> list[np.ndarray]:
        a, d = math.sqrt(self.gamma1), math.sqrt(self.gamma2)
        return [
            a * qla.on_qubit(qla.SM, 1),
            a * qla.on_qubit(qla.SM, 2),
            d * qla.on_qubit(qla.SZ, 1),
            d * qla.on_qubit(qla.SZ, 2),
        ]


@dataclass(frozen=True)
class OUParams:
    """dB = -(B - mu)/t_c dt + sigma sqrt(2/t_c) dW; stationary law N(mu, sigma^2)."""

    mu: float
    sigma: float
    t_c: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigurationError("sigma must be non-negative")
        if not self.t_c > 0:
            raise ConfigurationError("t_c must be positive")


# -- phenomenological noise ---------------------------------------------------

def noisy_probs(p: SensorParams, n: PhenomNoise, t: float) -> ProbabilityVector:
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    c = math.cos(2 * field_amplitude_factor(p) * p.g * t)
    f1, f2 = float(n.f1(t)), float(n.f2(t))
    plus = 0.5 * f1 * (1 + f2 * c)
    minus = 0.5 * f1 * (1 - f2 * c)
    return ProbabilityVector((1, 0, -1), [plus, 1 - plus - minus, minus],
                             {**p.as_dict(), "T1": n.T1, "T2": n.T2, "t": t})


def noise_factor(p: SensorParams, n: PhenomNoise, t):
    """Reduction factor F^2 sin^2(2Agt) / (f1 (1 - f2^2 cos^2(2Agt))), in [0, 1]."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be non-negative")
    x = 2 * field_amplitude_factor(p) * p.g * t
    f1, f2 = n.f1(t), n.f2(t)
    s2 = np.sin(x) ** 2
    # 1 - f2^2 cos^2 = sin^2 + (1 - f2^2) cos^2, avoiding cancellation near sin(x) = 0
    one_minus_f2sq = -np.expm1(-2 * t / n.T2)
    denom = f1 * (s2 + one_minus_f2sq * np.cos(x) ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (f1 * f2) ** 2 * s2 / denom
    # denominator vanishes only when f2 = 1 and sin(x) = 0; the ratio sin^2/(1 - cos^2) -> 1 there
    degenerate = denom <= 1e-300
    out = np.where(degenerate, np.where(t == 0, 0.0, f1 * f2 ** 2), out)
    return out if out.ndim else float(out)


def cfi_noisy_closed(p: SensorParams, n: PhenomNoise, t):
    """Fisher information of the three-outcome noisy measurement. Vectorised over ``t``."""
    j1 = bessel_j(1, 4 * p.b / p.omega)
    t_arr = np.asarray(t, dtype=float)
    out = (8 * p.g * t_arr / p.omega) ** 2 * j1 ** 2 * noise_factor(p, n, t_arr)
    return out if np.ndim(out) else float(out)


# -- Lindblad master equation -------------------------------------------------

def lindbladian(h: np.ndarray, ops) -> np.ndarray:
    """Superoperator acting on row-major vec(rho)."""
    d = h.shape[0]
    eye = np.eye(d)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c in ops:
        cdc = c.conj().T @ c
        sup += np.kron(c, c.conj()) - 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))
    return sup


def check_density(rho: np.ndarray, *, trace_tol: float = TRACE_TOL) -> None:
    """Raise StepSizeError unless rho (or a stack of them) is a valid density matrix."""
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - np.swapaxes(rho.conj(), -1, -2)))
    tr = np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1)
    if herm > HERM_TOL:
        raise StepSizeError(f"Hermiticity lost (deviation {herm:.3g}); reduce h")
    if np.max(tr) > trace_tol:
        raise StepSizeError(f"trace drift {np.max(tr):.3g}; reduce h")
    # eigvalsh is only a validity probe here; decompositions that feed results use qla.herm_eig
    lo = np.min(np.linalg.eigvalsh(0.5 * (rho + np.swapaxes(rho.conj(), -1, -2))))
    if lo < -POS_TOL:
        raise StepSizeError(f"positivity lost (min eigenvalue {lo:.3g}); reduce h")


def lindblad_solve(h_eff: np.ndarray, lp: LindbladParams, rho0: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """RK4 integration of the master equation; returns rho at every grid sample, shape (n, 4, 4)."""
    h_eff = np.asarray(h_eff, dtype=complex)
    if not qla.is_hermitian(h_eff):
        raise DomainError("Hamiltonian must be Hermitian")
    rho0 = np.asarray(rho0, dtype=complex)
    check_density(rho0)
    g_scale = float(np.max(np.abs(qla.herm_eig(h_eff)[0])))
    h_max = 0.01 / max(g_scale, lp.gamma1, lp.gamma2, 1.0)
    if grid.h > h_max * (1 + 1e-12):
        raise ConfigurationError(f"Lindblad substep h={grid.h} exceeds {h_max:g}")

    sup = lindbladian(h_eff, lp.collapse_operators())
    times = grid.times
    d = h_eff.shape[0]
    out = np.empty((times.size, d, d), dtype=complex)
    out[0] = rho0
    v = rho0.reshape(-1)
    eye = np.eye(d * d)
    # uniform sample spacing -> one RK4 propagator, applied substep by substep
    gap = times[1] - times[0]
    m = max(1, math.ceil(gap / grid.h - 1e-9))
    x = sup * (gap / m)
    step = eye + x @ (eye + x @ (eye / 2 + x @ (eye / 6 + x / 24)))
    for i in range(1, times.size):
        for _ in range(m):
            v = step @ v
        out[i] = v.reshape(d, d)
    check_density(out)
    return out


def decay_model(t, T1, T2, A, g, sign=+1):
    """(1/4)(1 + e^{-t/T1})(1 +/- e^{-t/T2} cos(2Agt))."""
    t = np.asarray(t, dtype=float)
    return 0.25 * (1 + np.exp(-t / T1)) * (1 + sign * np.exp(-t / T2) * np.cos(2 * A * g * t))


@dataclass(frozen=True)
class DecayFit:
    T1: float
    T2: float
    residual: float
    unbounded: bool = False


def fit_decay_times(p_plus: TimeSeries, p_minus: TimeSeries, model: EffectiveModel,
                    g: float | None = None) -> DecayFit:
    """Joint least-squares fit of T1, T2 to both populations with A and g fixed.

    Levenberg-Marquardt on rate parameters k = u^2 (so k = 0 is reachable),
    multi-started from a log-spaced grid of timescales in [1, 1e4]. A
    timescale beyond 1e6 is reported as ``unbounded`` with infinite T.
    """
    g = model.g if g is None else g
    if not np.array_equal(p_plus.times, p_minus.times):
        raise ValueError("p_plus and p_minus must share sample times")
    t = p_plus.times
    y = np.concatenate([np.real(p_plus.values), np.real(p_minus.values)])
    A = model.A

    def resid(u):
        k1, k2 = u[0] ** 2, u[1] ** 2
        env = 0.25 * (1 + np.exp(-k1 * t))
        osc = np.exp(-k2 * t) * np.cos(2 * A * g * t)
        return np.concatenate([env * (1 + osc), env * (1 - osc)]) - y

    best = None
    starts = np.logspace(0, 4, 5)
    for T1_0 in starts:
        for T2_0 in starts:
            sol = least_squares(resid, [T1_0 ** -0.5, T2_0 ** -0.5], method="lm",
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
            if best is None or sol.cost < best.cost:
                best = sol
    k1, k2 = float(best.x[0] ** 2), float(best.x[1] ** 2)
    rms = float(np.sqrt(np.mean(best.fun ** 2)))
    T1 = 1 / k1 if k1 > 0 else math.inf
    T2 = 1 / k2 if k2 > 0 else math.inf
    if T1 > NO_DECAY_T or T2 > NO_DECAY_T:
        return DecayFit(math.inf if T1 > NO_DECAY_T else T1,
                        math.inf if T2 > NO_DECAY_T else T2, rms, unbounded=True)
    return DecayFit(T1, T2, rms)


# -- Ornstein-Uhlenbeck noise ---------------------------------------------------

def ou_sample(ou: OUParams, times: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exact OU transition sampled at increasing ``times``; the first value is stationary."""
    times = np.asarray(times, dtype=float)
    xi = rng.standard_normal(times.size)
    out = np.empty(times.size)
    out[0] = ou.mu + ou.sigma * xi[0]
    decay = np.exp(-np.diff(times) / ou.t_c)
    spread = ou.sigma * np.sqrt(1 - decay ** 2)
    for k in range(1, times.size):
        out[k] = ou.mu + (out[k - 1] - ou.mu) * decay[k - 1] + spread[k - 1] * xi[k]
    return out


def ou_path(ou: OUParams, grid: TimeGrid, seed: int) -> TimeSeries:
    """One seeded OU realisation on the integrator substep times of ``grid``."""
    if grid.h > ou.t_c / 10 * (1 + 1e-12):
        raise ConfigurationError(f"substep h={grid.h} must not exceed t_c/10={ou.t_c / 10}")
    times = grid.substeps()
    vals = ou_sample(ou, times, np.random.default_rng(seed))
    return TimeSeries(times, vals, label="ou", params={"mu": ou.mu, "sigma": ou.sigma, "t_c": ou.t_c}, seed=seed)
