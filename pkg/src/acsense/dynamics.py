"""Exact and effective two-qubit time evolution, including the noisy pulsed ensemble."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import qla
from .errors import ConfigurationError, StepSizeError
from .model import XX, ZSUM, PulseSequence, SensorParams, field_amplitude_factor
from .noise import OUParams, ou_sample
from .series import TimeGrid, TimeSeries

NORM_STEP_TOL = 1e-6

M_OBS = np.diag([1.0, 0.0, 0.0, -1.0]).astype(complex)
X_PULSE = qla.kron(-1j * qla.SX, -1j * qla.SX)  # exp(-i pi X/2) on both qubits
Z_PULSE = qla.kron(-1j * qla.SZ, -1j * qla.SZ)
NOISE_OPS = (qla.collective(qla.SX), qla.collective(qla.SY), qla.collective(qla.SZ))


def _rk4_step(psi, h_start, h_mid, h_end, dt):
    k1 = -1j * (h_start @ psi)
    k2 = -1j * (h_mid @ (psi + 0.5 * dt * k1))
    k3 = -1j * (h_mid @ (psi + 0.5 * dt * k2))
    k4 = -1j * (h_end @ (psi + dt * k3))
    return psi + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _renormalize(psi):
    norm = np.linalg.norm(psi)
    drift = abs(norm - 1.0)
    if drift > NORM_STEP_TOL:
        raise StepSizeError(f"norm drift {drift:.3g} in one substep; reduce h")
    return psi / norm, drift


def propagate(hamiltonian_fn: Callable[[float], np.ndarray], psi0: np.ndarray, grid: TimeGrid,
              *, return_drift: bool = False):
    """RK4 solution of i dpsi/dt = H(t) psi, renormalised after every substep.

    Returns the states at ``grid.times`` as an array of shape (n_samples, dim);
    with ``return_drift`` also the largest pre-normalisation norm error.
    """
    psi = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise ValueError("initial state must be normalised")
    times = grid.times
    out = np.empty((times.size, psi.size), dtype=complex)
    out[0] = psi
    max_drift = 0.0
    knots = grid.substeps()
    sample_idx = 1
    h_start = hamiltonian_fn(knots[0])
    for a, b in zip(knots[:-1], knots[1:]):
        dt = b - a
        h_end = hamiltonian_fn(b)
        psi = _rk4_step(psi, h_start, hamiltonian_fn(a + 0.5 * dt), h_end, dt)
        psi, drift = _renormalize(psi)
        max_drift = max(max_drift, drift)
        h_start = h_end
        if sample_idx < times.size and b == times[sample_idx]:
            out[sample_idx] = psi
            sample_idx += 1
    if return_drift:
        return out, max_drift
    return out


def expect_M(state: np.ndarray) -> float:
    """<M> for M = |00><00| - |11><11|, from a ket or a density matrix."""
    state = np.asarray(state)
    if state.shape[-1] != 4:
        raise ValueError("expect_M needs a two-qubit state")
    if state.ndim == 1:
        return float(abs(state[0]) ** 2 - abs(state[3]) ** 2)
    return float(np.real(state[0, 0] - state[3, 3]))


def m_from_states(states: np.ndarray) -> np.ndarray:
    return np.abs(states[:, 0]) ** 2 - np.abs(states[:, 3]) ** 2


def m_curve_full(p: SensorParams, grid: TimeGrid) -> TimeSeries:
    """<M(t)> from |00> under the exact time-dependent Hamiltonian."""
    if p.b != 0 and not grid.resolves_field(p.omega):
        raise ConfigurationError("substep h must resolve the field period (>= 40 substeps)")
    b_field = p.b * ZSUM
    gxx = p.g * XX
    states = propagate(lambda t: gxx + math.cos(p.omega * t + p.phi) * b_field, qla.ket("00"), grid)
    return TimeSeries(grid.times, m_from_states(states), label="m_full", params=p.as_dict())


def m_curve_effective(p: SensorParams, grid: TimeGrid) -> TimeSeries:
    """cos(2 A g t)."""
    A = field_amplitude_factor(p)
    return TimeSeries(grid.times, np.cos(2 * A * p.g * grid.times), label="m_effective", params=p.as_dict())


@dataclass
class EnsembleResult:
    mean: TimeSeries
    std_error: TimeSeries
    n_traj: int
    base_seed: int


def _check_pulses(seq: PulseSequence, grid: TimeGrid):
    for t in seq.x_times + seq.z_times:
        if t < grid.t0 or t > grid.t1:
            raise ConfigurationError(f"pulse at t={t} lies outside [{grid.t0}, {grid.t1}]")


def _trajectory(p: SensorParams, seq: PulseSequence, ou: OUParams, grid: TimeGrid, seed: int) -> np.ndarray:
    """Toggling-frame <M> at the grid samples for one noise realisation."""
    rng = np.random.default_rng(seed)
    knots = grid.substeps(seq.x_times + seq.z_times)
    starts, dts = knots[:-1], np.diff(knots)
    # one independent OU path per field component, held constant over each substep
    fields = [ou_sample(ou, starts, rng) for _ in NOISE_OPS]
    noise = sum(f[:, None, None] * op for f, op in zip(fields, NOISE_OPS))
    drive = p.g * XX
    bz = p.b * ZSUM

    def h_at(t):
        return drive + np.cos(p.omega * t + p.phi)[:, None, None] * bz

    h0 = h_at(starts) + noise
    hm = h_at(starts + 0.5 * dts) + noise
    h1 = h_at(knots[1:]) + noise

    events = {}
    for t in seq.x_times:
        events.setdefault(t, []).append(X_PULSE)
    for t in seq.z_times:
        events.setdefault(t, []).append(Z_PULSE)
    event_at = {int(np.searchsorted(knots, t)): ops for t, ops in events.items()}

    times = grid.times
    out = np.empty(times.size)
    frame = np.eye(4, dtype=complex)  # product of pulses applied so far
    obs = M_OBS
    psi = qla.ket("00")
    out[0] = 1.0
    sample_idx = 1
    for k in range(dts.size):
        psi = _rk4_step(psi, h0[k], hm[k], h1[k], dts[k])
        psi, _ = _renormalize(psi)
        ops = event_at.get(k + 1)
        if ops:
            for u in sorted(ops, key=lambda u: u is Z_PULSE):
                psi = u @ psi
                frame = u @ frame
            obs = frame @ M_OBS @ frame.conj().T
        if sample_idx < times.size and knots[k + 1] == times[sample_idx]:
            out[sample_idx] = np.real(np.vdot(psi, obs @ psi))
            sample_idx += 1
    return out


def _trajectory_job(args):
    return _trajectory(*args)


def simulate_pulsed_noisy(p: SensorParams, seq: PulseSequence, ou: OUParams, grid: TimeGrid,
                          n_traj: int, base_seed: int, workers: int = 1) -> EnsembleResult:
    """Average toggling-frame <M(t)> over ``n_traj`` noise realisations.

    Trajectory i uses seed ``base_seed + i``; results are reduced in index
    order, so the output does not depend on ``workers``.
    """
    if n_traj < 1:
        raise ConfigurationError("n_traj must be at least 1")
    if not grid.resolves_field(p.omega):
        raise ConfigurationError("substep h must resolve the field period (>= 40 substeps)")
    if grid.h > ou.t_c / 10 * (1 + 1e-12):
        raise ConfigurationError("substep h must resolve the noise correlation time (h <= t_c/10)")
    _check_pulses(seq, grid)
    jobs = [(p, seq, ou, grid, base_seed + i) for i in range(n_traj)]
    if workers > 1 and n_traj > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            curves = list(pool.map(_trajectory_job, jobs))
    else:
        curves = [_trajectory_job(j) for j in jobs]
    stack = np.stack(curves)
    mean = stack.mean(axis=0)
    if n_traj > 1:
        sem = stack.std(axis=0, ddof=1) / math.sqrt(n_traj)
    else:
        sem = np.zeros_like(mean)
    meta = {**p.as_dict(), "mu": ou.mu, "sigma": ou.sigma, "t_c": ou.t_c,
            "n_x_pulses": len(seq.x_times), "n_z_pulses": len(seq.z_times)}
    return EnsembleResult(
        mean=TimeSeries(grid.times, mean, label="m_toggling_mean", params=meta, seed=base_seed),
        std_error=TimeSeries(grid.times, sem, label="m_toggling_sem", params=meta, seed=base_seed),
        n_traj=n_traj,
        base_seed=base_seed,
    )
