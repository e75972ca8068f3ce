import math

import numpy as np
import pytest

from acsense import qla
from acsense.dynamics import (
    _rk4_step,
    expect_M,
    m_curve_effective,
    m_curve_full,
    propagate,
    simulate_pulsed_noisy,
)
from acsense.errors import ConfigurationError, StepSizeError
from acsense.model import XX, ZSUM, PulseSequence, SensorParams, effective_hamiltonian, effective_model, \
    full_hamiltonian
from acsense.noise import OUParams
from acsense.series import TimeGrid

FIG = SensorParams(1.0, 1.0, 10.0)
QUIET = OUParams(0.0, 0.0, 50.0)


def max_dev(p, t1=10.0, n=1001):
    grid = TimeGrid.for_field(0, t1, n, p.omega)
    full = m_curve_full(p, grid)
    eff = m_curve_effective(p.replace(phi=0.0), grid)
    return float(np.max(np.abs(full.values - eff.values)))


def test_time_independent_matches_exponential():
    h = effective_hamiltonian(effective_model(FIG))
    grid = TimeGrid(0, 5, 51, 0.01)
    states = propagate(lambda t: h, qla.ket("00"), grid)
    for t, psi in zip(grid.times, states):
        np.testing.assert_allclose(psi, qla.expm_unitary(h, t) @ qla.ket("00"), atol=1e-8)


def test_zero_hamiltonian_is_identity():
    psi0 = np.array([0.5, 0.5j, -0.5, 0.5])
    states = propagate(lambda t: np.zeros((4, 4)), psi0, TimeGrid(0, 3, 7, 0.1))
    np.testing.assert_allclose(states, np.tile(psi0, (7, 1)), atol=1e-15)


def test_expect_M():
    assert expect_M(qla.ket("00")) == 1.0
    assert expect_M(qla.ket("11")) == -1.0
    rho = np.diag([0.3, 0.2, 0.1, 0.4])
    assert expect_M(rho) == pytest.approx(-0.1)
    m = effective_model(FIG)
    t = math.pi / 4 / (m.A * FIG.g)
    psi = qla.expm_unitary(effective_hamiltonian(m), t) @ qla.ket("00")
    assert expect_M(psi) == pytest.approx(0, abs=1e-12)


def test_effective_evolution_of_00():
    m = effective_model(FIG)
    for t in (0.3, 2.0, 9.1):
        psi = qla.expm_unitary(effective_hamiltonian(m), t) @ qla.ket("00")
        expect = math.cos(m.A * t) * qla.ket("00") - 1j * math.sin(m.A * t) * qla.ket("11")
        np.testing.assert_allclose(psi, expect, atol=1e-12)


def test_m_curve_effective_values():
    grid = TimeGrid(0, 2, 3, 0.1)
    m = m_curve_effective(FIG, grid).values
    assert m[0] == 1.0
    assert m[1] == pytest.approx(math.cos(1.9207964533191268), abs=1e-15)
    assert m[1] == pytest.approx(-0.343, abs=5e-4)
    np.testing.assert_allclose(m_curve_effective(FIG.replace(b=0.0), grid).values, np.cos(2 * grid.times))


def test_rk4_fourth_order_convergence():
    fn = lambda t: full_hamiltonian(FIG, t)  # noqa: E731
    T = 2.0

    def terminal(m):
        return propagate(fn, qla.ket("00"), TimeGrid(0, T, 2, T / m))[-1]

    h_coarse = 128  # T/128 is below period/40
    ref = terminal(4 * h_coarse)
    e1 = np.linalg.norm(terminal(h_coarse) - ref)
    e2 = np.linalg.norm(terminal(2 * h_coarse) - ref)
    assert 12 <= e1 / e2 <= 20


def test_norm_drift_small_with_mandated_step():
    grid = TimeGrid.for_field(0, 20, 201, FIG.omega)
    _, drift = propagate(lambda t: full_hamiltonian(FIG, t), qla.ket("00"), grid, return_drift=True)
    assert drift < 1e-8


def test_step_size_error_on_coarse_step():
    with pytest.raises(StepSizeError):
        propagate(lambda t: 50 * XX, qla.ket("00"), TimeGrid(0, 1, 2, 0.05))


def test_m_curve_full_requires_field_resolution():
    with pytest.raises(ConfigurationError):
        m_curve_full(FIG, TimeGrid(0, 1, 11, 0.05))


def test_validity_improves_with_frequency():
    errs = [max_dev(FIG.replace(omega=w)) for w in (10, 20, 40, 80)]
    assert errs[0] < 0.1
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_phase_independence():
    e0 = max_dev(FIG)
    e30 = max_dev(FIG.replace(phi=math.radians(30)))
    assert e30 <= 2 * e0


def _toggling_reference(p, seq, grid):
    """<M> from the toggling-frame Hamiltonian g XX + s(t) b cos(wt) Zsum, no pulses applied."""
    knots = grid.substeps(seq.x_times + seq.z_times)
    psi, out, k = qla.ket("00"), [1.0], 1

    def h(t, s):
        return p.g * XX + s * p.b * math.cos(p.omega * t) * ZSUM

    for a, b in zip(knots[:-1], knots[1:]):
        s = seq.sign(0.5 * (a + b))
        psi = _rk4_step(psi, h(a, s), h(0.5 * (a + b), s), h(b, s), b - a)
        psi = psi / np.linalg.norm(psi)
        if k < grid.n_samples and b == grid.times[k]:
            out.append(abs(psi[0]) ** 2 - abs(psi[3]) ** 2)
            k += 1
    return np.array(out)


def test_noiseless_pulsed_equals_toggling_frame():
    grid = TimeGrid.for_field(0, 8, 81, FIG.omega)
    seq = PulseSequence.periodic(2 * math.pi / FIG.omega, grid.t1)
    res = simulate_pulsed_noisy(FIG, seq, QUIET, grid, 1, 0)
    np.testing.assert_allclose(res.mean.values, _toggling_reference(FIG, seq, grid), atol=1e-12)


def test_noiseless_pulsed_overlays_effective_curve():
    grid = TimeGrid.for_field(0, 20, 201, FIG.omega)
    seq = PulseSequence.periodic(2 * math.pi / FIG.omega, grid.t1)
    res = simulate_pulsed_noisy(FIG, seq, QUIET, grid, 2, 0)
    ideal = m_curve_effective(FIG, grid).values
    assert np.sqrt(np.mean((res.mean.values - ideal) ** 2)) < 0.1
    np.testing.assert_array_equal(res.std_error.values, 0.0)
    # finite-frequency residual shrinks as omega grows
    p = FIG.replace(omega=40.0)
    grid40 = TimeGrid.for_field(0, 20, 201, p.omega)
    seq40 = PulseSequence.periodic(2 * math.pi / p.omega, grid40.t1)
    res40 = simulate_pulsed_noisy(p, seq40, QUIET, grid40, 1, 0)
    assert np.max(np.abs(res40.mean.values - m_curve_effective(p, grid40).values)) < 1e-2


def test_z_pulses_invisible_without_noise():
    grid = TimeGrid.for_field(0, 5, 51, FIG.omega)
    d = 2 * math.pi / FIG.omega
    with_z = simulate_pulsed_noisy(FIG, PulseSequence.periodic(d, 5), QUIET, grid, 1, 0)
    without_z = simulate_pulsed_noisy(FIG, PulseSequence.periodic(d, 5, z_pulses=False), QUIET, grid, 1, 0)
    # Z-pulse times only change the substep partition, so agreement is at RK4 accuracy
    np.testing.assert_allclose(with_z.mean.values, without_z.mean.values, rtol=0, atol=1e-7)


def test_noise_without_pulses_decays():
    grid = TimeGrid.for_field(0, 20, 101, FIG.omega)
    res = simulate_pulsed_noisy(FIG, PulseSequence(), OUParams(0, 0.2, 50), grid, 12, 7)
    ideal = m_curve_effective(FIG, grid).values
    late = grid.times > 10
    assert np.mean(np.abs(res.mean.values[late])) < 0.7 * np.mean(np.abs(ideal[late]))
    assert np.all(res.std_error.values >= 0)


def test_ensemble_deterministic_across_workers():
    grid = TimeGrid.for_field(0, 3, 31, FIG.omega)
    seq = PulseSequence.periodic(2 * math.pi / FIG.omega, grid.t1)
    ou = OUParams(0.0, 0.2, 50.0)
    serial = simulate_pulsed_noisy(FIG, seq, ou, grid, 5, 42, workers=1)
    again = simulate_pulsed_noisy(FIG, seq, ou, grid, 5, 42, workers=1)
    parallel = simulate_pulsed_noisy(FIG, seq, ou, grid, 5, 42, workers=3)
    assert serial.mean.values.tobytes() == again.mean.values.tobytes() == parallel.mean.values.tobytes()
    assert serial.std_error.values.tobytes() == parallel.std_error.values.tobytes()
    other = simulate_pulsed_noisy(FIG, seq, ou, grid, 5, 43)
    assert not np.array_equal(other.mean.values, serial.mean.values)


def test_ensemble_configuration_errors():
    grid = TimeGrid.for_field(0, 3, 31, FIG.omega)
    with pytest.raises(ConfigurationError):
        simulate_pulsed_noisy(FIG, PulseSequence((4.0,)), QUIET, grid, 1, 0)
    with pytest.raises(ConfigurationError):
        simulate_pulsed_noisy(FIG, PulseSequence(), QUIET, grid, 0, 0)
    with pytest.raises(ConfigurationError):
        simulate_pulsed_noisy(FIG, PulseSequence(), OUParams(0, 0.1, 0.05), grid, 1, 0)
