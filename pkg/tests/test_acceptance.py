"""Acceptance criteria, one test per criterion, each at its stated tolerance and time budget.

The terminal summary (see conftest.py) prints one PASS/FAIL line per criterion.
"""
import math
import time

import numpy as np
import pytest

from acsense import cli, qla
from acsense.dynamics import m_curve_effective, m_curve_full, simulate_pulsed_noisy
from acsense.estimation import cfi_closed, cfi_numeric, ideal_density, probs_ideal, qfi, single_qubit_cfi
from acsense.measurement import delay_error_order, sequential_joint_prob_exact
from acsense.model import PulseSequence, SensorParams, bessel_j, effective_hamiltonian, effective_model
from acsense.noise import (
    LindbladParams,
    OUParams,
    PhenomNoise,
    cfi_noisy_closed,
    decay_model,
    fit_decay_times,
    lindblad_solve,
    noisy_probs,
)
from acsense.series import TimeGrid, TimeSeries

FIG = SensorParams(1.0, 1.0, 10.0)
RHO00 = np.outer(qla.ket("00"), qla.ket("00")).astype(complex)


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def overlap_error(p):
    grid = TimeGrid.for_field(0, 10, 1001, p.omega)
    full = m_curve_full(p, grid).values
    eff = m_curve_effective(p.replace(phi=0.0), grid).values
    return float(np.max(np.abs(full - eff)))


@pytest.mark.criterion(1, "effective model overlaps the full dynamics and improves with omega")
def test_criterion_01_overlap():
    with Timer() as tm:
        errs = [overlap_error(FIG.replace(omega=w)) for w in (10, 20, 40, 80)]
    assert errs[0] < 0.1
    assert all(b < a for a, b in zip(errs, errs[1:])), errs
    assert tm.elapsed < 5


@pytest.mark.criterion(2, "closed-form Fisher information matches its definition")
def test_criterion_02_fisher_closed_vs_numeric():
    with Timer() as tm:
        rng = np.random.default_rng(2)
        for b, t in zip(rng.uniform(0.1, 2, 20), rng.uniform(0.1, 20, 20)):
            num = cfi_numeric(lambda bb, tt: probs_ideal(FIG.replace(b=bb), tt), b, t)
            assert num == pytest.approx(cfi_closed(FIG.replace(b=b), t), rel=1e-4)
        ref = 64 * bessel_j(1, 0.4) ** 2
        assert ref == pytest.approx(2.459, abs=5e-4)
        assert cfi_closed(FIG, 10.0) == pytest.approx(ref, rel=1e-12)
        num = cfi_numeric(lambda bb, tt: probs_ideal(FIG.replace(b=bb), tt), 1.0, 10.0, db=1e-5)
        assert num == pytest.approx(ref, rel=1e-4)
    assert tm.elapsed < 1


@pytest.mark.criterion(3, "quantum Fisher information equals the classical value (optimal measurement)")
def test_criterion_03_qfi_optimality():
    with Timer() as tm:
        for t in (1.0, 5.0, 10.0, 20.0):
            val = qfi(lambda b: ideal_density(FIG.replace(b=b), t), 1.0)
            assert val == pytest.approx(cfi_closed(FIG, t), rel=1e-4)
    assert tm.elapsed < 1


@pytest.mark.criterion(4, "single-qubit Fisher bound 0.04 versus two-qubit value above 2")
def test_criterion_04_single_vs_two_qubit():
    ts = np.linspace(0, 100, 1_000_001)
    assert np.all(single_qubit_cfi(FIG, ts) <= 4 / FIG.omega ** 2 + 1e-15)
    assert 4 / FIG.omega ** 2 == pytest.approx(0.04)
    assert cfi_closed(FIG, 10.0) > 2


@pytest.mark.criterion(5, "phase independence of the effective description at 30 degrees")
def test_criterion_05_phase_independence():
    with Timer() as tm:
        e0 = overlap_error(FIG)
        e30 = overlap_error(FIG.replace(phi=math.radians(30)))
    assert e30 <= 2 * e0
    assert tm.elapsed < 5


@pytest.mark.criterion(6, "noisy Fisher zeros, maxima ordering and closed/numeric agreement")
def test_criterion_06_noisy_fisher():
    with Timer() as tm:
        good, bad = PhenomNoise(300, 200), PhenomNoise(200, 100)
        A = effective_model(FIG).A
        for n in (good, bad):
            for k in range(1, 60):
                assert cfi_noisy_closed(FIG, n, k * math.pi / (2 * A)) == pytest.approx(0, abs=1e-10)
        ts = np.linspace(0, 300, 300001)
        cg, cb = cfi_noisy_closed(FIG, good, ts), cfi_noisy_closed(FIG, bad, ts)
        assert cg.max() > cb.max()
        assert ts[np.argmax(cb)] < ts[np.argmax(cg)]
        rng = np.random.default_rng(6)
        for n in (good, bad):
            for b, t in zip(rng.uniform(0.1, 2, 10), rng.uniform(0.5, 300, 10)):
                num = cfi_numeric(lambda bb, tt: noisy_probs(FIG.replace(b=bb), n, tt), b, t)
                assert num == pytest.approx(cfi_noisy_closed(FIG.replace(b=b), n, t), rel=1e-4)
    assert tm.elapsed < 1


@pytest.mark.criterion(7, "Lindblad decay fit gives T1 near 50 and T2 near 10; synthetic round trip")
def test_criterion_07_lindblad_fit():
    with Timer() as tm:
        model = effective_model(FIG)
        grid = TimeGrid(0, 150, 1501, 0.01)
        rhos = lindblad_solve(effective_hamiltonian(model), LindbladParams(0.01, 0.05), RHO00, grid)
        drift = np.max(np.abs(np.trace(rhos, axis1=1, axis2=2) - 1))
        fit = fit_decay_times(TimeSeries(grid.times, rhos[:, 0, 0].real),
                              TimeSeries(grid.times, rhos[:, 3, 3].real), model)
        t = grid.times
        syn = fit_decay_times(TimeSeries(t, decay_model(t, 80, 25, model.A, 1.0, +1)),
                              TimeSeries(t, decay_model(t, 80, 25, model.A, 1.0, -1)), model)
    assert drift < 1e-8
    assert fit.T1 == pytest.approx(50, rel=0.2)
    assert fit.T2 == pytest.approx(10, rel=0.2)
    assert syn.T1 == pytest.approx(80, rel=0.01)
    assert syn.T2 == pytest.approx(25, rel=0.01)
    assert tm.elapsed < 30


@pytest.mark.criterion(8, "pulses cut the RMS noise deviation below 0.35 of the unpulsed value")
def test_criterion_08_ou_pulses():
    with Timer() as tm:
        ou = OUParams(0.0, 0.2, 50.0)
        grid = TimeGrid.for_field(0, 20, 201, FIG.omega)
        seq = PulseSequence.periodic(2 * math.pi / FIG.omega, grid.t1)
        ideal = m_curve_effective(FIG, grid).values
        bare = simulate_pulsed_noisy(FIG, PulseSequence(), ou, grid, 50, 0)
        pulsed = simulate_pulsed_noisy(FIG, seq, ou, grid, 50, 0)
        rms_bare = np.sqrt(np.mean((bare.mean.values - ideal) ** 2))
        rms_pulsed = np.sqrt(np.mean((pulsed.mean.values - ideal) ** 2))
    print(f"rms_unpulsed={rms_bare:.4f} rms_pulsed={rms_pulsed:.4f} ratio={rms_pulsed / rms_bare:.4f}")
    assert tm.elapsed < 120
    assert rms_pulsed < 0.35 * rms_bare, f"ratio {rms_pulsed / rms_bare:.3f}"


@pytest.mark.criterion(9, "delayed joint measurement error is quadratic in g*dt")
def test_criterion_09_delay_order():
    with Timer() as tm:
        h = effective_hamiltonian(effective_model(FIG))
        grid = TimeGrid(0, 40, 9, 0.01)
        states = lindblad_solve(h, LindbladParams(0.01, 0.05), RHO00, grid)[1:]
        for rho in states:
            for gdt in (0.1, 0.05, 0.025):
                assert 3.5 <= delay_error_order(rho, h, gdt).ratio <= 4.5
            assert abs(sequential_joint_prob_exact(rho, h, 0.0) - rho[0, 0].real) <= 1e-12
    assert tm.elapsed < 5


@pytest.mark.criterion(10, "stochastic output is byte-identical across reruns and worker counts")
def test_criterion_10_determinism(tmp_path):
    base = cli.resolve_config("ou-pulses", {"t1": 5.0, "n_samples": 51, "n_traj": 8, "seed": 11})
    outputs = []
    for label, workers in (("a", 1), ("b", 1), ("c", 4)):
        cli.run({**base, "workers": workers}, tmp_path / label)
        outputs.append((tmp_path / label / "ou-pulses.csv").read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
