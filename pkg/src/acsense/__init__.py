"""Two-qubit sensing of high-frequency AC fields.

Exact and effective dynamics, Fisher information with and without noise,
Lindblad modelling with T1/T2 extraction, and dynamical decoupling under
Ornstein-Uhlenbeck noise.
"""
from .dynamics import EnsembleResult, expect_M, m_curve_effective, m_curve_full, propagate, simulate_pulsed_noisy
from .estimation import (
    ProbabilityVector,
    cfi_closed,
    cfi_numeric,
    probs_ideal,
    qfi,
    single_qubit_cfi,
    single_qubit_phase,
    single_qubit_pulsed_phase,
)
from .measurement import MeasurementRecord, delay_error_order, sequential_joint_prob_closed, sequential_joint_prob_exact
from .model import (
    EffectiveModel,
    PulseSequence,
    SensorParams,
    bessel_j,
    effective_hamiltonian,
    effective_model,
    full_hamiltonian,
    pulse_phase,
    pulsed_field_integral,
)
from .noise import (
    DecayFit,
    LindbladParams,
    OUParams,
    PhenomNoise,
    cfi_noisy_closed,
    fit_decay_times,
    lindblad_solve,
    noisy_probs,
    ou_path,
)
from .series import TimeGrid, TimeSeries

__version__ = "0.1.0"
