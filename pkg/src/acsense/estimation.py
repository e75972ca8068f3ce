"""Classical and quantum Fisher information for the noiseless scheme."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import qla
from .errors import InvalidModelError, InvalidStateError
from .model import (
    SensorParams,
    bessel_j,
    effective_hamiltonian,
    effective_model,
    field_amplitude_factor,
)

PROB_FLOOR = 1e-12
PROB_SLACK = 1e-9
PAIR_FLOOR = 1e-10
PSD_TOL = 1e-8


@dataclass
class ProbabilityVector:
    """Outcome probabilities keyed by measurement label (+1, -1 and optionally 0)."""

    labels: tuple
    values: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.labels) != self.values.shape[0]:
            raise ValueError("one probability per label required")

    def __getitem__(self, label) -> float:
        return float(self.values[self.labels.index(label)])

    def validate(self) -> "ProbabilityVector":
        v = self.values
        if np.any(v < -PROB_SLACK) or np.any(v > 1 + PROB_SLACK) or not np.all(np.isfinite(v)):
            raise InvalidModelError(f"probabilities out of range: {v}")
        if abs(v.sum() - 1) > 1e-12 * max(1, len(v)):
            raise InvalidModelError(f"probabilities sum to {v.sum()!r}")
        return self


def default_step(b: float) -> float:
    return 1e-5 * max(1.0, abs(b))


def probs_ideal(p: SensorParams, t: float) -> ProbabilityVector:
    """(p_+1, p_-1) = (cos^2(Agt), sin^2(Agt)); the field phase drops out."""
    x = field_amplitude_factor(p) * p.g * t
    c2 = math.cos(x) ** 2
    return ProbabilityVector((1, -1), [c2, 1.0 - c2], {**p.as_dict(), "t": t})


def cfi_closed(p: SensorParams, t):
    """(8 g t / omega)^2 J1(4b/omega)^2. Vectorised over ``t``."""
    j1 = bessel_j(1, 4 * p.b / p.omega)
    return (8 * p.g * np.asarray(t, dtype=float) / p.omega) ** 2 * j1 ** 2


def cfi_numeric(prob_fn: Callable[[float, float], ProbabilityVector], b: float, t: float,
                db: float | None = None) -> float:
    """Fisher information sum_n (d_b p_n)^2 / p_n with a central difference in b.

    Outcomes with p_n below 1e-12 contribute nothing.
    """
    db = default_step(b) if db is None else db
    if not db > 0:
        raise ValueError("db must be positive")
    p0 = prob_fn(b, t).validate()
    hi = prob_fn(b + db, t).validate()
    lo = prob_fn(b - db, t).validate()
    dp = (hi.values - lo.values) / (2 * db)
    keep = p0.values > PROB_FLOOR
    return float(np.sum(dp[keep] ** 2 / p0.values[keep]))


def ideal_state(p: SensorParams, t: float) -> np.ndarray:
    """exp(-i H_eff t)|00> for the noiseless effective model."""
    h = effective_hamiltonian(effective_model(p))
    return qla.expm_unitary(h, t) @ qla.ket("00")


def ideal_density(p: SensorParams, t: float) -> np.ndarray:
    psi = ideal_state(p, t)
    return np.outer(psi, psi.conj())


def qfi(rho_fn: Callable[[float], np.ndarray], b: float, db: float | None = None) -> float:
    """Quantum Fisher information 2 sum_kl |<k|d_b rho|l>|^2 / (r_k + r_l)."""
    db = default_step(b) if db is None else db
    rho = np.asarray(rho_fn(b), dtype=complex)
    evals, vecs = qla.herm_eig(0.5 * (rho + rho.conj().T))
    if evals[0] < -PSD_TOL or abs(evals.sum() - 1) > PSD_TOL:
        raise InvalidStateError(f"not a density matrix: eigenvalues {evals}")
    drho = (np.asarray(rho_fn(b + db)) - np.asarray(rho_fn(b - db))) / (2 * db)
    d = vecs.conj().T @ drho @ vecs
    denom = evals[:, None] + evals[None, :]
    mask = denom > PAIR_FLOOR
    return float(2 * np.sum(np.abs(d[mask]) ** 2 / denom[mask]))


def single_qubit_phase(p: SensorParams, t):
    """Phase 2b sin(omega t)/omega picked up by a single unpulsed qubit."""
    return 2 * p.b * np.sin(p.omega * np.asarray(t, dtype=float)) / p.omega


def single_qubit_pulsed_phase(p: SensorParams, n_pulses: int) -> float:
    """Relative phase of a single qubit with pi pulses at the field zeros omega t = pi/2, 3pi/2, ...

    Read out just after the n-th pulse, or at the first field zero when
    ``n_pulses == 0``. Each pulse swaps |0> and |1>, negating the phase
    accumulated so far; two pulses give 6b/omega.
    """
    if n_pulses < 0:
        raise ValueError("n_pulses must be non-negative")
    w = p.omega
    zeros = [(2 * k - 1) * math.pi / (2 * w) for k in range(1, max(n_pulses, 1) + 1)]
    edges = [0.0] + zeros
    phase = 0.0
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        if k > 0:
            phase = -phase
        phase += 2 * p.b * (math.sin(w * b) - math.sin(w * a)) / w
    if n_pulses > 0:
        phase = -phase
    return phase


def single_qubit_cfi(p: SensorParams, t):
    """4 sin^2(omega t) / omega^2, the unpulsed single-qubit Fisher information."""
    return 4 / p.omega ** 2 * np.sin(p.omega * np.asarray(t, dtype=float)) ** 2
