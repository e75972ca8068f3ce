"""Joint probabilities from two nearly simultaneous single-qubit measurements."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qla
from .errors import ConfigurationError, UndefinedConditionalError

CONDITIONAL_FLOOR = 1e-14
INDETERMINATE_ERR = 1e-14


@dataclass(frozen=True)
class MeasurementRecord:
    alpha: float
    beta2: float
    beta1: complex = 0.0
    delta_t: float = 0.0

    def __post_init__(self):
        if not (0 <= self.alpha <= 1 and 0 <= self.beta2 <= 1):
            raise ValueError("alpha and beta2 must lie in [0, 1]")
        if self.alpha + self.beta2 > 1 + 1e-10:
            raise ValueError("alpha + beta2 exceeds 1")
        if self.delta_t < 0:
            raise ValueError("delta_t must be non-negative")

    @classmethod
    def from_density(cls, rho: np.ndarray, delta_t: float = 0.0) -> "MeasurementRecord":
        rho = np.asarray(rho)
        return cls(float(rho[0, 0].real), float(rho[1, 1].real), complex(rho[0, 1]), delta_t)


def sequential_joint_prob_exact(rho: np.ndarray, h_eff: np.ndarray, delta_t: float,
                                first: int = 1) -> float:
    """P(first qubit reads 0, then the other reads 0 after ``delta_t``).

    Projects, renormalises, evolves the full post-measurement state under
    ``h_eff`` and projects again. Noise during ``delta_t`` is ignored.
    """
    if delta_t < 0:
        raise ConfigurationError("delta_t must be non-negative")
    if first not in (1, 2):
        raise ConfigurationError("first must be 1 or 2")
    rho = np.asarray(rho, dtype=complex)
    proj_first = qla.on_qubit(qla.P0, first)
    proj_second = qla.on_qubit(qla.P0, 3 - first)
    post = proj_first @ rho @ proj_first
    p_first = float(np.real(np.trace(post)))
    if p_first < CONDITIONAL_FLOOR:
        raise UndefinedConditionalError(f"qubit {first} is never found in |0> (p={p_first:.3g})")
    post /= p_first
    u = qla.expm_unitary(h_eff, delta_t)
    evolved = u @ post @ u.conj().T
    return p_first * float(np.real(np.trace(proj_second @ evolved)))


def sequential_joint_prob_closed(rec: MeasurementRecord, A: float, g: float) -> float:
    """alpha cos^2(g A dt) + beta2 sin^2(g dt)."""
    x = g * rec.delta_t
    return rec.alpha * math.cos(A * x) ** 2 + rec.beta2 * math.sin(x) ** 2


@dataclass(frozen=True)
class DelayError:
    err: float
    ratio: float
    indeterminate: bool = False


def delay_error_order(rho: np.ndarray, h_eff: np.ndarray, delta_t: float) -> DelayError:
    """Error of the delayed joint probability and its halving ratio err(dt)/err(dt/2).

    A ratio near 4 confirms quadratic growth in the delay. When either error
    is below 1e-14 the order cannot be resolved: ``indeterminate`` is set and
    ``ratio`` is NaN.
    """
    g = float(np.max(np.abs(qla.herm_eig(h_eff)[0])))
    if g * delta_t > 0.1 + 1e-12:
        raise ConfigurationError(f"g*delta_t = {g * delta_t:.3g} exceeds 0.1")
    base = sequential_joint_prob_exact(rho, h_eff, 0.0)
    err = abs(sequential_joint_prob_exact(rho, h_eff, delta_t) - base)
    half = abs(sequential_joint_prob_exact(rho, h_eff, 0.5 * delta_t) - base)
    if err < INDETERMINATE_ERR or half < INDETERMINATE_ERR:
        return DelayError(err, math.nan, indeterminate=True)
    return DelayError(err, err / half)
