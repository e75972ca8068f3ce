"""Sensor Hamiltonians, Bessel coefficients and the pulsed field integral."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import qla
from .errors import ConfigurationError, DomainError, OutOfRangeError, UnsupportedOrderError

HIGH_FREQUENCY_RATIO = 5.0

XX = qla.kron(qla.SX, qla.SX)
YY = qla.kron(qla.SY, qla.SY)
ZSUM = qla.collective(qla.SZ)
PP = qla.kron(qla.SP, qla.SP)
MM = qla.kron(qla.SM, qla.SM)
FLIP_FLOP = qla.kron(qla.SP, qla.SM) + qla.kron(qla.SM, qla.SP)


class ValidityWarning(UserWarning):
    """Parameters lie outside the high-frequency regime of the effective model."""


@dataclass(frozen=True)
class SensorParams:
    """Coupling ``g``, field amplitude ``b``, angular frequency ``omega`` and phase ``phi`` (radians)."""

    g: float
    b: float
    omega: float
    phi: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ConfigurationError(f"omega must be positive, got {self.omega}")
        if self.g == 0:
            raise ConfigurationError("coupling g must be non-zero")

    @property
    def high_frequency(self) -> bool:
        return self.omega >= HIGH_FREQUENCY_RATIO * max(abs(self.g), abs(self.b))

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    def replace(self, **changes) -> "SensorParams":
        return SensorParams(**{**self.as_dict(), **changes})

    def as_dict(self) -> dict:
        return {"g": self.g, "b": self.b, "omega": self.omega, "phi": self.phi}


def _bessel_float(n: int, x: float) -> float:
    half = 0.5 * x
    term = half ** n / math.factorial(n)
    total = term
    k = 0
    while abs(term) >= 1e-18:
        k += 1
        term *= -(half * half) / (k * (k + n))
        total += term
    return total


def _bessel_exact(n: int, x: float) -> float:
    # float x is an exact rational, so summing exact terms avoids cancellation error
    half = Fraction(x) / 2
    h2 = half * half
    term = half ** n / math.factorial(n)
    total = term
    k = 0
    while abs(term) >= Fraction(1, 10 ** 18) or k < abs(x):
        k += 1
        term *= -h2 / (k * (k + n))
        total += term
    return float(total)


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind J_n(x) for n in {0, 1} and |x| <= 30."""
    if n not in (0, 1):
        raise UnsupportedOrderError(f"only orders 0 and 1 are supported, got {n}")
    x = float(x)
    if not abs(x) <= 30:
        raise OutOfRangeError(f"|x| must be <= 30, got {x}")
    if abs(x) <= 2:
        return _bessel_float(n, x)
    return _bessel_exact(n, x)


def field_amplitude_factor(p: SensorParams) -> float:
    """A = J0(4b/omega), the rescaling of the pair-creation coupling."""
    return bessel_j(0, 4 * p.b / p.omega)


def field_amplitude_slope(p: SensorParams) -> float:
    """dA/db = -(4/omega) J1(4b/omega)."""
    return -4 / p.omega * bessel_j(1, 4 * p.b / p.omega)


def full_hamiltonian(p: SensorParams, t: float) -> np.ndarray:
    """g XX + b cos(omega t + phi) (Z1 + Z2)."""
    return p.g * XX + p.b * math.cos(p.omega * t + p.phi) * ZSUM


@dataclass(frozen=True)
class EffectiveModel:
    A: float
    Phi: float
    g: float
    eigenvalues: np.ndarray = field(repr=False)
    eigenstates: np.ndarray = field(repr=False)  # columns |l1>..|l4>
    warning: str | None = None


def effective_model(p: SensorParams) -> EffectiveModel:
    """High-frequency effective model, eigenvalues ordered (Ag, -Ag, g, -g)."""
    A = field_amplitude_factor(p)
    Phi = 4 * p.b * math.sin(p.phi) / p.omega
    s = 1 / math.sqrt(2)
    e = np.exp(1j * Phi)
    k00, k01, k10, k11 = (qla.ket(b) for b in ("00", "01", "10", "11"))
    # the flip-flop sector carries no phase: <10|H|01> = g regardless of Phi
    states = np.column_stack([
        s * (k00 + e * k11),
        s * (k00 - e * k11),
        s * (k01 + k10),
        s * (k01 - k10),
    ])
    evals = np.array([A * p.g, -A * p.g, p.g, -p.g])
    warning = None
    if not p.high_frequency:
        warning = (f"omega={p.omega} is below {HIGH_FREQUENCY_RATIO:g}*max(g, b); "
                   "effective Hamiltonian may be inaccurate")
        warnings.warn(warning, ValidityWarning, stacklevel=2)
    return EffectiveModel(A=A, Phi=Phi, g=p.g, eigenvalues=evals, eigenstates=states, warning=warning)


def effective_hamiltonian(m: EffectiveModel, g: float | None = None) -> np.ndarray:
    """g [A e^{-i Phi} s+s+ + A e^{i Phi} s-s- + s+s- + s-s+].

    For Phi = 0 this equals (g/2)[(1 + A) XX + (1 - A) YY].
    """
    g = m.g if g is None else g
    c = m.A * np.exp(-1j * m.Phi)
    return g * (c * PP + np.conj(c) * MM + FLIP_FLOP)


@dataclass(frozen=True)
class PulseSequence:
    """Instantaneous X-pulse and Z-pulse times (both qubits at once)."""

    x_times: tuple = ()
    z_times: tuple = ()

    def __post_init__(self):
        for name in ("x_times", "z_times"):
            ts = tuple(float(t) for t in getattr(self, name))
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ConfigurationError(f"{name} must be strictly increasing")
            if ts and ts[0] < 0:
                raise ConfigurationError(f"{name} must be non-negative")
            object.__setattr__(self, name, ts)

    @classmethod
    def periodic(cls, delta_t: float, t_end: float, z_pulses: bool = True) -> "PulseSequence":
        """X pulses at n*delta_t and Z pulses at (n + 1/2)*delta_t for n = 1, 2, ... up to t_end."""
        if not delta_t > 0:
            raise ConfigurationError("pulse spacing must be positive")
        n_x = int(math.floor(t_end / delta_t + 1e-9))
        n_z = int(math.floor(t_end / delta_t - 0.5 + 1e-9))
        xs = tuple(n * delta_t for n in range(1, n_x + 1))
        zs = tuple((n + 0.5) * delta_t for n in range(1, n_z + 1)) if z_pulses else ()
        return cls(xs, zs)

    def n_x_before(self, t: float) -> int:
        return int(np.searchsorted(self.x_times, t, side="left"))

    def sign(self, t: float) -> int:
        """Toggling-frame sign s(t): +1 before the first X pulse, flipping at each one."""
        return -1 if self.n_x_before(t) % 2 else 1

    def is_resonant(self, omega: float) -> bool:
        for t in self.x_times:
            k = omega * t / math.pi
            if abs(k - round(k)) > 1e-9:
                return False
        return True


def _check_pulsed(p: SensorParams, t: float):
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    if p.phi != 0:
        raise DomainError("the pulsed field integral is defined for phi = 0")


def pulsed_field_integral(p: SensorParams, seq: PulseSequence, t: float) -> float:
    """C(t) = integral_0^t s(t') cos(omega t') dt' summed from pulse boundary terms."""
    _check_pulsed(p, t)
    n = seq.n_x_before(t)
    sign_last = -1.0 if n % 2 else 1.0
    return _boundary_sum(p, seq, n) + sign_last * math.sin(p.omega * t) / p.omega


def _boundary_sum(p: SensorParams, seq: PulseSequence, n: int) -> float:
    total = 0.0
    for k, tk in enumerate(seq.x_times[:n], start=1):
        total += (2.0 if k % 2 else -2.0) * math.sin(p.omega * tk) / p.omega
    return total


def pulse_phase(p: SensorParams, seq: PulseSequence, t: float) -> float:
    """phi_p(b, t): the part of b*C(t) contributed by X pulses applied before t."""
    _check_pulsed(p, t)
    return p.b * _boundary_sum(p, seq, seq.n_x_before(t))
