"""Dense complex linear algebra for one- and two-qubit operators.

Matrices are plain ``numpy`` arrays of shape (2, 2) or (4, 4). Basis
ordering for two qubits is |00>, |01>, |10>, |11> with qubit 1 as the left
Kronecker factor.
"""
from __future__ import annotations

import numpy as np

from .errors import ContractViolationError, InvalidDimensionError

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma_+ = (X + iY)/2 raises |1> -> |0> since |0> is the +1 eigenstate of Z
SP = 0.5 * (SX + 1j * SY)
SM = 0.5 * (SX - 1j * SY)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)

_JACOBI_SWEEPS = 50


def _check_dim(m: np.ndarray, allowed=(2, 4)) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in allowed:
        raise InvalidDimensionError(f"expected square matrix of size {allowed}, got shape {m.shape}")
    return m


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Two-qubit operator a (qubit 1) tensor b (qubit 2)."""
    a = _check_dim(a, (2,))
    b = _check_dim(b, (2,))
    return np.kron(a, b)


def on_qubit(op: np.ndarray, qubit: int) -> np.ndarray:
    """Embed a single-qubit operator acting on qubit 1 or 2."""
    if qubit == 1:
        return kron(op, I2)
    if qubit == 2:
        return kron(I2, op)
    raise InvalidDimensionError(f"qubit must be 1 or 2, got {qubit}")


def collective(op: np.ndarray) -> np.ndarray:
    """op on qubit 1 plus op on qubit 2."""
    return on_qubit(op, 1) + on_qubit(op, 2)


def ket(bits: str) -> np.ndarray:
    """Computational basis ket, e.g. ``ket("01")``."""
    if not bits or set(bits) - {"0", "1"} or len(bits) > 2:
        raise InvalidDimensionError(f"bad basis label {bits!r}")
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    return bool(np.max(np.abs(h - h.conj().T)) < tol)


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol)


def _require_hermitian(h: np.ndarray) -> np.ndarray:
    h = _check_dim(h)
    if not is_hermitian(h):
        raise ContractViolationError("matrix is not Hermitian")
    return h


def herm_eig(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns ``(eigenvalues, V)`` with eigenvalues ascending and eigenvectors
    as the columns of ``V``. Each eigenvector is rephased so that its
    largest-magnitude component (lowest index on ties) is real and positive.
    """
    a = _require_hermitian(h).copy()
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.max(np.abs(a)), 1e-300)

    for _ in range(_JACOBI_SWEEPS):
        off = np.sqrt(np.sum(np.abs(a - np.diag(np.diag(a))) ** 2))
        if off <= 1e-17 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                # phase on column q makes a[p, q] real, then a real symmetric Schur rotation
                phase = apq / mag
                app, aqq = a[p, p].real, a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                r = np.eye(n, dtype=complex)
                r[p, p] = c
                r[p, q] = s
                r[q, p] = -s * np.conj(phase)
                r[q, q] = c * np.conj(phase)
                a = r.conj().T @ a @ r
                a[p, q] = a[q, p] = 0.0
                v = v @ r

    evals = np.real(np.diag(a))
    order = np.argsort(evals, kind="stable")
    evals = evals[order]
    v = v[:, order]
    for k in range(n):
        col = v[:, k]
        mags = np.abs(col)
        idx = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
        v[:, k] = col * (abs(col[idx]) / col[idx])
    return evals, v


def expm_unitary(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian h, built from ``herm_eig``."""
    evals, v = herm_eig(h)
    return (v * np.exp(-1j * evals * t)) @ v.conj().T
