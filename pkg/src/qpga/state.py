"""Dense statevector primitives.

States are plain complex numpy arrays of length ``2**n``. Qubits are numbered
from 1 and qubit 1 is the most significant bit of the basis index, so
``|q1 q2 ... qn>`` sits at index ``int("q1q2...qn", 2)``.

Functions here never mutate their inputs.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

UNITARY_TOL = 1e-8

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def num_qubits(state: np.ndarray) -> int:
    """Qubit count of a state (or batch of states along axis 1)."""
    dim = state.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"state length {dim} is not a power of two >= 2")
    return n


def basis_state(n_qubits: int, index: int = 0) -> np.ndarray:
    if n_qubits < 1:
        raise ValueError("n_qubits must be positive")
    if not 0 <= index < 2**n_qubits:
        raise ValueError(f"basis index {index} out of range for {n_qubits} qubits")
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def zero_state(n_qubits: int) -> np.ndarray:
    return basis_state(n_qubits, 0)


def from_bitstring(bits: str) -> np.ndarray:
    """``from_bitstring("01")`` is |01>, i.e. qubit 1 in |0> and qubit 2 in |1>."""
    return basis_state(len(bits), int(bits, 2))


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u, tol):
        raise ValueError("matrix is not unitary")
    return u


def _check_qubit(q: int, n: int) -> None:
    if not isinstance(q, (int, np.integer)) or not 1 <= q <= n:
        raise IndexError(f"qubit index {q} out of range 1..{n}")


def apply_gate(state: np.ndarray, u: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply a ``2**k x 2**k`` matrix to the listed (1-based) target qubits.

    ``targets[0]`` is the most significant qubit of ``u``'s own basis.
    Accepts a single state of shape ``(2**n,)`` or a batch ``(2**n, B)``.
    """
    state = np.asarray(state)
    n = num_qubits(state)
    targets = list(targets)
    k = len(targets)
    for q in targets:
        _check_qubit(q, n)
    if len(set(targets)) != k:
        raise ValueError(f"repeated target qubits {targets}")
    if u.shape != (2**k, 2**k):
        raise ValueError(f"gate of shape {u.shape} does not act on {k} qubits")

    batch = state.shape[1:]
    psi = state.reshape((2,) * n + batch)
    axes = [q - 1 for q in targets]
    out = np.tensordot(u.reshape((2,) * (2 * k)), psi, axes=(list(range(k, 2 * k)), axes))
    # tensordot puts the gate's output axes first; move them back into place
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(state.shape)


def apply_single_qubit(state: np.ndarray, qubit_index: int, u: np.ndarray) -> np.ndarray:
    u = check_unitary(u)
    if u.shape != (2, 2):
        raise ValueError("single-qubit gate must be 2x2")
    return apply_gate(state, u, [qubit_index])


def apply_cz(state: np.ndarray, i: int, j: int) -> np.ndarray:
    """Negate every amplitude with qubits ``i`` and ``j`` both set."""
    state = np.asarray(state)
    n = num_qubits(state)
    _check_qubit(i, n)
    _check_qubit(j, n)
    if i == j:
        raise ValueError("controlled-Z needs two distinct qubits")
    idx = np.arange(2**n)
    both = ((idx >> (n - i)) & 1) & ((idx >> (n - j)) & 1)
    sign = 1 - 2 * both
    if state.ndim == 2:
        sign = sign[:, None]
    return state * sign


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2, symmetric in its arguments bit for bit."""
    ov = inner(a, b)
    # |<a|b>|^2 == |<b|a>|^2 exactly since the two overlaps are conjugates
    return float(ov.real * ov.real + ov.imag * ov.imag)


def operator_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """Global-phase invariant trace fidelity |tr(u^dagger v)|^2 / d^2."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    d = u.shape[0]
    t = np.vdot(u, v)  # sum conj(u_ij) v_ij == tr(u^dagger v)
    return float(min(1.0, (t.real**2 + t.imag**2) / d**2))


def sample_random_state(n_qubits: int, rng: np.random.Generator | int) -> np.ndarray:
    """Random state: uniform magnitudes in [0, 1), renormalised, uniform phases."""
    rng = np.random.default_rng(rng)
    dim = 2**n_qubits
    mags = rng.random(dim)
    mags = mags / np.linalg.norm(mags)
    phases = rng.uniform(0.0, 2 * np.pi, dim)
    return mags * np.exp(1j * phases)


def sample_random_states(n_qubits: int, count: int, rng: np.random.Generator | int) -> np.ndarray:
    """Batch of ``count`` random states as columns, shape ``(2**n, count)``."""
    rng = np.random.default_rng(rng)
    dim = 2**n_qubits
    mags = rng.random((dim, count))
    mags = mags / np.linalg.norm(mags, axis=0)
    phases = rng.uniform(0.0, 2 * np.pi, (dim, count))
    return mags * np.exp(1j * phases)


def random_unitary(dim: int, rng: np.random.Generator | int) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    rng = np.random.default_rng(rng)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def embed(u: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    """Full ``2**n`` matrix of ``u`` acting on ``targets`` (Kronecker construction)."""
    targets = list(targets)
    k = len(targets)
    for q in targets:
        _check_qubit(q, n_qubits)
    if len(set(targets)) != k:
        raise ValueError(f"malformed target set {targets}")
    if u.shape != (2**k, 2**k):
        raise ValueError(f"gate of shape {u.shape} does not act on {k} qubits")
    rest = [q for q in range(1, n_qubits + 1) if q not in targets]
    full = np.kron(u, np.eye(2 ** len(rest)))
    # full acts on qubit order targets + rest; permute to natural order
    order = targets + rest
    perm = [order.index(q) for q in range(1, n_qubits + 1)]
    t = full.reshape((2,) * (2 * n_qubits))
    t = t.transpose(perm + [p + n_qubits for p in perm])
    return t.reshape(2**n_qubits, 2**n_qubits)


def compose(gates: Iterable[tuple[np.ndarray, Sequence[int]]], n_qubits: int) -> np.ndarray:
    """Multiply out a gate list in circuit order (first gate acts first)."""
    total = np.eye(2**n_qubits, dtype=complex)
    for u, targets in gates:
        u = check_unitary(u)
        total = embed(u, targets, n_qubits) @ total
    return total


def equal_up_to_phase(u: np.ndarray, v: np.ndarray) -> float:
    """Max-entry distance between ``u`` and ``v`` after removing their relative global phase."""
    u = np.asarray(u)
    v = np.asarray(v)
    t = np.vdot(v, u)
    phase = t / abs(t) if abs(t) > 0 else 1.0
    return float(np.max(np.abs(u - phase * v)))
