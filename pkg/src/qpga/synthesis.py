"""Exact compilation of states and operators into lattice-ready circuits.

State preparation walks the binary tree of partial norms and emits one
controlled rotation per nonzero branch. Operators are reduced to a diagonal
by Givens rotations between Gray-code neighbours, so each rotation becomes a
fully controlled single-qubit gate. :func:`lower_to_lattice` then rewrites
everything into single-qubit gates and nearest-neighbour controlled-Z.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qpga import state as qs
from qpga.circuit import Circuit, CZGate, MultiControlled, SingleQubit
from qpga.lattice import euler_zyz, rot_y, rot_z

ZERO_TOL = 1e-14


def gray_index(j: int) -> int:
    """j-th word of the reflected binary code."""
    if j < 0:
        raise ValueError("gray_index needs j >= 0")
    return j ^ (j >> 1)


# ---------------------------------------------------------------------------
# state preparation

def projection_table(psi: np.ndarray) -> dict[str, float]:
    """Norm of the projection of ``psi`` onto every prefix bit string (empty prefix included)."""
    psi = np.asarray(psi, dtype=complex)
    n = qs.num_qubits(psi)
    probs = np.abs(psi) ** 2
    table = {"": float(np.sqrt(probs.sum()))}
    for k in range(1, n + 1):
        block = probs.reshape(2**k, -1).sum(axis=1)
        for x, p in enumerate(block):
            table[format(x, f"0{k}b")] = float(np.sqrt(p))
    return table


def _is_identity(u: np.ndarray) -> bool:
    return bool(np.max(np.abs(u - np.eye(2))) < ZERO_TOL * 100)


def _drop_controls(prefix: str, table: dict[str, float]) -> tuple[tuple[int, int], ...]:
    """Controls (qubit, polarity) for a rotation on branch ``prefix``.

    Starting with the qubit farthest from the target, a control is dropped
    when every other branch it would then also fire on carries no amplitude.
    """
    k = len(prefix)
    kept = list(range(k))
    live = [x for x in (format(v, f"0{k}b") for v in range(2**k)) if x != prefix and table[x] > ZERO_TOL]
    for pos in range(k):
        trial = [c for c in kept if c != pos]
        if not any(all(x[c] == prefix[c] for c in trial) for x in live):
            kept = trial
    return tuple((c + 1, int(prefix[c])) for c in kept)


def prepare_state_circuit(target: np.ndarray) -> Circuit:
    """Circuit mapping |0...0> to ``target`` exactly (global phase included)."""
    psi = np.asarray(target, dtype=complex)
    n = qs.num_qubits(psi)
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise ValueError("target state is not normalised")
    table = projection_table(psi)
    circ = Circuit(n)
    for k in range(n):
        for v in range(2**k):
            x = format(v, f"0{k}b") if k else ""
            xi = table[x]
            if xi <= ZERO_TOL:
                continue
            if k == n - 1:
                a, b = psi[2 * v] / xi, psi[2 * v + 1] / xi
                u = np.array([[a, -np.conj(b)], [b, np.conj(a)]])
            else:
                c, s = table[x + "0"] / xi, table[x + "1"] / xi
                u = np.array([[c, -s], [s, c]], dtype=complex)
            if _is_identity(u):
                continue
            controls = _drop_controls(x, table)
            if controls:
                circ.append(MultiControlled(controls, k + 1, u))
            else:
                circ.append(SingleQubit(k + 1, u))
    return circ


# ---------------------------------------------------------------------------
# Givens reduction

@dataclass(frozen=True)
class GivensRotation:
    """Rotation on basis vectors (m, n) with block [[e^{i phi} cos, -sin], [e^{i phi} sin, cos]]."""

    m: int
    n: int
    theta: float
    phi: float

    def block(self) -> np.ndarray:
        c, s = np.cos(self.theta), np.sin(self.theta)
        e = np.exp(1j * self.phi)
        return np.array([[e * c, -s], [e * s, c]])

    def matrix(self, dim: int) -> np.ndarray:
        g = np.eye(dim, dtype=complex)
        idx = [self.m, self.n]
        g[np.ix_(idx, idx)] = self.block()
        return g

    def apply_left(self, u: np.ndarray) -> np.ndarray:
        out = u.copy()
        out[[self.m, self.n], :] = self.block() @ u[[self.m, self.n], :]
        return out


def givens_decompose(u: np.ndarray) -> tuple[list[GivensRotation], np.ndarray]:
    """Rotations G_1..G_K and phases d with G_K ... G_1 u = diag(d).

    Columns are cleared left to right; in each column rows are nulled from
    the bottom up against the row just above.
    """
    u = qs.check_unitary(u)
    dim = u.shape[0]
    if dim & (dim - 1):
        raise ValueError("dimension must be a power of two")
    work = u.copy()
    rots: list[GivensRotation] = []
    for col in range(dim - 1):
        for m in range(dim - 1, col, -1):
            n = m - 1
            xm, xn = work[m, col], work[n, col]
            if abs(xm) <= ZERO_TOL:
                continue
            if abs(xn) <= ZERO_TOL:
                g = GivensRotation(m, n, np.pi / 2, 0.0)
            else:
                g = GivensRotation(m, n, float(np.arctan2(abs(xm), abs(xn))), float(np.angle(xn) - np.angle(xm)))
            work = g.apply_left(work)
            work[m, col] = 0.0
            rots.append(g)
    return rots, np.diag(work).copy()


def givens_reconstruct(rots: list[GivensRotation], phases: np.ndarray) -> np.ndarray:
    dim = len(phases)
    out = np.diag(phases).astype(complex)
    for g in reversed(rots):
        out = g.matrix(dim).conj().T @ out
    return out


def _pair_gate(a: int, b: int, block: np.ndarray, n: int):
    """Gate acting as ``block`` on basis states (a, b) that differ in one bit."""
    diff = a ^ b
    if diff & (diff - 1):
        raise ValueError("basis states must differ in exactly one bit")
    pos = n - diff.bit_length()  # 0-based qubit
    u = np.empty((2, 2), dtype=complex)
    ia, ib = (a >> (n - 1 - pos)) & 1, (b >> (n - 1 - pos)) & 1
    u[ia, ia], u[ia, ib] = block[0, 0], block[0, 1]
    u[ib, ia], u[ib, ib] = block[1, 0], block[1, 1]
    controls = tuple((q + 1, (a >> (n - 1 - q)) & 1) for q in range(n) if q != pos)
    if controls:
        return MultiControlled(controls, pos + 1, u)
    return SingleQubit(pos + 1, u)


def operator_circuit(u: np.ndarray) -> Circuit:
    """Circuit of fully controlled single-qubit gates equal to ``u`` (global phase tracked)."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    if u.ndim != 2 or dim != u.shape[1] or dim < 2 or dim & (dim - 1):
        raise ValueError("operator dimension must be a power of two")
    u = qs.check_unitary(u)
    n = dim.bit_length() - 1
    gray = np.array([gray_index(j) for j in range(dim)])
    rots, phases = givens_decompose(u[np.ix_(gray, gray)])
    global_phase = float(np.angle(phases[0]))
    d = phases * np.exp(-1j * global_phase)
    circ = Circuit(n, global_phase=global_phase)
    # the diagonal acts first, one controlled phase pair per value of qubits 1..n-1
    full = np.empty(dim, dtype=complex)
    full[gray] = d
    for k in range(dim // 2):
        block = np.diag(full[2 * k : 2 * k + 2])
        if _is_identity(block):
            continue
        circ.append(_pair_gate(2 * k, 2 * k + 1, block, n))
    for g in reversed(rots):
        circ.append(_pair_gate(int(gray[g.m]), int(gray[g.n]), g.block().conj().T, n))
    return circ


# ---------------------------------------------------------------------------
# lowering to single-qubit gates and adjacent cz

def sqrt_unitary(u: np.ndarray) -> np.ndarray:
    """A unitary square root of a 2x2 unitary."""
    gamma = np.angle(np.linalg.det(u)) / 2
    s = u * np.exp(-1j * gamma)  # SU(2): cos(a) I + i sin(a) n.sigma
    k = (s - s.conj().T) / 2
    sin_a = np.sqrt(abs(k[0, 0]) ** 2 + abs(k[0, 1]) ** 2)
    cos_a = np.trace(s).real / 2
    if sin_a < 1e-13:
        root = qs.I2 if cos_a > 0 else 1j * qs.Z
    else:
        a = np.arctan2(sin_a, cos_a)
        root = np.cos(a / 2) * qs.I2 + (np.sin(a / 2) / sin_a) * k
    return np.exp(0.5j * gamma) * root


def _cnot(c: int, t: int) -> list:
    return [SingleQubit(t, qs.H), CZGate(c, t), SingleQubit(t, qs.H)]


def _adjacent_swap(a: int) -> list:
    # SWAP = (1 x H) cz (H x H) cz (H x H) cz (1 x H) on qubits (a, a+1)
    b = a + 1
    return [
        SingleQubit(b, qs.H),
        CZGate(a, b),
        SingleQubit(a, qs.H), SingleQubit(b, qs.H),
        CZGate(a, b),
        SingleQubit(a, qs.H), SingleQubit(b, qs.H),
        CZGate(a, b),
        SingleQubit(b, qs.H),
    ]


def _controlled_adjacent(c: int, t: int, u: np.ndarray) -> list:
    """Singly controlled ``u`` (control |1>) on neighbouring qubits."""
    ev = np.linalg.eigvals(u)
    if np.max(np.abs(u - u[0, 0] * qs.I2)) < 1e-12:
        return [SingleQubit(c, np.diag([1.0, u[0, 0]]))]
    if abs(ev[0] + ev[1]) < 1e-12:
        # u = lam V Z V^dagger
        lam = ev[0]
        w, vecs = np.linalg.eig(u)
        v1 = vecs[:, int(np.argmin(np.abs(w - lam)))]
        v1 = v1 / np.linalg.norm(v1)
        v = np.array([[v1[0], -np.conj(v1[1])], [v1[1], np.conj(v1[0])]])
        return [
            SingleQubit(t, v.conj().T),
            CZGate(c, t),
            SingleQubit(t, v),
            SingleQubit(c, np.diag([1.0, lam])),
        ]
    phase, alpha, theta, beta = euler_zyz(u)
    a = rot_z(alpha) @ rot_y(theta / 2)
    b = rot_y(-theta / 2) @ rot_z(-(alpha + beta) / 2)
    cc = rot_z((beta - alpha) / 2)
    return [
        SingleQubit(t, cc),
        *_cnot(c, t),
        SingleQubit(t, b),
        *_cnot(c, t),
        SingleQubit(t, a),
        SingleQubit(c, np.diag([1.0, np.exp(1j * phase)])),
    ]


def _controlled(c: int, t: int, u: np.ndarray) -> list:
    """Singly controlled ``u``, routing the control next to the target with swaps."""
    if abs(c - t) == 1:
        return _controlled_adjacent(c, t, u)
    step = 1 if t > c else -1
    swaps = []
    pos = c
    while abs(pos - t) > 1:
        swaps.append(min(pos, pos + step))
        pos += step
    there = [g for a in swaps for g in _adjacent_swap(a)]
    back = [g for a in reversed(swaps) for g in _adjacent_swap(a)]
    return there + _controlled_adjacent(pos, t, u) + back


def _lower_mcu(controls: list[int], t: int, u: np.ndarray) -> list:
    """Lower a multi-controlled ``u`` whose controls all fire on |1>."""
    if not controls:
        return [SingleQubit(t, u)]
    if len(controls) == 1:
        return _controlled(controls[0], t, u)
    # controlled-sqrt ladder: the control nearest the target goes alone
    ck = min(controls, key=lambda q: (abs(q - t), -q))
    rest = [q for q in controls if q != ck]
    v = sqrt_unitary(u)
    return (
        _controlled(ck, t, v)
        + _lower_mcu(rest, ck, qs.X)
        + _controlled(ck, t, v.conj().T)
        + _lower_mcu(rest, ck, qs.X)
        + _lower_mcu(rest, t, v)
    )


def lower_gate(g) -> list:
    if isinstance(g, SingleQubit):
        return [g]
    if isinstance(g, CZGate):
        if g.adjacent:
            return [g]
        return _controlled(g.i, g.j, qs.Z)
    flips = [SingleQubit(q, qs.X) for q, p in g.controls if p == 0]
    body = _lower_mcu([q for q, _ in g.controls], g.target, g.matrix)
    return flips + body + flips


def lower_to_lattice(c: Circuit) -> Circuit:
    """Rewrite into single-qubit gates and adjacent cz; lowered gates pass through untouched."""
    out = Circuit(c.n_qubits, global_phase=c.global_phase)
    for g in c.gates:
        out.extend(lower_gate(g))
    return out


# ---------------------------------------------------------------------------
# reference constructions

def ghz_circuit(n: int) -> Circuit:
    """H on qubit 1 then a chain of CNOTs between neighbours."""
    if n < 2:
        raise ValueError("GHZ needs n >= 2")
    circ = Circuit(n, [SingleQubit(1, qs.H)])
    for q in range(1, n):
        circ.append(MultiControlled(((q, 1),), q + 1, qs.X))
    return circ


def ghz_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi


def _swap_chain(i: int, j: int) -> list:
    """SWAP(i, j), i < j, as adjacent swaps, each three CNOTs."""
    order = list(range(i, j)) + list(range(j - 2, i - 1, -1))
    gates = []
    for a in order:
        gates += [
            MultiControlled(((a, 1),), a + 1, qs.X),
            MultiControlled(((a + 1, 1),), a, qs.X),
            MultiControlled(((a, 1),), a + 1, qs.X),
        ]
    return gates


def qft_circuit(n: int) -> Circuit:
    """Hadamards and controlled phases, then floor(n/2) swaps reversing qubit order."""
    if not 1 <= n <= 8:
        raise ValueError("qft_circuit supports 1 <= n <= 8")
    circ = Circuit(n)
    for i in range(1, n + 1):
        circ.append(SingleQubit(i, qs.H))
        for j in range(i + 1, n + 1):
            k = j - i + 1
            circ.append(MultiControlled(((j, 1),), i, np.diag([1.0, np.exp(2j * np.pi / 2**k)])))
    for i in range(1, n // 2 + 1):
        circ.extend(_swap_chain(i, n + 1 - i))
    return circ


def qft_matrix(n: int) -> np.ndarray:
    dim = 2**n
    j = np.arange(dim)
    return np.exp(2j * np.pi * np.outer(j, j) / dim) / np.sqrt(dim)
