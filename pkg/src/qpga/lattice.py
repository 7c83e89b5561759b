"""Logical model of the programmable gate array.

A lattice of depth L on N qubits is an ``(L, N, 4)`` array of MZI phases.
Layer l (1-based) applies one MZI per qubit and then a column of
controlled-Z gates on neighbouring pairs (i, i+1). By default the pairs
follow a checkerboard: odd layers start at qubit 1, even layers at qubit 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from qpga import physics
from qpga import state as qs
from qpga.circuit import Circuit, CZGate, SingleQubit

MAX_DENSE_QUBITS = 10
TWO_PI = 2 * np.pi


def checkerboard_pairs(layer: int, n_qubits: int) -> tuple[int, ...]:
    """First qubits of the cz pairs in 1-based ``layer``: 1,3,5,... if odd, 2,4,6,... if even."""
    if layer < 1:
        raise ValueError("layers are numbered from 1")
    start = 1 if layer % 2 == 1 else 2
    return tuple(range(start, n_qubits, 2))


@dataclass
class Lattice:
    n_qubits: int
    params: np.ndarray
    connectivity: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ValueError("a lattice needs at least two qubits")
        self.params = np.asarray(self.params, dtype=float)
        if self.params.size == 0:
            self.params = self.params.reshape(0, self.n_qubits, 4)
        if self.params.ndim != 3 or self.params.shape[1:] != (self.n_qubits, 4):
            raise ValueError(f"params must have shape (L, {self.n_qubits}, 4), got {self.params.shape}")
        if self.connectivity is not None:
            conn = tuple(tuple(int(i) for i in layer) for layer in self.connectivity)
            if len(conn) != self.depth:
                raise ValueError("connectivity needs one entry per layer")
            for layer in conn:
                used = [q for i in layer for q in (i, i + 1)]
                if any(not 1 <= i < self.n_qubits for i in layer) or len(set(used)) != len(used):
                    raise ValueError(f"invalid cz column {layer}")
            self.connectivity = conn

    @property
    def depth(self) -> int:
        return self.params.shape[0]

    @classmethod
    def zeros(cls, n_qubits: int, depth: int) -> "Lattice":
        return cls(n_qubits, np.zeros((depth, n_qubits, 4)))

    @classmethod
    def random(cls, n_qubits: int, depth: int, rng: np.random.Generator | int) -> "Lattice":
        """Phases drawn uniformly from [0, 2*pi)."""
        rng = np.random.default_rng(rng)
        return cls(n_qubits, rng.uniform(0.0, TWO_PI, (depth, n_qubits, 4)))

    def with_params(self, params: np.ndarray) -> "Lattice":
        return Lattice(self.n_qubits, params, self.connectivity)

    def pairs(self, layer: int) -> tuple[int, ...]:
        if self.connectivity is not None:
            return self.connectivity[layer - 1]
        return checkerboard_pairs(layer, self.n_qubits)

    def cz_signs(self, layer: int) -> np.ndarray:
        """Diagonal of the layer's cz column over the computational basis."""
        n = self.n_qubits
        idx = np.arange(2**n)
        bits = (idx[:, None] >> (n - np.arange(1, n + 1))) & 1
        parity = np.zeros(2**n, dtype=int)
        for i in self.pairs(layer):
            parity ^= bits[:, i - 1] & bits[:, i]
        return 1 - 2 * parity

    # serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        data = {
            "n_qubits": self.n_qubits,
            "depth": self.depth,
            "params": np.mod(self.params, TWO_PI).tolist(),
        }
        if self.connectivity is not None:
            data["connectivity"] = [list(layer) for layer in self.connectivity]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Lattice":
        n, depth = int(data["n_qubits"]), int(data["depth"])
        params = np.asarray(data["params"], dtype=float).reshape(depth, n, 4)
        return cls(n, params, data.get("connectivity"))

    @classmethod
    def from_json(cls, text: str) -> "Lattice":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# evaluation

def _apply_column(psi: np.ndarray, us: np.ndarray, n: int) -> np.ndarray:
    """Apply one 2x2 matrix per qubit; ``psi`` has shape (2**n, B)."""
    batch = psi.shape[1]
    for q in range(n):
        view = psi.reshape(2**q, 2, 2 ** (n - q - 1) * batch)
        psi = np.matmul(us[q], view).reshape(2**n, batch)
    return psi


def forward(lat: Lattice, psi: np.ndarray) -> np.ndarray:
    """Propagate a state, or a batch of states as columns, through the lattice."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[0] != 2**lat.n_qubits:
        raise ValueError(f"state of length {psi.shape[0]} does not match {lat.n_qubits} qubits")
    single = psi.ndim == 1
    out = psi.reshape(psi.shape[0], -1)
    us = physics.mzi_unitaries(lat.params)
    for layer in range(lat.depth):
        out = _apply_column(out, us[layer], lat.n_qubits)
        out = out * lat.cz_signs(layer + 1)[:, None]
    return out[:, 0] if single else out


def lattice_unitary(lat: Lattice) -> np.ndarray:
    if lat.n_qubits > MAX_DENSE_QUBITS:
        raise ValueError(f"dense unitary limited to {MAX_DENSE_QUBITS} qubits")
    return forward(lat, np.eye(2**lat.n_qubits, dtype=complex))


def lattice_gates(lat: Lattice) -> list[tuple[np.ndarray, list[int]]]:
    """Gate list of the lattice for :func:`qpga.state.compose` (oracle path)."""
    gates = []
    for layer in range(lat.depth):
        for q in range(lat.n_qubits):
            gates.append((physics.mzi_unitary(lat.params[layer, q]), [q + 1]))
        for i in lat.pairs(layer + 1):
            gates.append((qs.CZ, [i, i + 1]))
    return gates


# ---------------------------------------------------------------------------
# gate templates

def rot_x(angle: float) -> np.ndarray:
    return np.cos(angle / 2) * qs.I2 - 1j * np.sin(angle / 2) * qs.X


def rot_y(angle: float) -> np.ndarray:
    return np.cos(angle / 2) * qs.I2 - 1j * np.sin(angle / 2) * qs.Y


def rot_z(angle: float) -> np.ndarray:
    return np.cos(angle / 2) * qs.I2 - 1j * np.sin(angle / 2) * qs.Z


def phase_gate(angle: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * angle)])


SINGLE_QUBIT_GATES = ("Identity", "Hadamard", "PauliX", "PauliY", "PauliZ", "RotX", "RotY", "RotZ", "PhaseShift")
TWO_QUBIT_GATES = ("Identity", "CNOT", "ControlledPhase", "ControlledU", "SWAP")


def single_qubit_template(name: str, angle: float | None = None) -> physics.MziParams:
    """MZI phases for a named single-qubit gate; rotations take ``angle``."""
    p = np.pi
    fixed = {
        "Identity": (0.0, 0.0, 0.0, 0.0),
        "Hadamard": (5 * p / 4, 3 * p / 4, p / 2, p / 2),
        "PauliX": (p, p, p, 0.0),
        "PauliY": (3 * p / 2, p / 2, p, 0.0),
        "PauliZ": (0.0, p, 0.0, 0.0),
    }
    if name in fixed:
        return physics.MziParams(*fixed[name])
    if name not in SINGLE_QUBIT_GATES:
        raise KeyError(f"unknown gate {name!r}")
    if angle is None:
        raise ValueError(f"{name} needs a rotation angle")
    t = float(angle)
    if name == "RotX":
        # the extra pi on xi and phi flips the sign of the rotation angle
        return physics.MziParams(-2 * t, -2 * t + p, t, p)
    if name == "RotY":
        return physics.MziParams(-2 * t - p / 2, -2 * t, t, p / 2)
    if name == "RotZ":
        return physics.MziParams(-t / 2, t / 2, 0.0, 0.0)
    return physics.MziParams(0.0, t, 0.0, 0.0)


def single_qubit_reference(name: str, angle: float | None = None) -> np.ndarray:
    refs = {
        "Identity": lambda: qs.I2,
        "Hadamard": lambda: qs.H,
        "PauliX": lambda: qs.X,
        "PauliY": lambda: qs.Y,
        "PauliZ": lambda: qs.Z,
        "RotX": lambda: rot_x(angle),
        "RotY": lambda: rot_y(angle),
        "RotZ": lambda: rot_z(angle),
        "PhaseShift": lambda: phase_gate(angle),
    }
    if name not in refs:
        raise KeyError(f"unknown gate {name!r}")
    return np.asarray(refs[name](), dtype=complex)


@dataclass(frozen=True)
class GateTemplate:
    """Two-qubit gate as MZI columns separated by controlled-Z columns.

    ``columns[k]`` has shape (2, 4); a cz on (1, 2) sits between consecutive
    columns, so there are ``len(columns) - 1`` cz layers.
    """

    name: str
    columns: tuple[np.ndarray, ...]
    reference: np.ndarray = field(repr=False)

    @property
    def cz_layers(self) -> int:
        return len(self.columns) - 1

    def gates(self) -> list[tuple[np.ndarray, list[int]]]:
        out = []
        for k, col in enumerate(self.columns):
            if k > 0:
                out.append((qs.CZ, [1, 2]))
            out.extend((physics.mzi_unitary(col[q]), [q + 1]) for q in range(2))
        return out

    def unitary(self) -> np.ndarray:
        return qs.compose(self.gates(), 2)

    def to_lattice(self) -> Lattice:
        """Checkerboard lattice: column k in layer 2k+1, whose only pair is (1, 2).

        Even layers of a two-qubit checkerboard have no cz, so they hold an
        identity column and the final MZI column.
        """
        k = self.cz_layers
        params = np.zeros((2 * k if k else 1, 2, 4))
        if k == 0:
            # a lone column still lands in layer 1, which carries a cz
            raise ValueError("templates without cz layers are single-qubit gates")
        for idx, col in enumerate(self.columns[:-1]):
            params[2 * idx] = col
        params[2 * k - 1] = self.columns[-1]
        return Lattice(2, params)


def _column(top: np.ndarray, bottom: np.ndarray) -> np.ndarray:
    return np.stack(
        [physics.mzi_params_from_unitary(top).as_array(), physics.mzi_params_from_unitary(bottom).as_array()]
    )


def _controlled_u_columns(phase: float, alpha: float, theta: float, beta: float) -> tuple[np.ndarray, ...]:
    """Columns for c-U with U = e^{i phase} Rz(alpha) Ry(theta) Rz(beta); target is qubit 2."""
    a = rot_z(alpha) @ rot_y(theta / 2)
    b = rot_y(-theta / 2) @ rot_z(-(alpha + beta) / 2)
    c = rot_z((beta - alpha) / 2)
    h = qs.H
    return (
        _column(qs.I2, h @ c),
        _column(qs.I2, h @ b @ h),
        _column(phase_gate(phase), a @ h),
    )


def two_qubit_template(
    name: str,
    angle: float | None = None,
    euler: Sequence[float] | None = None,
    cz_layers: int = 2,
) -> GateTemplate:
    """Template for a named two-qubit gate; qubit 1 is the control.

    ``angle`` is the controlled-phase angle. ``euler`` is (phase, alpha,
    theta, beta) with U = e^{i phase} Rz(alpha) Ry(theta) Rz(beta).
    ``cz_layers`` applies to the identity template and must be even.
    """
    h = _column(qs.H, qs.H)
    ident = np.zeros((2, 4))
    if name == "Identity":
        if cz_layers < 0 or cz_layers % 2:
            raise ValueError("the identity template needs an even number of cz layers")
        return GateTemplate(name, (ident,) * (cz_layers + 1), np.eye(4, dtype=complex))
    if name == "CNOT":
        col = _column(qs.I2, qs.H)
        return GateTemplate(name, (col, col), qs.CNOT)
    if name == "ControlledPhase":
        if angle is None:
            raise ValueError("ControlledPhase needs an angle")
        # R_phi = e^{i phi/2} Rz(phi)
        cols = _controlled_u_columns(angle / 2, angle, 0.0, 0.0)
        return GateTemplate(name, cols, np.diag([1, 1, 1, np.exp(1j * angle)]))
    if name == "ControlledU":
        if euler is None:
            raise ValueError("ControlledU needs Euler angles (phase, alpha, theta, beta)")
        phase, alpha, theta, beta = (float(x) for x in euler)
        u = np.exp(1j * phase) * rot_z(alpha) @ rot_y(theta) @ rot_z(beta)
        ref = np.eye(4, dtype=complex)
        ref[2:, 2:] = u
        return GateTemplate(name, _controlled_u_columns(phase, alpha, theta, beta), ref)
    if name == "SWAP":
        return GateTemplate(name, (h, h, h, ident), qs.SWAP)
    raise KeyError(f"unknown two-qubit gate {name!r}")


def gate_template(name: str, **kwargs):
    """Single-qubit names return :class:`MziParams`; two-qubit names a :class:`GateTemplate`."""
    if name in TWO_QUBIT_GATES and (name != "Identity" or "cz_layers" in kwargs):
        return two_qubit_template(name, **kwargs)
    return single_qubit_template(name, **kwargs)


def euler_zyz(u: np.ndarray) -> tuple[float, float, float, float]:
    """(phase, alpha, theta, beta) with u = e^{i phase} Rz(alpha) Ry(theta) Rz(beta)."""
    u = qs.check_unitary(u)
    det = np.linalg.det(u)
    phase = np.angle(det) / 2
    v = u * np.exp(-1j * phase)  # special unitary [[a, -b*], [b, a*]]
    a, b = v[0, 0], v[1, 0]
    theta = 2 * np.arctan2(abs(b), abs(a))
    # a = e^{-i(alpha+beta)/2} cos, b = e^{i(alpha-beta)/2} sin
    s = -np.angle(a) if abs(a) > 1e-12 else 0.0
    d = np.angle(b) if abs(b) > 1e-12 else 0.0
    alpha = s + d
    beta = s - d
    return float(phase), float(alpha), float(theta), float(beta)


# ---------------------------------------------------------------------------
# depth accounting

def physical_depth(circuit: Circuit) -> int:
    """Number of cz columns after greedy as-soon-as-possible packing.

    Single-qubit gates between two cz columns merge into the MZI column of the
    following layer, so they never add depth; each cz goes into the first
    column after the last cz on either of its qubits.
    """
    if not circuit.is_lowered():
        raise ValueError("physical_depth needs a circuit of single-qubit gates and adjacent cz")
    last = [0] * (circuit.n_qubits + 1)
    depth = 0
    for g in circuit.gates:
        if isinstance(g, CZGate):
            col = max(last[g.i], last[g.j]) + 1
            last[g.i] = last[g.j] = col
            depth = max(depth, col)
    return depth


def schedule(circuit: Circuit) -> list[tuple[list[SingleQubit], list[CZGate]]]:
    """Layers of (single-qubit gates, cz gates) following :func:`physical_depth`.

    Gates after the final cz column form one extra layer with no cz.
    """
    if not circuit.is_lowered():
        raise ValueError("schedule needs a lowered circuit")
    last = [0] * (circuit.n_qubits + 1)
    placed_1q: dict[int, list[SingleQubit]] = {}
    placed_cz: dict[int, list[CZGate]] = {}
    for g in circuit.gates:
        if isinstance(g, CZGate):
            col = max(last[g.i], last[g.j]) + 1
            last[g.i] = last[g.j] = col
            placed_cz.setdefault(col, []).append(g)
        else:
            placed_1q.setdefault(last[g.target] + 1, []).append(g)
    n_layers = max([0, *placed_cz, *placed_1q])
    return [(placed_1q.get(k, []), placed_cz.get(k, [])) for k in range(1, n_layers + 1)]


def circuit_to_lattice(circuit: Circuit) -> Lattice:
    """Exact lattice parameters (with explicit cz columns) realizing a lowered circuit.

    The result has one layer per scheduled column, which is the physical depth
    plus one when single-qubit gates trail the last cz. The circuit's global
    phase is folded into qubit 1's first MZI.
    """
    n = circuit.n_qubits
    layers = schedule(circuit)
    if not layers:
        layers = [([], [])]
    params = np.zeros((len(layers), n, 4))
    conn = []
    for k, (ones, czs) in enumerate(layers):
        mats = [qs.I2.copy() for _ in range(n)]
        for g in ones:
            mats[g.target - 1] = g.matrix @ mats[g.target - 1]
        if k == 0:
            mats[0] = np.exp(1j * circuit.global_phase) * mats[0]
        for q in range(n):
            params[k, q] = physics.mzi_params_from_unitary(mats[q]).as_array()
        conn.append(tuple(sorted(min(g.i, g.j) for g in czs)))
    return Lattice(n, params, tuple(conn))
