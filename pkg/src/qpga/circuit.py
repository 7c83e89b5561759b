"""Abstract gate lists used between synthesis and the lattice.

A :class:`Circuit` holds single-qubit gates, controlled-Z gates and
multi-controlled single-qubit gates. Controls carry a polarity: 1 means the
gate fires when the control qubit is |1>, 0 when it is |0>.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from qpga import state as qs

GATE_TOL = 1e-10


@dataclass(frozen=True)
class SingleQubit:
    target: int
    matrix: np.ndarray

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,)


@dataclass(frozen=True)
class CZGate:
    i: int
    j: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.i, self.j)

    @property
    def adjacent(self) -> bool:
        return abs(self.i - self.j) == 1


@dataclass(frozen=True)
class MultiControlled:
    controls: tuple[tuple[int, int], ...]  # (qubit, polarity)
    target: int
    matrix: np.ndarray

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.controls) + (self.target,)


Gate = Union[SingleQubit, CZGate, MultiControlled]


def controlled_matrix(u: np.ndarray, polarities: tuple[int, ...]) -> np.ndarray:
    """Matrix on (controls..., target) applying ``u`` when every control matches its polarity."""
    k = len(polarities)
    dim = 2 ** (k + 1)
    out = np.eye(dim, dtype=complex)
    sel = 0
    for p in polarities:
        sel = (sel << 1) | p
    base = 2 * sel
    out[base : base + 2, base : base + 2] = u
    return out


def gate_matrix(g: Gate) -> tuple[np.ndarray, list[int]]:
    """(matrix, targets) pair suitable for :func:`qpga.state.compose`."""
    if isinstance(g, SingleQubit):
        return g.matrix, [g.target]
    if isinstance(g, CZGate):
        return qs.CZ, [g.i, g.j]
    return controlled_matrix(g.matrix, tuple(p for _, p in g.controls)), list(g.qubits)


@dataclass
class Circuit:
    n_qubits: int
    gates: list = field(default_factory=list)
    global_phase: float = 0.0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        for g in self.gates:
            self.validate_gate(g)

    def validate_gate(self, g: Gate) -> None:
        qubits = g.qubits
        for q in qubits:
            if not 1 <= q <= self.n_qubits:
                raise IndexError(f"qubit {q} out of range 1..{self.n_qubits}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"gate acts twice on one qubit: {qubits}")
        if isinstance(g, MultiControlled) and any(p not in (0, 1) for _, p in g.controls):
            raise ValueError("control polarity must be 0 or 1")
        if not isinstance(g, CZGate) and not qs.is_unitary(g.matrix, GATE_TOL):
            raise ValueError("gate matrix is not unitary")

    def append(self, g: Gate) -> None:
        self.validate_gate(g)
        self.gates.append(g)

    def extend(self, gates) -> None:
        for g in gates:
            self.append(g)

    def __len__(self) -> int:
        return len(self.gates)

    def is_lowered(self) -> bool:
        """Only single-qubit gates and nearest-neighbour controlled-Z."""
        return all(
            isinstance(g, SingleQubit) or (isinstance(g, CZGate) and g.adjacent) for g in self.gates
        )

    def cz_count(self) -> int:
        return sum(isinstance(g, CZGate) for g in self.gates)

    def unitary(self) -> np.ndarray:
        """Full matrix including the tracked global phase."""
        u = qs.compose((gate_matrix(g) for g in self.gates), self.n_qubits)
        return np.exp(1j * self.global_phase) * u

    def simulate(self, psi: np.ndarray) -> np.ndarray:
        out = np.asarray(psi, dtype=complex)
        for g in self.gates:
            if isinstance(g, CZGate):
                out = qs.apply_cz(out, g.i, g.j)
            else:
                m, targets = gate_matrix(g)
                out = qs.apply_gate(out, m, targets)
        return np.exp(1j * self.global_phase) * out

    # serialization ---------------------------------------------------------

    def to_records(self) -> list[dict]:
        records = []
        for g in self.gates:
            if isinstance(g, CZGate):
                records.append({"kind": "cz", "targets": [g.i, g.j], "controls": [], "matrix": []})
                continue
            rec = {
                "kind": "1q" if isinstance(g, SingleQubit) else "mcu",
                "targets": [g.target],
                "controls": [],
                "matrix": [[float(z.real), float(z.imag)] for z in np.asarray(g.matrix).ravel()],
            }
            if isinstance(g, MultiControlled):
                rec["controls"] = [{"qubit": q, "polarity": p} for q, p in g.controls]
            records.append(rec)
        return records

    def to_json(self) -> str:
        return json.dumps(self.to_records())

    @classmethod
    def from_records(cls, n_qubits: int, records: list[dict], global_phase: float = 0.0) -> "Circuit":
        gates: list[Gate] = []
        for rec in records:
            kind = rec["kind"]
            if kind == "cz":
                i, j = rec["targets"]
                gates.append(CZGate(int(i), int(j)))
                continue
            m = np.array([complex(re, im) for re, im in rec["matrix"]]).reshape(2, 2)
            (t,) = rec["targets"]
            if kind == "1q":
                gates.append(SingleQubit(int(t), m))
            elif kind == "mcu":
                controls = tuple((int(c["qubit"]), int(c["polarity"])) for c in rec["controls"])
                gates.append(MultiControlled(controls, int(t), m))
            else:
                raise ValueError(f"unknown gate kind {kind!r}")
        return cls(n_qubits, gates, global_phase)
