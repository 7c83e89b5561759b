"""Gradient training of lattice phases against target states and operators.

The objective is the batch-averaged fidelity
``mean_b |<U_target psi_b | U_lattice psi_b>|^2``. Its gradient is computed
exactly in one reverse sweep: the output state is rolled back through the
lattice while an adjoint state carries the target overlap.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from qpga import physics
from qpga import state as qs
from qpga.lattice import Lattice, forward

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    anneal_factor: float = 0.5
    max_iterations: int = 1000
    batch_size: int | None = None  # operator targets: default 8 * 2**n
    tolerance: float = 1e-4
    restarts: int = 1
    seed: int = 0
    plateau_window: int = 25
    plateau_rtol: float = 1e-5
    min_learning_rate: float | None = None  # default: learning_rate / 10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @property
    def learning_rate_floor(self) -> float:
        return self.learning_rate / 10 if self.min_learning_rate is None else self.min_learning_rate

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.min_learning_rate is not None and not 0 < self.min_learning_rate <= self.learning_rate:
            raise ValueError("min_learning_rate must lie in (0, learning_rate]")
        if not 0 < self.anneal_factor <= 1:
            raise ValueError("anneal_factor must lie in (0, 1]")
        if self.max_iterations < 1 or self.restarts < 1 or self.plateau_window < 1:
            raise ValueError("iteration counts must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 <= self.tolerance < 1:
            raise ValueError("tolerance must lie in [0, 1)")


@dataclass(frozen=True)
class StatePrepTarget:
    """Map |0...0> to ``state``."""

    state: np.ndarray

    def __post_init__(self):
        if abs(np.linalg.norm(self.state) - 1) > 1e-10:
            raise ValueError("target state is not normalised")

    @property
    def n_qubits(self) -> int:
        return qs.num_qubits(self.state)

    def batch(self, rng: np.random.Generator, size: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        return qs.zero_state(self.n_qubits)[:, None], np.asarray(self.state, dtype=complex)[:, None]


@dataclass(frozen=True)
class OperatorTarget:
    """Match ``unitary`` on random input states, resampled every iteration."""

    unitary: np.ndarray
    ensemble_size: int | None = None

    def __post_init__(self):
        qs.check_unitary(self.unitary)

    @property
    def n_qubits(self) -> int:
        return qs.num_qubits(self.unitary)

    def batch(self, rng: np.random.Generator, size: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        size = size or self.ensemble_size or 8 * 2**self.n_qubits
        inputs = qs.sample_random_states(self.n_qubits, size, rng)
        return inputs, self.unitary @ inputs


@dataclass
class TrainRecord:
    fidelities: list[float]
    learning_rates: list[float]
    params: np.ndarray
    seconds: float
    converged: bool
    seed: int = 0
    restart_fidelities: list[float] = field(default_factory=list)

    @property
    def final_fidelity(self) -> float:
        return self.fidelities[-1]

    @property
    def best_fidelity(self) -> float:
        return max(self.fidelities)

    def to_csv(self) -> str:
        lines = ["iteration,fidelity,learning_rate"]
        for i, (f, lr) in enumerate(zip(self.fidelities, self.learning_rates)):
            lines.append(f"{i},{f:.12e},{lr:.12e}")
        return "\n".join(lines) + "\n"


def _check_batch(lat: Lattice, inputs: np.ndarray, targets: np.ndarray):
    inputs = np.asarray(inputs, dtype=complex)
    targets = np.asarray(targets, dtype=complex)
    if inputs.ndim == 1:
        inputs, targets = inputs[:, None], targets[:, None]
    if inputs.shape != targets.shape or inputs.shape[0] != 2**lat.n_qubits:
        raise ValueError("batch dimensions do not match the lattice")
    if inputs.shape[1] == 0:
        raise ValueError("empty batch")
    return inputs, targets


def batch_fidelity(lat: Lattice, inputs: np.ndarray, targets: np.ndarray) -> float:
    """Mean |<target_b|U psi_b>|^2 over the batch columns."""
    inputs, targets = _check_batch(lat, inputs, targets)
    o = np.einsum("ib,ib->b", targets.conj(), forward(lat, inputs))
    return float(np.mean(o.real**2 + o.imag**2))


def objective(lat: Lattice, target, batch: np.ndarray | None = None) -> float:
    """Objective for a :class:`StatePrepTarget` or :class:`OperatorTarget`.

    ``batch`` holds input states as columns; state-preparation targets
    ignore it and use |0...0>.
    """
    if isinstance(target, StatePrepTarget):
        inputs, targets = target.batch(np.random.default_rng(0))
    else:
        if batch is None:
            raise ValueError("operator objective needs a batch of input states")
        inputs = np.asarray(batch, dtype=complex)
        if inputs.ndim == 1:
            inputs = inputs[:, None]
        targets = target.unitary @ inputs
    return batch_fidelity(lat, inputs, targets)


def fidelity_and_gradient(lat: Lattice, inputs: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Batch fidelity and its exact gradient with respect to ``lat.params``."""
    inputs, targets = _check_batch(lat, inputs, targets)
    n, depth = lat.n_qubits, lat.depth
    dim, nb = inputs.shape
    us = physics.mzi_unitaries(lat.params)
    dus = physics.mzi_unitary_derivatives(lat.params)
    signs = [lat.cz_signs(layer + 1)[:, None] for layer in range(depth)]

    psi = forward(lat, inputs)
    o = np.einsum("ib,ib->b", targets.conj(), psi)
    fid = float(np.mean(o.real**2 + o.imag**2))
    # adjoint state scaled by the overlap, so conj(chi) already carries conj(o_b)
    chi = targets * o[None, :]
    grad = np.zeros_like(lat.params)
    for layer in range(depth - 1, -1, -1):
        psi = psi * signs[layer]
        chi = chi * signs[layer]
        for q in range(n - 1, -1, -1):
            shape = (2**q, 2, 2 ** (n - q - 1) * nb)
            udag = us[layer, q].conj().T
            psi = np.matmul(udag, psi.reshape(shape))
            c = chi.reshape(shape)
            w = np.einsum("lar,lbr->ab", c.conj(), psi)
            chi = np.matmul(udag, c).reshape(dim, nb)
            psi = psi.reshape(dim, nb)
            grad[layer, q] = np.einsum("kab,ab->k", dus[layer, q], w).real
    return fid, grad * (2.0 / nb)


def gradient(lat: Lattice, target, batch: np.ndarray | None = None) -> np.ndarray:
    if isinstance(target, StatePrepTarget):
        inputs, targets = target.batch(np.random.default_rng(0))
    else:
        if batch is None:
            raise ValueError("operator gradient needs a batch of input states")
        inputs = np.asarray(batch, dtype=complex)
        if inputs.ndim == 1:
            inputs = inputs[:, None]
        targets = target.unitary @ inputs
    return fidelity_and_gradient(lat, inputs, targets)[1]


class Adam:
    """Adam in the ascent direction."""

    def __init__(self, shape, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return params + self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _plateaued(trace: list[float], window: int, rtol: float) -> bool:
    """Mean of the last window improved on the window before by less than ``rtol`` (relative)."""
    if len(trace) < 2 * window:
        return False
    recent = np.mean(trace[-window:])
    before = np.mean(trace[-2 * window : -window])
    return (recent - before) < rtol * max(abs(before), 1e-12)


def train(lat0: Lattice, target, cfg: TrainConfig, rng: np.random.Generator | int | None = None) -> TrainRecord:
    """Adam ascent from ``lat0``; batches are drawn from ``rng`` (default: ``cfg.seed``)."""
    if target.n_qubits != lat0.n_qubits:
        raise ValueError("target and lattice sizes differ")
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    start = time.perf_counter()
    params = lat0.params.copy()
    opt = Adam(params.shape, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    fids: list[float] = []
    lrs: list[float] = []
    last_anneal = 0
    converged = False
    for it in range(cfg.max_iterations):
        inputs, targets = target.batch(rng, cfg.batch_size)
        fid, grad = fidelity_and_gradient(lat0.with_params(params), inputs, targets)
        fids.append(fid)
        lrs.append(opt.lr)
        if fid >= 1 - cfg.tolerance:
            converged = True
            break
        if it - last_anneal >= cfg.plateau_window and _plateaued(fids, cfg.plateau_window, cfg.plateau_rtol):
            opt.lr = max(cfg.learning_rate_floor, opt.lr * cfg.anneal_factor)
            last_anneal = it
        params = opt.step(params, grad)
    return TrainRecord(fids, lrs, params, time.perf_counter() - start, converged, cfg.seed)


def train_restarts(n_qubits: int, depth: int, target, cfg: TrainConfig) -> TrainRecord:
    """Best of ``cfg.restarts`` runs from uniform random phases.

    Each restart gets its own child stream of ``cfg.seed`` for the
    initialization and for its batches, so results do not depend on run order.
    """
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    best = None
    finals = []
    for k, child in enumerate(children):
        rng = np.random.default_rng(child)
        lat0 = Lattice.random(n_qubits, depth, rng)
        rec = train(lat0, target, cfg, rng)
        rec.seed = k
        finals.append(rec.final_fidelity)
        if best is None or rec.final_fidelity > best.final_fidelity:
            best = rec
        if rec.converged:
            break
    best.restart_fidelities = finals
    return best


@dataclass
class SweepResult:
    n_qubits: int
    threshold: float
    explicit_depth: int
    trained_depth: int | None
    per_depth: list[dict]

    @property
    def success(self) -> bool:
        return self.trained_depth is not None

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "threshold": self.threshold,
            "explicit_depth": self.explicit_depth,
            "trained_depth": self.trained_depth,
            "per_depth": self.per_depth,
        }


def depth_sweep(
    n_qubits: int,
    threshold: float,
    cfg: TrainConfig,
    depths=None,
    target_unitary: np.ndarray | None = None,
) -> SweepResult:
    """Smallest depth at which a trained lattice reaches ``threshold`` on the QFT.

    Depths are tried in increasing order, ``cfg.restarts`` runs each; the
    explicit depth comes from the compiled circuit. Training success is
    judged on the final batch fidelity.
    """
    from qpga import synthesis
    from qpga.lattice import physical_depth

    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    explicit = physical_depth(synthesis.lower_to_lattice(synthesis.qft_circuit(n_qubits)))
    if depths is None:
        depths = range(1, explicit + 1)
    u = synthesis.qft_matrix(n_qubits) if target_unitary is None else target_unitary
    target = OperatorTarget(u)
    cfg = replace(cfg, tolerance=min(cfg.tolerance, 1 - threshold))
    per_depth = []
    trained = None
    for k, depth in enumerate(sorted(set(int(d) for d in depths))):
        rec = train_restarts(n_qubits, depth, target, replace(cfg, seed=cfg.seed + 1000 * depth))
        per_depth.append(
            {"depth": depth, "best_fidelity": float(max(rec.restart_fidelities)), "restarts": len(rec.restart_fidelities)}
        )
        if max(rec.restart_fidelities) >= threshold:
            trained = depth
            break
    return SweepResult(n_qubits, threshold, explicit, trained, per_depth)
