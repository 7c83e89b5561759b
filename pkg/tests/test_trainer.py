import numpy as np
import pytest

from qpga import lattice as lt
from qpga import state as qs
from qpga import synthesis as sy
from qpga import trainer as tr


def _fd_gradient(lat, inputs, targets, h=1e-6):
    g = np.zeros_like(lat.params)
    for idx in np.ndindex(*lat.params.shape):
        p = lat.params.copy()
        p[idx] += h
        up = tr.batch_fidelity(lat.with_params(p), inputs, targets)
        p[idx] -= 2 * h
        dn = tr.batch_fidelity(lat.with_params(p), inputs, targets)
        g[idx] = (up - dn) / (2 * h)
    return g


def test_objective_examples():
    # a depth-0 lattice is the identity
    lat = lt.Lattice.zeros(2, 0)
    assert tr.objective(lat, tr.StatePrepTarget(qs.zero_state(2))) == pytest.approx(1)
    assert tr.objective(lat, tr.StatePrepTarget(qs.from_bitstring("11"))) == pytest.approx(0)
    plus = np.full(4, 0.5, dtype=complex)
    assert tr.objective(lat, tr.StatePrepTarget(plus)) == pytest.approx(0.25)
    batch = qs.sample_random_states(2, 5, 0)
    assert tr.objective(lat, tr.OperatorTarget(np.eye(4)), batch) == pytest.approx(1)


def test_objective_is_bounded():
    rng = np.random.default_rng(1)
    target = tr.OperatorTarget(qs.random_unitary(8, rng))
    for _ in range(10):
        lat = lt.Lattice.random(3, 4, rng)
        f = tr.objective(lat, target, qs.sample_random_states(3, 16, rng))
        assert 0 <= f <= 1


def test_operator_objective_needs_batch():
    with pytest.raises(ValueError):
        tr.objective(lt.Lattice.zeros(2, 1), tr.OperatorTarget(np.eye(4)))


def test_batch_shape_checks():
    lat = lt.Lattice.zeros(2, 1)
    with pytest.raises(ValueError):
        tr.batch_fidelity(lat, np.zeros((8, 2)), np.zeros((8, 2)))
    with pytest.raises(ValueError):
        tr.batch_fidelity(lat, np.zeros((4, 2)), np.zeros((4, 3)))
    with pytest.raises(ValueError):
        tr.batch_fidelity(lat, np.zeros((4, 0)), np.zeros((4, 0)))


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        n, depth = int(rng.integers(2, 5)), int(rng.integers(1, 7))
        lat = lt.Lattice.random(n, depth, rng)
        inputs = qs.sample_random_states(n, int(rng.integers(1, 5)), rng)
        targets = qs.random_unitary(2**n, rng) @ inputs
        fid, grad = tr.fidelity_and_gradient(lat, inputs, targets)
        assert fid == pytest.approx(tr.batch_fidelity(lat, inputs, targets), abs=1e-13)
        fd = _fd_gradient(lat, inputs, targets)
        mask = np.abs(fd) > 1e-8
        if mask.any():
            rel = np.max(np.abs(grad[mask] - fd[mask]) / np.abs(fd[mask]))
            worst = max(worst, rel)
        np.testing.assert_allclose(grad, fd, atol=1e-8)
    assert worst <= 1e-5


def test_gradient_vanishes_at_exact_solution():
    t = lt.gate_template("CNOT")
    lat = t.to_lattice()
    target = tr.OperatorTarget(t.reference)
    batch = qs.sample_random_states(2, 8, 3)
    assert tr.objective(lat, target, batch) == pytest.approx(1, abs=1e-12)
    assert np.max(np.abs(tr.gradient(lat, target, batch))) < 1e-10


def test_small_ascent_step_increases_objective():
    rng = np.random.default_rng(4)
    target = tr.StatePrepTarget(qs.sample_random_state(3, rng))
    for _ in range(10):
        lat = lt.Lattice.random(3, 4, rng)
        f0 = tr.objective(lat, target)
        g = tr.gradient(lat, target)
        f1 = tr.objective(lat.with_params(lat.params + 1e-3 * g), target)
        assert f1 >= f0


def test_lowered_qft_certificate():
    # the compiled circuit placed on a lattice is a depth at which the objective can reach 1
    for n in (2, 3, 4):
        lat = lt.circuit_to_lattice(sy.lower_to_lattice(sy.qft_circuit(n)))
        batch = qs.sample_random_states(n, 32, n)
        assert tr.objective(lat, tr.OperatorTarget(sy.qft_matrix(n)), batch) >= 1 - 1e-8


def test_config_validation():
    for bad in (
        dict(learning_rate=0),
        dict(anneal_factor=0),
        dict(anneal_factor=1.5),
        dict(max_iterations=0),
        dict(restarts=0),
        dict(batch_size=0),
        dict(tolerance=1),
        dict(min_learning_rate=0.1),
    ):
        with pytest.raises(ValueError):
            tr.TrainConfig(**bad)
    assert tr.TrainConfig(learning_rate=0.02).learning_rate_floor == pytest.approx(0.002)


def test_plateau_detection():
    assert not tr._plateaued([0.5] * 10, 25, 1e-5)
    assert tr._plateaued([0.5] * 50, 25, 1e-5)
    assert not tr._plateaued(list(np.linspace(0.1, 0.9, 50)), 25, 1e-5)


def test_operator_batch_default_size():
    inputs, targets = tr.OperatorTarget(qs.CNOT).batch(np.random.default_rng(0))
    assert inputs.shape == (4, 32)
    np.testing.assert_allclose(targets, qs.CNOT @ inputs)


def test_training_is_deterministic():
    cfg = tr.TrainConfig(max_iterations=60, seed=11)
    target = tr.OperatorTarget(sy.qft_matrix(2))
    a = tr.train_restarts(2, 6, target, cfg)
    b = tr.train_restarts(2, 6, target, cfg)
    assert a.fidelities == b.fidelities
    np.testing.assert_array_equal(a.params, b.params)
    assert a.to_csv() == b.to_csv()


def test_training_record_csv():
    cfg = tr.TrainConfig(max_iterations=5)
    rec = tr.train(lt.Lattice.random(2, 2, 0), tr.StatePrepTarget(sy.ghz_state(2)), cfg)
    lines = rec.to_csv().splitlines()
    assert lines[0] == "iteration,fidelity,learning_rate"
    assert len(lines) == len(rec.fidelities) + 1
    assert rec.best_fidelity >= rec.final_fidelity


def test_train_converges_on_ghz2():
    cfg = tr.TrainConfig(max_iterations=500, learning_rate=0.05)
    rec = tr.train_restarts(2, 4, tr.StatePrepTarget(sy.ghz_state(2)), cfg)
    assert rec.converged and rec.final_fidelity >= 1 - 1e-4


def test_annealing_respects_floor():
    cfg = tr.TrainConfig(max_iterations=400, plateau_window=5, plateau_rtol=1.0, tolerance=0)
    rec = tr.train(lt.Lattice.random(2, 1, 0), tr.OperatorTarget(qs.SWAP), cfg)
    assert min(rec.learning_rates) == pytest.approx(cfg.learning_rate_floor)
    assert rec.learning_rates[0] == cfg.learning_rate


def test_size_mismatch():
    with pytest.raises(ValueError):
        tr.train(lt.Lattice.zeros(3, 1), tr.OperatorTarget(np.eye(4)), tr.TrainConfig())


def test_depth_sweep_small():
    cfg = tr.TrainConfig(max_iterations=800, restarts=2, learning_rate=0.05)
    res = tr.depth_sweep(2, 0.99, cfg)
    assert res.explicit_depth == 5
    assert res.success and res.trained_depth <= res.explicit_depth
    assert res.per_depth[-1]["depth"] == res.trained_depth
    d = res.to_dict()
    assert d["explicit_depth"] == 5 and d["trained_depth"] == res.trained_depth


def test_first_adam_step_rarely_hurts():
    rng = np.random.default_rng(12)
    bad = 0
    for _ in range(100):
        n = int(rng.integers(2, 4))
        lat = lt.Lattice.random(n, int(rng.integers(1, 5)), rng)
        inputs = qs.sample_random_states(n, 8, rng)
        targets = qs.random_unitary(2**n, rng) @ inputs
        f0, g = tr.fidelity_and_gradient(lat, inputs, targets)
        p = tr.Adam(lat.params.shape, 1e-3).step(lat.params, g)
        if tr.batch_fidelity(lat.with_params(p), inputs, targets) < f0 - 1e-3:
            bad += 1
    assert bad <= 10


def test_training_trace_is_bounded():
    cfg = tr.TrainConfig(max_iterations=100, seed=3)
    rec = tr.train_restarts(3, 4, tr.OperatorTarget(qs.random_unitary(8, 3)), cfg)
    assert all(0 <= f <= 1 + 1e-12 for f in rec.fidelities)
