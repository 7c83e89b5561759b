"""End-to-end acceptance checks, one group per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the summary table;
the training groups are marked slow but are part of the default run.
"""

import json
import time

import numpy as np
import pytest

from qpga import cli
from qpga import lattice as lt
from qpga import physics as ph
from qpga import state as qs
from qpga import synthesis as sy
from qpga import trainer as tr
from qpga.circuit import CZGate


def crit(k):
    return pytest.mark.criterion(k)


# 1 ---------------------------------------------------------------------------

@crit(1)
def test_gate_templates():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    angled = {"RotX", "RotY", "RotZ", "PhaseShift"}
    assert len(lt.SINGLE_QUBIT_GATES) == 9
    for name in lt.SINGLE_QUBIT_GATES:
        for _ in range(5):
            a = float(rng.uniform(-np.pi, np.pi)) if name in angled else None
            kw = {"angle": a} if a is not None else {}
            u = ph.mzi_unitary(lt.single_qubit_template(name, **kw))
            assert qs.equal_up_to_phase(u, lt.single_qubit_reference(name, a)) < 1e-12
    cases = [
        ("Identity", {"cz_layers": 2}, 2),
        ("CNOT", {}, 1),
        ("ControlledPhase", {"angle": 1.3}, 2),
        ("ControlledU", {"euler": lt.euler_zyz(qs.random_unitary(2, rng))}, 2),
        ("SWAP", {}, 3),
    ]
    assert {c[0] for c in cases} == set(lt.TWO_QUBIT_GATES)
    for name, kw, layers in cases:
        t = lt.gate_template(name, **kw)
        oracle = qs.compose(t.gates(), 2)
        assert qs.equal_up_to_phase(oracle, t.reference) < 1e-10
        assert sum(isinstance(g[0], np.ndarray) and g[1] == [1, 2] and np.allclose(g[0], qs.CZ)
                   for g in t.gates()) == layers
    assert time.perf_counter() - start < 1


# 2 ---------------------------------------------------------------------------

@crit(2)
def test_scattering_resonance():
    start = time.perf_counter()
    rs = ph.reflection_coeffs(ph.ScatteringParams(np.pi / 3, 2 * np.pi / 3))
    np.testing.assert_allclose(rs.as_tuple(), (0, -1, -1, 0, -1), atol=1e-12)
    rng = np.random.default_rng(2)
    for _ in range(1000):
        sp = ph.ScatteringParams(*rng.uniform(0, 2 * np.pi, 2))
        try:
            r = ph.reflection_coeffs(sp)
        except ph.SingularConfigurationError:
            continue
        assert abs(abs(r.r11) ** 2 + abs(r.r13) ** 2 - 1) < 1e-9
    assert time.perf_counter() - start < 1


# 3 ---------------------------------------------------------------------------

@crit(3)
def test_cascade_gives_cz():
    rs = ph.reflection_coeffs(ph.ScatteringParams.on_resonance())
    rng = np.random.default_rng(3)
    for _ in range(100):
        z = rng.normal(size=4) + 1j * rng.normal(size=4)
        a = z[:2] / np.linalg.norm(z[:2])
        b = z[2:] / np.linalg.norm(z[2:])
        amps = ph.PhotonAmplitudes(a[0], a[1], b[0], b[1])
        out = ph.four_step_scatter(amps, rs)
        ideal = ph.ideal_cascade_output(amps)
        assert np.max(np.abs(out.amplitudes - ideal.amplitudes)) < 1e-12


@crit(3)
def test_logical_gate_settings():
    np.testing.assert_array_equal(ph.logical_two_qubit_gate(ph.EtaSetting.OFF), np.eye(4))
    np.testing.assert_allclose(ph.logical_two_qubit_gate(ph.EtaSetting.ON), np.diag([1, 1j, 1j, 1]), atol=1e-15)
    etas = np.arange(100) * np.pi / 36
    for eta in etas:
        multiple = abs(eta / (np.pi / 2) - round(eta / (np.pi / 2))) < 1e-9
        assert (ph.photon_splitting_amplitude(eta) < 1e-12) == multiple


# 4 ---------------------------------------------------------------------------

@crit(4)
def test_spectral_model():
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    narrow = ph.SpectralProfile(1e-9)
    for _ in range(100):
        p = rng.uniform(0, 2 * np.pi, 4)
        assert 1 - ph.mzi_spectral_fidelity(p, narrow) < 1e-12
    sigmas = np.geomspace(1e-6, 1e-3, 7)
    rows = ph.spectral_infidelity_sweep(1000, sigmas, 4)
    slope = np.polyfit(np.log(sigmas), np.log([r[2] for r in rows]), 1)[0]
    assert abs(slope - 2) <= 0.2
    anchor = ph.SpectralProfile.from_pulse_length(1e-9).sigma
    (row,) = ph.spectral_infidelity_sweep(1000, [anchor], 4)
    assert 1e-12 <= row[2] <= 1e-8
    assert time.perf_counter() - start < 120


# 5 ---------------------------------------------------------------------------

@crit(5)
def test_purcell_trend():
    rows = ph.purcell_sweep(np.geomspace(1, 1e6, 50))
    inf = np.array([r[1] for r in rows])
    assert np.all(np.diff(inf) <= 0)
    assert inf[-1] < 1e-4
    at40 = ph.czz_gate_infidelity(ph.ScatteringParams.on_resonance(purcell=40))
    assert 0.01 <= at40 <= 0.2


# 6 ---------------------------------------------------------------------------

@crit(6)
def test_exact_state_synthesis():
    rng = np.random.default_rng(6)
    for _ in range(100):
        psi = qs.sample_random_state(3, rng)
        low = sy.lower_to_lattice(sy.prepare_state_circuit(psi))
        assert low.is_lowered()
        assert qs.fidelity(low.simulate(qs.zero_state(3)), psi) >= 1 - 1e-9


@crit(6)
def test_exact_operator_synthesis():
    rng = np.random.default_rng(60)
    for _ in range(20):
        u = qs.random_unitary(8, rng)
        low = sy.lower_to_lattice(sy.operator_circuit(u))
        assert low.is_lowered()
        assert all(g.adjacent for g in low.gates if isinstance(g, CZGate))
        assert np.max(np.abs(low.unitary() - u)) < 1e-8


# 7 ---------------------------------------------------------------------------

@crit(7)
def test_qft4_physical_depth():
    # as-soon-as-possible packing of the lowered circuit; single-qubit gates add no depth
    low = sy.lower_to_lattice(sy.qft_circuit(4))
    assert low.is_lowered()
    assert lt.physical_depth(low) == 51
    lat = lt.circuit_to_lattice(low)
    assert qs.operator_fidelity(lt.lattice_unitary(lat), sy.qft_matrix(4)) > 1 - 1e-12


# 8 ---------------------------------------------------------------------------

@crit(8)
def test_gradient_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    h = 1e-6
    for _ in range(100):
        n, depth = int(rng.integers(2, 5)), int(rng.integers(1, 7))
        lat = lt.Lattice.random(n, depth, rng)
        inputs = qs.sample_random_states(n, 4, rng)
        targets = qs.random_unitary(2**n, rng) @ inputs
        _, grad = tr.fidelity_and_gradient(lat, inputs, targets)
        flat = lat.params.ravel()
        for idx in range(flat.size):
            p = flat.copy()
            p[idx] += h
            up = tr.batch_fidelity(lat.with_params(p.reshape(lat.params.shape)), inputs, targets)
            p[idx] -= 2 * h
            dn = tr.batch_fidelity(lat.with_params(p.reshape(lat.params.shape)), inputs, targets)
            fd = (up - dn) / (2 * h)
            g = grad.ravel()[idx]
            if abs(fd) > 1e-8:
                assert abs(g - fd) / abs(fd) <= 1e-5
            else:
                assert abs(g) < 1e-7
    assert time.perf_counter() - start < 60


# 9 ---------------------------------------------------------------------------

@pytest.mark.slow
@crit(9)
def test_train_ghz4():
    cfg = tr.TrainConfig(max_iterations=500, restarts=5, seed=0)
    rec = tr.train_restarts(4, 20, tr.StatePrepTarget(sy.ghz_state(4)), cfg)
    assert len(rec.fidelities) <= 500
    assert rec.final_fidelity >= 0.999


@pytest.mark.slow
@crit(9)
def test_train_qft4():
    cfg = tr.TrainConfig(max_iterations=3000, restarts=5, batch_size=128, seed=0)
    rec = tr.train_restarts(4, 20, tr.OperatorTarget(sy.qft_matrix(4)), cfg)
    assert rec.final_fidelity >= 0.999


@pytest.mark.slow
@crit(9)
def test_train_random_states():
    fids = []
    for k in range(10):
        psi = qs.sample_random_state(4, np.random.default_rng([7, k]))
        cfg = tr.TrainConfig(max_iterations=1000, restarts=5, seed=k)
        rec = tr.train_restarts(4, 20, tr.StatePrepTarget(psi), cfg)
        fids.append(rec.final_fidelity)
    assert np.mean(fids) >= 0.99


# 10 --------------------------------------------------------------------------

@pytest.mark.slow
@crit(10)
@pytest.mark.parametrize("n, iterations", [(3, 2000), (4, 3000)])
def test_trained_depth_compactness(n, iterations):
    cfg = tr.TrainConfig(max_iterations=iterations, restarts=3, seed=0)
    res = tr.depth_sweep(n, 0.999, cfg)
    print(json.dumps(res.to_dict()))
    assert res.success
    assert res.trained_depth <= res.explicit_depth / 2


# 11 --------------------------------------------------------------------------

COMMANDS = {
    "resonance": (["physics", "--check-resonance", "--omega-a", "pi/3", "--omega-prime-a", "0.9"], []),
    "spectral": (["physics", "--spectral", "1e-5..1e-3", "--points", "5", "--samples", "50",
                  "--spectral-out", "{d}/s.csv"], ["s.csv"]),
    "purcell": (["physics", "--purcell", "1..1e5", "--points", "20", "--purcell-out", "{d}/p.csv"], ["p.csv"]),
    "synth": (["synth", "--target", "random-unitary:3", "--seed", "2", "--out", "{d}/c.json"], ["c.json"]),
    "train": (["train", "--target", "random-state:3", "--depth", "6", "--iterations", "200", "--seed", "4",
               "--curve-out", "{d}/t.csv", "--lattice-out", "{d}/l.json"], ["t.csv", "l.json"]),
    "sweep": (["sweep", "--n", "2", "--max-depth", "3", "--iterations", "150", "--restarts", "2",
               "--out", "{d}/w.json"], ["w.json"]),
}


@crit(11)
@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_cli_determinism(name, tmp_path, capsys):
    argv, files = COMMANDS[name]
    runs = []
    for k in range(2):
        d = tmp_path / str(k)
        d.mkdir()
        code = cli.main([a.format(d=d) for a in argv])
        out = capsys.readouterr().out.replace(str(d), "<dir>")
        runs.append((code, out, [(d / f).read_bytes() for f in files]))
    assert runs[0] == runs[1]
    assert runs[0][0] in (0, 2)
