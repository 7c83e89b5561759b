"""Command-line entry point: ``qpga {physics,synth,train,sweep}``.

Exit codes: 0 success, 2 threshold not met, 3 invalid input, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from qpga import physics, synthesis, trainer
from qpga import state as qs
from qpga.lattice import physical_depth

EXIT_OK = 0
EXIT_THRESHOLD = 2
EXIT_INVALID = 3
EXIT_IO = 4


class InvalidInput(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


# ---------------------------------------------------------------------------
# argument helpers

def angle(text: str) -> float:
    """Float, optionally as a multiple or fraction of pi: ``pi/3``, ``2*pi/3``, ``0.5pi``."""
    t = text.strip().lower().replace(" ", "")
    try:
        if "pi" not in t:
            return float(t)
        num, _, den = t.partition("/")
        coef = num.replace("*", "").replace("pi", "")
        value = (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * np.pi
        return value / float(den) if den else value
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}") from exc


def parse_grid(text: str, points: int) -> np.ndarray:
    """``a..b`` gives ``points`` log-spaced values; ``a,b,c`` an explicit list."""
    try:
        if ".." in text:
            lo, hi = (float(x) for x in text.split(".."))
            if not 0 < lo <= hi:
                raise InvalidInput(f"grid bounds must satisfy 0 < lo <= hi: {text!r}")
            if points < 1:
                raise InvalidInput("grid needs at least one point")
            return np.geomspace(lo, hi, points)
        vals = np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise InvalidInput(f"cannot parse grid {text!r}") from exc
    if vals.size == 0 or not np.all(vals > 0):
        raise InvalidInput(f"grid values must be positive: {text!r}")
    return vals


def parse_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split(".."))
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise InvalidInput(f"cannot parse range {text!r}") from exc


def _complex_array(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise InvalidInput("complex numbers must be given as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def load_target(target: str, seed: int):
    """Return ("state" | "operator", array, named constructor or None)."""
    if ":" in target and not os.path.exists(target):
        name, _, arg = target.partition(":")
        try:
            n = int(arg)
        except ValueError as exc:
            raise InvalidInput(f"bad qubit count in {target!r}") from exc
        if n < 1 or n > 8:
            raise InvalidInput("qubit count must lie in 1..8")
        rng = np.random.default_rng(seed)
        if name == "ghz":
            if n < 2:
                raise InvalidInput("ghz needs at least two qubits")
            return "state", synthesis.ghz_state(n), name
        if name == "qft":
            return "operator", synthesis.qft_matrix(n), name
        if name == "random-unitary":
            return "operator", qs.random_unitary(2**n, rng), name
        if name == "random-state":
            return "state", qs.sample_random_state(n, rng), name
        raise InvalidInput(f"unknown named target {name!r}")
    try:
        data = json.loads(Path(target).read_text())
    except FileNotFoundError as exc:
        raise InvalidInput(f"target file {target!r} not found") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read target {target!r}: {exc}") from exc
    if isinstance(data, dict) and "amplitudes" in data:
        psi = _complex_array(data["amplitudes"])
        if psi.ndim != 1 or psi.size < 2 or psi.size & (psi.size - 1):
            raise InvalidInput("state length must be a power of two")
        if abs(np.linalg.norm(psi) - 1) > 1e-9:
            raise InvalidInput("target state is not normalised")
        return "state", psi, None
    if isinstance(data, dict) and "matrix" in data:
        u = _complex_array(data["matrix"])
        if u.ndim != 2 or u.shape[0] != u.shape[1] or u.shape[0] < 2 or u.shape[0] & (u.shape[0] - 1):
            raise InvalidInput("operator must be a square power-of-two matrix")
        if not qs.is_unitary(u):
            raise InvalidInput("operator is not unitary")
        return "operator", u, None
    raise InvalidInput("target JSON needs an 'amplitudes' or 'matrix' key")


def _writable(path: str) -> Path:
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write to {path!r}")
    return p


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _csv(header: str, rows) -> str:
    lines = [header]
    for row in rows:
        lines.append(",".join(f"{x:.12e}" for x in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands

def cmd_physics(args) -> int:
    outputs = []
    if args.spectral:
        outputs.append(_writable(args.spectral_out))
    if args.purcell:
        outputs.append(_writable(args.purcell_out))
    if args.check_resonance:
        sp = physics.ScatteringParams(args.omega_a, args.omega_prime_a, 1.0, args.gamma_prime)
        try:
            rs = physics.reflection_coeffs(sp)
        except physics.SingularConfigurationError as exc:
            raise InvalidInput(str(exc)) from exc
        for name, val in zip(("r11", "r13", "R3", "r33", "r31"), rs.as_tuple()):
            print(f"{name} = {val.real:+.12e} {val.imag:+.12e}j  |{name}| = {abs(val):.12e}")
    if args.spectral:
        if args.samples < 1:
            raise InvalidInput("--samples must be >= 1")
        sigmas = parse_grid(args.spectral, args.points)
        rows = physics.spectral_infidelity_sweep(args.samples, sigmas, args.seed)
        _write(outputs[0], _csv("sigma,min_infidelity,mean_infidelity,max_infidelity", rows))
        print(f"wrote {len(rows)} spectral rows to {args.spectral_out}")
    if args.purcell:
        grid = parse_grid(args.purcell, args.points)
        rows = physics.purcell_sweep(grid, args.omega_a)
        _write(outputs[-1], _csv("purcell,infidelity", rows))
        print(f"wrote {len(rows)} Purcell rows to {args.purcell_out}")
    if not (args.check_resonance or args.spectral or args.purcell):
        raise InvalidInput("nothing to do: pass --check-resonance, --spectral or --purcell")
    return EXIT_OK


def cmd_synth(args) -> int:
    out = _writable(args.out)
    kind, target, name = load_target(args.target, args.seed)
    n = qs.num_qubits(target)
    if name == "ghz":
        circ = synthesis.ghz_circuit(n)
    elif name == "qft":
        circ = synthesis.qft_circuit(n)
    elif kind == "state":
        circ = synthesis.prepare_state_circuit(target)
    else:
        if n > 4:
            raise InvalidInput("operator synthesis supports at most 4 qubits")
        circ = synthesis.operator_circuit(target)
    lowered = synthesis.lower_to_lattice(circ)
    if kind == "state":
        fid = qs.fidelity(lowered.simulate(qs.zero_state(n)), target)
        err = float(np.max(np.abs(lowered.simulate(qs.zero_state(n)) - target)))
    else:
        u = lowered.unitary()
        fid = qs.operator_fidelity(u, target)
        err = qs.equal_up_to_phase(u, target)
    _write(out, lowered.to_json())
    print(f"fidelity = {fid:.12f}")
    print(f"max_error = {err:.3e}")
    print(f"gates = {len(lowered)} cz = {lowered.cz_count()}")
    print(f"physical_depth = {physical_depth(lowered)}")
    return EXIT_OK


def _config(args) -> trainer.TrainConfig:
    try:
        return trainer.TrainConfig(
            learning_rate=args.lr,
            max_iterations=args.iterations,
            batch_size=args.batch_size,
            restarts=args.restarts,
            seed=args.seed,
            tolerance=args.tolerance,
        )
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc


def cmd_train(args) -> int:
    curve = _writable(args.curve_out)
    lattice_out = _writable(args.lattice_out)
    if args.depth < 0:
        raise InvalidInput("--depth must be >= 0")
    if not 0 < args.threshold < 1:
        raise InvalidInput("--threshold must lie in (0, 1)")
    kind, target, _ = load_target(args.target, args.seed)
    n = qs.num_qubits(target)
    if n < 2:
        raise InvalidInput("a lattice needs at least two qubits")
    cfg = _config(args)
    tgt = trainer.StatePrepTarget(target) if kind == "state" else trainer.OperatorTarget(target)
    rec = trainer.train_restarts(n, args.depth, tgt, cfg)
    from qpga.lattice import Lattice

    _write(curve, rec.to_csv())
    _write(lattice_out, Lattice(n, rec.params).to_json())
    best = rec.final_fidelity
    print(f"best_fidelity = {best:.12f} (restart {rec.seed}, {len(rec.fidelities)} iterations)")
    return EXIT_OK if best >= args.threshold else EXIT_THRESHOLD


def cmd_sweep(args) -> int:
    out = _writable(args.out)
    if not 0 < args.threshold < 1:
        raise InvalidInput("--threshold must lie in (0, 1)")
    ns = parse_range(args.n)
    if any(not 2 <= n <= 5 for n in ns):
        raise InvalidInput("sweep supports 2 <= n <= 5")
    cfg = _config(args)
    summaries = []
    ok = True
    for n in ns:
        depths = range(args.min_depth, args.max_depth + 1) if args.max_depth else None
        res = trainer.depth_sweep(n, args.threshold, cfg, depths=depths)
        summaries.append(res.to_dict())
        ok &= res.success
        print(f"n={n}: explicit {res.explicit_depth}, trained {res.trained_depth}")
        # keep partial results on disk as the sweep progresses
        _write(out, json.dumps(summaries, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_THRESHOLD


# ---------------------------------------------------------------------------
# parser

def _train_flags(p: argparse.ArgumentParser, iterations: int) -> None:
    p.add_argument("--lr", type=float, default=0.01, help="Adam learning rate")
    p.add_argument("--iterations", type=int, default=iterations)
    p.add_argument("--batch-size", type=int, default=None, help="operator batch (default 8*2^n)")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--tolerance", type=float, default=1e-4, help="stop once fidelity >= 1 - tolerance")
    p.add_argument("--threshold", type=float, default=0.999)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qpga", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file of option values (flags given explicitly win)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("physics", help="reflection check, spectral and Purcell sweeps")
    p.add_argument("--check-resonance", action="store_true")
    p.add_argument("--omega-a", type=angle, default=np.pi / 3)
    p.add_argument("--omega-prime-a", type=angle, default=2 * np.pi / 3)
    p.add_argument("--gamma-prime", type=float, default=0.0, help="loss rate relative to gamma")
    p.add_argument("--spectral", metavar="GRID", help="sigma grid, 'lo..hi' or 'a,b,c'")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--purcell", metavar="GRID", help="Purcell grid, 'lo..hi' or 'a,b,c'")
    p.add_argument("--points", type=int, default=50, help="points in a 'lo..hi' grid")
    p.add_argument("--spectral-out", default="spectral_infidelity.csv")
    p.add_argument("--purcell-out", default="purcell_infidelity.csv")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_physics)

    p = sub.add_parser("synth", help="compile a target into a lattice circuit")
    p.add_argument("--target", required=True, help="ghz:n, qft:n, random-unitary:n, random-state:n or a JSON file")
    p.add_argument("--out", default="circuit.json")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train lattice phases against a target")
    p.add_argument("--target", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--curve-out", default="training_curve.csv")
    p.add_argument("--lattice-out", default="lattice.json")
    p.add_argument("--seed", type=int, default=0)
    _train_flags(p, 2000)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="minimal trained depth for the QFT versus the compiled depth")
    p.add_argument("--n", default="2..3", help="qubit counts, 'lo..hi' or 'a,b'")
    p.add_argument("--min-depth", type=int, default=1)
    p.add_argument("--max-depth", type=int, default=0, help="0: up to the compiled depth")
    p.add_argument("--out", default="sweep.json")
    p.add_argument("--seed", type=int, default=0)
    _train_flags(p, 2000)
    p.set_defaults(func=cmd_sweep)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read config {known.config!r}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InvalidInput("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    command = cfg.pop("command", None)
    sub = parser._subparsers._group_actions[0].choices  # noqa: SLF001
    given = [a for a in argv if a in sub]
    name = given[0] if given else command
    if name not in sub:
        raise InvalidInput("config needs a command")
    if not given:
        argv = list(argv) + [name]
    known_dests = {a.dest for a in sub[name]._actions}  # noqa: SLF001
    unknown = set(cfg) - known_dests
    if unknown:
        raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
    # required flags may come from the config alone
    for action in sub[name]._actions:  # noqa: SLF001
        if action.dest in cfg:
            action.required = False
    sub[name].set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        if args.command is None:
            parser.print_help()
            return EXIT_INVALID
        return args.func(args)
    except InvalidInput as exc:
        print(f"qpga: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"qpga: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
