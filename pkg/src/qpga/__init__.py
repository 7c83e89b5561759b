"""Simulation, exact synthesis and gradient training for photonic quantum programmable gate arrays."""

from qpga import circuit, lattice, physics, state, synthesis, trainer
from qpga.circuit import Circuit, CZGate, MultiControlled, SingleQubit
from qpga.lattice import Lattice, forward, lattice_unitary, physical_depth
from qpga.physics import EtaSetting, MziParams, ScatteringParams, mzi_unitary

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "CZGate",
    "EtaSetting",
    "Lattice",
    "MultiControlled",
    "MziParams",
    "ScatteringParams",
    "SingleQubit",
    "circuit",
    "forward",
    "lattice",
    "lattice_unitary",
    "mzi_unitary",
    "physical_depth",
    "physics",
    "state",
    "synthesis",
    "trainer",
]
