"""Density-matrix simulation of nested quantum repeaters.

Compares a repeater built from bare, dephasing atomic qubits with one whose
memories are decoherence-free-subspace (DFS) qubits operated through
auxiliary atoms.
"""

from .blocks import (
    BlockResult,
    FixedPoint,
    KindPair,
    PairState,
    StateFamily,
    initial_state,
    pump_to_fixed_point,
    purify_step,
    swap_chain,
    swap_once,
    transfer_atom_atom,
    transfer_atom_dfs,
    transfer_dfs_dfs,
)
from .channels import Channel, compose, entanglement_fidelity, kraus_to_channel
from .noise import NOISELESS, NoiseParams, QubitKind
from .protocol import RepeaterConfig, TimingReport, distance, run_repeater, timing

__all__ = [
    "BlockResult", "Channel", "FixedPoint", "KindPair", "NOISELESS", "NoiseParams",
    "PairState", "QubitKind", "RepeaterConfig", "StateFamily", "TimingReport",
    "compose", "distance", "entanglement_fidelity", "initial_state", "kraus_to_channel",
    "pump_to_fixed_point", "purify_step", "run_repeater", "swap_chain", "swap_once",
    "timing", "transfer_atom_atom", "transfer_atom_dfs", "transfer_dfs_dfs",
]
