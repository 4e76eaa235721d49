"""Transfer, swapping and purification blocks as effective pair channels.

Each block runs its circuit on a labelled register, sums measurement
branches with their feed-forward corrections, and is compressed into a
two-qubit map by process tomography over the input pair.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channels import (
    Channel,
    binary_state,
    entanglement_fidelity,
    process_tomography,
    tolerance,
    werner_state,
)
from .noise import (
    X,
    Z,
    NoiseParams,
    QubitKind,
    cnot_dfs,
    controlled_z_atoms,
    ideal,
    idle,
    measure_dfs_circuit,
    measure_dfs_duration,
    rot,
    rotation,
    rotation_time,
    zad,
)
from .register import Register, branch_sum

PI = math.pi


class KindPair(enum.Enum):
    """Technologies of (sacrificed, kept) pairs in a purification step."""

    ATOM_ATOM = "ATOM-ATOM"
    AUX_DFS = "AUX-DFS"
    DFS_DFS = "DFS-DFS"


class StateFamily(enum.Enum):
    WERNER = "WERNER"
    BINARY = "BINARY"


def initial_state(family: StateFamily | str, f0: float) -> np.ndarray:
    family = StateFamily(family)
    return werner_state(f0) if family is StateFamily.WERNER else binary_state(f0)


@dataclass(frozen=True)
class BlockResult:
    """Effective two-qubit map of one block.

    ``channel`` is trace preserving for deterministic blocks and the
    unnormalized success branch for purification.  ``duration`` includes the
    classical wait when ``includes_wait`` is set.
    """

    channel: Channel
    duration: float
    success_probability: float = 1.0
    includes_wait: bool = True

    def output(self, rho: np.ndarray) -> np.ndarray:
        out = self.channel(rho)
        return out / np.real(np.trace(out))


@dataclass(frozen=True)
class PairState:
    rho: np.ndarray
    distance: float
    kind: QubitKind

    @property
    def fidelity(self) -> float:
        return entanglement_fidelity(self.rho)


def _pair_channel(fn, trace_preserving: bool = True) -> Channel:
    """Tomography of a circuit mapping a register on ('A', 'B') to ('A2', 'B2')."""

    def run(rho):
        return fn(Register(rho, ["A", "B"])).state("A2", "B2")

    return process_tomography(run, 4, trace_preserving)


# -- state transfer -----------------------------------------------------------

def transfer_end_atom_atom(reg: Register, src: str, dst: str, params: NoiseParams) -> Register:
    """Move ``src`` onto a fresh atom ``dst`` with two CZ gates, no measurement."""
    cz, _ = controlled_z_atoms(params)
    quarter = rotation_time(PI / 2, params)
    reg = reg.add_zero(dst)
    reg = rot(reg, "y", PI / 2, dst, params)
    reg = idle(reg, quarter, params, src)
    reg = reg.apply(cz, src, dst)
    reg = rot(reg, "y", PI / 2, src, params)
    reg = rot(reg, "y", PI / 2, dst, params)
    # src is left in a product state; its dephasing during the second CZ is harmless
    reg = reg.apply(cz, src, dst)
    reg = reg.discard(src)
    return rot(reg, "y", PI, dst, params)


# residual of the noiseless atom->DFS circuit is [[0, 1], [i, 0]]
_AD_CORRECTION = X @ rotation("z", -PI / 2)


def transfer_end_atom_dfs(reg: Register, src: str, dst: str, params: NoiseParams,
                          idle_wait: bool = True) -> Register:
    """Move atom ``src`` onto a DFS qubit ``dst`` through two aux-DFS gates.

    Between the gates the atom idles while the slow logical ``R_x(-pi/2)``
    runs.  That dephasing commutes with the second gate, after which the
    atom is in a product state, so it cannot affect the output.
    """
    prep = rotation("x", -PI / 2)
    reg = reg.add(np.outer(prep[:, 0], prep[:, 0].conj()), dst)
    reg = zad(reg, src, dst, params)
    reg = rot(reg, "y", PI / 2, src, params)
    reg = reg.apply(ideal(prep), dst)
    if idle_wait:
        reg = idle(reg, max(0.0, params.t_dfs_rot - rotation_time(PI / 2, params)), params, src)
    reg = zad(reg, src, dst, params)
    reg = reg.discard(src)
    return reg.apply(ideal(_AD_CORRECTION), dst)


def transfer_end_dfs_atom(reg: Register, src: str, dst: str, params: NoiseParams) -> Register:
    """Move DFS qubit ``src`` onto a fresh atom ``dst``."""
    reg = reg.add_zero(dst)
    reg = rot(reg, "y", PI / 2, dst, params)
    reg = zad(reg, dst, src, params)
    reg = rot(reg, "y", PI / 2, dst, params)
    reg = reg.apply(ideal(rotation("y", PI / 2)), src)
    reg = zad(reg, dst, src, params)
    return reg.discard(src)


def transfer_end_dfs_dfs(reg: Register, src: str, dst: str, params: NoiseParams) -> Register:
    """DFS to DFS through an intermediate aux atom."""
    reg = transfer_end_dfs_atom(reg, src, "aux", params)
    return transfer_end_atom_dfs(reg, "aux", dst, params)


def transfer_atom_atom_duration(params: NoiseParams) -> float:
    return 5 * PI / (2 * params.omega) + PI / (2 * params.omega_zz)


@lru_cache(maxsize=256)
def transfer_atom_atom(params: NoiseParams) -> BlockResult:
    def fn(reg):
        reg = transfer_end_atom_atom(reg, "A", "A2", params)
        return transfer_end_atom_atom(reg, "B", "B2", params)

    return BlockResult(_pair_channel(fn), transfer_atom_atom_duration(params))


@lru_cache(maxsize=256)
def transfer_atom_dfs(params: NoiseParams, idle_wait: bool = True) -> BlockResult:
    def fn(reg):
        reg = transfer_end_atom_dfs(reg, "A", "A2", params, idle_wait)
        return transfer_end_atom_dfs(reg, "B", "B2", params, idle_wait)

    duration = 2 * params.tau + params.t_dfs_rot
    return BlockResult(_pair_channel(fn), duration)


@lru_cache(maxsize=256)
def transfer_dfs_dfs(params: NoiseParams) -> BlockResult:
    def fn(reg):
        reg = transfer_end_dfs_dfs(reg, "A", "A2", params)
        return transfer_end_dfs_dfs(reg, "B", "B2", params)

    duration = 4 * params.tau + rotation_time(PI / 2, params) * 2 + params.t_dfs_rot
    return BlockResult(_pair_channel(fn), duration)


def transfer(kind: QubitKind, params: NoiseParams) -> BlockResult:
    """Transfer block used inside a repeater of the given technology."""
    return transfer_atom_atom(params) if QubitKind(kind) is QubitKind.ATOM else transfer_dfs_dfs(params)


# -- entanglement swapping ------------------------------------------------------

def swap_time(params: NoiseParams) -> float:
    """Local duration of one connection, classical wait excluded."""
    return 9 * PI / (4 * params.omega) + PI / (4 * params.omega_zz) + params.t_me


def swap_idle_times(params: NoiseParams) -> tuple[float, float, float]:
    w = params.omega
    return (3 * PI / (4 * w), 5 * PI / (4 * w) + PI / (4 * params.omega_zz), PI / (2 * w))


def swap_circuit_atom(reg: Register, a: str, c1: str, c2: str, b: str,
                      t_w: float, params: NoiseParams) -> Register:
    """Teleport ``c1`` onto ``b`` using the pair ``c2``-``b``; bare atoms.

    The Bell measurement is CNOT(c1 -> c2) built from a CZ, followed by
    x-basis readout of ``c1`` and z-readout of ``c2``.  The outer qubits
    idle through the local operations, the measurement and the classical
    wait; ``a`` also idles during the correction on ``b``.
    """
    cz, _ = controlled_z_atoms(params)
    t1, t2, t3 = swap_idle_times(params)
    local = t1 + t2 + t3 + params.t_me
    reg = rot(reg, "y", -PI / 2, c2, params)
    reg = idle(reg, rotation_time(-PI / 2, params), params, c1)
    reg = reg.apply(cz, c1, c2)
    reg = rot(reg, "y", -PI / 2, c1, params)
    reg = rot(reg, "y", PI / 2, c2, params)
    reg = idle(reg, PI / (2 * params.omega), params, c2)
    reg = idle(reg, local + t_w, params, a, b)
    half = rotation_time(PI, params)
    branches = []
    for m1, r1 in enumerate(reg.measure(c1, params.eta)):
        for m2, r in enumerate(r1.measure(c2, params.eta)):
            if m2:
                r = rot(r, "x", PI, b, params)
            r = rot(r, "z", PI, b, params) if m1 else idle(r, half, params, b)
            t4 = 2 * half if m2 else half
            branches.append(idle(r, t4, params, a))
    return branch_sum(branches)


def swap_circuit_dfs(reg: Register, a: str, c1: str, c2: str, b: str,
                     params: NoiseParams) -> Register:
    """DFS teleportation of ``c1`` onto ``b``; ``a`` is untouched."""
    cnot, _ = cnot_dfs(params)
    reg = reg.apply(cnot, c1, c2)
    reg = reg.apply(ideal(rotation("y", -PI / 2)), c1)
    branches = []
    for m1, r1 in enumerate(measure_dfs_circuit(reg, c1, params)):
        for m2, r in enumerate(measure_dfs_circuit(r1, c2, params)):
            if m2:
                r = r.apply(ideal(X), b)
            if m1:
                r = r.apply(ideal(Z), b)
            branches.append(r)
    return branch_sum(branches)


def swap_duration(kind: QubitKind, S_prev: float, params: NoiseParams) -> float:
    if QubitKind(kind) is QubitKind.ATOM:
        return swap_time(params) + S_prev / params.c
    return cnot_dfs(params)[1] + 2 * measure_dfs_duration(params) + S_prev / params.c


def _swap_register(kind: QubitKind, reg: Register, S_prev: float, params: NoiseParams) -> Register:
    if QubitKind(kind) is QubitKind.ATOM:
        return swap_circuit_atom(reg, "A", "C1", "C2", "B", S_prev / params.c, params)
    return swap_circuit_dfs(reg, "A", "C1", "C2", "B", params)


def swap_once(kind: QubitKind, rho_left: np.ndarray, rho_right: np.ndarray,
              S_prev: float, params: NoiseParams,
              pre_wait: tuple[float, float] = (0.0, 0.0)) -> BlockResult:
    """Connect pairs ``A-C1`` and ``C2-B`` into ``A-B``.

    The returned channel acts on the left pair with the right pair held
    fixed.  ``pre_wait`` gives extra idle time for each input pair before
    the connection starts (bare atoms only).
    """
    kind = QubitKind(kind)
    right = np.asarray(rho_right)
    if kind is QubitKind.ATOM and pre_wait[1] > 0:
        right = idle(Register(right, ["C2", "B"]), pre_wait[1], params, "C2", "B").rho

    def run(rho):
        reg = Register(rho, ["A", "C1"])
        if kind is QubitKind.ATOM and pre_wait[0] > 0:
            reg = idle(reg, pre_wait[0], params, "A", "C1")
        reg = reg.add(right, "C2", "B")
        return _swap_register(kind, reg, S_prev, params).state("A", "B")

    ch = process_tomography(run, 4)
    return BlockResult(ch, swap_duration(kind, S_prev, params))


def swap_pre_waits(L: int, S_prev: float, params: NoiseParams) -> list[float]:
    """Idle time of pair ``i = 1..L+1`` before the inside-out schedule reaches it."""
    centre = math.ceil((L + 1) / 2)
    step = S_prev / params.c + swap_time(params)
    return [max(0, abs(centre - i) - 1) * step for i in range(1, L + 2)]


def _merge_order(L: int) -> list[tuple[str, int]]:
    """Inside-out merge order as ('left'|'right', pair index) operations.

    Odd ``L`` (even pair count) grows two segments around the middle and
    joins them last; even ``L`` grows one segment from the centre pair.
    """
    n = L + 1
    if n == 1:
        return []
    if n % 2:
        c = n // 2
        ops = []
        for k in range(1, c + 1):
            ops += [("left", c - k), ("right", c + k)]
        return ops
    lc, rc = n // 2 - 1, n // 2
    ops = []
    for k in range(1, n // 2):
        ops += [("lleft", lc - k), ("rright", rc + k)]
    return ops + [("join", rc)]


def swap_chain(kind: QubitKind, rho: np.ndarray, L: int, S_prev: float,
               params: NoiseParams) -> BlockResult:
    """Connect ``L + 1`` identical pairs of length ``S_prev`` simultaneously.

    The returned channel acts on one input pair with the others fixed; the
    duration is ``ceil(L/2) (t_sw + S_prev/c)``.
    """
    if L < 0:
        raise ValueError("number of connections must be non-negative")
    kind = QubitKind(kind)
    waits = swap_pre_waits(L, S_prev, params) if kind is QubitKind.ATOM else [0.0] * (L + 1)
    duration = math.ceil(L / 2) * (swap_time(params) + S_prev / params.c)
    if L == 0:
        return BlockResult(process_tomography(lambda x: x, 4), 0.0)

    def waited(r, i):
        if waits[i] <= 0:
            return r
        return idle(Register(r, ["A", "B"]), waits[i], params, "A", "B").rho

    n = L + 1
    # index of the pair whose state is the tomography input
    probe = math.ceil(n / 2) - 1

    def run(x):
        pairs = [waited(x if i == probe else rho, i) for i in range(n)]
        return _chain_states(kind, pairs, L, S_prev, params)

    return BlockResult(process_tomography(run, 4), duration)


def _connect(kind, left, right, S_prev, params):
    reg = Register(left, ["A", "C1"]).add(right, "C2", "B")
    return _swap_register(kind, reg, S_prev, params).state("A", "B")


def _chain_states(kind, pairs, L, S_prev, params):
    n = len(pairs)
    if n % 2:
        c = n // 2
        seg = pairs[c]
        for k in range(1, c + 1):
            seg = _connect(kind, pairs[c - k], seg, S_prev, params)
            seg = _connect(kind, seg, pairs[c + k], S_prev, params)
        return seg
    lc, rc = n // 2 - 1, n // 2
    left, right = pairs[lc], pairs[rc]
    for k in range(1, n // 2):
        left = _connect(kind, pairs[lc - k], left, S_prev, params)
        right = _connect(kind, right, pairs[rc + k], S_prev, params)
    return _connect(kind, left, right, S_prev, params)


# -- entanglement purification --------------------------------------------------

def purify_time(params: NoiseParams) -> float:
    return 5 * PI / (2 * params.omega) + PI / (4 * params.omega_zz) + params.t_me


def purify_circuit_atom(reg: Register, kept: tuple[str, str], sac: tuple[str, str],
                        t_w: float, params: NoiseParams) -> Register:
    """One pumping round on bare atoms; returns the coincidence branch on ``kept``.

    Local x-rotations (+pi/2 at node A, -pi/2 at node B), bilateral CNOT with
    the kept pair as control, z-readout of the sacrificed pair.  The kept
    qubits idle during the target rotations, the readout and the classical
    exchange; the A-side kept qubit idles a further pi/2Omega because its
    rotation finishes early.
    """
    (a2, b2), (a1, b1) = kept, sac
    cz, _ = controlled_z_atoms(params)
    t_long = rotation_time(-PI / 2, params)
    t_short = rotation_time(PI / 2, params)
    for q in (a1, a2):
        reg = rot(reg, "x", PI / 2, q, params)
    reg = idle(reg, t_long - t_short, params, a1)
    for q in (b1, b2):
        reg = rot(reg, "x", -PI / 2, q, params)
    for q in (a1, b1):
        reg = rot(reg, "y", -PI / 2, q, params)
    reg = idle(reg, t_long, params, a2, b2)
    reg = reg.apply(cz, a2, a1).apply(cz, b2, b1)
    for q in (a1, b1):
        reg = rot(reg, "y", PI / 2, q, params)
    reg = idle(reg, t_short + params.t_me, params, a2, b2)
    reg = idle(reg, t_w + (t_long - t_short), params, a2)
    reg = idle(reg, t_w, params, b2)
    return _coincidence(reg, a1, b1, params.eta)


def _coincidence(reg, a1, b1, eta):
    ra = reg.measure(a1, eta)
    return ra[0].measure(b1, eta)[0] + ra[1].measure(b1, eta)[1]


def purify_circuit_aux_dfs(reg: Register, kept: tuple[str, str], sac: tuple[str, str],
                           params: NoiseParams) -> Register:
    """Pump a DFS pair with a pair of bare atoms.

    The bilateral CNOT uses the aux-DFS gate directly on the sacrificed
    atom; conjugating with logical X turns C(-Z) into CZ.
    """
    (a2, b2), (a1, b1) = kept, sac
    reg = rot(reg, "x", PI / 2, a1, params).apply(ideal(rotation("x", PI / 2)), a2)
    reg = rot(reg, "x", -PI / 2, b1, params).apply(ideal(rotation("x", -PI / 2)), b2)
    for atom, dfs in ((a1, a2), (b1, b2)):
        reg = rot(reg, "y", -PI / 2, atom, params)
        reg = reg.apply(ideal(X), dfs)
        reg = zad(reg, atom, dfs, params)
        reg = reg.apply(ideal(X), dfs)
        reg = rot(reg, "y", PI / 2, atom, params)
    return _coincidence(reg, a1, b1, params.eta)


def purify_circuit_dfs_dfs(reg: Register, kept: tuple[str, str], sac: tuple[str, str],
                           params: NoiseParams) -> Register:
    (a2, b2), (a1, b1) = kept, sac
    cnot, _ = cnot_dfs(params)
    reg = reg.apply(ideal(rotation("x", PI / 2)), a1).apply(ideal(rotation("x", PI / 2)), a2)
    reg = reg.apply(ideal(rotation("x", -PI / 2)), b1).apply(ideal(rotation("x", -PI / 2)), b2)
    reg = reg.apply(cnot, a2, a1).apply(cnot, b2, b1)
    out = None
    for ma, ra in enumerate(measure_dfs_circuit(reg, a1, params, aux="auxA")):
        hit = measure_dfs_circuit(ra, b1, params, aux="auxB")[ma]
        out = hit if out is None else out + hit
    return out


def purify_duration(kind_pair: KindPair, S_n: float, params: NoiseParams) -> float:
    kind_pair = KindPair(kind_pair)
    t_w = S_n / params.c
    if kind_pair is KindPair.ATOM_ATOM:
        return purify_time(params) + t_w
    if kind_pair is KindPair.AUX_DFS:
        return (rotation_time(-PI / 2, params) * 2 + rotation_time(PI / 2, params)
                + params.tau + params.t_me + t_w)
    return cnot_dfs(params)[1] + measure_dfs_duration(params) + t_w


def purify_channel(kind_pair: KindPair, sacrificed: np.ndarray, S_n: float,
                   params: NoiseParams) -> Channel:
    """Unnormalized success branch acting on the kept pair."""
    kind_pair = KindPair(kind_pair)
    sacrificed = np.asarray(sacrificed)

    def run(rho):
        reg = Register(rho, ["A2", "B2"]).add(sacrificed, "A1", "B1")
        kept, sac = ("A2", "B2"), ("A1", "B1")
        if kind_pair is KindPair.ATOM_ATOM:
            out = purify_circuit_atom(reg, kept, sac, S_n / params.c, params)
        elif kind_pair is KindPair.AUX_DFS:
            out = purify_circuit_aux_dfs(reg, kept, sac, params)
        else:
            out = purify_circuit_dfs_dfs(reg, kept, sac, params)
        return out.state("A2", "B2")

    return process_tomography(run, 4, trace_preserving=False)


class PurificationFailed(ValueError):
    """The coincidence branch has zero probability."""


def purify_step(kind_pair: KindPair, kept: np.ndarray, sacrificed: np.ndarray,
                S_n: float, params: NoiseParams) -> BlockResult:
    ch = purify_channel(kind_pair, sacrificed, S_n, params)
    p = float(np.real(np.trace(ch(np.asarray(kept)))))
    if p <= tolerance():
        raise PurificationFailed("purification success probability is zero")
    return BlockResult(ch, purify_duration(kind_pair, S_n, params), p)


@dataclass(frozen=True)
class FixedPoint:
    f_max: float
    steps: int
    below_threshold: bool
    converged: bool
    success_probability: float
    state: np.ndarray


class OscillationError(RuntimeError):
    """Pumping iteration oscillates instead of converging."""


def pump(channel: Channel, kept: np.ndarray) -> tuple[np.ndarray, float]:
    out = channel(kept)
    p = float(np.real(np.trace(out)))
    if p <= tolerance():
        raise PurificationFailed("purification success probability is zero")
    return out / p, p


def pump_to_fixed_point(kind_pair: KindPair, f0: float, family: StateFamily | str,
                        S_n: float, params: NoiseParams, tol: float = 1e-10,
                        max_steps: int = 200) -> FixedPoint:
    """Iterate entanglement pumping with fresh pairs of fidelity ``f0``.

    The purification circuit is compressed once into a map on the kept
    pair, then applied repeatedly.  The local rotations cycle the error of
    the kept pair through the three non-trivial Bell states, so a single
    round can leave the fidelity unchanged while the state still moves;
    convergence therefore requires ``|f_{k+1} - f_k| < tol`` for three
    consecutive rounds.
    """
    if not 0.5 < f0 <= 1.0:
        raise ValueError(f"f0={f0} outside (0.5, 1]")
    fresh = initial_state(family, f0)
    ch = purify_channel(kind_pair, fresh, S_n, params)
    rho, p = fresh, 1.0
    fs = [f0]
    for step in range(1, max_steps + 1):
        rho, p = pump(ch, rho)
        fs.append(entanglement_fidelity(rho))
        if len(fs) > _CYCLE and all(abs(a - b) < tol for a, b in zip(fs[-_CYCLE - 1:], fs[-_CYCLE:])):
            f = fs[-1]
            return FixedPoint(f, step, f < f0, True, p, rho)
    if _is_periodic(fs, tol):
        raise OscillationError(f"pumping settles into a cycle (last change {fs[-1] - fs[-2]:.3e})")
    f = fs[-1]
    return FixedPoint(f, max_steps, f < f0, False, p, rho)


_CYCLE = 3


def _is_periodic(fs: list[float], tol: float) -> bool:
    """True when the tail repeats with period 2 or 3 but is not constant."""
    tail = fs[-12:]
    if max(tail) - min(tail) < tol:
        return False
    return any(all(abs(tail[i] - tail[i - k]) < max(tol, 1e-9) for i in range(k, len(tail)))
               for k in (2, 3))
