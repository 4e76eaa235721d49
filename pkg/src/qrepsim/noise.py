"""Noisy gates, memories and measurements for bare atoms and DFS qubits.

Atomic qubits dephase at rate ``gamma`` during every gate and while idle.
DFS qubits are simulated at the logical level: their rotations and storage
are ideal, and all noise enters through the dephasing auxiliary atom that
mediates two-qubit gates and measurements.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .channels import Channel, compose, compose_all, kraus_to_channel, process_tomography, unitary_channel
from .register import Register

TWO_PI = 2 * math.pi

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
# controlled-(-Z): control |1> applies -Z = diag(-1, 1) to the target
CMZ = np.diag([1, 1, -1, 1]).astype(complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


class PauliAxis(enum.Enum):
    IDENTITY = "0"
    X = "x"
    Y = "y"
    Z = "z"
    ZZ = "zz"


class QubitKind(enum.Enum):
    ATOM = "ATOM"
    DFS = "DFS"


_PAULI = {PauliAxis.IDENTITY: I2, PauliAxis.X: X, PauliAxis.Y: Y, PauliAxis.Z: Z}


@dataclass(frozen=True)
class NoiseParams:
    """Physical parameters; SI units (s, 1/s, rad/s, m/s).

    ``omega_zz`` defaults to ``0.1 * omega``.  ``t_dfs_rot`` is the duration
    of a slow logical DFS rotation; it only matters as idle time of an
    auxiliary atom that waits for one.
    """

    gamma: float = 10.0
    eta: float = 0.99
    omega: float = TWO_PI * 50e3
    omega_zz: float | None = None
    tau: float = 1e-3
    t_me: float = 10e-6
    t0: float = 10e-6
    c: float = 3e8
    t_dfs_rot: float = 2.5e-3

    def __post_init__(self):
        if self.omega_zz is None:
            object.__setattr__(self, "omega_zz", 0.1 * self.omega)
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if not 0.5 <= self.eta <= 1.0:
            raise ValueError(f"eta={self.eta} outside [0.5, 1]")
        for name in ("omega", "omega_zz", "tau", "t_me", "t0", "c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.t_dfs_rot < 0:
            raise ValueError("t_dfs_rot must be non-negative")

    def with_(self, **changes) -> "NoiseParams":
        return replace(self, **changes)


NOISELESS = NoiseParams(gamma=0.0, eta=1.0)


def rotation(axis: PauliAxis | str, theta: float) -> np.ndarray:
    """Ideal ``exp(-i theta sigma / 2)``."""
    s = _PAULI[PauliAxis(axis)]
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * s


def zz_unitary(xi: float) -> np.ndarray:
    return np.diag(np.exp(-0.5j * xi * np.array([1, -1, -1, 1])))


def positive_angle(theta: float) -> float:
    """Equivalent rotation angle in ``[0, 2 pi)``; drives only run forwards."""
    return theta % TWO_PI


def rotation_time(theta: float, params: NoiseParams) -> float:
    return positive_angle(theta) / (2 * params.omega)


def dephase_probs(gamma: float, t: float) -> tuple[float, float]:
    e = math.exp(-gamma * t)
    return (1 + e) / 2, (1 - e) / 2


@lru_cache(maxsize=4096)
def dephase(gamma: float, t: float) -> Channel:
    """Single-qubit dephasing ``p1 rho + p2 Z rho Z`` after time ``t``."""
    if t < 0:
        raise ValueError(f"negative duration {t}")
    p1, p2 = dephase_probs(gamma, t)
    # diagonal in the computational basis: coherences scale by p1 - p2
    d = p1 - p2
    return Channel(np.diag([1, d, d, 1]).astype(complex), 2, 2, True)


def liouvillian(h: np.ndarray, gamma: float) -> np.ndarray:
    """Column-stacked generator of ``-i[h, rho] + gamma/2 (Z rho Z - rho)``."""
    eye = np.eye(2)
    return (-1j * (np.kron(eye, h) - np.kron(h.T, eye))
            + gamma / 2 * (np.kron(Z.conj(), Z) - np.eye(4)))


@lru_cache(maxsize=4096)
def noisy_rotation(axis: PauliAxis | str, theta: float, params: NoiseParams) -> Channel:
    """Rotation by ``theta`` driven at Rabi frequency ``omega`` under dephasing."""
    axis = PauliAxis(axis)
    if axis in (PauliAxis.IDENTITY, PauliAxis.ZZ):
        raise ValueError("noisy_rotation needs a single-qubit axis x, y or z")
    t = rotation_time(theta, params)
    if axis is PauliAxis.Z:
        return compose(dephase(params.gamma, t), unitary_channel(rotation(axis, theta)))
    gen = liouvillian(params.omega * _PAULI[axis], params.gamma)
    return Channel(expm(gen * t), 2, 2, True)


def from_kraus_pair(a: Channel, b: Channel) -> Channel:
    """Tensor product of two single-qubit channels."""
    ka, kb = a.kraus(), b.kraus()
    return kraus_to_channel([np.kron(x, y) for x in ka for y in kb])


@lru_cache(maxsize=256)
def ising_gate(xi: float, params: NoiseParams) -> Channel:
    """``exp(-i xi ZZ / 2)`` with independent dephasing of both qubits."""
    t = positive_angle(xi) / (2 * params.omega_zz)
    return compose(from_kraus_pair(dephase(params.gamma, t), dephase(params.gamma, t)),
                   unitary_channel(zz_unitary(xi)))


def controlled_z_duration(params: NoiseParams) -> float:
    return math.pi / (4 * params.omega_zz) + 3 * math.pi / (4 * params.omega)


@lru_cache(maxsize=256)
def controlled_z_atoms(params: NoiseParams) -> tuple[Channel, float]:
    """Noisy CZ on two atoms: Ising(pi/2) followed by R_z(3pi/2) on both."""
    rz = noisy_rotation(PauliAxis.Z, 1.5 * math.pi, params)
    ch = compose(from_kraus_pair(rz, rz), ising_gate(math.pi / 2, params))
    return ch, controlled_z_duration(params)


def povm_measure(eta: float) -> tuple[Channel, Channel]:
    """Branch maps (qubit -> scalar) of the noisy z-measurement."""
    if not 0.5 <= eta <= 1.0:
        raise ValueError(f"eta={eta} outside [0.5, 1]")
    a, b = math.sqrt(eta), math.sqrt(1 - eta)
    bra0 = np.array([[1, 0]], dtype=complex)
    bra1 = np.array([[0, 1]], dtype=complex)
    m0 = kraus_to_channel([a * bra0, b * bra1])
    m1 = kraus_to_channel([a * bra1, b * bra0])
    return (_mark_branch(m0), _mark_branch(m1))


def _mark_branch(c: Channel) -> Channel:
    return Channel(c.superop, c.dim_in, c.dim_out, False)


@lru_cache(maxsize=256)
def controlled_minus_z_aux_dfs(params: NoiseParams) -> tuple[Channel, float]:
    """C(-Z) on (aux, DFS) with the aux dephasing for the gate time ``tau``."""
    deph = from_kraus_pair(dephase(params.gamma, params.tau), Channel(np.eye(4), 2, 2, True))
    return compose(deph, unitary_channel(CMZ)), params.tau


# -- aux-mediated DFS gates ----------------------------------------------------

def ideal(u: np.ndarray) -> Channel:
    return unitary_channel(u)


def rot(reg: Register, axis: str, theta: float, q: str, params: NoiseParams) -> Register:
    """Noisy rotation of the atom ``q``."""
    return reg.apply(noisy_rotation(PauliAxis(axis), theta, params), q)


def idle(reg: Register, t: float, params: NoiseParams, *qubits: str) -> Register:
    if t <= 0:
        return reg
    ch = dephase(params.gamma, t)
    for q in qubits:
        reg = reg.apply(ch, q)
    return reg


def zad(reg: Register, aux: str, dfs: str, params: NoiseParams) -> Register:
    return reg.apply(controlled_minus_z_aux_dfs(params)[0], aux, dfs)


def copy_to_aux(reg: Register, dfs: str, aux: str, params: NoiseParams,
                second_angle: float = math.pi / 2) -> Register:
    """Prepare a fresh aux holding the z-value of ``dfs``.

    With the default second rotation the aux ends in ``|d>``; with
    ``-pi/2`` it ends in ``|1 - d>``.
    """
    reg = reg.add_zero(aux)
    reg = rot(reg, "y", math.pi / 2, aux, params)
    reg = zad(reg, aux, dfs, params)
    return rot(reg, "y", second_angle, aux, params)


def cmz_dfs_dfs_circuit(reg: Register, control: str, target: str, params: NoiseParams,
                        aux: str = "aux") -> Register:
    """Controlled-(-Z) between two DFS qubits mediated by one aux atom.

    The aux copies ``[target == 0]``, kicks a phase onto ``control`` through
    a second aux-DFS gate, and is read out in the x basis; the outcome
    selects an ideal logical Z correction on ``target``.
    """
    reg = copy_to_aux(reg, target, aux, params, second_angle=-math.pi / 2)
    # aux = [t == 0]; phase -1 where aux == 1 and control == 1
    reg = reg.apply(ideal(X), control)
    reg = zad(reg, aux, control, params)
    reg = reg.apply(ideal(X), control)
    reg = rot(reg, "y", math.pi / 2, aux, params)
    b0, b1 = reg.measure(aux, params.eta)
    # outcome 1 leaves a relative sign between target == 0 and target == 1
    return b0 + b1.apply(ideal(Z), target)


def cmz_dfs_dfs_duration(params: NoiseParams) -> float:
    return (math.pi / (4 * params.omega) + rotation_time(-math.pi / 2, params)
            + math.pi / (4 * params.omega) + 2 * params.tau + params.t_me)


@lru_cache(maxsize=256)
def controlled_minus_z_dfs_dfs(params: NoiseParams) -> tuple[Channel, float]:
    """Deterministic two-DFS C(-Z) (qubit 0 control), aux traced out."""

    def run(rho):
        return cmz_dfs_dfs_circuit(Register(rho, ["c", "t"]), "c", "t", params).state("c", "t")

    return process_tomography(run, 4), cmz_dfs_dfs_duration(params)


RY_PLUS = rotation(PauliAxis.Y, math.pi / 2)
RY_MINUS = rotation(PauliAxis.Y, -math.pi / 2)


@lru_cache(maxsize=256)
def cnot_dfs(params: NoiseParams) -> tuple[Channel, float]:
    """CNOT between DFS qubits (qubit 0 control) from C(-Z) and ideal rotations.

    ``R_y(pi/2) (-Z) R_y(-pi/2) = -X``; the sign is removed by a logical Z
    on the control.
    """
    cmz, t = controlled_minus_z_dfs_dfs(params)
    pre = ideal(np.kron(I2, RY_MINUS))
    post = ideal(np.kron(Z, RY_PLUS))
    return compose_all(pre, cmz, post), t


def measure_dfs_circuit(reg: Register, dfs: str, params: NoiseParams,
                        aux: str = "aux") -> list[Register]:
    """Read a DFS qubit through an aux atom; the DFS qubit is consumed."""
    reg = copy_to_aux(reg, dfs, aux, params)
    reg = reg.discard(dfs)
    return reg.measure(aux, params.eta)


def measure_dfs_duration(params: NoiseParams) -> float:
    return math.pi / (2 * params.omega) + params.tau + params.t_me


@lru_cache(maxsize=256)
def measure_dfs(params: NoiseParams) -> tuple[Channel, Channel]:
    """Outcome branch maps (DFS qubit -> scalar) of the aux-mediated readout."""
    branches = []
    for m in (0, 1):
        def run(rho, m=m):
            return measure_dfs_circuit(Register(rho, ["d"]), "d", params)[m].rho
        branches.append(process_tomography(run, 2, trace_preserving=False))
    return tuple(branches)
