"""Dense density-matrix and channel algebra for small qubit registers.

Conventions
-----------
* Register index 0 is the leftmost tensor factor (big-endian basis labels).
* Channels are stored in superoperator form acting on column-stacked
  density matrices, ``vec(rho) = rho.reshape(-1, order="F")``.  Under this
  convention a Kraus operator ``E`` contributes ``kron(conj(E), E)``.
* Post-selected maps are kept unnormalized (trace non-increasing); the
  caller normalizes when reading out a state.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

CONVENTION = "column-stacking"
EIG_CUTOFF = 1e-12


def tolerance() -> float:
    """CP/TP check tolerance, overridable through ``QREPSIM_TOL``."""
    return float(os.environ.get("QREPSIM_TOL", "1e-10"))


def _num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


@dataclass(frozen=True, eq=False)
class Channel:
    """Linear map between operator spaces in superoperator form.

    ``superop`` has shape ``(dim_out**2, dim_in**2)``.  Square channels
    (``dim_in == dim_out``) can be composed and embedded; non-square ones
    appear as measurement branch maps that consume qubits.
    """

    superop: np.ndarray
    dim_in: int
    dim_out: int
    trace_preserving: bool = field(default=True)

    def __post_init__(self):
        s = np.asarray(self.superop, dtype=complex)
        if s.shape != (self.dim_out**2, self.dim_in**2):
            raise ValueError(
                f"superoperator shape {s.shape} does not match "
                f"dims {self.dim_in}->{self.dim_out}"
            )
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "superop", s)

    @property
    def dim(self) -> int:
        if self.dim_in != self.dim_out:
            raise ValueError("channel is not square")
        return self.dim_in

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho)
        if rho.shape != (self.dim_in, self.dim_in):
            raise ValueError(f"state shape {rho.shape} does not match dim {self.dim_in}")
        return unvec(self.superop @ vec(rho), self.dim_out)

    @cached_property
    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ij |i><j| (x) E(|i><j|)``, input factor first."""
        din, dout = self.dim_in, self.dim_out
        # column i + din*j of the superop is vec(E(|i><j|))
        blocks = self.superop.reshape(dout * dout, din, din, order="F")
        # blocks[:, i, j] = vec(E(|i><j|)); unvec each
        outs = blocks.reshape(dout, dout, din, din, order="F")  # [a, b, i, j]
        return outs.transpose(2, 0, 3, 1).reshape(din * dout, din * dout)

    def is_cp(self, tol: float | None = None) -> bool:
        tol = tolerance() if tol is None else tol
        j = self.choi
        if np.abs(j - j.conj().T).max() > tol:
            return False
        return bool(np.linalg.eigvalsh((j + j.conj().T) / 2).min() >= -tol)

    def is_tp(self, tol: float | None = None) -> bool:
        tol = tolerance() if tol is None else tol
        return bool(np.abs(_choi_trace_out(self) - np.eye(self.dim_in)).max() <= tol)

    def kraus(self) -> list[np.ndarray]:
        return channel_to_kraus(self)

    def to_dict(self) -> dict:
        """Serialize as a flat row-major list of ``[re, im]`` pairs plus header."""
        flat = self.superop.reshape(-1)
        return {
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
            "convention": CONVENTION,
            "trace_preserving": self.trace_preserving,
            "entries": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Channel":
        if data.get("convention") != CONVENTION:
            raise ValueError(f"unsupported vectorization convention {data.get('convention')!r}")
        din, dout = int(data["dim_in"]), int(data["dim_out"])
        entries = np.array([complex(re, im) for re, im in data["entries"]])
        return cls(entries.reshape(dout**2, din**2), din, dout, bool(data["trace_preserving"]))


def _choi_trace_out(c: Channel) -> np.ndarray:
    j = c.choi.reshape(c.dim_in, c.dim_out, c.dim_in, c.dim_out)
    return np.einsum("iaja->ij", j)


def kraus_to_channel(kraus: Sequence[np.ndarray]) -> Channel:
    ops = [np.asarray(k, dtype=complex) for k in kraus]
    if not ops:
        raise ValueError("empty Kraus set")
    dout, din = ops[0].shape
    for k in ops:
        if k.shape != (dout, din):
            raise ValueError("Kraus operators have mismatched shapes")
    superop = sum(np.kron(k.conj(), k) for k in ops)
    gram = sum(k.conj().T @ k for k in ops)
    tp = bool(np.abs(gram - np.eye(din)).max() <= tolerance())
    return Channel(superop, din, dout, tp)


def channel_to_kraus(c: Channel) -> list[np.ndarray]:
    """Kraus operators from the eigendecomposition of the Choi matrix.

    Raises
    ------
    ValueError
        If the Choi matrix has an eigenvalue below ``-tolerance()``.
    """
    j = c.choi
    j = (j + j.conj().T) / 2
    vals, vecs = np.linalg.eigh(j)
    if vals.min() < -tolerance():
        raise ValueError(f"map is not completely positive (min Choi eigenvalue {vals.min():.3e})")
    ops = []
    for lam, v in zip(vals, vecs.T):
        if lam > EIG_CUTOFF:
            ops.append(np.sqrt(lam) * v.reshape(c.dim_in, c.dim_out).T)
    if not ops:
        ops.append(np.zeros((c.dim_out, c.dim_in), dtype=complex))
    return ops


def unitary_channel(u: np.ndarray) -> Channel:
    return kraus_to_channel([u])


def identity_channel(dim: int) -> Channel:
    return Channel(np.eye(dim * dim), dim, dim, True)


def compose(second: Channel, first: Channel) -> Channel:
    """Channel applying ``first`` then ``second``."""
    if first.dim_out != second.dim_in:
        raise ValueError(f"cannot compose: {first.dim_out} != {second.dim_in}")
    return Channel(
        second.superop @ first.superop,
        first.dim_in,
        second.dim_out,
        first.trace_preserving and second.trace_preserving,
    )


def compose_all(*channels: Channel) -> Channel:
    """Compose in application order: ``compose_all(a, b, c)`` applies a first."""
    out = channels[0]
    for c in channels[1:]:
        out = compose(c, out)
    return out


def _check_targets(targets: Sequence[int], n: int) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate qubit index in {targets}")
    for t in targets:
        if not 0 <= t < n:
            raise ValueError(f"qubit index {t} out of range for {n} qubits")
    return targets


def _superop_tensor(c: Channel) -> np.ndarray:
    """Reshape a square superop into ``T[b, a, e, f]`` with
    ``E(rho)[a, b] = sum T[b, a, e, f] rho[f, e]``."""
    d = c.dim
    return c.superop.reshape(d, d, d, d)


def apply_to_qubits(c: Channel, rho: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply a square channel to ``targets`` of an ``n``-qubit state."""
    rho = np.asarray(rho)
    n = _num_qubits(rho.shape[0])
    targets = _check_targets(targets, n)
    k = len(targets)
    if c.dim_in != 2**k:
        raise ValueError(f"channel dim {c.dim_in} does not act on {k} qubits")
    rest = [q for q in range(n) if q not in targets]
    perm = targets + rest
    t = rho.reshape([2] * (2 * n))
    t = t.transpose(perm + [n + p for p in perm])
    dt, dr = 2**k, 2 ** (n - k)
    t = t.reshape(dt, dr, dt, dr)
    out = np.einsum("baef,fxey->axby", _superop_tensor(c), t)
    out = out.reshape([2] * (2 * n))
    inv = np.argsort(perm).tolist()
    out = out.transpose(inv + [n + p for p in inv])
    return out.reshape(2**n, 2**n)


def embed(c: Channel, targets: Sequence[int], system_qubits: int) -> Channel:
    """Lift ``c`` to act on ``targets`` of a ``system_qubits`` register.

    The order of ``targets`` matters: ``targets[0]`` receives the channel's
    first tensor factor.
    """
    targets = _check_targets(targets, system_qubits)
    if c.dim_in != c.dim_out or c.dim_in != 2 ** len(targets):
        raise ValueError("channel dimension does not match number of targets")
    d = 2**system_qubits
    basis = np.eye(d * d, dtype=complex)
    cols = [vec(apply_to_qubits(c, unvec(basis[:, m], d), targets)) for m in range(d * d)]
    return Channel(np.stack(cols, axis=1), d, d, c.trace_preserving)


def partial_trace(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduced state on ``keep`` (in the given order)."""
    rho = np.asarray(rho)
    n = _num_qubits(rho.shape[0])
    keep = _check_targets(keep, n)
    if not keep:
        raise ValueError("keep must be nonempty")
    drop = [q for q in range(n) if q not in keep]
    t = rho.reshape([2] * (2 * n))
    perm = keep + drop
    t = t.transpose(perm + [n + p for p in perm])
    dk, dd = 2 ** len(keep), 2 ** len(drop)
    return np.einsum("axbx->ab", t.reshape(dk, dd, dk, dd))


def process_tomography(fn: Callable[[np.ndarray], np.ndarray], dim_in: int,
                       trace_preserving: bool = True) -> Channel:
    """Reconstruct a linear map by pushing the basis ``|i><j|`` through ``fn``."""
    cols = []
    dim_out = None
    for j in range(dim_in):
        for i in range(dim_in):
            e = np.zeros((dim_in, dim_in), dtype=complex)
            e[i, j] = 1.0
            out = np.asarray(fn(e), dtype=complex)
            dim_out = out.shape[0]
            cols.append((i + dim_in * j, vec(out)))
    cols.sort(key=lambda x: x[0])
    return Channel(np.stack([c for _, c in cols], axis=1), dim_in, dim_out, trace_preserving)


# -- states -----------------------------------------------------------------

_S = 1 / np.sqrt(2)
BELL_STATES = {
    "phi+": np.array([_S, 0, 0, _S], dtype=complex),
    "phi-": np.array([_S, 0, 0, -_S], dtype=complex),
    "psi+": np.array([0, _S, _S, 0], dtype=complex),
    "psi-": np.array([0, _S, -_S, 0], dtype=complex),
}
PHI_PLUS = BELL_STATES["phi+"]


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def entanglement_fidelity(rho: np.ndarray) -> float:
    """Overlap ``<Phi+|rho|Phi+>`` of a two-qubit state."""
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ValueError("entanglement fidelity needs a two-qubit state")
    return float(np.real(PHI_PLUS.conj() @ rho @ PHI_PLUS))


def _check_fidelity(f0: float) -> None:
    if not 0.0 <= f0 <= 1.0:
        raise ValueError(f"fidelity {f0} outside [0, 1]")


def werner_state(f0: float) -> np.ndarray:
    _check_fidelity(f0)
    rest = (1 - f0) / 3
    return (f0 * projector(BELL_STATES["phi+"])
            + rest * (projector(BELL_STATES["phi-"]) + projector(BELL_STATES["psi+"])
                      + projector(BELL_STATES["psi-"])))


def binary_state(f0: float) -> np.ndarray:
    _check_fidelity(f0)
    return f0 * projector(BELL_STATES["phi+"]) + (1 - f0) * projector(BELL_STATES["phi-"])


def is_density_matrix(rho: np.ndarray, tol: float | None = None) -> bool:
    tol = tolerance() if tol is None else tol
    rho = np.asarray(rho)
    if np.abs(rho - rho.conj().T).max() > tol:
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return bool(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() >= -tol)


def constant_channel(target: np.ndarray) -> Channel:
    """CPTP map sending every input state to ``target``."""
    target = np.asarray(target, dtype=complex)
    d = target.shape[0]
    # E(rho) = tr(rho) * target
    superop = np.outer(vec(target), vec(np.eye(d)))
    return Channel(superop, d, d, True)


# -- compression --------------------------------------------------------------

Pipeline = Iterable[tuple[Channel, Sequence[int]]]


def _project_qubit(rho: np.ndarray, qubit: int, outcome: int) -> np.ndarray:
    n = _num_qubits(rho.shape[0])
    p = np.zeros((2, 2), dtype=complex)
    p[outcome, outcome] = 1.0
    return apply_to_qubits(kraus_to_channel([p]), rho, [qubit]) if n else rho


def compress(pipeline: Pipeline, system_qubits: int, keep: Sequence[int],
             inputs: Sequence[int] | None = None,
             postselect: Mapping[int, int] | None = None,
             reference: np.ndarray | None = None) -> tuple[Channel, float]:
    """Collapse a circuit on a larger register into one two-qubit map.

    The two-qubit input is placed on ``inputs`` (default ``keep``); every
    other qubit starts in ``|0>``.  Each ``(channel, targets)`` element is
    applied in order, the ``postselect`` projectors ``{qubit: outcome}`` are
    applied, and all qubits but ``keep`` are traced out.  The effective map
    is obtained by process tomography over the 16 operator basis elements.

    Returns
    -------
    channel, success_probability
        With ``postselect`` the channel is the unnormalized branch map and
        the probability is its trace on ``reference`` (default ``|00><00|``).
    """
    pipeline = list(pipeline)
    if not pipeline:
        raise ValueError("empty pipeline")
    keep = _check_targets(keep, system_qubits)
    if len(keep) != 2:
        raise ValueError("keep must name exactly two qubits")
    inputs = keep if inputs is None else _check_targets(inputs, system_qubits)
    others = [q for q in range(system_qubits) if q not in inputs]

    def run(x: np.ndarray) -> np.ndarray:
        rest = np.zeros((2 ** len(others),) * 2, dtype=complex)
        rest[0, 0] = 1.0
        rho = np.kron(x, rest)
        order = list(inputs) + others
        rho = _permute(rho, order)
        for c, targets in pipeline:
            rho = apply_to_qubits(c, rho, targets)
        for q, m in (postselect or {}).items():
            rho = _project_qubit(rho, q, m)
        return partial_trace(rho, keep)

    channel = process_tomography(run, 4, trace_preserving=not postselect)
    if not postselect:
        return channel, 1.0
    ref = projector(ket("00")) if reference is None else reference
    prob = float(np.real(np.trace(channel(ref))))
    if prob <= tolerance():
        raise ValueError("post-selected branch has zero probability on the reference input")
    return channel, prob


def _permute(rho: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """Reorder factors: factor ``k`` of ``rho`` becomes register qubit ``order[k]``."""
    n = len(order)
    t = rho.reshape([2] * (2 * n))
    inv = np.argsort(order).tolist()
    return t.transpose(inv + [n + p for p in inv]).reshape(2**n, 2**n)
