"""Labelled qubit register used to run circuits with feed-forward."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .channels import Channel, _permute, apply_to_qubits, partial_trace


class Register:
    """An (possibly unnormalized) density matrix over named qubits.

    Every operation returns a new register; instances are never mutated.
    Measurements split a register into outcome branches which callers
    combine again with ``+`` after applying branch-dependent corrections.
    """

    __slots__ = ("rho", "labels")

    def __init__(self, rho: np.ndarray, labels: Sequence[str]):
        labels = list(labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels {labels}")
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (2 ** len(labels),) * 2:
            raise ValueError(f"state of shape {rho.shape} does not fit labels {labels}")
        self.rho = rho
        self.labels = labels

    @classmethod
    def from_state(cls, rho: np.ndarray, labels: Sequence[str]) -> "Register":
        return cls(rho, labels)

    def _index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no qubit labelled {label!r} in {self.labels}") from None

    def add(self, rho: np.ndarray, *labels: str) -> "Register":
        """Append fresh qubits prepared in ``rho``."""
        return Register(np.kron(self.rho, rho), self.labels + list(labels))

    def add_zero(self, *labels: str) -> "Register":
        d = 2 ** len(labels)
        z = np.zeros((d, d), dtype=complex)
        z[0, 0] = 1.0
        return self.add(z, *labels)

    def apply(self, channel: Channel, *labels: str) -> "Register":
        idx = [self._index(q) for q in labels]
        return Register(apply_to_qubits(channel, self.rho, idx), self.labels)

    def project(self, label: str, outcome: int) -> "Register":
        """Keep the ``outcome`` branch of a z-measurement and drop the qubit."""
        k = self._index(label)
        n = len(self.labels)
        t = self.rho.reshape([2] * (2 * n))
        t = np.take(np.take(t, outcome, axis=n + k), outcome, axis=k)
        rest = [q for q in self.labels if q != label]
        return Register(t.reshape(2 ** len(rest), 2 ** len(rest)), rest)

    def measure(self, label: str, eta: float) -> list["Register"]:
        """Two-outcome POVM with correctness probability ``eta``.

        Returns the unnormalized branches ``[outcome 0, outcome 1]`` with the
        measured qubit removed.
        """
        b0, b1 = self.project(label, 0), self.project(label, 1)
        return [
            Register(eta * b0.rho + (1 - eta) * b1.rho, b0.labels),
            Register(eta * b1.rho + (1 - eta) * b0.rho, b0.labels),
        ]

    def discard(self, *labels: str) -> "Register":
        keep = [q for q in self.labels if q not in labels]
        for q in labels:
            self._index(q)
        return Register(partial_trace(self.rho, [self._index(q) for q in keep]), keep)

    def reorder(self, labels: Sequence[str]) -> "Register":
        labels = list(labels)
        if sorted(labels) != sorted(self.labels):
            raise ValueError(f"cannot reorder {self.labels} as {labels}")
        order = [labels.index(q) for q in self.labels]
        return Register(_permute(self.rho, order), labels)

    def state(self, *labels: str) -> np.ndarray:
        """Reduced state of ``labels`` in the given order."""
        return partial_trace(self.rho, [self._index(q) for q in labels])

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def __add__(self, other: "Register") -> "Register":
        other = other.reorder(self.labels)
        return Register(self.rho + other.rho, self.labels)

    def __mul__(self, scale: float) -> "Register":
        return Register(self.rho * scale, self.labels)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Register(labels={self.labels}, trace={self.trace:.6g})"


def branch_sum(branches: Sequence[Register]) -> Register:
    out = branches[0]
    for b in branches[1:]:
        out = out + b
    return out
