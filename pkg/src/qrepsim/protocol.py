"""Nested repeater protocol: timing model and level-by-level fidelities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blocks import (
    KindPair,
    StateFamily,
    initial_state,
    purify_step,
    purify_time,
    swap_chain,
    swap_time,
    transfer_atom_atom_duration,
    transfer_atom_dfs,
    transfer_dfs_dfs,
    transfer_atom_atom,
)
from .channels import entanglement_fidelity
from .noise import NoiseParams, QubitKind, idle
from .register import Register


@dataclass(frozen=True)
class RepeaterConfig:
    """Nested repeater setup.

    ``L[j]`` and ``K[j]`` are the connection count and the number of
    purification rounds on level ``j + 1``.
    """

    levels: int
    L: tuple[int, ...]
    K: tuple[int, ...]
    l0: float
    f0: float
    family: StateFamily = StateFamily.WERNER
    kind: QubitKind = QubitKind.ATOM
    params: NoiseParams = field(default_factory=NoiseParams)

    def __post_init__(self):
        object.__setattr__(self, "L", tuple(int(x) for x in self.L))
        object.__setattr__(self, "K", tuple(int(x) for x in self.K))
        object.__setattr__(self, "family", StateFamily(self.family))
        object.__setattr__(self, "kind", QubitKind(self.kind))
        if self.levels < 1:
            raise ValueError("at least one level is required")
        if len(self.L) != self.levels or len(self.K) != self.levels:
            raise ValueError(f"L and K need {self.levels} entries each")
        if min(self.L) < 0 or min(self.K) < 0:
            raise ValueError("L and K entries must be non-negative")
        if self.l0 <= 0:
            raise ValueError("l0 must be positive")
        if not 0.5 < self.f0 <= 1.0:
            raise ValueError(f"f0={self.f0} outside (0.5, 1]")


def distance(config: RepeaterConfig, n: int) -> float:
    """Pair distance ``S_n = l0 prod_{j<=n} (L_j + 1)`` on level ``n``."""
    if not 0 <= n <= config.levels:
        raise ValueError(f"level {n} outside 0..{config.levels}")
    return config.l0 * math.prod(x + 1 for x in config.L[:n])


@dataclass(frozen=True)
class TimingReport:
    """Lower-bound times of the repeater.  Level lists are indexed by level - 1."""

    S: tuple[float, ...]
    t: tuple[float, ...]
    t_c: tuple[float, ...]
    t_aw: tuple[float, ...]
    t_aw_transfer: tuple[float, ...]
    t0_prime: float
    t_sw: float
    t_tr: float
    t_pur: float


def timing(config: RepeaterConfig) -> TimingReport:
    p = config.params
    n = config.levels
    S = tuple(distance(config, k) for k in range(n + 1))
    t_sw, t_tr, t_pur = swap_time(p), transfer_atom_atom_duration(p), purify_time(p)

    def connect(k):
        # time to connect the pairs of level k - 1 into one pair of level k
        return math.ceil(config.L[k - 1] / 2) * (t_sw + S[k - 1] / p.c)

    t0p = p.t0 + connect(1)
    t1 = t_tr + t0p + config.K[0] * (t_pur + max(t0p, S[1] / p.c))
    t = [t1]
    for k in range(2, n + 1):
        t.append(t[-1] * (config.K[k - 1] + 1))
    # t_c[k-1]: completion time of a fresh pair of level k-1 when one is needed
    t_c = [p.t0]
    for k in range(2, n + 1):
        t_c.append(max(0.0, t[k - 2] - sum(t[: k - 2])))
    t_aw, t_aw_tr = [], []
    for k in range(1, n + 1):
        create = connect(k) + t_c[k - 1]
        t_aw_tr.append(create)
        t_aw.append(max(0.0, create - S[k] / p.c))
    return TimingReport(S, tuple(t), tuple(t_c), tuple(t_aw), tuple(t_aw_tr),
                        t0p, t_sw, t_tr, t_pur)


@dataclass(frozen=True)
class LevelResult:
    level: int
    fidelity: float
    distance: float
    time: float
    success_probabilities: tuple[float, ...]
    state: np.ndarray = field(repr=False, compare=False)


def _wait(rho: np.ndarray, t: float, params: NoiseParams) -> np.ndarray:
    if t <= 0:
        return rho
    return idle(Register(rho, ["A", "B"]), t, params, "A", "B").rho


def _pump(kind_pair, kept, sacrificed, rounds, S_n, params, wait):
    probs = []
    for _ in range(rounds):
        step = purify_step(kind_pair, kept, sacrificed, S_n, params)
        kept = _wait(step.output(kept), wait, params)
        probs.append(step.success_probability)
    return kept, tuple(probs)


def _run_atom(config: RepeaterConfig, times: TimingReport):
    p = config.params
    fresh = _wait(initial_state(config.family, config.f0), p.t0, p)
    prev = fresh
    for k in range(1, config.levels + 1):
        pair = swap_chain(QubitKind.ATOM, prev, config.L[k - 1], times.S[k - 1], p).output(prev)
        kept = transfer_atom_atom(p).output(pair)
        kept = _wait(kept, times.t_aw_transfer[k - 1], p)
        kept, probs = _pump(KindPair.ATOM_ATOM, kept, pair, config.K[k - 1],
                            times.S[k], p, times.t_aw[k - 1])
        prev = kept
        yield k, kept, probs


def _run_dfs(config: RepeaterConfig, times: TimingReport):
    p = config.params
    fresh = initial_state(config.family, config.f0)
    prev = transfer_atom_dfs(p).output(fresh)
    for k in range(1, config.levels + 1):
        pair = swap_chain(QubitKind.DFS, prev, config.L[k - 1], times.S[k - 1], p).output(prev)
        if k == 1 and config.L[0] == 0:
            # the first level pumps with bare atom pairs straight from the source
            kept, probs = _pump(KindPair.AUX_DFS, pair, fresh, config.K[0], times.S[1], p, 0.0)
        else:
            kept = transfer_dfs_dfs(p).output(pair)
            kept, probs = _pump(KindPair.DFS_DFS, kept, pair, config.K[k - 1], times.S[k], p, 0.0)
        prev = kept
        yield k, kept, probs


def run_repeater(config: RepeaterConfig) -> list[LevelResult]:
    """Fidelity of the pair held after each level of the nested protocol.

    Purification below threshold is not an error: the fidelity simply
    decreases on that level.
    """
    times = timing(config)
    runner = _run_atom if config.kind is QubitKind.ATOM else _run_dfs
    return [
        LevelResult(k, entanglement_fidelity(rho), times.S[k], times.t[k - 1], probs, rho)
        for k, rho, probs in runner(config, times)
    ]
