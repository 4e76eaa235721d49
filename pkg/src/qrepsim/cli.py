"""Batch front-end: ``qrepsim <configfile> [--out PATH] [--workers N]``.

The configuration is plain ``key=value`` text with ``#`` comments.  All
quantities are SI: rates in 1/s, times in s, distances in m.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .blocks import (
    KindPair,
    OscillationError,
    PurificationFailed,
    StateFamily,
    initial_state,
    pump_to_fixed_point,
    swap_chain,
    transfer_atom_atom,
    transfer_atom_dfs,
    transfer_dfs_dfs,
)
from .channels import entanglement_fidelity
from .noise import NoiseParams, QubitKind
from .protocol import RepeaterConfig, run_repeater, timing

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class Command(enum.Enum):
    TRANSFER = "TRANSFER"
    SWAP = "SWAP"
    PURIFY = "PURIFY"
    REPEATER = "REPEATER"
    TIMING = "TIMING"


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class RunError(RuntimeError):
    """Numerical failure at one sweep point."""


PARAM_KEYS = ("gamma", "eta", "omega", "omega_zz", "tau", "t_me", "t0", "c")
NUMERIC_KEYS = PARAM_KEYS + ("f0", "l0")
KINDS = ("ATOM", "DFS", "ATOM-DFS", "AUX-DFS")
DEFAULT_LEVELS = 12


@dataclass(frozen=True)
class RunSpec:
    command: Command
    kind: str = "DFS"
    family: StateFamily = StateFamily.WERNER
    f0: float = 0.9
    l0: float = 10e3
    levels: int = DEFAULT_LEVELS
    L: tuple[int, ...] = (0,) + (1,) * (DEFAULT_LEVELS - 1)
    K: tuple[int, ...] = (5,) * DEFAULT_LEVELS
    params: NoiseParams = field(default_factory=NoiseParams)
    sweep_key: str | None = None
    sweep_values: tuple[float, ...] = ()
    out: str | None = None

    def at(self, value: float) -> "RunSpec":
        """Copy of this run spec with the swept parameter set to ``value``."""
        if self.sweep_key in PARAM_KEYS:
            return replace(self, params=self.params.with_(**{self.sweep_key: value}))
        return replace(self, **{self.sweep_key: value})


def _number(text: str, line: int) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ConfigError(f"malformed number {text!r}", line) from None
    if not math.isfinite(x):
        raise ConfigError(f"number {text!r} is not finite", line)
    return x


def _integers(text: str, line: int) -> tuple[int, ...]:
    out = []
    for part in text.split(","):
        x = _number(part.strip(), line)
        if x != int(x) or x < 0:
            raise ConfigError(f"expected a non-negative integer, got {part.strip()!r}", line)
        out.append(int(x))
    return tuple(out)


def parse_config(text: str) -> RunSpec:
    """Parse ``key=value`` lines into a :class:`RunSpec`.

    Unspecified keys take the default repeater setup: DFS qubits, Werner
    pairs of fidelity 0.9, ``l0 = 10 km``, twelve levels with ``L = 0, 1, ...``
    and five purification rounds per level.
    """
    raw: dict[str, tuple[str, int]] = {}
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", no)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in ("command", "kind", "family", "levels", "L", "K",
                       "sweep_key", "sweep_values", "out") + NUMERIC_KEYS:
            raise ConfigError(f"unknown key {key!r}", no)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", no)
        raw[key] = (value, no)

    if "command" not in raw:
        raise ConfigError("missing key 'command'")
    value, no = raw["command"]
    try:
        command = Command(value.upper())
    except ValueError:
        raise ConfigError(f"unknown command {value!r}", no) from None
    fields: dict = {"command": command}

    if "kind" in raw:
        value, no = raw["kind"]
        if value.upper() not in KINDS:
            raise ConfigError(f"unknown kind {value!r}", no)
        fields["kind"] = value.upper()
    if "family" in raw:
        value, no = raw["family"]
        try:
            fields["family"] = StateFamily(value.upper())
        except ValueError:
            raise ConfigError(f"unknown family {value!r}", no) from None
    for key in ("f0", "l0"):
        if key in raw:
            fields[key] = _number(*raw[key])

    levels = DEFAULT_LEVELS
    if "levels" in raw:
        value, no = raw["levels"]
        x = _number(value, no)
        if x != int(x) or x < 1:
            raise ConfigError(f"levels must be a positive integer, got {value!r}", no)
        levels = int(x)
    fields["levels"] = levels
    fields["L"] = (0,) + (1,) * (levels - 1)
    fields["K"] = (5,) * levels
    for key in ("L", "K"):
        if key in raw:
            value, no = raw[key]
            xs = _integers(value, no)
            if len(xs) != levels:
                raise ConfigError(f"{key} has {len(xs)} entries but levels={levels}", no)
            fields[key] = xs

    overrides = {k: _number(*raw[k]) for k in PARAM_KEYS if k in raw}
    try:
        fields["params"] = NoiseParams(**overrides)
    except ValueError as exc:
        line = min(raw[k][1] for k in overrides) if overrides else None
        raise ConfigError(str(exc), line) from None

    if "sweep_key" in raw:
        value, no = raw["sweep_key"]
        if value not in NUMERIC_KEYS:
            raise ConfigError(f"cannot sweep over {value!r}", no)
        fields["sweep_key"] = value
        fields["sweep_values"] = ()
        if "sweep_values" in raw:
            text, no = raw["sweep_values"]
            parts = [s.strip() for s in text.split(",") if s.strip()]
            fields["sweep_values"] = tuple(_number(s, no) for s in parts)
    elif "sweep_values" in raw:
        raise ConfigError("sweep_values given without sweep_key", raw["sweep_values"][1])
    if "out" in raw:
        fields["out"] = raw["out"][0]
    return RunSpec(**fields)


# -- experiments -----------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _config(spec: RunSpec) -> RepeaterConfig:
    kind = QubitKind.ATOM if spec.kind == "ATOM" else QubitKind.DFS
    return RepeaterConfig(spec.levels, spec.L, spec.K, spec.l0, spec.f0, spec.family,
                          kind, spec.params)


def _transfer(spec):
    block = {"ATOM": transfer_atom_atom, "DFS": transfer_dfs_dfs}.get(spec.kind, transfer_atom_dfs)
    result = block(spec.params)
    rho = initial_state(spec.family, spec.f0)
    f = entanglement_fidelity(result.output(rho))
    return [[f, spec.f0 - f, result.duration]]


def _swap(spec):
    kind = QubitKind.ATOM if spec.kind == "ATOM" else QubitKind.DFS
    rho = initial_state(spec.family, spec.f0)
    rows = []
    # one row per number of connections on the first level, up to L_1
    for n in range(1, max(1, spec.L[0]) + 1):
        result = swap_chain(kind, rho, n, spec.l0, spec.params)
        rows.append([n, entanglement_fidelity(result.output(rho)), result.duration,
                     (n + 1) * spec.l0])
    return rows


_PURIFY_PAIRS = {"ATOM": KindPair.ATOM_ATOM, "DFS": KindPair.DFS_DFS,
                 "AUX-DFS": KindPair.AUX_DFS, "ATOM-DFS": KindPair.AUX_DFS}


def _purify(spec):
    fp = pump_to_fixed_point(_PURIFY_PAIRS[spec.kind], spec.f0, spec.family, spec.l0, spec.params)
    return [[fp.f_max, fp.success_probability, fp.steps, fp.below_threshold, fp.converged]]


def _repeater(spec):
    return [[r.level, r.fidelity, math.prod(r.success_probabilities), r.distance, r.time]
            for r in run_repeater(_config(spec))]


def _timing(spec):
    t = timing(_config(spec))
    return [[k, t.S[k], t.t[k - 1], t.t_c[k - 1], t.t_aw[k - 1], t.t_aw_transfer[k - 1]]
            for k in range(1, spec.levels + 1)]


COLUMNS = {
    Command.TRANSFER: ["fidelity", "loss", "duration"],
    Command.SWAP: ["connections", "fidelity", "duration", "distance"],
    Command.PURIFY: ["f_max", "success_probability", "steps", "below_threshold", "converged"],
    Command.REPEATER: ["level", "fidelity", "success_probability", "distance", "time"],
    Command.TIMING: ["level", "distance", "time", "t_completion", "t_wait_purify",
                     "t_wait_transfer"],
}
_RUNNERS = {Command.TRANSFER: _transfer, Command.SWAP: _swap, Command.PURIFY: _purify,
            Command.REPEATER: _repeater, Command.TIMING: _timing}
_NUMERIC_ERRORS = (ValueError, ArithmeticError, np.linalg.LinAlgError,
                   PurificationFailed, OscillationError)


def run(spec: RunSpec) -> list[list]:
    """Rows of one configuration point, without the sweep column."""
    try:
        return _RUNNERS[spec.command](spec)
    except _NUMERIC_ERRORS as exc:
        where = ""
        if spec.sweep_key:
            source = spec.params if spec.sweep_key in PARAM_KEYS else spec
            where = f" at {spec.sweep_key}={_fmt(getattr(source, spec.sweep_key))}"
        raise RunError(f"{spec.command.value} failed{where}: {exc}") from exc


def sweep_execute(spec: RunSpec, worker_count: int = 1) -> str:
    """Evaluate every sweep point and render the CSV text.

    Points are independent; they may run on ``worker_count`` threads but
    rows always come out in sweep order.
    """
    if worker_count < 1:
        raise ValueError("worker_count must be at least 1")
    header = list(COLUMNS[spec.command])
    if spec.sweep_key is None:
        points, blocks = [None], [run(spec)]
    else:
        header.insert(0, spec.sweep_key)
        points = list(spec.sweep_values)
        specs = [spec.at(v) for v in points]
        with ThreadPoolExecutor(max_workers=worker_count) as pool:
            blocks = list(pool.map(run, specs))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for point, rows in zip(points, blocks):
        for row in rows:
            writer.writerow([_fmt(x) for x in ([point] if point is not None else []) + row])
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="qrepsim", description=__doc__.splitlines()[0])
    parser.add_argument("config", help="key=value configuration file")
    parser.add_argument("--out", help="CSV output path (default: 'out' key or stdout)")
    parser.add_argument("--workers", type=int, default=1, help="sweep worker threads")
    args = parser.parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            spec = parse_config(fh.read())
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
    except (OSError, ConfigError) as exc:
        print(f"qrepsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text = sweep_execute(spec, args.workers)
    except RunError as exc:
        print(f"qrepsim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out = args.out or spec.out
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
