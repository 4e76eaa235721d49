import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as o
from qrepsim.channels import (
    PHI_PLUS,
    Channel,
    apply_to_qubits,
    binary_state,
    channel_to_kraus,
    compose,
    compose_all,
    compress,
    constant_channel,
    embed,
    entanglement_fidelity,
    identity_channel,
    is_density_matrix,
    kraus_to_channel,
    partial_trace,
    process_tomography,
    projector,
    tolerance,
    unitary_channel,
    unvec,
    vec,
    werner_state,
)

TOL = 1e-10
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_channel(seed, dim=2, count=3):
    rng = np.random.default_rng(seed)
    return kraus_to_channel(o.random_kraus(rng, dim, count)), rng


def test_vec_is_column_stacking():
    a = np.arange(4).reshape(2, 2)
    assert list(vec(a)) == [0, 2, 1, 3]
    assert np.array_equal(unvec(vec(a), 2), a)


@settings(max_examples=120, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=4))
def test_kraus_channel_is_cptp(seed, count):
    ch, rng = random_channel(seed, count=count)
    assert ch.is_cp()
    assert ch.is_tp()
    assert np.linalg.eigvalsh(ch.choi).min() > -TOL
    rho = o.random_state(rng, 2)
    out = ch(rho)
    expected = sum(k @ rho @ k.conj().T for k in ch.kraus())
    assert np.abs(out - expected).max() < TOL


@settings(max_examples=120, deadline=None)
@given(seeds)
def test_kraus_roundtrip(seed):
    ch, _ = random_channel(seed, dim=4, count=2)
    again = kraus_to_channel(channel_to_kraus(ch))
    assert np.abs(again.superop - ch.superop).max() < TOL


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_compose_matches_sequential_application(seed):
    a, rng = random_channel(seed)
    b, _ = random_channel(seed + 1)
    rho = o.random_state(rng, 2)
    assert np.abs(compose(b, a)(rho) - b(a(rho))).max() < TOL
    assert np.abs(compose_all(a, b)(rho) - b(a(rho))).max() < TOL


def test_non_cp_map_has_no_kraus_form():
    transpose = process_tomography(lambda r: r.T, 2)
    assert transpose.is_tp()
    assert not transpose.is_cp()
    with pytest.raises(ValueError):
        channel_to_kraus(transpose)


def test_dict_roundtrip():
    ch, _ = random_channel(7)
    back = Channel.from_dict(ch.to_dict())
    assert np.array_equal(back.superop, ch.superop)
    assert ch.to_dict()["convention"] == "column-stacking"


@pytest.mark.parametrize("targets", [(0, 1), (1, 0), (0, 2), (2, 1)])
def test_embed_cnot_matches_kron_oracle(targets):
    u = o.cnot(2, 0, 1)
    full = embed(unitary_channel(u), list(targets), 3)
    rng = np.random.default_rng(3)
    rho = o.random_state(rng, 8)
    expected = o.conj(o.cnot(3, *targets), rho)
    assert np.abs(full(rho) - expected).max() < TOL
    assert np.abs(apply_to_qubits(unitary_channel(u), rho, list(targets)) - expected).max() < TOL


@pytest.mark.parametrize("keep", [[0], [1], [2], [0, 2], [2, 0], [1, 2]])
def test_partial_trace_matches_oracle(keep):
    rng = np.random.default_rng(11)
    rho = o.random_state(rng, 8)
    got = partial_trace(rho, keep)
    expected = o.ptrace(rho, sorted(keep), 3)
    if keep != sorted(keep):
        swap = o.cnot(2, 0, 1) @ o.cnot(2, 1, 0) @ o.cnot(2, 0, 1)
        expected = o.conj(swap, expected)
    assert np.abs(got - expected).max() < TOL


def test_bell_state_reduced_is_maximally_mixed():
    assert np.allclose(partial_trace(projector(PHI_PLUS), [0]), np.eye(2) / 2)


@pytest.mark.parametrize("f", [0.55, 0.8, 1.0])
def test_state_families(f):
    for rho, ref in ((werner_state(f), o.werner(f)), (binary_state(f), o.binary(f))):
        assert np.allclose(rho, ref)
        assert is_density_matrix(rho)
        assert entanglement_fidelity(rho) == pytest.approx(f)


def test_fidelity_out_of_range():
    with pytest.raises(ValueError):
        werner_state(1.2)


def test_constant_channel_replaces_input():
    target = werner_state(0.7)
    ch = constant_channel(target)
    rng = np.random.default_rng(0)
    assert np.allclose(ch(o.random_state(rng, 4)), target)
    assert ch.is_cp() and ch.is_tp()


def test_identity_and_process_tomography():
    assert np.allclose(identity_channel(4).superop, np.eye(16))
    u = o.rot("y", 0.3)
    assert np.allclose(process_tomography(lambda r: o.conj(u, r), 2).superop,
                       unitary_channel(u).superop)


def test_compress_teleportation_with_postselection():
    # teleport qubit 1 of the input pair (0, 1) over a Bell pair made on (2, 3)
    had = unitary_channel(o.HAD)
    cx = unitary_channel(o.cnot(2, 0, 1))
    pipeline = [(had, [2]), (cx, [2, 3]), (cx, [1, 2]), (had, [1])]
    ch, p = compress(pipeline, 4, keep=[0, 3], inputs=[0, 1], postselect={1: 0, 2: 0},
                     reference=werner_state(0.7))
    assert p == pytest.approx(0.25)
    rng = np.random.default_rng(5)
    rho = o.random_state(rng, 4)
    out = ch(rho)
    assert np.allclose(out / np.trace(out), rho)


def test_compress_zero_probability_branch():
    flip = unitary_channel(o.SX)
    with pytest.raises(ValueError):
        compress([(flip, [2])], 3, keep=[0, 1], postselect={2: 0},
                 reference=werner_state(0.7))


def test_tolerance_env(monkeypatch):
    assert tolerance() == 1e-10
    monkeypatch.setenv("QREPSIM_TOL", "1e-6")
    assert tolerance() == 1e-6


def test_unitary_channel_preserves_purity():
    u = o.rot("x", math.pi / 3)
    rho = o.dm(np.array([1, 0], dtype=complex))
    out = unitary_channel(u)(rho)
    assert np.trace(out @ out).real == pytest.approx(1.0)
