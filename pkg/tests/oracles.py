"""Reference implementations that share no code with ``qrepsim``.

Everything here works on the full register with explicit Kronecker
products, so it is slow but easy to audit.
"""

import math

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
HAD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)

PHI_P = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
PHI_M = np.array([1, 0, 0, -1], dtype=complex) / math.sqrt(2)
PSI_P = np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)
PSI_M = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)


def dm(v):
    return np.outer(v, v.conj())


def werner(f):
    return f * dm(PHI_P) + (1 - f) / 3 * (dm(PHI_M) + dm(PSI_P) + dm(PSI_M))


def binary(f):
    return f * dm(PHI_P) + (1 - f) * dm(PHI_M)


def fidelity(rho):
    return float(np.real(PHI_P.conj() @ rho @ PHI_P))


def op(n, ops):
    """Kronecker product placing ``ops[q]`` on qubit ``q`` (qubit 0 leftmost)."""
    out = np.eye(1, dtype=complex)
    for q in range(n):
        out = np.kron(out, ops.get(q, I2))
    return out


def cnot(n, c, t):
    return op(n, {c: P0}) + op(n, {c: P1, t: SX})


def cz(n, a, b):
    return op(n, {a: P0}) + op(n, {a: P1, b: SZ})


def rot(axis, theta):
    s = {"x": SX, "y": SY, "z": SZ}[axis]
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * s


def conj(u, rho):
    return u @ rho @ u.conj().T


def ptrace(rho, keep, n):
    """Reduced state on the ``keep`` qubits, in increasing qubit order."""
    t = rho.reshape([2] * (2 * n))
    for q in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=q, axis2=q + t.ndim // 2)
    d = 2 ** len(keep)
    return t.reshape(d, d)


def noisy_proj(n, q, m, eta):
    """Kraus pair of the outcome-``m`` branch of an ``eta``-faithful measurement."""
    good, bad = (P0, P1) if m == 0 else (P1, P0)
    return [math.sqrt(eta) * op(n, {q: good}), math.sqrt(1 - eta) * op(n, {q: bad})]


def apply_kraus(ks, rho):
    return sum(k @ rho @ k.conj().T for k in ks)


def teleport_swap(rho_left, rho_right):
    """Noiseless swap of pairs A-C1 and C2-B by standard teleportation.

    Qubit order A, C1, C2, B.  Bell measurement = CNOT(C1 -> C2), Hadamard
    on C1, z-readout; correction X^m2 then Z^m1 on B.
    """
    n = 4
    rho = np.kron(rho_left, rho_right)
    u = op(n, {1: HAD}) @ cnot(n, 1, 2)
    rho = conj(u, rho)
    out = np.zeros((4, 4), dtype=complex)
    for m1 in (0, 1):
        for m2 in (0, 1):
            proj = op(n, {1: P0 if m1 == 0 else P1, 2: P0 if m2 == 0 else P1})
            branch = ptrace(proj @ rho @ proj, [0, 3], n)
            fix = np.kron(I2, np.linalg.matrix_power(SZ, m1) @ np.linalg.matrix_power(SX, m2))
            out += conj(fix, branch)
    return out


def werner_swap_fidelity(f1, f2):
    """Fidelity after ideally connecting two Werner pairs."""
    return f1 * f2 + (1 - f1) * (1 - f2) / 3


def deutsch_round(kept, sacrificed, eta=1.0):
    """One noiseless-gate Deutsch purification round with ``eta`` readout.

    Qubit order A2, B2 (kept), A1, B1 (sacrificed).  Returns the
    normalized kept state and the coincidence probability.
    """
    n = 4
    rho = np.kron(kept, sacrificed)
    u = op(n, {0: rot("x", math.pi / 2), 2: rot("x", math.pi / 2),
               1: rot("x", -math.pi / 2), 3: rot("x", -math.pi / 2)})
    u = cnot(n, 1, 3) @ cnot(n, 0, 2) @ u
    rho = conj(u, rho)
    out = np.zeros((4, 4), dtype=complex)
    for m in (0, 1):
        ka, kb = noisy_proj(n, 2, m, eta), noisy_proj(n, 3, m, eta)
        out += ptrace(apply_kraus(ka, apply_kraus(kb, rho)), [0, 1], n)
    p = float(np.real(np.trace(out)))
    return out / p, p


def binary_recurrence(f, g):
    """Analytic Deutsch map for binary pairs of fidelities ``f`` and ``g``."""
    p = f * g + (1 - f) * (1 - g)
    return f * g / p, p


def lindblad_rk4(h, gamma, rho, t, steps=4000):
    """Integrate ``-i[h, rho] + gamma/2 (Z rho Z - rho)`` with classical RK4."""
    def deriv(r):
        return -1j * (h @ r - r @ h) + gamma / 2 * (SZ @ r @ SZ - r)

    dt = t / steps
    for _ in range(steps):
        k1 = deriv(rho)
        k2 = deriv(rho + dt / 2 * k1)
        k3 = deriv(rho + dt / 2 * k2)
        k4 = deriv(rho + dt * k3)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def dephase_kraus(n, q, gamma, t):
    e = math.exp(-gamma * t)
    return [math.sqrt((1 + e) / 2) * op(n, {}), math.sqrt((1 - e) / 2) * op(n, {q: SZ})]


def random_state(rng, dim, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_kraus(rng, dim, count):
    g = rng.normal(size=(count * dim, dim)) + 1j * rng.normal(size=(count * dim, dim))
    q, _ = np.linalg.qr(g)
    return [q[k * dim:(k + 1) * dim] for k in range(count)]


# -- timing arithmetic, written out directly from the formulas -----------------

def timing_table(L, K, l0, omega, omega_zz, t_me, t0, c):
    """Spreadsheet-style timing quantities, one dict entry per list."""
    pi = math.pi
    t_sw = 9 * pi / (4 * omega) + pi / (4 * omega_zz) + t_me
    t_tr = 5 * pi / (2 * omega) + pi / (2 * omega_zz)
    t_pur = 5 * pi / (2 * omega) + pi / (4 * omega_zz) + t_me
    S = [l0]
    for x in L:
        S.append(S[-1] * (x + 1))
    t0p = t0 + math.ceil(L[0] / 2) * (t_sw + S[0] / c)
    t = [t_tr + t0p + K[0] * (t_pur + max(t0p, S[1] / c))]
    for m in range(1, len(L)):
        t.append(t[-1] * (K[m] + 1))
    tc = [t0] + [max(0.0, t[k - 1] - sum(t[:k - 1])) for k in range(1, len(L))]
    taw, taw_tr = [], []
    for k in range(len(L)):
        base = math.ceil(L[k] / 2) * (t_sw + S[k] / c) + tc[k]
        taw_tr.append(base)
        taw.append(max(0.0, base - S[k + 1] / c))
    return dict(S=S, t=t, tc=tc, taw=taw, taw_tr=taw_tr, t_sw=t_sw, t_tr=t_tr,
                t_pur=t_pur, t0p=t0p)


# -- noisy bare-atom circuits on the full register --------------------------------

class AtomModel:
    """Bare-atom gate set with dephasing rate ``gamma``; all times in seconds."""

    def __init__(self, gamma, eta, omega=2 * math.pi * 50e3, omega_zz=None, t_me=10e-6):
        self.gamma, self.eta, self.omega = gamma, eta, omega
        self.omega_zz = 0.1 * omega if omega_zz is None else omega_zz
        self.t_me = t_me

    def duration(self, theta):
        return (theta % (2 * math.pi)) / (2 * self.omega)

    def idle(self, rho, n, t, *qubits):
        for q in qubits:
            rho = apply_kraus(dephase_kraus(n, q, self.gamma, t), rho)
        return rho

    def rot(self, rho, n, axis, theta, q):
        pauli = {"x": SX, "y": SY, "z": SZ}[axis]
        t = self.duration(theta)
        h = self.omega * pauli

        def local(m):
            return lindblad_rk4(h, self.gamma, m, t, steps=400)

        return apply_local(rho, n, q, local)

    def cz(self, rho, n, a, b):
        """Ising ZZ phase then R_z(3pi/2) on both qubits."""
        phase = {(0, 0): 1, (0, 1): -1, (1, 0): -1, (1, 1): 1}
        diag = np.ones(2 ** n, dtype=complex)
        for idx in range(2 ** n):
            bits = [(idx >> (n - 1 - k)) & 1 for k in range(n)]
            diag[idx] = np.exp(-0.25j * math.pi * phase[bits[a], bits[b]])
        rho = conj(np.diag(diag), rho)
        rho = self.idle(rho, n, (math.pi / 2) / (2 * self.omega_zz), a, b)
        for q in (a, b):
            rho = conj(op(n, {q: rot("z", 1.5 * math.pi)}), rho)
        return self.idle(rho, n, self.duration(1.5 * math.pi), a, b)


def apply_local(rho, n, q, fn):
    """Apply the linear single-qubit map ``fn`` to qubit ``q`` of ``rho``."""
    t = np.zeros((2, 2, 2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[a, b] = 1
            t[:, :, a, b] = fn(e)
    r = rho.reshape([2] * (2 * n))
    r = np.moveaxis(r, (q, n + q), (0, 1))
    r = np.einsum("cdab,ab...->cd...", t, r)
    r = np.moveaxis(r, (0, 1), (q, n + q))
    return r.reshape(2 ** n, 2 ** n)


def transfer_atom_atom(model, rho):
    """Each end moves onto a fresh atom by two CZ gates.  Order A, B, A2, B2."""
    n = 4
    state = np.kron(rho, dm(np.array([1, 0, 0, 0], dtype=complex)))
    for s, d in ((0, 2), (1, 3)):
        state = model.rot(state, n, "y", math.pi / 2, d)
        state = model.idle(state, n, model.duration(math.pi / 2), s)
        state = model.cz(state, n, s, d)
        state = model.rot(state, n, "y", math.pi / 2, s)
        state = model.rot(state, n, "y", math.pi / 2, d)
        state = model.cz(state, n, s, d)
        state = model.rot(state, n, "y", math.pi, d)
    return ptrace(state, [2, 3], n)


def swap_atoms(model, rho_left, rho_right, t_w):
    """Bare-atom swap with the protocol idle times.  Order A, C1, C2, B."""
    n = 4
    pi, w = math.pi, model.omega
    state = np.kron(rho_left, rho_right)
    state = model.rot(state, n, "y", -pi / 2, 2)
    state = model.idle(state, n, 3 * pi / (4 * w), 1)
    state = model.cz(state, n, 1, 2)
    state = model.rot(state, n, "y", -pi / 2, 1)
    state = model.rot(state, n, "y", pi / 2, 2)
    state = model.idle(state, n, pi / (2 * w), 2)
    t123 = 3 * pi / (4 * w) + 5 * pi / (4 * w) + pi / (4 * model.omega_zz) + pi / (2 * w)
    state = model.idle(state, n, t123 + model.t_me + t_w, 0, 3)
    out = np.zeros((16, 16), dtype=complex)
    for m1 in (0, 1):
        for m2 in (0, 1):
            ks = [a @ b for a in noisy_proj(n, 1, m1, model.eta)
                  for b in noisy_proj(n, 2, m2, model.eta)]
            br = apply_kraus(ks, state)
            if m2:
                br = model.rot(br, n, "x", pi, 3)
            if m1:
                br = model.rot(br, n, "z", pi, 3)
            else:
                br = model.idle(br, n, pi / (2 * w), 3)
            br = model.idle(br, n, pi / w if m2 else pi / (2 * w), 0)
            out += br
    return ptrace(out, [0, 3], n)
