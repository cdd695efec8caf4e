"""Independent reference computations used to freeze expected values.

Everything here is deliberately naive (explicit loops, scipy's generic expm,
breadth-first group closure) so it shares no code path with the package.
"""

import numpy as np
import scipy.linalg


def naive_kron(a, b):
    a, b = np.asarray(a), np.asarray(b)
    m, n = a.shape
    p, q = b.shape
    out = np.zeros((m * p, n * q), dtype=complex)
    for i in range(m):
        for j in range(n):
            for k in range(p):
                for l in range(q):
                    out[i * p + k, j * q + l] = a[i, j] * b[k, l]
    return out


def naive_propagate(drift, ctrls, amps, dt):
    """Closed propagation with scipy.linalg.expm, slot by slot."""
    u = np.eye(drift.shape[0], dtype=complex)
    for k in range(amps.shape[1]):
        h = drift + sum(amps[i, k] * ctrls[i] for i in range(len(ctrls)))
        u = scipy.linalg.expm(-1j * dt * h) @ u
    return u


def naive_fidelity(drift, ctrls, amps, dt, target):
    u = naive_propagate(drift, ctrls, amps, dt)
    d = target.shape[0]
    return abs(np.trace(target.conj().T @ u[:d, :d])) ** 2 / d ** 2


def fd_gradient(drift, ctrls, amps, dt, target, h=1e-6):
    """Central differences of the fidelity itself (not 1 - F) to avoid cancellation.

    Only the perturbed slot is re-exponentiated; the products of the other
    slots are built once with plain loops.
    """
    n_ctrl, n = amps.shape
    d = target.shape[0]
    slots = [scipy.linalg.expm(-1j * dt * (drift + sum(amps[i, k] * ctrls[i]
                                                       for i in range(n_ctrl))))
             for k in range(n)]
    eye = np.eye(drift.shape[0], dtype=complex)
    before = [eye]
    for k in range(n - 1):
        before.append(slots[k] @ before[-1])
    after = [eye]
    for k in range(n - 1, 0, -1):
        after.append(after[-1] @ slots[k])
    after = after[::-1]

    def fid(u):
        return abs(np.trace(target.conj().T @ u[:d, :d])) ** 2 / d ** 2

    g = np.zeros((n_ctrl, n))
    for k in range(n):
        h_k = drift + sum(amps[i, k] * ctrls[i] for i in range(n_ctrl))
        for i in range(n_ctrl):
            up = scipy.linalg.expm(-1j * dt * (h_k + h * ctrls[i]))
            dn = scipy.linalg.expm(-1j * dt * (h_k - h * ctrls[i]))
            g[i, k] = (fid(after[k] @ up @ before[k]) - fid(after[k] @ dn @ before[k])) / (2 * h)
    return -g  # gradient of the infidelity


def naive_lindblad_evolve(h, c_ops, rho, t, n_steps=1):
    """Evolve rho under the Lindblad equation using the row-major superoperator.

    Row-major (``rho.reshape(-1)``) is a different convention from the
    package's column stacking, so agreement checks the vectorization too.
    """
    d = h.shape[0]
    eye = np.eye(d)
    L = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c in c_ops:
        cdc = c.conj().T @ c
        L += np.kron(c, c.conj()) - 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))
    v = scipy.linalg.expm(L * t) @ rho.reshape(-1)
    return v.reshape(d, d)


def canonical_phase(u, decimals=6):
    flat = u.reshape(-1)
    k = int(np.argmax(np.abs(flat) > 1e-6))
    v = u * (abs(flat[k]) / flat[k])
    v = np.round(v, decimals) + 0.0
    return v.tobytes()


def bfs_group(generators, limit=20000):
    """Closure of the generators up to global phase; returns representatives."""
    d = generators[0].shape[0]
    start = np.eye(d, dtype=complex)
    seen = {canonical_phase(start): start}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for g in generators:
                w = g @ u
                key = canonical_phase(w)
                if key not in seen:
                    seen[key] = w
                    nxt.append(w)
                    if len(seen) > limit:
                        raise RuntimeError("group larger than limit")
        frontier = nxt
    return seen


H1 = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S1 = np.diag([1, 1j])
I1 = np.eye(2, dtype=complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
