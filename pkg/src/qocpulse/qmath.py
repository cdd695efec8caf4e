"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` complex arrays. Functions that accept a single
matrix also accept a stack of shape ``(..., d, d)`` where noted, which is how
per-timeslot propagators are computed in one call.

Vectorization is column-stacking: ``vec(A X B) = (B^T kron A) vec(X)``.
"""

from functools import reduce

import numpy as np

from .errors import NoConvergence, NonHermitian

HERMITIAN_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}


def dag(a):
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def kron(*ops):
    """Kronecker product of one or more matrices, left to right."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def destroy(levels):
    """Truncated annihilation operator on ``levels`` Fock states."""
    return np.diag(np.sqrt(np.arange(1, levels)), k=1).astype(complex)


def hermiticity_error(h):
    h = np.asarray(h)
    return float(np.max(np.abs(h - dag(h)))) if h.size else 0.0


def check_hermitian(h, tol=HERMITIAN_TOL):
    if not np.all(np.isfinite(h)):
        raise NonHermitian("matrix has non-finite entries")
    err = hermiticity_error(h)
    if err > tol:
        raise NonHermitian(f"matrix is not Hermitian: max|h - h^dag| = {err:.3e} > {tol:g}")


def eig_hermitian(h):
    """Eigendecomposition ``h = V diag(w) V^dag`` with ascending ``w``.

    Works on a single matrix or a stack of matrices.
    """
    h = np.asarray(h, dtype=complex)
    check_hermitian(h)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return w, v


def expm_hermitian_scaled(h, scale):
    """Compute ``exp(scale * h)`` for Hermitian ``h`` (or a stack of them).

    ``scale`` is any complex scalar; ``scale = -1j * t`` gives a unitary.
    """
    w, v = eig_hermitian(h)
    return (v * np.exp(scale * w)[..., None, :]) @ dag(v)


def prefix_products(mats):
    """Inclusive time-ordered products ``P[k] = mats[k] @ ... @ mats[0]``.

    Uses a log-depth scan so that long pulse sequences cost only a handful of
    batched matmuls.
    """
    out = np.array(mats, dtype=complex, copy=True)
    n = out.shape[0]
    step = 1
    while step < n:
        out[step:] = out[step:] @ out[:-step]
        step *= 2
    return out


def suffix_products(mats):
    """Inclusive products ``S[k] = mats[-1] @ ... @ mats[k]``."""
    out = np.array(mats, dtype=complex, copy=True)
    n = out.shape[0]
    step = 1
    while step < n:
        out[:-step] = out[step:] @ out[:-step]
        step *= 2
    return out


def ordered_product(mats):
    """Time-ordered product ``mats[-1] @ ... @ mats[0]`` by pairwise reduction."""
    cur = np.asarray(mats, dtype=complex)
    if cur.shape[0] == 0:
        raise ValueError("empty product")
    while cur.shape[0] > 1:
        if cur.shape[0] % 2:
            head, cur = cur[:1], cur[1:]
            paired = cur[1::2] @ cur[0::2]
            # keep the odd first factor at the early-time end
            paired[0] = paired[0] @ head[0]
            cur = paired
        else:
            cur = cur[1::2] @ cur[0::2]
    return cur[0]


def vec(rho):
    """Column-stacked vectorization."""
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim=None):
    v = np.asarray(v)
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return v.reshape((dim, dim), order="F")


def unitary_to_super(u):
    """Superoperator of ``rho -> U rho U^dag`` (stack-aware)."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[-1]
    s = np.conj(u)[..., :, None, :, None] * u[..., None, :, None, :]
    return s.reshape(u.shape[:-2] + (d * d, d * d))


def commutator_super(h):
    """Superoperator of ``rho -> -i [H, rho]`` (stack-aware)."""
    h = np.asarray(h, dtype=complex)
    d = h.shape[-1]
    eye = np.eye(d)
    return -1j * (batched_kron(eye, h) - batched_kron(np.swapaxes(h, -1, -2), eye))


def dissipator_super(c_ops):
    """Sum of Lindblad dissipators ``D[c] rho = c rho c^dag - {c^dag c, rho}/2``."""
    c_ops = [np.asarray(c, dtype=complex) for c in c_ops]
    if not c_ops:
        raise ValueError("no collapse operators")
    d = c_ops[0].shape[0]
    eye = np.eye(d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for c in c_ops:
        cdc = dag(c) @ c
        out += np.kron(np.conj(c), c) - 0.5 * (np.kron(eye, cdc) + np.kron(cdc.T, eye))
    return out


def batched_kron(a, b):
    """Kronecker product broadcasting over leading axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    lead = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    m, n = a.shape[-2:]
    p, q = b.shape[-2:]
    out = a[..., :, None, :, None] * b[..., None, :, None, :]
    return np.broadcast_to(out, lead + (m, p, n, q)).reshape(lead + (m * p, n * q))


def super_to_choi(s):
    """Choi matrix ``sum_ij |i><j| kron S(|i><j|)`` of a column-stacked superoperator."""
    s = np.asarray(s, dtype=complex)
    d = int(round(np.sqrt(s.shape[0])))
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            choi += np.kron(e, unvec(s @ vec(e), d))
    return choi


def trace_preservation_error(s):
    """Max deviation of ``Tr S(E_ij)`` from ``delta_ij``."""
    s = np.asarray(s)
    d = int(round(np.sqrt(s.shape[0])))
    # row of S that produces Tr(out) is the vectorized identity
    tr_row = vec(np.eye(d)) @ s
    return float(np.max(np.abs(tr_row - vec(np.eye(d)))))


def choi_min_eigenvalue(s):
    choi = super_to_choi(s)
    return float(np.min(np.linalg.eigvalsh(0.5 * (choi + dag(choi)))))


def random_hermitian(dim, rng, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + dag(a))


def random_unitary(dim, rng):
    """Haar-random unitary via QR of a Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph
