"""Simulated standard and interleaved randomized benchmarking.

Channels are column-stacked superoperators (see :mod:`qocpulse.qmath`).
Survival is the ground-state population after a random Clifford sequence and
its exact inverse; both curves are fit to ``A * alpha**m + B``.

Two-qubit Cliffords are drawn from the layered decomposition into four
classes (single-qubit, CNOT-like, iSWAP-like, SWAP-like) with weights equal
to the class sizes 576, 5184, 5184 and 576, so every one of the 11520
elements is equally likely.
"""

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.optimize

from . import qmath
from .errors import FitDivergence, InsufficientLengths, ValidationError
from .propagate import GATES, average_gate_fidelity, process_fidelity, propagate

CPTP_TOL = 1e-8
CHOI_TOL = 1e-9
TP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class NoiseChannel:
    kind: str
    superop: np.ndarray
    params: dict = field(default_factory=dict)
    check: bool = True

    def __post_init__(self):
        s = np.asarray(self.superop, dtype=complex)
        object.__setattr__(self, "superop", s)
        if self.check:
            tp = qmath.trace_preservation_error(s)
            if tp > max(TP_TOL, CPTP_TOL if self.kind == "from_pulse" else TP_TOL):
                raise ValidationError(f"{self.kind} channel is not trace preserving ({tp:.2e})")
            lam = qmath.choi_min_eigenvalue(s)
            if lam < -CHOI_TOL:
                raise ValidationError(f"{self.kind} channel is not completely positive ({lam:.2e})")

    @property
    def dim(self):
        return int(round(math.sqrt(self.superop.shape[0])))

    def then(self, other):
        """Channel applying ``self`` first, then ``other``."""
        return NoiseChannel("composed", other.superop @ self.superop,
                            {"parts": [self.kind, other.kind]})

    def apply(self, rho):
        return qmath.unvec(self.superop @ qmath.vec(rho), self.dim)

    def average_infidelity(self):
        """Average gate infidelity against the identity."""
        return 1.0 - average_gate_fidelity(self.superop, np.eye(self.dim))

    def process_infidelity(self):
        return 1.0 - process_fidelity(self.superop, np.eye(self.dim))


def kraus_to_super(kraus):
    return sum(np.kron(np.conj(k), k) for k in kraus)


def _tensor_kraus(kraus, n_qubits):
    out = [np.eye(1, dtype=complex)]
    for _ in range(n_qubits):
        out = [np.kron(a, k) for a in out for k in kraus]
    return out


def identity_channel(dim=2):
    return NoiseChannel("depolarizing", np.eye(dim * dim, dtype=complex), {"p": 0.0})


def depolarizing(p, dim=2):
    """``rho -> (1 - p) rho + p I/d``.

    Its RB decay parameter is exactly ``alpha = 1 - p`` for any dimension, and
    the error per gate is ``(d - 1) p / d``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"depolarizing probability must lie in [0, 1], got {p}")
    eye = np.eye(dim)
    s = (1.0 - p) * np.eye(dim * dim) + p * np.outer(qmath.vec(eye), qmath.vec(eye)) / dim
    return NoiseChannel("depolarizing", s.astype(complex), {"p": p})


def depolarizing_from_error(r, dim=2):
    """Depolarizing channel with average gate infidelity ``r``."""
    return depolarizing(r * dim / (dim - 1), dim)


def amplitude_damping(gamma, n_qubits=1):
    if not 0.0 <= gamma <= 1.0:
        raise ValidationError(f"damping must lie in [0, 1], got {gamma}")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return NoiseChannel("amplitude_damping", kraus_to_super(_tensor_kraus([k0, k1], n_qubits)),
                        {"gamma": gamma})


def dephasing(lam, n_qubits=1):
    """Phase damping: off-diagonals shrink by ``sqrt(1 - lam)``."""
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"dephasing must lie in [0, 1], got {lam}")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - lam)]], dtype=complex)
    k1 = np.array([[0, 0], [0, np.sqrt(lam)]], dtype=complex)
    return NoiseChannel("dephasing", kraus_to_super(_tensor_kraus([k0, k1], n_qubits)),
                        {"lambda": lam})


def thermal_relaxation(duration_ns, t1_us, t2_us, n_qubits=1):
    """Amplitude then phase damping for ``duration_ns`` at the given T1/T2."""
    t1, t2 = t1_us * 1e3, t2_us * 1e3
    gamma = 1.0 - math.exp(-duration_ns / t1)
    # remaining coherence exp(-t/T2) = sqrt(1-gamma) * sqrt(1-lam)
    lam = 1.0 - math.exp(-2.0 * duration_ns / t2) / (1.0 - gamma)
    return amplitude_damping(gamma, n_qubits).then(dephasing(max(lam, 0.0), n_qubits))


def unitary_channel(u):
    return NoiseChannel("unitary", qmath.unitary_to_super(u), check=False)


# -- Clifford group ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Clifford:
    index: int
    unitary: np.ndarray
    n_qubits: int

    def inverse_unitary(self):
        return qmath.dag(self.unitary)


def phase_key(u, decimals=8):
    """Hashable key identifying ``u`` up to global phase."""
    flat = np.asarray(u).ravel()
    pivot = flat[np.argmax(np.abs(flat) > 1e-6)]
    v = flat * (abs(pivot) / pivot)
    v = np.round(v, decimals) + 0.0  # drop negative zeros
    return v.tobytes()


def equal_up_to_phase(a, b, tol=1e-9):
    d = a.shape[0]
    return abs(abs(np.trace(qmath.dag(a) @ b)) - d) < tol


@lru_cache(maxsize=None)
def single_qubit_cliffords():
    """The 24 single-qubit Cliffords, generated from H and S by closure."""
    h = GATES["H"]
    s = np.diag([1, 1j])
    elems = [np.eye(2, dtype=complex)]
    seen = {phase_key(elems[0])}
    frontier = list(elems)
    while frontier:
        nxt = []
        for u in frontier:
            for g in (h, s):
                w = g @ u
                key = phase_key(w)
                if key not in seen:
                    seen.add(key)
                    elems.append(w)
                    nxt.append(w)
        frontier = nxt
    return tuple(elems)


@lru_cache(maxsize=None)
def _sqrt_pauli(axis, sign=1):
    return qmath.expm_hermitian_scaled(qmath.PAULIS[axis], -1j * sign * np.pi / 4)


@lru_cache(maxsize=None)
def _s1_groups():
    """Three-element subgroup cycling X -> Y -> Z, and its two dressed variants."""
    x2, y2 = _sqrt_pauli("X"), _sqrt_pauli("Y")
    mx2, my2 = _sqrt_pauli("X", -1), _sqrt_pauli("Y", -1)
    eye = np.eye(2, dtype=complex)
    s1 = (eye, y2 @ x2, mx2 @ my2)
    s1_x2 = tuple(x2 @ g for g in s1)
    s1_y2 = tuple(y2 @ g for g in s1)
    return s1, s1_x2, s1_y2


def _cz():
    return np.diag([1, 1, 1, -1]).astype(complex)


CLASS_SIZES = (576, 5184, 5184, 576)


def two_qubit_clifford(index):
    """Element ``index`` (0..11519) of the layered two-qubit Clifford enumeration."""
    if not 0 <= index < 11520:
        raise ValueError(f"two-qubit Clifford index {index} out of range")
    c1 = single_qubit_cliffords()
    s1, s1_x2, s1_y2 = _s1_groups()
    i, j, rest = index % 24, (index // 24) % 24, index // 576
    u = np.kron(c1[i], c1[j])
    cz = _cz()
    x2, y2, my2 = _sqrt_pauli("X"), _sqrt_pauli("Y"), _sqrt_pauli("Y", -1)
    if rest == 0:
        return u
    rest -= 1
    if rest < 9:
        a, b = divmod(rest, 3)
        # CNOT-like: local, CZ, then one S1 element on each qubit
        return np.kron(s1[a], s1_y2[b]) @ cz @ u
    rest -= 9
    if rest < 9:
        a, b = divmod(rest, 3)
        # iSWAP-like: two CZs separated by a local layer
        mid = np.kron(y2, np.conj(x2).T)
        return np.kron(s1_y2[a], s1_x2[b]) @ cz @ mid @ cz @ u
    # SWAP-like: three CZs
    inner = np.kron(np.eye(2), my2) @ cz @ np.kron(my2, y2) @ cz @ np.kron(y2, my2) @ cz
    return np.kron(np.eye(2), y2) @ inner @ u


def _class_offset(cls):
    return sum(CLASS_SIZES[:cls])


@lru_cache(maxsize=None)
def two_qubit_cliffords():
    """All 11520 two-qubit Cliffords in layered-index order, as one array."""
    table = np.array([two_qubit_clifford(i) for i in range(11520)])
    table.setflags(write=False)
    return table


def sample_clifford(n_qubits, rng):
    """Uniformly random Clifford on one or two qubits."""
    if n_qubits == 1:
        idx = int(rng.integers(24))
        return Clifford(idx, single_qubit_cliffords()[idx], 1)
    if n_qubits == 2:
        cls = int(rng.choice(4, p=np.array(CLASS_SIZES) / 11520.0))
        within = int(rng.integers(CLASS_SIZES[cls]))
        idx = _class_offset(cls) + within
        return Clifford(idx, two_qubit_cliffords()[idx], 2)
    raise ValidationError(f"n_qubits must be 1 or 2, got {n_qubits}")


# -- RB experiment -----------------------------------------------------------

@dataclass(eq=False)
class CurveFit:
    A: float
    alpha: float
    B: float
    sigma_A: float
    sigma_alpha: float
    sigma_B: float


@dataclass(eq=False)
class RbReport:
    dim: int
    lengths: np.ndarray
    survival_std: np.ndarray
    stderr_std: np.ndarray
    fit_std: CurveFit
    survival_int: np.ndarray = None
    stderr_int: np.ndarray = None
    fit_int: CurveFit = None

    @property
    def alpha(self):
        return self.fit_std.alpha

    @property
    def alpha_err(self):
        return self.fit_std.sigma_alpha

    @property
    def alpha_interleaved(self):
        return None if self.fit_int is None else self.fit_int.alpha

    @property
    def alpha_c(self):
        """Ratio of the interleaved to the standard decay parameter."""
        if self.fit_int is None:
            return None
        return self.fit_int.alpha / self.fit_std.alpha

    @property
    def alpha_c_err(self):
        if self.fit_int is None:
            return None
        rel = math.hypot(self.fit_int.sigma_alpha / self.fit_int.alpha,
                         self.fit_std.sigma_alpha / self.fit_std.alpha)
        return abs(self.alpha_c) * rel

    @property
    def epc(self):
        d = self.dim
        return (d - 1) * (1.0 - self.alpha) / d

    @property
    def epc_err(self):
        return (self.dim - 1) * self.alpha_err / self.dim

    @property
    def interleaved_error(self):
        if self.fit_int is None:
            return None
        d = self.dim
        return (d - 1) * (1.0 - self.alpha_c) / d

    @property
    def interleaved_error_err(self):
        if self.fit_int is None:
            return None
        return (self.dim - 1) * self.alpha_c_err / self.dim

    def to_dict(self):
        def fit(f):
            if f is None:
                return None
            return {"A": f.A, "alpha": f.alpha, "B": f.B,
                    "sigma_A": f.sigma_A, "sigma_alpha": f.sigma_alpha, "sigma_B": f.sigma_B}

        out = {
            "dim": self.dim,
            "lengths": [int(m) for m in self.lengths],
            "survival_std": [float(s) for s in self.survival_std],
            "alpha": self.alpha,
            "alpha_err": self.alpha_err,
            "epc": self.epc,
            "epc_err": self.epc_err,
            "fit_std": fit(self.fit_std),
        }
        if self.fit_int is not None:
            out.update({
                "survival_int": [float(s) for s in self.survival_int],
                "alpha_interleaved": self.alpha_interleaved,
                "alpha_c": self.alpha_c,
                "alpha_c_err": self.alpha_c_err,
                "interleaved_error": self.interleaved_error,
                "interleaved_error_err": self.interleaved_error_err,
                "fit_int": fit(self.fit_int),
            })
        return out

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["length", "mean_survival", "stderr", "curve"])
        curves = [("standard", self.survival_std, self.stderr_std)]
        if self.fit_int is not None:
            curves.append(("interleaved", self.survival_int, self.stderr_int))
        for name, surv, err in curves:
            for m, s, e in zip(self.lengths, surv, err):
                writer.writerow([int(m), repr(float(s)), repr(float(e)), name])
        return buf.getvalue()


def _ground_population(superop, dim, spam):
    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[0, 0] = 1.0
    v = qmath.vec(rho0)
    if spam is not None:
        v = spam[0].superop @ v
    v = superop @ v
    if spam is not None:
        v = spam[1].superop @ v
    return float(np.clip(np.real(v[0]), 0.0, 1.0))


def _one_seed(args):
    """Survival probabilities for one seed at every length."""
    (seed_seq, noise, interleaved, lengths, shots, n_qubits, spam) = args
    rng = np.random.default_rng(seed_seq)
    dim = 2 ** n_qubits
    surv_std, surv_int = [], []
    if interleaved is not None:
        g_u, g_noise = interleaved
        g_step = g_noise.superop @ qmath.unitary_to_super(g_u)
    n_s = noise.superop
    for m in lengths:
        seq = [sample_clifford(n_qubits, rng) for _ in range(m)]
        runs = [(False, surv_std)] + ([(True, surv_int)] if interleaved is not None else [])
        for with_gate, out in runs:
            s = np.eye(dim * dim, dtype=complex)
            ideal = np.eye(dim, dtype=complex)
            for c in seq:
                s = n_s @ qmath.unitary_to_super(c.unitary) @ s
                ideal = c.unitary @ ideal
                if with_gate:
                    s = g_step @ s
                    ideal = g_u @ ideal
            s = n_s @ qmath.unitary_to_super(qmath.dag(ideal)) @ s
            p = _ground_population(s, dim, spam)
            if shots is not None:
                p = rng.binomial(shots, p) / shots
            out.append(p)
    return surv_std, surv_int


def _fit_decay(lengths, survival, dim):
    lengths = np.asarray(lengths, dtype=float)
    survival = np.asarray(survival, dtype=float)
    if np.ptp(survival) < 1e-13:
        # flat curve: no decay is resolvable, the model degenerates to alpha = 1
        return CurveFit(0.0, 1.0, float(np.mean(survival)), 0.0, 0.0, 0.0)
    a0, b0 = (0.5, 0.5) if dim == 2 else (0.75, 0.25)
    a0 = (1.0 - 1.0 / dim) if dim > 2 else a0

    def model(m, a, alpha, b):
        return a * alpha ** m + b

    try:
        with warnings.catch_warnings():
            # three lengths fit three parameters exactly; covariance is then undefined
            warnings.simplefilter("ignore", scipy.optimize.OptimizeWarning)
            popt, pcov = scipy.optimize.curve_fit(model, lengths, survival, p0=(a0, 0.99, b0),
                                                  method="lm", maxfev=20000)
    except (RuntimeError, ValueError) as exc:
        raise FitDivergence(f"survival fit failed: {exc}", lengths, {"survival": survival}) from None
    if not np.all(np.isfinite(popt)):
        raise FitDivergence("survival fit returned non-finite parameters", lengths,
                            {"survival": survival})
    perr = np.sqrt(np.clip(np.diag(pcov), 0.0, None)) if np.all(np.isfinite(pcov)) \
        else np.full(3, np.inf)
    return CurveFit(float(popt[0]), float(popt[1]), float(popt[2]),
                    float(perr[0]), float(perr[1]), float(perr[2]))


def run_rb(noise_per_clifford, interleaved=None, lengths=(1, 10, 25, 50, 100, 150),
           n_seeds=30, shots=None, seed=0, spam=None, jobs=1):
    """Standard RB, plus interleaved RB when ``interleaved = (U, channel)`` is given.

    ``noise_per_clifford`` follows every Clifford, including the final
    inverse. It may also be a callable ``f(seed_index) -> NoiseChannel`` to
    model parameters that drift between seeds. ``shots=None`` records exact
    survival probabilities; an integer samples binomial counts.
    ``spam = (prep_channel, meas_channel)`` adds preparation and measurement
    error. Standard and interleaved curves share their random Cliffords.
    """
    lengths = [int(m) for m in lengths]
    if not lengths:
        raise InsufficientLengths("no sequence lengths given")
    if any(b <= a for a, b in zip(lengths, lengths[1:])) or lengths[0] < 1:
        raise ValidationError(f"lengths must be positive and strictly ascending, got {lengths}")
    if len(set(lengths)) < 3:
        raise InsufficientLengths(f"need at least 3 distinct lengths to fit, got {lengths}")
    if shots is not None and shots < 1:
        raise ValidationError("shots must be >= 1")
    if n_seeds < 1:
        raise ValidationError("n_seeds must be >= 1")

    noise_for = noise_per_clifford if callable(noise_per_clifford) else (lambda _i: noise_per_clifford)
    dim = noise_for(0).dim
    n_qubits = {2: 1, 4: 2}.get(dim)
    if n_qubits is None:
        raise ValidationError(f"RB supports one or two qubits; channel dimension is {dim}")
    if interleaved is not None:
        g_u, g_noise = interleaved
        if np.shape(g_u) != (dim, dim) or g_noise.dim != dim:
            raise ValidationError("interleaved gate dimension does not match the noise channel")

    children = np.random.SeedSequence(seed).spawn(n_seeds)
    tasks = [(children[i], noise_for(i), interleaved, lengths, shots, n_qubits, spam)
             for i in range(n_seeds)]
    if jobs > 1 and n_seeds > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_seed = list(pool.map(_one_seed, tasks))
    else:
        per_seed = [_one_seed(t) for t in tasks]

    std = np.array([r[0] for r in per_seed])
    sem = lambda a: a.std(axis=0, ddof=1) / np.sqrt(a.shape[0]) if a.shape[0] > 1 \
        else np.zeros(a.shape[1])
    report = RbReport(
        dim=dim,
        lengths=np.array(lengths),
        survival_std=std.mean(axis=0),
        stderr_std=sem(std),
        fit_std=_fit_decay(lengths, std.mean(axis=0), dim),
    )
    if interleaved is not None:
        inter = np.array([r[1] for r in per_seed])
        report.survival_int = inter.mean(axis=0)
        report.stderr_int = sem(inter)
        report.fit_int = _fit_decay(lengths, inter.mean(axis=0), dim)
    return report


def channel_from_pulse(model, pulse, target):
    """Residual error channel ``S_pulse S_target^dag`` of a pulse-defined gate.

    Interleaving ``(target.unitary, residual)`` reproduces the simulated gate
    exactly, since the ideal target followed by the residual equals the
    propagated channel.
    """
    if model.dim != target.dim:
        raise ValidationError(
            f"residual channels need the model ({model.dim}) and target ({target.dim}) "
            "dimensions to agree")
    s_f = propagate(model, pulse).superoperator
    s_t = qmath.unitary_to_super(target.unitary)
    residual = s_f @ qmath.dag(s_t)
    return NoiseChannel("from_pulse", residual, {"gate": target.name})
