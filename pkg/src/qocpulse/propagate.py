"""Time evolution under a piecewise-constant pulse, and gate fidelity.

Each slot ``k`` holds ``H_k = H0 + sum_i u_i[k] H_i`` for time ``dt``. Closed
systems compose unitaries ``exp(-i H_k dt)``; open systems compose the
exponentials of the column-stacked Lindblad generator.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import qmath
from .errors import DimensionMismatch, LabelMismatch, ValidationError

_S = 1.0 / np.sqrt(2.0)

GATES = {
    "I": np.eye(2, dtype=complex),
    "X": qmath.SIGMA_X,
    "Y": qmath.SIGMA_Y,
    "Z": qmath.SIGMA_Z,
    "SX": 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]),
    "H": _S * np.array([[1, 1], [1, -1]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}
SUPPORTED_GATES = ("X", "SX", "H", "CNOT")


@dataclass(frozen=True, eq=False)
class GateTarget:
    """Target unitary ``U_t`` on the computational subspace.

    ``norm`` is the fidelity normalization, ``dim**2`` so that a perfect gate
    scores exactly one.
    """

    name: str
    unitary: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.unitary, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValidationError(f"target must be a square matrix, got shape {u.shape}")
        err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        if err > 1e-10:
            raise ValidationError(f"target {self.name!r} is not unitary (error {err:.2e})")
        object.__setattr__(self, "unitary", u)

    @property
    def dim(self):
        return self.unitary.shape[0]

    @property
    def norm(self):
        return float(self.dim ** 2)

    def embedded(self, dim):
        """``U_t`` padded with zeros into the top-left block of a ``dim`` space."""
        if dim < self.dim:
            raise DimensionMismatch(f"target of dim {self.dim} does not fit a {dim}-dim model")
        w = np.zeros((dim, dim), dtype=complex)
        w[: self.dim, : self.dim] = self.unitary
        return w


def gate_target(name):
    """Look up a named gate (X, SX, H, CNOT, plus I/Y/Z)."""
    key = name.upper()
    if key not in GATES:
        raise KeyError(name)
    return GateTarget(key, GATES[key])


@dataclass(frozen=True, eq=False)
class PropagationResult:
    """``final`` is ``U_f`` for closed systems, the process superoperator otherwise."""

    final: np.ndarray
    propagators: np.ndarray
    is_open: bool
    infidelity: float = None

    @property
    def final_unitary(self):
        if self.is_open:
            raise ValueError("open-system result has no final unitary; use .final")
        return self.final

    @property
    def superoperator(self):
        if self.is_open:
            return self.final
        return qmath.unitary_to_super(self.final)


def aligned_amplitudes(model, pulse):
    """Pulse amplitudes reordered to the model's control order."""
    if set(pulse.labels) != set(model.labels) or len(pulse.labels) != len(model.labels):
        raise LabelMismatch(
            f"pulse channels {pulse.labels} do not match model controls {model.labels}")
    order = [pulse.labels.index(lab) for lab in model.labels]
    return pulse.amplitudes[order]


def slot_hamiltonians(model, amps):
    """Stack of ``H_k``, shape ``(n_slots, d, d)``, for amplitudes in model order."""
    ops = model.control_ops
    amps = np.asarray(amps, dtype=float)
    if ops.size == 0:
        return np.broadcast_to(model.drift, (amps.shape[1],) + model.drift.shape).copy()
    return model.drift[None] + np.einsum("ik,iab->kab", amps, ops)


def closed_propagators(model, amps, dt):
    """Per-slot unitaries ``exp(-i H_k dt)`` plus the eigensystems that made them."""
    h = slot_hamiltonians(model, amps)
    w, v = qmath.eig_hermitian(h)
    phases = np.exp(-1j * dt * w)
    u = (v * phases[:, None, :]) @ qmath.dag(v)
    return u, w, v


def lindbladian(model, h):
    """Generator(s) ``L`` with ``d vec(rho)/dt = L vec(rho)`` for Hamiltonian(s) ``h``."""
    gen = qmath.commutator_super(h)
    if model.collapse_ops:
        gen = gen + qmath.dissipator_super(model.collapse_ops)
    return gen


def open_propagators(model, amps, dt):
    h = slot_hamiltonians(model, amps)
    return scipy.linalg.expm(dt * lindbladian(model, h))


def propagate_closed(model, pulse, target=None):
    if model.is_open:
        raise ValidationError("model has collapse operators; use propagate_open")
    amps = aligned_amplitudes(model, pulse)
    u, _, _ = closed_propagators(model, amps, pulse.dt)
    final = qmath.ordered_product(u)
    result = PropagationResult(final=final, propagators=u, is_open=False)
    if target is not None:
        result = PropagationResult(final, u, False, gate_infidelity(result, target))
    return result


def propagate_open(model, pulse, target=None):
    if not model.is_open:
        raise ValidationError("model has no collapse operators; use propagate_closed")
    amps = aligned_amplitudes(model, pulse)
    s = open_propagators(model, amps, pulse.dt)
    final = qmath.ordered_product(s)
    result = PropagationResult(final=final, propagators=s, is_open=True)
    if target is not None:
        result = PropagationResult(final, s, True, gate_infidelity(result, target))
    return result


def propagate(model, pulse, target=None):
    """Dispatch on whether the model carries collapse operators."""
    if model.is_open:
        return propagate_open(model, pulse, target)
    return propagate_closed(model, pulse, target)


def _clamp(x):
    return float(min(max(x, 0.0), 1.0))


def closed_overlap(final, w):
    return np.trace(qmath.dag(w) @ final)


def open_overlap(final, w):
    return np.real(np.trace(qmath.dag(qmath.unitary_to_super(w)) @ final))


def gate_infidelity(result, target):
    """``1 - |Tr(U_t^dag U_f)|^2 / d^2`` (closed) or ``1 - Re Tr(S_t^dag S_f) / d^2`` (open).

    Targets smaller than the model space are compared on the computational
    subspace. The value is clamped into [0, 1] against roundoff.
    """
    final = result.final
    model_dim = final.shape[0]
    if result.is_open:
        model_dim = int(round(np.sqrt(model_dim)))
    w = target.embedded(model_dim)
    if result.is_open:
        return _clamp(1.0 - open_overlap(final, w) / target.norm)
    return _clamp(1.0 - abs(closed_overlap(final, w)) ** 2 / target.norm)


def process_fidelity(superop, target_unitary):
    """Entanglement fidelity ``Re Tr(S_t^dag S) / d^2`` of a channel against a unitary."""
    d = target_unitary.shape[0]
    return float(open_overlap(superop, target_unitary) / d ** 2)


def average_gate_fidelity(superop, target_unitary):
    d = target_unitary.shape[0]
    return (d * process_fidelity(superop, target_unitary) + 1.0) / (d + 1.0)
