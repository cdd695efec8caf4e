"""Hamiltonian models for transmon qubits.

Units inside the models are nanoseconds and rad/ns. Device-spec files use the
units engineers quote (GHz, MHz, microseconds) and are converted on build.

Pulse amplitudes are dimensionless; every control operator already carries
the peak Rabi rate, so an amplitude of 1 drives at ``rabi_mhz``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import qmath
from .errors import (
    MissingAnharmonicity,
    NonPhysicalT2,
    ParseError,
    ValidationError,
    ZeroDetuning,
)

TWO_PI = 2.0 * np.pi
DEFAULT_RABI_MHZ = 50.0
DEFAULT_ANHARM_GHZ = -0.330


def ghz_to_rad_per_ns(f):
    return TWO_PI * f


def mhz_to_rad_per_ns(f):
    return TWO_PI * f * 1e-3


@dataclass(frozen=True)
class DeviceSpec:
    """Calibration data for a small patch of a device.

    Times are stored as given in the file: ``t1``/``t2`` in microseconds,
    ``dt`` in nanoseconds. ``coupling_J`` maps an unordered qubit pair to the
    exchange coupling in MHz.
    """

    qubit_freqs: tuple
    t1: tuple
    t2: tuple
    dt: float
    levels: int = 2
    anharmonicities: tuple = ()
    coupling_J: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.qubit_freqs)
        if n == 0:
            raise ValidationError("device spec has no qubits")
        if len(self.t1) != n or len(self.t2) != n:
            raise ValidationError("t1/t2 lists must have one entry per qubit")
        if self.anharmonicities and len(self.anharmonicities) != n:
            raise ValidationError("anharmonicities must be empty or one per qubit")
        if self.levels not in (2, 3):
            raise ValidationError(f"levels must be 2 or 3, got {self.levels!r}")
        if not self.dt > 0:
            raise ValidationError(f"dt must be strictly positive, got {self.dt!r}")
        for q, (t1, t2) in enumerate(zip(self.t1, self.t2)):
            if not (t1 > 0 and t2 > 0):
                raise ValidationError(f"qubit {q}: t1 and t2 must be strictly positive")
            if t2 > 2.0 * t1:
                raise NonPhysicalT2(f"qubit {q}: t2 = {t2} us exceeds 2*t1 = {2 * t1} us")
        for pair, j in self.coupling_J.items():
            if len(pair) != 2 or pair[0] == pair[1] or not all(0 <= p < n for p in pair):
                raise ValidationError(f"coupling pair {pair!r} is not a valid qubit pair")

    @property
    def n_qubits(self):
        return len(self.qubit_freqs)

    def coupling(self, i, j):
        key = (min(i, j), max(i, j))
        if key not in self.coupling_J:
            raise ValidationError(f"no coupling declared for qubit pair {key}")
        return self.coupling_J[key]

    def anharmonicity(self, q):
        if not self.anharmonicities:
            return None
        return self.anharmonicities[q]


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    """``H(t) = drift + sum_i u_i(t) * controls[i]`` plus optional collapse operators."""

    drift: np.ndarray
    controls: tuple  # ((label, operator), ...)
    collapse_ops: tuple = ()
    frame: str = "rotating"

    def __post_init__(self):
        d = self.drift.shape[0]
        for name, op in (("drift", self.drift),) + tuple(self.controls):
            if op.shape != (d, d):
                raise ValidationError(f"{name} has shape {op.shape}, expected {(d, d)}")
            qmath.check_hermitian(op)
        for c in self.collapse_ops:
            if c.shape != (d, d):
                raise ValidationError("collapse operator dimension mismatch")

    @property
    def dim(self):
        return self.drift.shape[0]

    @property
    def labels(self):
        return tuple(label for label, _ in self.controls)

    @property
    def control_ops(self):
        return np.array([op for _, op in self.controls])

    @property
    def is_open(self):
        return len(self.collapse_ops) > 0

    def closed(self):
        """Same Hamiltonian with the collapse operators dropped."""
        return HamiltonianModel(self.drift, self.controls, (), self.frame)


def dephasing_rate(t1, t2):
    """Pure-dephasing rate ``1/T_phi = 1/T2 - 1/(2 T1)`` (same time unit in and out)."""
    rate = 1.0 / t2 - 0.5 / t1
    if rate < -1e-15:
        raise NonPhysicalT2(f"T2 = {t2} > 2*T1 = {2 * t1}")
    return max(rate, 0.0)


def collapse_operators(t1_ns, t2_ns, levels):
    """Relaxation and pure-dephasing Lindblad operators for one transmon.

    The dephasing operator is ``sqrt(2/T_phi) n`` so that the 0-1 coherence
    decays at ``1/T_phi`` on top of the ``1/(2 T1)`` relaxation contribution.
    """
    a = qmath.destroy(levels)
    ops = [np.sqrt(1.0 / t1_ns) * a]
    gphi = dephasing_rate(t1_ns, t2_ns)
    if gphi > 0:
        ops.append(np.sqrt(2.0 * gphi) * (qmath.dag(a) @ a))
    return ops


def _single_qubit_controls(levels, names, rabi):
    a = qmath.destroy(levels)
    ops = {
        "X": 0.5 * rabi * (a + qmath.dag(a)),
        "Y": 0.5j * rabi * (qmath.dag(a) - a),
    }
    return tuple((n, ops[n]) for n in names)


def build_single_qubit(spec, qubit=0, controls=("X", "Y"), open_system=False,
                       rabi_mhz=DEFAULT_RABI_MHZ, detuning_mhz=0.0):
    """Single transmon in the frame rotating at its drive frequency.

    Two levels: the drift vanishes on resonance and the controls are
    ``rabi * sigma_{x,y} / 2``. Three levels: the drift is the Duffing term
    ``(delta/2) a^dag a^dag a a`` and the controls are the ladder-operator
    quadratures. ``detuning_mhz`` adds ``(detuning/2) * (1 - 2n)`` style
    off-resonance drift for robustness studies.
    """
    if not 0 <= qubit < spec.n_qubits:
        raise ValidationError(f"qubit index {qubit} out of range for {spec.n_qubits} qubits")
    controls = tuple(controls)
    if not controls or any(c not in ("X", "Y") for c in controls):
        raise ValidationError(f"controls must be a non-empty subset of X, Y; got {controls}")
    levels = spec.levels
    rabi = mhz_to_rad_per_ns(rabi_mhz)
    a = qmath.destroy(levels)
    n_op = qmath.dag(a) @ a
    drift = np.zeros((levels, levels), dtype=complex)
    if levels == 3:
        delta = spec.anharmonicity(qubit)
        if delta is None:
            raise MissingAnharmonicity(f"qubit {qubit}: 3-level model needs an anharmonicity")
        drift = drift + 0.5 * ghz_to_rad_per_ns(delta) * (qmath.dag(a) @ qmath.dag(a) @ a @ a)
    if detuning_mhz:
        # qubit frequency above the drive by detuning: -(detuning/2) sigma_z on two levels
        drift = drift + mhz_to_rad_per_ns(detuning_mhz) * n_op
        drift = drift - np.trace(drift) / levels * np.eye(levels)
    c_ops = ()
    if open_system:
        c_ops = tuple(collapse_operators(spec.t1[qubit] * 1e3, spec.t2[qubit] * 1e3, levels))
    return HamiltonianModel(
        drift=drift,
        controls=_single_qubit_controls(levels, controls, rabi),
        collapse_ops=c_ops,
        frame="rotating",
    )


@dataclass(frozen=True)
class CRModel:
    """Parameters of the effective cross-resonance Hamiltonian (rad/ns)."""

    w1_tilde: float
    w2_tilde: float
    J: float
    delta12: float

    def __post_init__(self):
        if self.delta12 == 0:
            raise ZeroDetuning("qubit detuning is zero; the ZX coefficient J/delta is undefined")

    @property
    def zx_coefficient(self):
        return self.J / self.delta12

    @classmethod
    def from_spec(cls, spec, control_qubit, target_qubit):
        w1 = ghz_to_rad_per_ns(spec.qubit_freqs[control_qubit])
        w2 = ghz_to_rad_per_ns(spec.qubit_freqs[target_qubit])
        J = mhz_to_rad_per_ns(spec.coupling(control_qubit, target_qubit))
        return cls(w1_tilde=w1, w2_tilde=w2, J=J, delta12=w1 - w2)


def build_cr_two_qubit(spec, control_qubit=0, target_qubit=1, open_system=False,
                       rabi_mhz=DEFAULT_RABI_MHZ, frame="cr", grouping="separate"):
    """Effective cross-resonance model on (control, target), control qubit first.

    Drift ``(w1/2) ZI + (w2/2) IZ`` is written in one of three frames:

    * ``"lab"``: bare dressed frequencies.
    * ``"rotating"``: each qubit in its own drive frame; the drift is zero.
    * ``"cr"``: both qubits in the target's frame, where the control qubit is
      driven at the target frequency; the drift is ``(delta12/2) ZI``.

    With ``grouping="shared"`` the control list is exactly two operators,
    ``XI + (J/delta12) ZX`` sharing one amplitude and ``IX``. With
    ``grouping="separate"`` (default) ``XI``, ``IX`` and ``(J/delta12) ZX``
    are independent channels ``X1``, ``X2``, ``ZX``.
    """
    n = spec.n_qubits
    if not (0 <= control_qubit < n and 0 <= target_qubit < n) or control_qubit == target_qubit:
        raise ValidationError(f"invalid qubit pair ({control_qubit}, {target_qubit})")
    cr = CRModel.from_spec(spec, control_qubit, target_qubit)
    rabi = mhz_to_rad_per_ns(rabi_mhz)
    X, Z, I = qmath.SIGMA_X, qmath.SIGMA_Z, qmath.I2
    XI, IX, ZX = qmath.kron(X, I), qmath.kron(I, X), qmath.kron(Z, X)
    ZI, IZ = qmath.kron(Z, I), qmath.kron(I, Z)

    if frame == "lab":
        drift = 0.5 * cr.w1_tilde * ZI + 0.5 * cr.w2_tilde * IZ
    elif frame == "rotating":
        drift = np.zeros((4, 4), dtype=complex)
    elif frame == "cr":
        drift = 0.5 * cr.delta12 * ZI
    else:
        raise ValidationError(f"unknown frame {frame!r}; expected lab, rotating or cr")

    k = cr.zx_coefficient
    if grouping == "shared":
        controls = (("X1", 0.5 * rabi * (XI + k * ZX)), ("X2", 0.5 * rabi * IX))
    elif grouping == "separate":
        controls = (
            ("X1", 0.5 * rabi * XI),
            ("X2", 0.5 * rabi * IX),
            ("ZX", 0.5 * rabi * k * ZX),
        )
    else:
        raise ValidationError(f"unknown grouping {grouping!r}; expected shared or separate")

    c_ops = ()
    if open_system:
        ops = []
        for pos, q in enumerate((control_qubit, target_qubit)):
            for c in collapse_operators(spec.t1[q] * 1e3, spec.t2[q] * 1e3, 2):
                ops.append(qmath.kron(c, I) if pos == 0 else qmath.kron(I, c))
        c_ops = tuple(ops)
    return HamiltonianModel(drift=drift, controls=controls, collapse_ops=c_ops, frame=frame)


_QUBIT_KEYS = {"freq_ghz", "t1_us", "t2_us"}


def parse_device_spec(doc, source="<spec>"):
    """Validate a device-spec mapping (already JSON-decoded) into a DeviceSpec."""
    def fail(msg):
        raise ValidationError(f"{source}: {msg}")

    if not isinstance(doc, dict):
        fail("top-level value must be an object")
    for key in ("qubits", "coupling", "dt_ns", "levels"):
        if key not in doc:
            fail(f"missing required field '{key}'")
    qubits = doc["qubits"]
    if not isinstance(qubits, list) or not qubits:
        fail("'qubits' must be a non-empty list")
    freqs, t1, t2, anharm = [], [], [], []
    for i, q in enumerate(qubits):
        if not isinstance(q, dict):
            fail(f"qubits[{i}] must be an object")
        missing = _QUBIT_KEYS - q.keys()
        if missing:
            fail(f"qubits[{i}] missing field(s) {sorted(missing)}")
        for key in _QUBIT_KEYS | ({"anharm_ghz"} & q.keys()):
            if not isinstance(q[key], (int, float)) or isinstance(q[key], bool):
                fail(f"qubits[{i}].{key} must be a number")
        freqs.append(float(q["freq_ghz"]))
        t1.append(float(q["t1_us"]))
        t2.append(float(q["t2_us"]))
        if "anharm_ghz" in q:
            anharm.append(float(q["anharm_ghz"]))
    if anharm and len(anharm) != len(qubits):
        fail("anharm_ghz must be given for every qubit or none")
    coupling = {}
    if not isinstance(doc["coupling"], list):
        fail("'coupling' must be a list")
    for i, c in enumerate(doc["coupling"]):
        try:
            a, b = (int(p) for p in c["pair"])
            j = float(c["j_mhz"])
        except (KeyError, TypeError, ValueError):
            fail(f"coupling[{i}] must have 'pair': [i, j] and numeric 'j_mhz'")
        coupling[(min(a, b), max(a, b))] = j
    dt = doc["dt_ns"]
    if not isinstance(dt, (int, float)) or isinstance(dt, bool):
        fail("'dt_ns' must be a number")
    levels = doc["levels"]
    if levels not in (2, 3) or isinstance(levels, bool):
        fail(f"'levels' must be 2 or 3, got {levels!r}")
    try:
        return DeviceSpec(
            qubit_freqs=tuple(freqs),
            t1=tuple(t1),
            t2=tuple(t2),
            dt=float(dt),
            levels=int(levels),
            anharmonicities=tuple(anharm),
            coupling_J=coupling,
        )
    except ValidationError as exc:
        raise type(exc)(f"{source}: {exc}") from None


def load_device_spec(path):
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_device_spec(doc, source=str(path))


def device_spec_to_dict(spec):
    qubits = []
    for q in range(spec.n_qubits):
        entry = {"freq_ghz": spec.qubit_freqs[q], "t1_us": spec.t1[q], "t2_us": spec.t2[q]}
        if spec.anharmonicities:
            entry["anharm_ghz"] = spec.anharmonicities[q]
        qubits.append(entry)
    coupling = [{"pair": [a, b], "j_mhz": j} for (a, b), j in sorted(spec.coupling_J.items())]
    return {"qubits": qubits, "coupling": coupling, "dt_ns": spec.dt, "levels": spec.levels}
