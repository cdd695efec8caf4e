"""File formats: canonical JSON, pulse files, schedule documents, unitaries.

JSON is written with sorted keys, two-space indent and Python's shortest
round-trip float repr, so equal inputs give byte-identical files and every
float reads back bit-exactly.
"""

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParseError, UnmappedChannel, ValidationError
from .model import device_spec_to_dict
from .propagate import GateTarget
from .pulse import PulseProgram


def canonical_json(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path, obj):
    Path(path).write_text(canonical_json(obj))


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def save_pulse(path, pulse):
    write_json(path, pulse.to_dict())


def load_pulse(path):
    return PulseProgram.from_dict(read_json(path))


def spec_hash(spec):
    return hashlib.sha256(canonical_json(device_spec_to_dict(spec)).encode()).hexdigest()[:16]


def default_channel_map(labels, qubits=(0,)):
    """Control label -> (schedule channel, quadrature).

    Single-qubit ``X``/``Y`` fold into the real and imaginary parts of the
    drive channel ``d<q>``. Cross-resonance ``X1``/``X2`` go to the two drive
    channels and ``ZX`` to the control channel ``u<control>``.
    """
    mapping = {}
    for lab in labels:
        if lab in ("X", "Y"):
            mapping[lab] = (f"d{qubits[0]}", "re" if lab == "X" else "im")
        elif lab == "X1":
            mapping[lab] = (f"d{qubits[0]}", "re")
        elif lab == "X2":
            mapping[lab] = (f"d{qubits[1]}", "re")
        elif lab == "ZX":
            mapping[lab] = (f"u{qubits[0]}", "re")
    return mapping


def parse_channel_map(text):
    """Parse ``"X=d0:re,Y=d0:im"`` into a mapping."""
    mapping = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        try:
            label, target = item.split("=")
            chan, _, quad = target.partition(":")
        except ValueError:
            raise ValidationError(f"bad channel mapping entry {item!r}; use LABEL=CHAN[:re|im]") from None
        quad = quad or "re"
        if quad not in ("re", "im"):
            raise ValidationError(f"quadrature must be re or im, got {quad!r}")
        mapping[label] = (chan, quad)
    return mapping


def pulse_to_schedule(pulse, mapping, gate="", spec_digest="", version=__version__):
    """Fold the pulse channels into complex schedule channels."""
    for lab in pulse.labels:
        if lab not in mapping:
            raise UnmappedChannel(f"pulse channel {lab!r} has no schedule channel mapping")
    used = {}
    for lab in pulse.labels:
        chan, quad = mapping[lab]
        if (chan, quad) in used:
            raise ValidationError(
                f"labels {used[(chan, quad)]!r} and {lab!r} both map to {chan}:{quad}")
        used[(chan, quad)] = lab
    names = []
    for lab in pulse.labels:
        if mapping[lab][0] not in names:
            names.append(mapping[lab][0])
    channels = []
    for name in names:
        z = np.zeros(pulse.n_slots, dtype=complex)
        for lab in pulse.labels:
            chan, quad = mapping[lab]
            if chan == name:
                z += pulse.channel(lab) * (1j if quad == "im" else 1.0)
        peak = float(np.max(np.abs(z)))
        if peak > 1.0:
            raise ValidationError(f"channel {name}: |sample| reaches {peak:.4f} > 1")
        channels.append({"name": name,
                         "samples": [[float(v.real), float(v.imag)] for v in z]})
    return {
        "dt_ns": pulse.dt,
        "channels": channels,
        "meta": {"gate": gate, "spec_hash": spec_digest, "version": f"qocpulse {version}"},
    }


def schedule_to_pulse(doc, mapping, bounds=None):
    """Inverse of :func:`pulse_to_schedule` for the same mapping."""
    try:
        by_name = {ch["name"]: np.array(ch["samples"], dtype=float) for ch in doc["channels"]}
        dt = float(doc["dt_ns"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed schedule document: {exc}") from None
    claimed = {}
    for lab, (chan, quad) in mapping.items():
        claimed.setdefault(chan, set()).add(quad)
    for name, samples in by_name.items():
        if name not in claimed:
            raise UnmappedChannel(f"schedule channel {name!r} is not mapped to any pulse label")
        if "im" not in claimed[name] and np.any(samples[:, 1] != 0):
            raise UnmappedChannel(f"schedule channel {name!r} has an unmapped imaginary part")
    labels, amps = [], []
    for lab, (chan, quad) in mapping.items():
        if chan not in by_name:
            raise UnmappedChannel(f"label {lab!r} maps to missing schedule channel {chan!r}")
        labels.append(lab)
        amps.append(by_name[chan][:, 0 if quad == "re" else 1])
    return PulseProgram(dt, tuple(labels), np.array(amps), bounds or {})


def load_unitary(path):
    """Read a custom target from ``.npy`` or JSON ``{"name", "unitary": [[[re, im], ...]]}``."""
    path = Path(path)
    if path.suffix == ".npy":
        return GateTarget(path.stem, np.load(path))
    doc = read_json(path)
    try:
        u = np.array(doc["unitary"], dtype=float)
        u = u[..., 0] + 1j * u[..., 1]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: unitary must be a matrix of [re, im] pairs ({exc})") from None
    return GateTarget(doc.get("name", path.stem), u)
