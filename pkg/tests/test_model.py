import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qocpulse import qmath
from qocpulse.errors import (MissingAnharmonicity, NonPhysicalT2, ParseError,
                             ValidationError, ZeroDetuning)
from qocpulse.model import (DeviceSpec, build_cr_two_qubit, build_single_qubit,
                            collapse_operators, dephasing_rate, load_device_spec)
from qocpulse.propagate import propagate_open
from qocpulse.pulse import PulseProgram

TWO_PI = 2 * np.pi


def spec(**kw):
    base = dict(qubit_freqs=(4.911,), t1=(86.76,), t2=(86.76,), dt=0.2222, levels=2,
                anharmonicities=(-0.33,), coupling_J={})
    base.update(kw)
    return DeviceSpec(**base)


def test_single_qubit_two_level_closed():
    rabi = 50.0
    m = build_single_qubit(spec(), controls=("X", "Y"), rabi_mhz=rabi)
    om = TWO_PI * rabi * 1e-3
    assert np.array_equal(m.drift, np.zeros((2, 2)))
    assert m.labels == ("X", "Y")
    assert np.allclose(m.control_ops[0], 0.5 * om * qmath.SIGMA_X, atol=1e-15)
    assert np.allclose(m.control_ops[1], 0.5 * om * qmath.SIGMA_Y, atol=1e-15)
    assert m.collapse_ops == () and not m.is_open


def test_dephasing_rate_arithmetic():
    assert math.isclose(dephasing_rate(86760.0, 86760.0), 1 / (2 * 86760.0), rel_tol=1e-14)
    assert dephasing_rate(100.0, 200.0) == 0.0


def test_open_system_flag():
    closed = build_single_qubit(spec(), open_system=False)
    opened = build_single_qubit(spec(), open_system=True)
    assert closed.collapse_ops == ()
    assert len(opened.collapse_ops) == 2
    assert opened.closed().collapse_ops == ()


def test_three_level_needs_anharmonicity():
    with pytest.raises(MissingAnharmonicity):
        build_single_qubit(spec(levels=3, anharmonicities=()))
    m = build_single_qubit(spec(levels=3))
    # (delta/2) n(n-1) on Fock states 0, 1, 2
    assert np.allclose(np.diag(m.drift), [0, 0, TWO_PI * -0.33], atol=1e-14)


def test_nonphysical_t2():
    with pytest.raises(NonPhysicalT2):
        spec(t2=(200.0,), t1=(86.0,))
    assert issubclass(NonPhysicalT2, ValidationError)


def test_cr_drift_frames_and_zx_coefficient(montreal_pair):
    rot = build_cr_two_qubit(montreal_pair, frame="rotating")
    assert np.array_equal(rot.drift, np.zeros((4, 4)))
    m = build_cr_two_qubit(montreal_pair, rabi_mhz=50.0)
    assert m.labels == ("X1", "X2", "ZX")
    om = TWO_PI * 50e-3
    zx = dict(m.controls)["ZX"]
    # J/Delta = 3 MHz / (4911 - 5015) MHz; the 2 pi factors cancel
    coeff = 3.0 / (4911.0 - 5015.0)
    assert np.allclose(zx, 0.5 * om * coeff * qmath.kron(qmath.SIGMA_Z, qmath.SIGMA_X), atol=1e-15)
    delta = TWO_PI * (4.911 - 5.015)
    assert np.allclose(m.drift, 0.5 * delta * qmath.kron(qmath.SIGMA_Z, qmath.I2), atol=1e-13)


def test_cr_with_zero_coupling_is_two_local_drives(montreal_pair):
    uncoupled = DeviceSpec(montreal_pair.qubit_freqs, montreal_pair.t1, montreal_pair.t2,
                           montreal_pair.dt, 2, (), {(0, 1): 0.0})
    m = build_cr_two_qubit(uncoupled, frame="rotating", grouping="shared")
    single = build_single_qubit(spec(), controls=("X",))
    x = single.control_ops[0]
    assert np.allclose(m.control_ops[0], qmath.kron(x, qmath.I2), atol=1e-15)
    assert np.allclose(m.control_ops[1], qmath.kron(qmath.I2, x), atol=1e-15)
    sep = build_cr_two_qubit(uncoupled, frame="rotating")
    assert not np.any(dict(sep.controls)["ZX"])


def test_zero_detuning():
    s = DeviceSpec((5.0, 5.0), (80.0, 80.0), (80.0, 80.0), 0.2222, 2, (), {(0, 1): 3.0})
    with pytest.raises(ZeroDetuning):
        build_cr_two_qubit(s)


@given(st.sampled_from(["lab", "rotating", "cr"]), st.sampled_from(["separate", "shared"]),
       st.booleans(), st.floats(1, 200))
def test_builders_emit_hermitian(frame, grouping, open_system, rabi):
    s = DeviceSpec((4.911, 5.015), (86.76, 80.0), (86.76, 70.0), 0.2222, 2, (), {(0, 1): 3.0})
    m = build_cr_two_qubit(s, frame=frame, grouping=grouping, open_system=open_system,
                           rabi_mhz=rabi)
    for op in [m.drift, *m.control_ops]:
        assert qmath.hermiticity_error(op) < 1e-10
    assert m.is_open == open_system


def test_t1_only_collapse_reproduces_exponential_decay():
    t1_ns = 86760.0
    m = build_single_qubit(spec(t1=(86.76,), t2=(2 * 86.76,)), open_system=True)
    assert len(m.collapse_ops) == 1
    t = t1_ns / 10
    n = 100
    pulse = PulseProgram(t / n, m.labels, np.zeros((2, n)))
    s = propagate_open(m, pulse).final
    rho = qmath.unvec(s @ qmath.vec(np.diag([0, 1.0])))
    assert abs(rho[1, 1].real / math.exp(-0.1) - 1) < 1e-6


def test_coherence_decays_at_t2():
    t1, t2 = 50000.0, 30000.0
    ops = collapse_operators(t1, t2, 2)
    h = np.zeros((2, 2))
    from oracles import naive_lindblad_evolve
    plus = 0.5 * np.ones((2, 2))
    rho = naive_lindblad_evolve(h, ops, plus, 5000.0)
    assert math.isclose(abs(rho[0, 1]), 0.5 * math.exp(-5000 / t2), rel_tol=1e-9)


def test_load_montreal(devices, montreal):
    assert montreal.qubit_freqs == (4.911,)
    assert montreal.t1 == (86.76,)
    assert abs(480 * montreal.dt - 105) < 2.0
    assert math.isclose(480 * montreal.dt, 106.656)


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"qubits": [\n  {"freq_ghz": 5.0,, }\n]}')
    with pytest.raises(ParseError, match="line 2"):
        load_device_spec(bad)
    doc = {"qubits": [{"freq_ghz": 5.0, "t1_us": 50, "t2_us": 120}],
           "coupling": [], "dt_ns": 0.2222, "levels": 2}
    p = tmp_path / "t2.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match="t2"):
        load_device_spec(p)
    del doc["dt_ns"]
    p.write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match="dt_ns"):
        load_device_spec(p)
    doc.update(dt_ns=0.2, levels=4)
    doc["qubits"][0]["t2_us"] = 50
    p.write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match="levels"):
        load_device_spec(p)
