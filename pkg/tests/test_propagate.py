import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qocpulse import qmath
from qocpulse.errors import DimensionMismatch, LabelMismatch
from qocpulse.model import DeviceSpec, HamiltonianModel, build_single_qubit
from qocpulse.propagate import (GateTarget, PropagationResult, gate_infidelity, gate_target,
                                propagate, propagate_closed, propagate_open)
from qocpulse.pulse import PulseProgram, ShapeSpec, make_initial

from oracles import naive_lindblad_evolve, naive_propagate

RABI = 2 * np.pi * 50e-3  # rad/ns for the default 50 MHz


def spec(t1=86.76, t2=86.76):
    return DeviceSpec((4.911,), (t1,), (t2,), 0.2222, 2, (), {})


def const_pulse(area, n=100, labels=("X",), dt=0.2222):
    u = area / (RABI * n * dt)
    amps = np.zeros((len(labels), n))
    amps[0] = u
    return PulseProgram(dt, labels, amps)


def test_zero_pulse_identity():
    m = build_single_qubit(spec(), controls=("X", "Y"))
    r = propagate_closed(m, PulseProgram(0.2222, m.labels, np.zeros((2, 30))))
    assert np.allclose(r.final_unitary, np.eye(2), atol=1e-15)


def test_pi_pulse():
    m = build_single_qubit(spec(), controls=("X",))
    r = propagate(m, const_pulse(np.pi), gate_target("X"))
    assert np.allclose(r.final_unitary, -1j * qmath.SIGMA_X, atol=1e-12)
    assert r.infidelity < 1e-12


def test_half_pi_pulse_is_sx():
    m = build_single_qubit(spec(), controls=("X",))
    r = propagate(m, const_pulse(np.pi / 2), gate_target("SX"))
    expect = qmath.expm_hermitian_scaled(qmath.SIGMA_X, -0.25j * np.pi)
    assert np.allclose(r.final_unitary, expect, atol=1e-12)
    assert r.infidelity < 1e-12


def test_matches_expm_oracle(rng):
    m = build_single_qubit(spec(), controls=("X", "Y"), detuning_mhz=3.0)
    amps = rng.uniform(-1, 1, size=(2, 25))
    p = PulseProgram(0.5, m.labels, amps)
    ref = naive_propagate(m.drift, m.control_ops, amps, 0.5)
    assert np.allclose(propagate(m, p).final_unitary, ref, atol=1e-12)


def test_open_matches_row_major_oracle(rng):
    m = build_single_qubit(spec(t1=0.05, t2=0.06), controls=("X", "Y"), open_system=True)
    amps = np.full((2, 1), 0.3)
    p = PulseProgram(20.0, m.labels, amps)
    rho = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    h = m.drift + 0.3 * m.control_ops[0] + 0.3 * m.control_ops[1]
    ref = naive_lindblad_evolve(h, m.collapse_ops, rho, 20.0)
    out = qmath.unvec(propagate(m, p).final @ qmath.vec(rho))
    assert np.allclose(out, ref, atol=1e-12)


def test_zero_rate_limit_matches_closed(rng):
    closed = build_single_qubit(spec(), controls=("X", "Y"))
    tiny = HamiltonianModel(closed.drift, closed.controls,
                            tuple(1e-12 * c for c in build_single_qubit(
                                spec(), open_system=True).collapse_ops))
    p = make_initial(ShapeSpec("random", amplitude=0.5), 60, 0.2222, closed.labels)
    s_closed = propagate(closed, p).superoperator
    s_open = propagate(tiny, p).superoperator
    assert np.max(np.abs(s_closed - s_open)) < 1e-8


def test_t1_decay_at_100ns():
    m = build_single_qubit(spec(), controls=("X",), open_system=True)
    p = PulseProgram(0.25, ("X",), np.zeros((1, 400)))
    s = propagate_open(m, p).final
    rho = qmath.unvec(s @ qmath.vec(np.diag([0.0, 1.0])))
    assert abs(rho[1, 1].real / math.exp(-100 / 86760) - 1) < 1e-6


def test_idle_infidelity_first_order():
    t1, t2, t = 86760.0, 60000.0, 50.0
    m = build_single_qubit(spec(86.76, 60.0), controls=("X",), open_system=True)
    p = PulseProgram(0.5, ("X",), np.zeros((1, 100)))
    r = propagate(m, p, gate_target("I"))
    exact = 1 - (1 + math.exp(-t / t1) + 2 * math.exp(-t / t2)) / 4
    assert abs(r.infidelity - exact) < 1e-12
    first = (t / t1 + 2 * t / t2) / 4
    assert abs(r.infidelity / first - 1) < 1e-3


def test_gate_infidelity_examples():
    x = gate_target("X")
    ident = PropagationResult(np.eye(2, dtype=complex), None, False)
    assert gate_infidelity(ident, x) == 1.0
    exact = PropagationResult(x.unitary, None, False)
    assert gate_infidelity(exact, x) == 0.0
    for phi in np.linspace(0, 2 * np.pi, 9):
        phased = PropagationResult(np.exp(1j * phi) * x.unitary, None, False)
        assert gate_infidelity(phased, x) < 1e-15


def test_errors():
    m = build_single_qubit(spec(), controls=("X",))
    with pytest.raises(LabelMismatch):
        propagate(m, PulseProgram(0.2, ("Y",), np.zeros((1, 4))))
    with pytest.raises(DimensionMismatch):
        propagate(m, PulseProgram(0.2, ("X",), np.zeros((1, 4))), gate_target("CNOT"))
    with pytest.raises(Exception):
        GateTarget("bad", np.ones((2, 2)))


def test_label_order_does_not_matter(rng):
    m = build_single_qubit(spec(), controls=("X", "Y"))
    amps = rng.uniform(-1, 1, (2, 10))
    a = propagate(m, PulseProgram(0.3, ("X", "Y"), amps)).final
    b = propagate(m, PulseProgram(0.3, ("Y", "X"), amps[::-1])).final
    assert np.array_equal(a, b)


def test_time_slicing_refinement():
    m = build_single_qubit(spec(), controls=("X", "Y"))
    shape = ShapeSpec("drag", amplitude=0.3, beta=0.4)
    # midpoint sampling: the slicing error shrinks as dt^2
    grids = [make_initial(shape, 400 * 2 ** j, 0.2 / 2 ** j, m.labels) for j in range(3)]
    finals = [propagate(m, g).final for g in grids]
    e1 = np.max(np.abs(finals[0] - finals[1]))
    e2 = np.max(np.abs(finals[1] - finals[2]))
    assert e2 < 1e-6
    assert 3.5 < e1 / e2 < 4.5


@given(st.integers(2, 40), st.integers(0, 1000))
def test_concatenation(n, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, n))
    m = build_single_qubit(spec(), controls=("X", "Y"), detuning_mhz=5.0)
    amps = rng.uniform(-1, 1, (2, n))
    whole = propagate(m, PulseProgram(0.3, m.labels, amps)).final
    first = propagate(m, PulseProgram(0.3, m.labels, amps[:, :k])).final
    second = propagate(m, PulseProgram(0.3, m.labels, amps[:, k:])).final
    assert np.max(np.abs(second @ first - whole)) < 1e-10


@given(st.integers(0, 10 ** 6), st.floats(0.01, 10))
def test_open_output_is_density_matrix(seed, t1_us):
    rng = np.random.default_rng(seed)
    m = build_single_qubit(spec(t1_us, t1_us * rng.uniform(0.2, 2.0)), open_system=True)
    p = PulseProgram(5.0, m.labels, rng.uniform(-1, 1, (2, 8)))
    r = propagate(m, p)
    rho = qmath.unvec(r.final @ qmath.vec(np.eye(2) / 2))
    assert abs(np.trace(rho) - 1) < 1e-10
    assert np.max(np.abs(rho - qmath.dag(rho))) < 1e-12
    assert np.linalg.eigvalsh(rho).min() >= -1e-9


@given(st.integers(0, 10 ** 6))
def test_infidelity_range_and_zero_iff_phase(seed):
    rng = np.random.default_rng(seed)
    u = qmath.random_unitary(2, rng)
    t = GateTarget("u", u)
    other = PropagationResult(qmath.random_unitary(2, rng), None, False)
    assert 0.0 <= gate_infidelity(other, t) <= 1.0
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
    assert gate_infidelity(PropagationResult(phase * u, None, False), t) < 1e-14
