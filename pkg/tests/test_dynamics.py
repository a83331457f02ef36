import math

import numpy as np
import pytest

from hhsim import dynamics as dy
from hhsim import operators as op
from hhsim import pulses as pl

TWO_PI = 2 * math.pi
J = 140.0

# backward-half quasi-adiabatic pulse of the transfer experiments
QA_SPEC = pl.PulseSpec("sech_backward_half", TWO_PI * 5000, 10.5966 / 0.0036, 2.3, 0.0036)


def flat_waveform(t_p=0.005, n=251, amp=0.0, freq=0.0, phase=0.0):
    """Hand-built waveform with constant columns (no analytic backing)."""
    dt = t_p / (n - 1)
    return pl.PulseWaveform(dt=dt, t_p=t_p, amp=np.full(n, float(amp)),
                            freq=np.full(n, float(freq)), phase=np.full(n, float(phase)))


def silent_pair(t_p=0.005):
    return dy.PulsePair.identical(flat_waveform(t_p))


def test_pulse_pair_validation():
    with pytest.raises(ValueError):
        dy.PulsePair(flat_waveform(0.005), flat_waveform(0.004))


def test_hamiltonian_no_pulse():
    sysj = dy.SpinSystem(TWO_PI * 300, -TWO_PI * 120, J)
    h = dy.hamiltonian_total(sysj, silent_pair(), 1e-3)
    want = (sysj.omega_i * op.basis_matrix("Iz") + sysj.omega_s * op.basis_matrix("Sz")
            + math.pi * J * op.basis_matrix("2IzSz"))
    assert np.max(np.abs(h - want)) < 1e-12


def test_hamiltonian_identical_x_drive():
    w1 = TWO_PI * 700
    pair = dy.PulsePair.identical(flat_waveform(amp=w1))
    h = dy.hamiltonian_total(dy.SpinSystem(0, 0, 0), pair, 2e-3)
    want = w1 * (op.basis_matrix("Ix") + op.basis_matrix("Sx"))
    assert np.max(np.abs(h - want)) < 1e-9


def test_hamiltonian_coupling_eigenvalues():
    h = dy.hamiltonian_total(dy.SpinSystem(0, 0, J), silent_pair(), 0.0)
    w = np.sort(np.linalg.eigvalsh(h))
    want = np.sort([math.pi * 70, -math.pi * 70, -math.pi * 70, math.pi * 70])
    assert np.allclose(w, want, atol=1e-9)


def test_hamiltonian_time_range_and_stack():
    pair = silent_pair()
    with pytest.raises(ValueError):
        dy.hamiltonian_total(dy.SpinSystem(0, 0, J), pair, 0.006)
    h = dy.hamiltonian_total(dy.SpinSystem(0, 0, J), pair, np.array([0.0, 1e-3]))
    assert h.shape == (2, 4, 4)


def test_propagate_constant_generator():
    rng = np.random.default_rng(21)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = (a + a.conj().T) / 2 * 1000
    u_ref = op.expm_hermitian(h, 1.7e-3)
    u_vec = dy.propagate(lambda t: np.broadcast_to(h, (len(t), 4, 4)), 0.0, 1.7e-3, 1e-5)
    u_scalar = dy.propagate(lambda t: h * (1 + 0 * float(t)), 0.0, 1.7e-3, 1e-5)
    assert np.linalg.norm(u_vec - u_ref) < 1e-10
    assert np.linalg.norm(u_scalar - u_ref) < 1e-10


def test_propagate_free_coupling_inverts_ix():
    h = math.pi * J * op.basis_matrix("2IzSz")
    u = dy.propagate(lambda t: np.broadcast_to(h, (len(t), 4, 4)), 0.0, 1 / J, 1e-5)
    c = op.decompose(op.evolve(u, op.basis_matrix("Ix")))
    assert c["Ix"] == pytest.approx(-1.0, abs=1e-10)


def test_propagator_u0_no_pulse():
    sysj = dy.SpinSystem(TWO_PI * 411, TWO_PI * 97, J)
    u = dy.propagator_U0(sysj, silent_pair(), 5e-3, 1e-5)
    ref = op.expm_hermitian(sysj.omega_i * op.basis_matrix("Iz")
                            + sysj.omega_s * op.basis_matrix("Sz"), 5e-3)
    assert np.linalg.norm(u - ref) < 1e-10


def test_propagator_u0_factorizes():
    # kron of single-spin propagators against the generic 4x4 slicer at J=0
    w = pl.design_waveform(QA_SPEC)
    pair = dy.PulsePair.identical(w)
    sys0 = dy.SpinSystem(TWO_PI * 30e3, TWO_PI * 45e3, 0.0)
    dt = 2e-7
    u_fast = dy.propagator_U0(sys0, pair, QA_SPEC.t_p, dt)
    u_slow = dy.propagator_UT(sys0, pair, QA_SPEC.t_p, dt)
    assert np.linalg.norm(u_fast - u_slow) < 1e-9


def test_hard_pulse_quarter_rotation():
    # resonant x pulse with w1*t = pi/2 carries Iz to Iy in the drive frame
    w1 = TWO_PI * 250
    t_p = (math.pi / 2) / w1
    w = flat_waveform(t_p=t_p, amp=w1)
    u = dy.single_spin_propagator(0.0, w, t_p, 1e-6)
    u4 = np.kron(u, np.eye(2))
    c = op.decompose(op.frame_transform(u4, op.basis_matrix("Iz")))
    assert c["Iy"] == pytest.approx(1.0, abs=1e-9)
    assert abs(c["Iz"]) < 1e-9


def test_propagator_ut_no_pulse_coupling_only():
    sys0 = dy.SpinSystem(0.0, 0.0, J)
    u = dy.propagator_UT(sys0, silent_pair(), 1 / (2 * J), 1e-5)
    ref = op.expm_hermitian(math.pi * J * op.basis_matrix("2IzSz"), 1 / (2 * J))
    assert np.linalg.norm(u - ref) < 1e-10


def test_propagator_ut_j_zero_equals_u0():
    w = pl.design_waveform(QA_SPEC)
    pair = dy.PulsePair.identical(w)
    sys0 = dy.SpinSystem(TWO_PI * 25e3, TWO_PI * 60e3, 0.0)
    dt = 5e-7
    assert np.linalg.norm(dy.propagator_UT(sys0, pair, QA_SPEC.t_p, dt)
                          - dy.propagator_U0(sys0, pair, QA_SPEC.t_p, dt)) < 1e-9


def test_unitarity_accumulation():
    w = pl.design_waveform(QA_SPEC)
    pair = dy.PulsePair.identical(w)
    rng = np.random.default_rng(22)
    dt = dy.default_dt_for(pair, 100e3, J)
    for _ in range(3):
        off_i, off_s = rng.uniform(20e3, 100e3, 2)
        u = dy.propagator_UT(dy.SpinSystem.from_offsets_hz(off_i, off_s, J),
                             pair, QA_SPEC.t_p, dt)
        assert np.linalg.norm(u.conj().T @ u - np.eye(4)) < 1e-8


def test_interaction_propagator_j_zero_is_identity():
    w = pl.design_waveform(QA_SPEC)
    pair = dy.PulsePair.identical(w)
    sys0 = dy.SpinSystem(TWO_PI * 25e3, TWO_PI * 60e3, 0.0)
    u = dy.interaction_propagator(sys0, pair, QA_SPEC.t_p, 5e-7)
    assert np.linalg.norm(u - np.eye(4)) < 1e-8


def test_interaction_propagator_no_pulse_exact():
    sysj = dy.SpinSystem(TWO_PI * 300, -TWO_PI * 120, J)
    u = dy.interaction_propagator(sysj, silent_pair(), 5e-3, 1e-5)
    ref = op.expm_hermitian(math.pi * J * op.basis_matrix("2IzSz"), 5e-3)
    assert np.linalg.norm(u - ref) < 1e-10


def test_pi_refocused_no_pulse():
    sysj = dy.SpinSystem(TWO_PI * 300, -TWO_PI * 120, J)
    t = 4e-3
    got = dy.pi_refocused_propagator(sysj, silent_pair(), t, 1e-5)
    h0 = sysj.omega_i * op.basis_matrix("Iz") + sysj.omega_s * op.basis_matrix("Sz")
    ref = op.expm_hermitian(h0 + math.pi * J * op.basis_matrix("2IzSz"), t) \
        @ op.expm_hermitian(h0, t)
    assert np.linalg.norm(got - ref) < 1e-10


def test_factorization_against_direct_interaction_frame():
    # UT = U0 Ui holds by construction; rebuild Ui from the transformed
    # coupling Hamiltonian itself and compare
    w = pl.design_waveform(QA_SPEC)
    pair = dy.PulsePair.identical(w)
    dt = dy.default_dt_for(pair, 90e3, J)
    rng = np.random.default_rng(23)
    for _ in range(5):
        off_i, off_s = rng.uniform(20e3, 90e3, 2)
        sysj = dy.SpinSystem.from_offsets_hz(off_i, off_s, J)
        _, stack = dy.interaction_frame_hamiltonians(sysj, pair, QA_SPEC.t_p, dt)
        w_eig, v = np.linalg.eigh(stack)
        d = QA_SPEC.t_p / len(stack)
        slices = (v * np.exp(-1j * w_eig * d)[..., None, :]) @ np.conjugate(
            np.swapaxes(v, -1, -2))
        u_direct = slices[0]
        for k in range(1, len(slices)):
            u_direct = slices[k] @ u_direct
        u_i = dy.interaction_propagator(sysj, pair, QA_SPEC.t_p, dt)
        assert np.linalg.norm(u_direct - u_i) < 1e-6


def test_rotation_coefficients_no_pulse():
    tr = dy.rotation_coefficients(dy.SpinSystem(TWO_PI * 1000, 0, 0),
                                  flat_waveform(), "i", 5e-3, 1e-5)
    assert tr.alpha == pytest.approx(1.0, abs=1e-12)
    assert abs(tr.beta) < 1e-12 and abs(tr.gamma) < 1e-12


def test_rotation_coefficients_hard_pi_inverts():
    w1 = TWO_PI * 250
    t_p = math.pi / w1
    tr = dy.rotation_coefficients(dy.SpinSystem(0, 0, 0), flat_waveform(t_p=t_p, amp=w1),
                                  "i", t_p, 1e-6)
    assert tr.alpha == pytest.approx(-1.0, abs=1e-9)
    assert tr.norm == pytest.approx(1.0, abs=1e-9)


def test_rotation_coefficients_quasi_adiabatic_on_band():
    spec = pl.PulseSpec("sech_backward_half", TWO_PI * 5000, 5.9865 / 0.007, 2.3, 0.007)
    w = pl.design_waveform(spec)
    pair = dy.PulsePair.identical(w)
    dt = dy.default_dt_for(pair, 40e3, 0.0)
    sysq = dy.SpinSystem.from_offsets_hz(40e3, 0.0, 0.0)
    tr = dy.rotation_coefficients(sysq, w, "i", spec.t_p, dt)
    assert abs(tr.alpha) <= 0.15
    assert tr.beta**2 + tr.gamma**2 >= 0.97
    assert tr.norm == pytest.approx(1.0, abs=1e-9)


def test_rotation_coefficients_outside_band_no_op():
    spec = pl.PulseSpec("sech_backward_half", TWO_PI * 5000, 5.9865 / 0.007, 1 / 3, 0.007)
    w = pl.design_waveform(spec)
    extent_hz = pl.sweep_extent(w) / TWO_PI
    for off in (extent_hz + 5 * 5000, extent_hz + 9 * 5000):
        dt = dy.default_dt_for(dy.PulsePair.identical(w), off, 0.0)
        tr = dy.rotation_coefficients(dy.SpinSystem.from_offsets_hz(off, 0, 0),
                                      w, "i", spec.t_p, dt)
        assert abs(tr.alpha - 1.0) < 0.02


def test_coupling_tensor_inversion_regime():
    inv = dy.RotationTriple(-1.0, 0.0, 0.0)
    ct = dy.coupling_tensor(inv, inv, J)
    assert ct.zz == pytest.approx(J)
    off_diag = ct.j_pq.copy()
    off_diag[2, 2] = 0.0
    assert np.max(np.abs(off_diag)) < 1e-12


def test_coupling_tensor_pure_xy_regime():
    ct = dy.coupling_tensor(dy.RotationTriple(0, 1, 0), dy.RotationTriple(0, 0, 1), J)
    assert ct.xy == pytest.approx(J)
    rest = ct.j_pq.copy()
    rest[0, 1] = 0.0
    assert np.max(np.abs(rest)) < 1e-12


def test_coupling_tensor_norm_and_reconstruction():
    rng = np.random.default_rng(24)
    zz = math.pi * J * op.basis_matrix("2IzSz")
    for _ in range(100):
        us = []
        triples = []
        for _ in range(2):
            a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            h2 = (a + a.conj().T) / 2
            wv, vv = np.linalg.eigh(h2)
            u = (vv * np.exp(-1j * wv)) @ vv.conj().T
            us.append(u)
            img = u.conj().T @ np.diag([0.5, -0.5]) @ u
            triples.append(dy.RotationTriple(
                float(2 * np.trace(img @ np.diag([0.5, -0.5])).real),
                float(2 * np.trace(img @ np.array([[0, 0.5], [0.5, 0]])).real),
                float(2 * np.trace(img @ np.array([[0, -0.5j], [0.5j, 0]])).real)))
        ct = dy.coupling_tensor(triples[0], triples[1], J)
        assert abs(ct.frobenius - J) < 1e-9
        u0 = np.kron(us[0], us[1])
        assert np.max(np.abs(dy.tensor_hamiltonian(ct) - u0.conj().T @ zz @ u0)) \
            < 1e-9 * math.pi * J


def test_coupling_tensor_rejects_unnormalized():
    with pytest.raises(ValueError):
        dy.coupling_tensor(dy.RotationTriple(0.5, 0, 0), dy.RotationTriple(1, 0, 0), J)


def test_default_dt_rule():
    assert dy.default_dt(100e3, 122.7e3, 5e3, J) == pytest.approx(1 / (50 * 222.7e3))
    assert dy.default_dt(0.0, 0.0, 5e3, J) == pytest.approx(1 / (50 * 5e3))
    with pytest.raises(ValueError):
        dy.default_dt(0, 0, 0, 0)
