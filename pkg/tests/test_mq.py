import math

import numpy as np
import pytest

from hhsim import dynamics as dy
from hhsim import mq
from hhsim import operators as op
from hhsim import pulses as pl


def random_params(rng, scale=100.0):
    return mq.ZQDQParams.from_components(*rng.normal(0, scale, 4))


def test_split_balanced_zq():
    ct = dy.CouplingTensor(np.diag([70.0, 70.0, 0.0]))
    zp = mq.zq_dq_split(ct)
    assert zp.jx_zq == pytest.approx(70.0)
    assert zp.jy_zq == 0 and zp.jx_dq == 0 and zp.jy_dq == 0
    assert zp.j_dq == 0 and zp.g_sum is None


def test_split_xx_only_equal_zq_dq():
    ct = dy.CouplingTensor(np.diag([140.0, 0.0, 0.0]))
    zp = mq.zq_dq_split(ct)
    assert zp.jx_zq == pytest.approx(70.0)
    assert zp.jx_dq == pytest.approx(70.0)


def test_split_from_rotation_triples():
    # both spins rotated z -> x gives a pure Jxx tensor
    tr = dy.RotationTriple(0.0, 1.0, 0.0)
    ct = dy.coupling_tensor(tr, tr, 140.0)
    assert ct.xx == pytest.approx(140.0)
    zp = mq.zq_dq_split(ct)
    assert zp.jx_zq == pytest.approx(70.0)
    assert zp.jx_dq == pytest.approx(70.0)


def test_zq_dq_parts_commute():
    rng = np.random.default_rng(31)
    for _ in range(1000):
        zp = random_params(rng)
        comm = op.commutator(mq.h_zq(zp), mq.h_dq(zp))
        assert np.max(np.abs(comm)) < 1e-12 * max(1.0, zp.j_zq + zp.j_dq)


def test_propagator_trivial_cases():
    zp = mq.ZQDQParams.from_components(30.0, -10.0, 5.0, 12.0)
    assert np.linalg.norm(mq.analytic_even_order_propagator(zp, 0.0) - np.eye(4)) < 1e-12
    zero = mq.ZQDQParams.from_components(0.0, 0.0, 0.0, 0.0)
    assert np.linalg.norm(mq.analytic_even_order_propagator(zero, 0.37) - np.eye(4)) < 1e-12


def test_propagator_oracle_equivalence():
    rng = np.random.default_rng(32)
    for _ in range(1000):
        zp = random_params(rng)
        t = float(rng.uniform(0, 0.02))
        u_closed = mq.analytic_even_order_propagator(zp, t)
        u_direct = op.expm_hermitian(mq.even_order_hamiltonian(zp), t)
        assert np.linalg.norm(u_closed - u_direct) < 1e-9


def test_transfer_oracle_equivalence_and_norm():
    rng = np.random.default_rng(33)
    iz = op.basis_matrix("Iz")
    for _ in range(1000):
        zp = random_params(rng)
        t = float(rng.uniform(0, 0.02))
        tc = mq.analytic_transfer(zp, t)
        u = op.expm_hermitian(mq.even_order_hamiltonian(zp), t)
        c = op.decompose(op.evolve(u, iz))
        assert abs(tc.alpha - c["Iz"]) < 1e-9
        assert abs(tc.gamma - c["Sz"]) < 1e-9
        assert abs(tc.beta_xx - c["2IxSx"]) < 1e-9
        assert abs(tc.beta_xy - c["2IxSy"]) < 1e-9
        assert abs(tc.beta_yx - c["2IySx"]) < 1e-9
        assert abs(tc.beta_yy - c["2IySy"]) < 1e-9
        assert abs(tc.norm_sq - 1.0) < 1e-9


def test_transfer_trivial_cases():
    zp = mq.ZQDQParams.from_components(70.0, 0.0, 0.0, 0.0)
    tc0 = mq.analytic_transfer(zp, 0.0)
    assert tc0.alpha == pytest.approx(1.0) and tc0.gamma == pytest.approx(0.0)
    # pure zero-quantum evolution for half a period exchanges Iz and Sz
    tc = mq.analytic_transfer(zp, 1 / (2 * zp.j_zq))
    assert tc.gamma == pytest.approx(1.0, abs=1e-12)
    assert tc.alpha == pytest.approx(0.0, abs=1e-12)


def test_undefined_phase_with_magnitude_rejected():
    zp = mq.ZQDQParams(30.0, 0.0, 5.0, 0.0, 30.0, 5.0, None, 0.0)
    with pytest.raises(ValueError):
        mq.analytic_even_order_propagator(zp, 1e-3)


def test_block_structure_identity_and_generators():
    assert mq.check_block_structure(np.eye(4, dtype=complex)).is_even_order
    rng = np.random.default_rng(34)
    for _ in range(200):
        zp = random_params(rng)
        u = op.expm_hermitian(mq.even_order_hamiltonian(zp), float(rng.uniform(0, 0.02)))
        assert mq.check_block_structure(u).is_even_order


def test_block_structure_rejects_single_quantum():
    u = op.expm_hermitian(op.basis_matrix("Ix"), math.pi / 2)
    assert not mq.check_block_structure(u).is_even_order
    # a 1e-3 single-quantum admixture must be flagged at the default tolerance
    h = mq.even_order_hamiltonian(mq.ZQDQParams.from_components(70, 10, 5, 3))
    u2 = op.expm_hermitian(h + 1e-3 / 0.01 * op.basis_matrix("Ix"), 0.01)
    assert not mq.check_block_structure(u2).is_even_order


def test_hh_conditions_identity_incomplete():
    res = mq.hh_conditions(np.eye(4, dtype=complex))
    assert not res.complete_transfer
    assert res.residuals["pop_22_23"] == pytest.approx(2.0)


def test_hh_conditions_pure_zq_half_period():
    zp = mq.ZQDQParams.from_components(70.0, 0.0, 0.0, 0.0)
    u = mq.analytic_even_order_propagator(zp, 1 / 140.0)
    res = mq.hh_conditions(u, tol=1e-9)
    assert res.complete_transfer
    assert np.linalg.norm(res.iz_image - op.basis_matrix("Sz")) < 1e-9


def test_hh_conditions_swap_gate():
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
                    dtype=complex)
    res = mq.hh_conditions(swap)
    assert res.complete_transfer
    assert np.linalg.norm(res.iz_image - op.basis_matrix("Sz")) < 1e-12


def test_hh_conditions_requires_block_structure():
    with pytest.raises(ValueError):
        mq.hh_conditions(op.expm_hermitian(op.basis_matrix("Ix"), 1.0))


def test_average_hamiltonian_constant():
    h = op.basis_matrix("2IxSy") * 123.0
    avg = mq.average_hamiltonian(lambda t: h, 0.01, 7)
    assert np.max(np.abs(avg - h)) < 1e-12


def test_average_hamiltonian_two_regime_bound():
    j = 140.0
    t_p, big_t = 1e-4, 1e-2  # ratio 100
    h_zz = math.pi * j * op.basis_matrix("2IzSz")
    rng = np.random.default_rng(35)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h_early = (a + a.conj().T) / 2 * (math.pi * j)

    def h_of_t(t):
        return h_early if t < t_p else h_zz

    avg = mq.average_hamiltonian(h_of_t, big_t, 4000)
    dist = np.linalg.norm(avg - h_zz)
    bound = (t_p / big_t) * (np.linalg.norm(h_early) + np.linalg.norm(h_zz))
    assert dist <= bound + 1e-9
    assert dist <= 2 * math.pi * j * (t_p / big_t) * 3


def test_average_hamiltonian_rejects_bad_n():
    with pytest.raises(ValueError):
        mq.average_hamiltonian(lambda t: np.zeros((4, 4)), 1.0, 0)


def test_evomq_values():
    c = {lab: 0.0 for lab in op.BASIS_LABELS}
    c["2IxSx"] = 1.0
    assert mq.evomq(c) == pytest.approx(1.0)
    assert mq.evomq(op.decompose(op.basis_matrix("Iz"))) == pytest.approx(0.0)


def test_evomq_matches_transfer_betas():
    zp = mq.ZQDQParams.from_components(70.0, 0.0, 0.0, 0.0)
    t = 1 / (4 * zp.j_zq)
    u = mq.analytic_even_order_propagator(zp, t)
    c = op.decompose(op.evolve(u, op.basis_matrix("Iz")))
    tc = mq.analytic_transfer(zp, t)
    want = math.sqrt(tc.beta_xx**2 + tc.beta_xy**2 + tc.beta_yx**2 + tc.beta_yy**2)
    assert mq.evomq(c) == pytest.approx(want, abs=1e-12)


def test_evomq_invariant_under_z_rotations():
    rng = np.random.default_rng(36)
    zp = random_params(rng)
    u = op.expm_hermitian(mq.even_order_hamiltonian(zp), 0.004)
    rho = op.evolve(u, op.basis_matrix("Iz"))
    base = mq.evomq(op.decompose(rho))
    for _ in range(10):
        ti, ts = rng.uniform(0, 2 * math.pi, 2)
        rz = op.expm_hermitian(ti * op.basis_matrix("Iz") + ts * op.basis_matrix("Sz"), 1.0)
        assert mq.evomq(op.decompose(op.evolve(rz, rho))) == pytest.approx(base, abs=1e-12)


def test_interaction_frame_average_is_mq_dominated():
    # quasi-adiabatic pair at equal offsets: the averaged drive-frame
    # coupling is dominated by the transverse bilinear terms
    spec = pl.PulseSpec("sech_backward_half", 2 * math.pi * 5000, 10.5966 / 0.0036,
                        2.3, 0.0036)
    pair = dy.PulsePair.identical(pl.design_waveform(spec))
    sysj = dy.SpinSystem.from_offsets_hz(50e3, 50e3, 140.0)
    big_t = 4 * spec.t_p
    dt = 2e-7
    mids, stack = dy.interaction_frame_hamiltonians(sysj, pair, big_t, dt)
    d = big_t / len(mids)

    def h_of_t(t):
        idx = np.clip(np.round(np.asarray(t) / d - 0.5).astype(int), 0, len(mids) - 1)
        return stack[idx]

    avg = mq.average_hamiltonian(h_of_t, big_t, len(mids))
    c = op.decompose(avg / (math.pi * sysj.j))
    mq_mag = max(abs(c[lab]) for lab in op.EVEN_ORDER_MQ_LABELS)
    sq_mag = max(abs(c[lab]) for lab in
                 ("Ix", "Iy", "Sx", "Sy", "2IxSz", "2IySz", "2IzSx", "2IzSy"))
    assert mq_mag > 3 * sq_mag
