"""Self-contained invariant suite behind the ``validate`` CLI command.

Each check is quick (the whole suite runs in seconds) and returns a result
record rather than raising, so the CLI can report one pass/fail line per
property.  The heavyweight figure-level experiments live in the test
suite, not here.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dynamics, mq, operators as op, pulses

__all__ = ["CheckResult", "run_all"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _random_hermitian(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(0, scale, (4, 4)) + 1j * rng.normal(0, scale, (4, 4))
    return (a + a.conj().T) / 2


def _random_unitary(rng: np.random.Generator) -> np.ndarray:
    return op.expm_hermitian(_random_hermitian(rng), 1.0)


def _check_basis() -> CheckResult:
    mats = np.stack(list(op.basis().values()))
    gram = np.einsum("aij,bji->ab", mats, mats).real
    dev = float(np.max(np.abs(gram - np.eye(16))))
    return CheckResult("basis trace-orthonormality", dev <= 1e-12, f"max deviation {dev:.2e}")


def _check_roundtrip() -> CheckResult:
    rng = np.random.default_rng(101)
    dev = 0.0
    for _ in range(50):
        a = _random_hermitian(rng)
        back = op.reconstruct(op.decompose(a))
        dev = max(dev, float(np.max(np.abs(back - a))))
    return CheckResult("decompose/reconstruct round-trip", dev <= 1e-12, f"max deviation {dev:.2e}")


def _check_norm_partition() -> CheckResult:
    rng = np.random.default_rng(102)
    dev = 0.0
    for _ in range(50):
        a = _random_hermitian(rng)
        csum = sum(v * v for v in op.decompose(a).values())
        dev = max(dev, abs(csum - np.linalg.norm(a) ** 2))
    return CheckResult("coefficient norm partition", dev <= 1e-10, f"max deviation {dev:.2e}")


def _check_expm_additivity() -> CheckResult:
    rng = np.random.default_rng(103)
    dev = 0.0
    for _ in range(25):
        h = _random_hermitian(rng, 2.0)
        t1, t2 = rng.uniform(0, 2, 2)
        u = op.expm_hermitian(h, t1) @ op.expm_hermitian(h, t2)
        dev = max(dev, float(np.linalg.norm(u - op.expm_hermitian(h, t1 + t2))))
    return CheckResult("exponential additivity", dev <= 1e-10, f"max deviation {dev:.2e}")


def _check_conjugation_norm() -> CheckResult:
    rng = np.random.default_rng(104)
    dev = 0.0
    for _ in range(25):
        u = _random_unitary(rng)
        a = _random_hermitian(rng)
        dev = max(dev, abs(np.linalg.norm(op.frame_transform(u, a)) - np.linalg.norm(a)))
    return CheckResult("conjugation norm preservation", dev <= 1e-10, f"max deviation {dev:.2e}")


def _check_zq_dq_commute() -> CheckResult:
    rng = np.random.default_rng(105)
    dev = 0.0
    for _ in range(1000):
        zp = mq.ZQDQParams.from_components(*rng.normal(0, 100, 4))
        dev = max(dev, float(np.max(np.abs(op.commutator(mq.h_zq(zp), mq.h_dq(zp))))))
    return CheckResult("ZQ/DQ commutation (1000 draws)", dev <= 1e-12, f"max |[Hzq,Hdq]| {dev:.2e}")


def _check_even_order_oracle() -> CheckResult:
    rng = np.random.default_rng(106)
    dev_u = dev_c = dev_n = 0.0
    for _ in range(1000):
        zp = mq.ZQDQParams.from_components(*rng.normal(0, 100, 4))
        t = float(rng.uniform(0, 0.02))
        u_direct = op.expm_hermitian(mq.even_order_hamiltonian(zp), t)
        dev_u = max(dev_u, float(np.linalg.norm(
            mq.analytic_even_order_propagator(zp, t) - u_direct)))
        tc = mq.analytic_transfer(zp, t)
        cc = op.decompose(op.evolve(u_direct, op.basis_matrix("Iz")))
        got = (tc.alpha, tc.gamma, tc.beta_xx, tc.beta_xy, tc.beta_yx, tc.beta_yy)
        want = (cc["Iz"], cc["Sz"], cc["2IxSx"], cc["2IxSy"], cc["2IySx"], cc["2IySy"])
        dev_c = max(dev_c, max(abs(g - w) for g, w in zip(got, want)))
        dev_n = max(dev_n, abs(tc.norm_sq - 1.0))
    ok = dev_u <= 1e-9 and dev_c <= 1e-9 and dev_n <= 1e-9
    return CheckResult("even-order propagator/transfer oracle (1000 draws)", ok,
                       f"propagator {dev_u:.2e}, coefficients {dev_c:.2e}, norm {dev_n:.2e}")


def _check_coupling_tensor() -> CheckResult:
    rng = np.random.default_rng(107)
    dev_n = dev_h = 0.0
    j = 140.0
    zz = math.pi * j * op.basis_matrix("2IzSz")
    for _ in range(100):
        hi = _random_hermitian(rng)[:2, :2]
        hs = _random_hermitian(rng)[:2, :2]
        wi, vi = np.linalg.eigh((hi + hi.conj().T) / 2)
        ws, vs = np.linalg.eigh((hs + hs.conj().T) / 2)
        ui = (vi * np.exp(-1j * wi)) @ vi.conj().T
        us = (vs * np.exp(-1j * ws)) @ vs.conj().T
        triples = []
        for u in (ui, us):
            img = u.conj().T @ np.diag([0.5, -0.5]) @ u
            triples.append(dynamics.RotationTriple(
                float(2 * np.trace(img @ np.diag([0.5, -0.5])).real),
                float(2 * np.trace(img @ np.array([[0, .5], [.5, 0]])).real),
                float(2 * np.trace(img @ np.array([[0, -.5j], [.5j, 0]])).real)))
        ct = dynamics.coupling_tensor(triples[0], triples[1], j)
        dev_n = max(dev_n, abs(ct.frobenius - j))
        u0 = np.kron(ui, us)
        dev_h = max(dev_h, float(np.max(np.abs(
            dynamics.tensor_hamiltonian(ct) - u0.conj().T @ zz @ u0))))
    ok = dev_n <= 1e-9 and dev_h <= 1e-9 * math.pi * j
    return CheckResult("coupling tensor norm and reconstruction (100 draws)", ok,
                       f"norm {dev_n:.2e} Hz, Hamiltonian {dev_h:.2e} rad/s")


def _fig_pulse() -> pulses.PulseSpec:
    return pulses.PulseSpec("sech_backward_half", 2 * math.pi * 5000,
                            10.5966 / 0.0036, 2.3, 0.0036)


def _check_waveform_consistency() -> CheckResult:
    w = pulses.design_waveform(_fig_pulse())
    from scipy.integrate import cumulative_trapezoid
    redone = cumulative_trapezoid(w.freq, w.times, initial=0.0)
    dev_ph = float(np.max(np.abs(redone - w.phase)))
    mid_freq = (w.freq[1:] + w.freq[:-1]) / 2
    dev_f = float(np.max(np.abs(np.diff(w.phase) / w.dt - mid_freq)))
    scale = float(np.max(np.abs(w.freq)))
    ok = dev_ph <= 1e-9 and dev_f <= 1e-6 * scale
    return CheckResult("waveform phase/frequency consistency", ok,
                       f"phase {dev_ph:.2e} rad, midpoint freq {dev_f / scale:.2e} rel")


def _check_quadratic_sweep_scaling() -> CheckResult:
    spec = _fig_pulse()
    w1 = pulses.design_waveform(spec)
    from dataclasses import replace
    w2 = pulses.design_waveform(replace(spec, omega0=2 * spec.omega0))
    ratio = pulses.sweep_extent(w2) / pulses.sweep_extent(w1)
    return CheckResult("sweep extent quadratic in peak amplitude",
                       abs(ratio - 4.0) <= 1e-12, f"ratio {ratio:.12f}")


def _check_rotation_triples() -> CheckResult:
    spec = _fig_pulse()
    w = pulses.design_waveform(spec)
    dt = dynamics.default_dt_for(dynamics.PulsePair.identical(w), 60e3, 0.0)
    dev = 0.0
    for off in (25e3, 40e3, 60e3):
        sysq = dynamics.SpinSystem.from_offsets_hz(off, 0.0, 0.0)
        tr = dynamics.rotation_coefficients(sysq, w, "i", spec.t_p, dt)
        dev = max(dev, abs(tr.norm - 1.0))
    return CheckResult("rotation triple normalization", dev <= 1e-9, f"max deviation {dev:.2e}")


def _check_determinism() -> CheckResult:
    from .experiments import OffsetGrid, offset_plane_sweep
    spec = _fig_pulse()
    pair = dynamics.PulsePair.identical(pulses.design_waveform(spec))
    grid = OffsetGrid.plane(30e3, 60e3, 2, 30e3, 60e3, 2)
    outs = []
    for _ in range(2):
        res = offset_plane_sweep(140.0, pair, grid, "interaction", "Iz",
                                 ("evomq", "c_Iz"), dt=2e-6)
        buf = io.StringIO()
        names = list(res.observables)
        for a in range(2):
            for b in range(2):
                buf.write(",".join(f"{res.observables[n][a, b]:.17g}" for n in names))
        outs.append(buf.getvalue())
    return CheckResult("repeat-run determinism", outs[0] == outs[1],
                       "identical coefficient bytes" if outs[0] == outs[1] else "outputs differ")


_CHECKS: tuple[Callable[[], CheckResult], ...] = (
    _check_basis,
    _check_roundtrip,
    _check_norm_partition,
    _check_expm_additivity,
    _check_conjugation_norm,
    _check_zq_dq_commute,
    _check_even_order_oracle,
    _check_coupling_tensor,
    _check_waveform_consistency,
    _check_quadratic_sweep_scaling,
    _check_rotation_triples,
    _check_determinism,
)


def run_all() -> list[CheckResult]:
    """Run every invariant check and collect the results."""
    results = []
    for fn in _CHECKS:
        try:
            results.append(fn())
        except Exception as exc:  # a crashed check is a failed check
            results.append(CheckResult(fn.__name__.removeprefix("_check_"), False,
                                       f"raised {type(exc).__name__}: {exc}"))
    return results
