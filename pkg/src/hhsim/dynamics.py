"""Time-dependent two-spin Hamiltonians and time-ordered propagators.

The rotating-frame Hamiltonian of the driven, scalar-coupled pair is

    H(t) = Wi*Iz + w1i(t)*(Ix cos phi_i + Iy sin phi_i)
         + Ws*Sz + w1s(t)*(Sx cos phi_s + Sy sin phi_s)
         + pi*J * 2IzSz

with chemical shifts Wi, Ws in rad/s and the scalar coupling J in Hz.
Frequency sweeps are realized purely as phase modulation at a fixed
carrier, so a spin's offset from the sweep is ``W - wr(t)`` throughout.

Propagators are evaluated as ordered products of midpoint-sampled slice
exponentials over equal intervals; the coupling-free propagator factorizes
into two single-spin SU(2) propagators and is computed that way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import E4, IX, IY, IZ, SX, SY, SZ, basis_matrix
from .pulses import PulseWaveform, sweep_extent

__all__ = [
    "CouplingTensor",
    "PulsePair",
    "RotationTriple",
    "SpinSystem",
    "coupling_tensor",
    "default_dt",
    "hamiltonian_total",
    "interaction_propagator",
    "pi_refocused_propagator",
    "propagate",
    "propagator_U0",
    "propagator_UT",
    "rotation_coefficients",
    "single_spin_propagator",
    "tensor_hamiltonian",
]

ZZ = basis_matrix("2IzSz")

_HALF_SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_HALF_SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2


@dataclass(frozen=True)
class SpinSystem:
    """Chemical shifts of spins I and S (rad/s) and scalar coupling J (Hz)."""

    omega_i: float
    omega_s: float
    j: float

    def __post_init__(self) -> None:
        if not all(np.isfinite([self.omega_i, self.omega_s, self.j])):
            raise ValueError("spin system parameters must be finite")

    @classmethod
    def from_offsets_hz(cls, offset_i_hz: float, offset_s_hz: float, j_hz: float) -> "SpinSystem":
        return cls(2 * math.pi * offset_i_hz, 2 * math.pi * offset_s_hz, j_hz)


@dataclass(frozen=True)
class PulsePair:
    """Simultaneous pulses on spins I and S sharing one time base."""

    pulse_i: PulseWaveform
    pulse_s: PulseWaveform

    def __post_init__(self) -> None:
        wi, ws = self.pulse_i, self.pulse_s
        if abs(wi.t_p - ws.t_p) > 1e-12 * max(wi.t_p, ws.t_p):
            raise ValueError("pulse pair must share the duration")
        if abs(wi.dt - ws.dt) > 1e-12 * max(wi.dt, ws.dt):
            raise ValueError("pulse pair must share the sample interval")

    @classmethod
    def identical(cls, w: PulseWaveform) -> "PulsePair":
        return cls(w, w)

    @property
    def t_p(self) -> float:
        return self.pulse_i.t_p


def default_dt(max_offset_hz: float, extent_hz: float, amp_hz: float, j_hz: float) -> float:
    """Slice width 1/(50 nu_max) from the fastest frequency in play.

    ``nu_max`` is the larger of (largest grid offset + full sweep span),
    the peak RF amplitude, and |J|, all in Hz.
    """
    nu_max = max(abs(max_offset_hz) + abs(extent_hz), abs(amp_hz), abs(j_hz))
    if nu_max <= 0:
        raise ValueError("cannot infer a timescale from all-zero parameters")
    return 1.0 / (50.0 * nu_max)


def default_dt_for(pair: PulsePair, max_offset_hz: float, j_hz: float) -> float:
    """Default slice width for a concrete pulse pair."""
    extent = max(sweep_extent(pair.pulse_i), sweep_extent(pair.pulse_s)) / (2 * math.pi)
    amp = max(pair.pulse_i.omega0, pair.pulse_s.omega0) / (2 * math.pi)
    return default_dt(max_offset_hz, extent, amp, j_hz)


def _slice_grid(t0: float, t1: float, dt: float) -> tuple[np.ndarray, float]:
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = max(1, math.ceil((t1 - t0) / dt - 1e-12))
    d = (t1 - t0) / n
    return t0 + (np.arange(n) + 0.5) * d, d


def _ordered_product(u: np.ndarray) -> np.ndarray:
    """Product u[n-1] @ ... @ u[0] by pairwise reduction (fixed order)."""
    eye = np.eye(u.shape[-1], dtype=u.dtype)
    while u.shape[0] > 1:
        if u.shape[0] % 2:
            u = np.concatenate([u, eye[None]], axis=0)
        u = np.matmul(u[1::2], u[0::2])
    return u[0]


def _expm_stack(h: np.ndarray, dt: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)[..., None, :]) @ np.conjugate(np.swapaxes(v, -1, -2))


def hamiltonian_total(sys: SpinSystem, pp: PulsePair, t) -> np.ndarray:
    """Full Hamiltonian at time(s) ``t`` within [0, t_p], rad/s.

    Scalar ``t`` gives a (4, 4) matrix; an array gives a stacked (n, 4, 4).
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < -1e-15) or np.any(t_arr > pp.t_p * (1 + 1e-12)):
        raise ValueError("time outside the pulse interval [0, t_p]")
    h = _drive_stack(pp, t_arr)
    h += sys.omega_i * IZ + sys.omega_s * SZ + math.pi * sys.j * ZZ
    return h[0] if np.ndim(t) == 0 else h


def _drive_stack(pp: PulsePair, times: np.ndarray) -> np.ndarray:
    a_i = np.asarray(pp.pulse_i.amp_at(times))
    ph_i = np.asarray(pp.pulse_i.phase_at(times))
    a_s = np.asarray(pp.pulse_s.amp_at(times))
    ph_s = np.asarray(pp.pulse_s.phase_at(times))
    h = (a_i * np.cos(ph_i))[:, None, None] * IX
    h += (a_i * np.sin(ph_i))[:, None, None] * IY
    h += (a_s * np.cos(ph_s))[:, None, None] * SX
    h += (a_s * np.sin(ph_s))[:, None, None] * SY
    return h


def propagate(h_of_t, t0: float, t1: float, dt: float) -> np.ndarray:
    """Time-ordered propagator of a generic Hamiltonian function.

    ``h_of_t`` maps a time (or an array of times) to a Hermitian (4, 4)
    matrix (or an (n, 4, 4) stack).  The interval is cut into equal slices
    no longer than ``dt``; each slice contributes ``exp(-1j * H(mid) * d)``
    with H sampled at the slice midpoint.
    """
    mids, d = _slice_grid(t0, t1, dt)
    try:
        h = np.asarray(h_of_t(mids))
        if h.shape != (len(mids), 4, 4):
            raise TypeError
    except (TypeError, ValueError):
        h = np.stack([np.asarray(h_of_t(float(tm))) for tm in mids])
    return _ordered_product(_expm_stack(h, d))


def single_spin_propagator(omega_z: float, w: PulseWaveform, t: float, dt: float) -> np.ndarray:
    """(2, 2) propagator of one driven spin over [0, t].

    Slice exponentials use the closed SU(2) form of ``exp(-1j*(a.s/2)*d)``.
    """
    if t > w.t_p * (1 + 1e-12):
        raise ValueError("propagation time exceeds the pulse duration")
    mids, d = _slice_grid(0.0, t, dt)
    amp = np.asarray(w.amp_at(mids))
    ph = np.asarray(w.phase_at(mids))
    ax = amp * np.cos(ph)
    ay = amp * np.sin(ph)
    az = np.full_like(ax, float(omega_z))
    norm = np.sqrt(ax * ax + ay * ay + az * az)
    theta = norm * (d / 2)
    c = np.cos(theta)
    safe = np.where(norm > 0, norm, 1.0)
    s = np.where(norm > 0, np.sin(theta) / safe, d / 2)
    u = np.empty((len(mids), 2, 2), dtype=complex)
    u[:, 0, 0] = c - 1j * s * az
    u[:, 1, 1] = c + 1j * s * az
    u[:, 0, 1] = -1j * s * (ax - 1j * ay)
    u[:, 1, 0] = -1j * s * (ax + 1j * ay)
    return _ordered_product(u)


def propagator_U0(sys: SpinSystem, pp: PulsePair, t: float, dt: float) -> np.ndarray:
    """Coupling-free propagator (J = 0), as the tensor product of the two
    independently propagated single spins."""
    ui = single_spin_propagator(sys.omega_i, pp.pulse_i, t, dt)
    us = single_spin_propagator(sys.omega_s, pp.pulse_s, t, dt)
    return np.kron(ui, us)


def propagator_UT(sys: SpinSystem, pp: PulsePair, t: float, dt: float) -> np.ndarray:
    """Propagator of the full Hamiltonian (drive + shifts + coupling)."""
    if t > pp.t_p * (1 + 1e-12):
        raise ValueError("propagation time exceeds the pulse duration")
    mids, d = _slice_grid(0.0, t, dt)
    h = _drive_stack(pp, mids)
    h += sys.omega_i * IZ + sys.omega_s * SZ + math.pi * sys.j * ZZ
    return _ordered_product(_expm_stack(h, d))


def interaction_propagator(sys: SpinSystem, pp: PulsePair, t: float, dt: float) -> np.ndarray:
    """U0(t)^dagger @ UT(t): the coupling evolution in the drive frame."""
    u0 = propagator_U0(sys, pp, t, dt)
    return u0.conj().T @ propagator_UT(sys, pp, t, dt)


def pi_refocused_propagator(sys: SpinSystem, pp: PulsePair, t: float, dt: float) -> np.ndarray:
    """UT(t) @ U0'(t) where U0' is the coupling-free propagator of the same
    pair with both RF phases shifted by pi (approximate drive refocusing
    for inversion pulses)."""
    from .pulses import phase_shift

    shifted = PulsePair(phase_shift(pp.pulse_i, math.pi), phase_shift(pp.pulse_s, math.pi))
    return propagator_UT(sys, pp, t, dt) @ propagator_U0(sys, shifted, t, dt)


@dataclass(frozen=True)
class RotationTriple:
    """Image of Iz under the coupling-free propagator of one spin:
    U0+ Iz U0 = alpha*Iz + beta*Ix + gamma*Iy."""

    alpha: float
    beta: float
    gamma: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.alpha**2 + self.beta**2 + self.gamma**2)


def rotation_coefficients(sys: SpinSystem, w: PulseWaveform, spin: str,
                          t: float, dt: float) -> RotationTriple:
    """Conversion coefficients of one spin under its own pulse.

    ``spin`` selects which chemical shift applies ("i" or "s"); the other
    spin and the coupling play no role in this single-spin transformation.
    """
    if spin not in ("i", "s"):
        raise ValueError("spin must be 'i' or 's'")
    omega = sys.omega_i if spin == "i" else sys.omega_s
    u = single_spin_propagator(omega, w, t, dt)
    img = u.conj().T @ _HALF_SZ @ u
    alpha = 2 * np.trace(img @ _HALF_SZ).real
    beta = 2 * np.trace(img @ _HALF_SX).real
    gamma = 2 * np.trace(img @ np.array([[0, -1j], [1j, 0]]) / 2).real
    return RotationTriple(float(alpha), float(beta), float(gamma))


@dataclass(frozen=True)
class CouplingTensor:
    """Bilinear coupling coefficients J_pq (Hz) of the drive-frame coupling
    Hamiltonian pi * sum_pq J_pq 2 I_p S_q, axes ordered (x, y, z)."""

    j_pq: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.j_pq, dtype=float)
        if a.shape != (3, 3):
            raise ValueError("coupling tensor must be 3x3")
        a.setflags(write=False)
        object.__setattr__(self, "j_pq", a)

    def __getattr__(self, name: str):
        axes = {"x": 0, "y": 1, "z": 2}
        if len(name) == 2 and name[0] in axes and name[1] in axes:
            return float(self.j_pq[axes[name[0]], axes[name[1]]])
        raise AttributeError(name)

    @property
    def frobenius(self) -> float:
        return float(np.linalg.norm(self.j_pq))


def coupling_tensor(triple_i: RotationTriple, triple_s: RotationTriple, j_hz: float,
                    tol: float = 1e-6) -> CouplingTensor:
    """Drive-frame coupling coefficients from the two rotation triples.

    Each spin's Iz image has components (beta, gamma, alpha) along (x, y, z),
    so J_pq = J * v_i[p] * v_s[q] for that axis ordering.  Triples must be
    normalized (single-spin unitarity) within ``tol``.
    """
    for tr in (triple_i, triple_s):
        if abs(tr.norm - 1.0) > tol:
            raise ValueError("rotation triple is not normalized")
    vi = np.array([triple_i.beta, triple_i.gamma, triple_i.alpha])
    vs = np.array([triple_s.beta, triple_s.gamma, triple_s.alpha])
    return CouplingTensor(j_hz * np.outer(vi, vs))


def tensor_hamiltonian(ct: CouplingTensor) -> np.ndarray:
    """Matrix pi * sum_pq J_pq 2 I_p S_q (rad/s) of a coupling tensor."""
    labels = [["2IxSx", "2IxSy", "2IxSz"],
              ["2IySx", "2IySy", "2IySz"],
              ["2IzSx", "2IzSy", "2IzSz"]]
    h = np.zeros((4, 4), dtype=complex)
    for a in range(3):
        for b in range(3):
            h += math.pi * ct.j_pq[a, b] * basis_matrix(labels[a][b])
    return h


def interaction_frame_hamiltonians(sys: SpinSystem, pp: PulsePair, t_total: float,
                                   dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Drive-frame coupling Hamiltonian sampled on a slice grid.

    Returns midpoint times over [0, t_total] and the stack
    ``U0(t)^+ (pi J 2IzSz) U0(t)``; beyond the pulse the drive-free shifts
    keep precessing.  Intended for averaging diagnostics, so U0 at a
    midpoint is the product of whole slices up to it plus one half slice.
    """
    mids, d = _slice_grid(0.0, t_total, dt)
    h1 = math.pi * sys.j * ZZ
    out = np.empty((len(mids), 4, 4), dtype=complex)
    ui = np.eye(2, dtype=complex)
    us = np.eye(2, dtype=complex)
    for k, tm in enumerate(mids):
        ui_mid = _single_spin_step(sys.omega_i, pp.pulse_i, tm - d / 2, d / 2) @ ui
        us_mid = _single_spin_step(sys.omega_s, pp.pulse_s, tm - d / 2, d / 2) @ us
        u0 = np.kron(ui_mid, us_mid)
        out[k] = u0.conj().T @ h1 @ u0
        ui = _single_spin_step(sys.omega_i, pp.pulse_i, tm - d / 2, d) @ ui
        us = _single_spin_step(sys.omega_s, pp.pulse_s, tm - d / 2, d) @ us
    return mids, out


def _single_spin_step(omega: float, w: PulseWaveform, t_start: float, d: float) -> np.ndarray:
    """One midpoint slice factor; drive is zero past the end of the pulse."""
    tm = t_start + d / 2
    if tm <= w.t_p:
        amp = float(w.amp_at(tm))
        ph = float(w.phase_at(tm))
    else:
        amp, ph = 0.0, 0.0
    ax, ay, az = amp * math.cos(ph), amp * math.sin(ph), omega
    norm = math.sqrt(ax * ax + ay * ay + az * az)
    theta = norm * d / 2
    c = math.cos(theta)
    s = math.sin(theta) / norm if norm > 0 else d / 2
    return np.array([[c - 1j * s * az, -1j * s * (ax - 1j * ay)],
                     [-1j * s * (ax + 1j * ay), c + 1j * s * az]])
