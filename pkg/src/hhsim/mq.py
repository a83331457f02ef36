"""Even-order multiple-quantum decomposition and analytic transfer theory.

The transverse bilinear part of a drive-frame coupling tensor splits into
commuting zero-quantum (ZQ) and double-quantum (DQ) parts,

    H_zq = pi*Jx_zq*(2IxSx + 2IySy) + pi*Jy_zq*(2IxSy - 2IySx)
    H_dq = pi*Jx_dq*(2IxSx - 2IySy) + pi*Jy_dq*(2IxSy + 2IySx)

with Jx_zq = (Jxx + Jyy)/2, Jy_zq = (Jxy + Jyx)/2, Jx_dq = (Jxx - Jyy)/2,
Jy_dq = (Jxy - Jyx)/2.  When those coefficients are constant, the propagator
and the fate of longitudinal magnetization have closed forms in the two
magnitudes and phase angles; this module implements them together with the
block-structure and complete-transfer checks used to certify an even-order
propagator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import CouplingTensor
from .operators import (EVEN_ORDER_MQ_LABELS, basis_matrix, expm_hermitian,
                        require_unitary)

__all__ = [
    "BlockStructure",
    "HHConditions",
    "TransferCoeffs",
    "ZQDQParams",
    "analytic_even_order_propagator",
    "analytic_transfer",
    "average_hamiltonian",
    "check_block_structure",
    "evomq",
    "even_order_hamiltonian",
    "h_dq",
    "h_zq",
    "hh_conditions",
    "zq_dq_split",
]

_ZQX = basis_matrix("2IxSx") + basis_matrix("2IySy")
_ZQY = basis_matrix("2IxSy") - basis_matrix("2IySx")
_DQX = basis_matrix("2IxSx") - basis_matrix("2IySy")
_DQY = basis_matrix("2IxSy") + basis_matrix("2IySx")
_IZ = basis_matrix("Iz")
_SZ = basis_matrix("Sz")

# matrix positions (row, col) allowed for an even-order propagator
_BLOCK_POSITIONS = ((0, 0), (0, 3), (1, 1), (1, 2), (2, 1), (2, 2), (3, 0), (3, 3))
_ELEMENT_NAMES = ("a11", "a14", "a22", "a23", "a32", "a33", "a41", "a44")


@dataclass(frozen=True)
class ZQDQParams:
    """ZQ/DQ coefficients (Hz) with derived magnitudes and phase angles.

    ``f_diff`` and ``g_sum`` are the phase angles of the ZQ and DQ parts
    (atan2(-jy_zq, jx_zq) and atan2(jy_dq, jx_dq)); they are ``None`` when
    the corresponding magnitude vanishes and the angle is undefined.
    """

    jx_zq: float
    jy_zq: float
    jx_dq: float
    jy_dq: float
    j_zq: float
    j_dq: float
    f_diff: float | None
    g_sum: float | None

    @classmethod
    def from_components(cls, jx_zq: float, jy_zq: float,
                        jx_dq: float, jy_dq: float) -> "ZQDQParams":
        j_zq = math.hypot(jx_zq, jy_zq)
        j_dq = math.hypot(jx_dq, jy_dq)
        f = math.atan2(-jy_zq, jx_zq) if j_zq > 0 else None
        g = math.atan2(jy_dq, jx_dq) if j_dq > 0 else None
        return cls(jx_zq, jy_zq, jx_dq, jy_dq, j_zq, j_dq, f, g)


def zq_dq_split(ct: CouplingTensor) -> ZQDQParams:
    """Split a coupling tensor's transverse block into ZQ and DQ parts."""
    return ZQDQParams.from_components(
        (ct.xx + ct.yy) / 2, (ct.xy + ct.yx) / 2,
        (ct.xx - ct.yy) / 2, (ct.xy - ct.yx) / 2,
    )


def h_zq(zp: ZQDQParams) -> np.ndarray:
    """Zero-quantum Hamiltonian matrix, rad/s."""
    return math.pi * (zp.jx_zq * _ZQX + zp.jy_zq * _ZQY)


def h_dq(zp: ZQDQParams) -> np.ndarray:
    """Double-quantum Hamiltonian matrix, rad/s."""
    return math.pi * (zp.jx_dq * _DQX + zp.jy_dq * _DQY)


def even_order_hamiltonian(zp: ZQDQParams) -> np.ndarray:
    return h_zq(zp) + h_dq(zp)


def _angles(zp: ZQDQParams) -> tuple[float, float]:
    f = zp.f_diff
    g = zp.g_sum
    if f is None:
        if zp.j_zq > 0:
            raise ValueError("undefined ZQ phase with nonzero ZQ magnitude")
        f = 0.0
    if g is None:
        if zp.j_dq > 0:
            raise ValueError("undefined DQ phase with nonzero DQ magnitude")
        g = 0.0
    return f, g


def analytic_even_order_propagator(zp: ZQDQParams, t: float) -> np.ndarray:
    """Closed-form propagator of the time-independent ZQ+DQ Hamiltonian.

    Phase-dressed product of a pure-ZQ and a pure-DQ exponential; equals
    ``exp(-1j * (h_zq + h_dq) * t)`` because the two parts commute.
    """
    f, g = _angles(zp)
    rz_f = expm_hermitian(f * _IZ, 1.0)
    rz_g = expm_hermitian(g * _IZ, 1.0)
    u_zq = rz_f @ expm_hermitian(math.pi * zp.j_zq * _ZQX, t) @ rz_f.conj().T
    u_dq = rz_g @ expm_hermitian(math.pi * zp.j_dq * _DQX, t) @ rz_g.conj().T
    return u_zq @ u_dq


@dataclass(frozen=True)
class TransferCoeffs:
    """Fate of initial Iz under the even-order propagator: survival
    ``alpha``, transfer to Sz ``gamma``, and the four created transverse
    bilinear coherences."""

    alpha: float
    gamma: float
    beta_xx: float
    beta_xy: float
    beta_yx: float
    beta_yy: float

    @property
    def norm_sq(self) -> float:
        return (self.alpha**2 + self.gamma**2 + self.beta_xx**2
                + self.beta_xy**2 + self.beta_yx**2 + self.beta_yy**2)


def analytic_transfer(zp: ZQDQParams, t: float) -> TransferCoeffs:
    """Closed-form coefficients of ``U Iz U^+`` for the ZQ+DQ propagator.

    Complete magnetization exchange Iz -> Sz corresponds to gamma = 1.
    """
    f, g = _angles(zp)
    dz = math.pi * zp.j_zq * t
    dd = math.pi * zp.j_dq * t
    cz, sz_ = math.cos(dz), math.sin(dz)
    cd, sd = math.cos(dd), math.sin(dd)
    u = sd * cd
    v = sz_ * cz
    return TransferCoeffs(
        alpha=cd * cd * cz * cz - sd * sd * sz_ * sz_,
        gamma=cd * cd * sz_ * sz_ - sd * sd * cz * cz,
        beta_xx=u * math.sin(g) + v * math.sin(f),
        beta_xy=-u * math.cos(g) + v * math.cos(f),
        beta_yx=-u * math.cos(g) - v * math.cos(f),
        beta_yy=-u * math.sin(g) + v * math.sin(f),
    )


@dataclass(frozen=True)
class BlockStructure:
    """Even-order block test of a unitary: the eight allowed entries and
    the largest magnitude found outside them."""

    is_even_order: bool
    elements: dict[str, complex]
    max_leakage: float


def check_block_structure(u: np.ndarray, tol: float = 1e-6) -> BlockStructure:
    """Check that a unitary only populates the outer anti-diagonal and the
    inner 2x2 block (the even-order multiple-quantum sparsity pattern)."""
    u = require_unitary(u)
    mask = np.ones((4, 4), dtype=bool)
    for r, c in _BLOCK_POSITIONS:
        mask[r, c] = False
    leakage = float(np.max(np.abs(u[mask])))
    elements = {name: complex(u[r, c])
                for name, (r, c) in zip(_ELEMENT_NAMES, _BLOCK_POSITIONS)}
    return BlockStructure(leakage <= tol, elements, leakage)


@dataclass(frozen=True)
class HHConditions:
    """Complete-transfer test of an even-order propagator."""

    complete_transfer: bool
    residuals: dict[str, float]
    iz_image: np.ndarray


def hh_conditions(u: np.ndarray, tol: float = 1e-6) -> HHConditions:
    """Evaluate the complete Iz -> Sz exchange conditions on a unitary.

    Requires the even-order block structure (checked at the same ``tol``).
    Returns the six condition residuals plus ``u @ Iz @ u^+`` for
    inspection.
    """
    bs = check_block_structure(u, tol)
    if not bs.is_even_order:
        raise ValueError("propagator does not have the even-order block structure")
    e = bs.elements
    residuals = {
        "pop_11_14": abs(abs(e["a11"])**2 - abs(e["a14"])**2 - 1.0),
        "pop_32_33": abs(abs(e["a32"])**2 - abs(e["a33"])**2 - 1.0),
        "pop_22_23": abs(abs(e["a22"])**2 - abs(e["a23"])**2 + 1.0),
        "pop_41_44": abs(abs(e["a41"])**2 - abs(e["a44"])**2 + 1.0),
        "coh_outer": abs(e["a11"] * e["a41"].conjugate() - e["a14"] * e["a44"].conjugate()),
        "coh_inner": abs(e["a22"] * e["a32"].conjugate() - e["a23"] * e["a33"].conjugate()),
    }
    iz_image = u @ _IZ @ u.conj().T
    return HHConditions(all(r <= tol for r in residuals.values()), residuals, iz_image)


def average_hamiltonian(h_of_t, t_total: float, n: int) -> np.ndarray:
    """Zero-order average: mean of H over the midpoints of ``n`` equal
    subintervals of [0, t_total]."""
    if n < 1:
        raise ValueError("n must be at least 1")
    mids = (np.arange(n) + 0.5) * (t_total / n)
    try:
        h = np.asarray(h_of_t(mids))
        if h.shape != (n, 4, 4):
            raise TypeError
    except (TypeError, ValueError):
        h = np.stack([np.asarray(h_of_t(float(tm))) for tm in mids])
    return h.mean(axis=0)


def evomq(coeffs) -> float:
    """Root-sum-square of the four transverse bilinear coefficients."""
    return math.sqrt(sum(float(coeffs[lab]) ** 2 for lab in EVEN_ORDER_MQ_LABELS))
