"""Exact operator algebra on the 4-dimensional Hilbert space of two coupled spins-1/2.

Everything here works on plain ``numpy`` arrays: a two-spin operator is a
(4, 4) complex128 matrix in the Zeeman product basis |aa>, |ab>, |ba>, |bb>
(spin I first). The 16-element product-operator basis is normalized so that
``Tr(B @ B) = 1`` for every element, which makes :func:`decompose`
coefficients directly comparable between operators (the identity element is
E/2, labelled ``"E2"``).
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

__all__ = [
    "BASIS_LABELS",
    "EVEN_ORDER_MQ_LABELS",
    "basis",
    "basis_matrix",
    "coherence_class",
    "commutator",
    "decompose",
    "evolve",
    "expm_hermitian",
    "frame_transform",
    "is_hermitian",
    "is_unitary",
    "reconstruct",
    "require_hermitian",
    "require_unitary",
]

_E2 = np.eye(2, dtype=complex)
_HALF_X = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_HALF_Y = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
_HALF_Z = np.array([[1, 0], [0, -1]], dtype=complex) / 2

IX = np.kron(_HALF_X, _E2)
IY = np.kron(_HALF_Y, _E2)
IZ = np.kron(_HALF_Z, _E2)
SX = np.kron(_E2, _HALF_X)
SY = np.kron(_E2, _HALF_Y)
SZ = np.kron(_E2, _HALF_Z)
E4 = np.eye(4, dtype=complex)

BASIS_LABELS = (
    "E2",
    "Ix", "Iy", "Iz",
    "Sx", "Sy", "Sz",
    "2IzSz",
    "2IxSx", "2IxSy", "2IySx", "2IySy",
    "2IxSz", "2IySz", "2IzSx", "2IzSy",
)

#: transverse bilinear operators spanning the zero-/double-quantum pairs
EVEN_ORDER_MQ_LABELS = ("2IxSx", "2IxSy", "2IySx", "2IySy")

_BASIS = {
    "E2": E4 / 2,
    "Ix": IX, "Iy": IY, "Iz": IZ,
    "Sx": SX, "Sy": SY, "Sz": SZ,
    "2IzSz": 2 * IZ @ SZ,
    "2IxSx": 2 * IX @ SX, "2IxSy": 2 * IX @ SY,
    "2IySx": 2 * IY @ SX, "2IySy": 2 * IY @ SY,
    "2IxSz": 2 * IX @ SZ, "2IySz": 2 * IY @ SZ,
    "2IzSx": 2 * IZ @ SX, "2IzSy": 2 * IZ @ SY,
}
# stacked copy for vectorized projections
_BASIS_STACK = np.stack([_BASIS[lab] for lab in BASIS_LABELS])
for _m in list(_BASIS.values()) + [IX, IY, IZ, SX, SY, SZ, E4, _BASIS_STACK]:
    _m.setflags(write=False)

_COHERENCE = {"E2": "identity", "2IzSz": "two-spin-order"}
_COHERENCE.update({lab: "longitudinal" for lab in ("Iz", "Sz")})
_COHERENCE.update({lab: "even-order-mq" for lab in EVEN_ORDER_MQ_LABELS})
_COHERENCE.update(
    {lab: "single-quantum"
     for lab in ("Ix", "Iy", "Sx", "Sy", "2IxSz", "2IySz", "2IzSx", "2IzSy")}
)


def basis() -> dict[str, np.ndarray]:
    """Return the 16 trace-orthonormal product operators keyed by label."""
    return dict(_BASIS)


def basis_matrix(label: str) -> np.ndarray:
    """Return one basis operator by label."""
    try:
        return _BASIS[label]
    except KeyError:
        raise KeyError(f"unknown basis label {label!r}") from None


def coherence_class(label: str) -> str:
    """Classify a basis label: identity, longitudinal, two-spin-order,
    single-quantum, or even-order-mq (the zero-/double-quantum pairs)."""
    try:
        return _COHERENCE[label]
    except KeyError:
        raise KeyError(f"unknown basis label {label!r}") from None


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    """True if ``a`` equals its adjoint elementwise within ``tol`` (scaled
    by the largest entry for operators that are not O(1))."""
    a = np.asarray(a)
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    return bool(np.max(np.abs(a - a.conj().T)) <= tol * scale)


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    """True if ``u.conj().T @ u`` is the identity within ``tol`` (Frobenius)."""
    u = np.asarray(u)
    return bool(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[-1])) <= tol)


def require_hermitian(a: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a, tol):
        raise ValueError("operator is not Hermitian")
    return a


def require_unitary(u: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u, tol):
        raise ValueError("operator is not unitary")
    return u


def decompose(a: np.ndarray) -> dict[str, float]:
    """Project a Hermitian operator onto the product-operator basis.

    Returns ``{label: Tr(a @ B)}`` for every basis element B; with the
    Tr(B @ B) = 1 normalization these are the expansion coefficients.
    Rejects non-Hermitian input.
    """
    a = require_hermitian(a)
    coeffs = np.einsum("kij,ji->k", _BASIS_STACK, a).real
    return dict(zip(BASIS_LABELS, (float(c) for c in coeffs)))


def reconstruct(coeffs: Mapping[str, float]) -> np.ndarray:
    """Rebuild the operator from (a subset of) basis coefficients."""
    out = np.zeros((4, 4), dtype=complex)
    for lab, c in coeffs.items():
        out += c * basis_matrix(lab)
    return out


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """Unitary ``exp(-1j * h * t)`` of a Hermitian generator (rad/s, s).

    Uses the eigendecomposition, which is exact to rounding for these
    small matrices.
    """
    h = require_hermitian(h, tol=1e-9)
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def frame_transform(u: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Interaction-frame conjugation ``u.conj().T @ a @ u``."""
    u = require_unitary(u)
    return u.conj().T @ np.asarray(a, dtype=complex) @ u


def evolve(u: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Schroedinger-picture conjugation ``u @ a @ u.conj().T``."""
    u = require_unitary(u)
    return u @ np.asarray(a, dtype=complex) @ u.conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return a @ b - b @ a
