"""Dense complex-matrix helpers for small Hilbert spaces.

Matrices are plain ``numpy`` arrays of shape ``(d, d)``. Everything here is a
pure function; inputs are never mutated.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

MAX_DIM = 64
HERMITIAN_TOL = 1e-9
PSD_CLAMP_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


class CapacityError(DimensionError):
    """Raised when a result would exceed ``MAX_DIM``."""


class NotHermitianError(ValueError):
    pass


class HermitianEig(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(m, max_dim: int = MAX_DIM) -> np.ndarray:
    """Coerce ``m`` to a square complex array, checking the size cap."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not 1 <= a.shape[0] <= max_dim:
        raise CapacityError(f"dimension {a.shape[0]} outside [1, {max_dim}]")
    return a


def dagger(m) -> np.ndarray:
    return np.asarray(m).conj().T


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(m)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def kron(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    """Tensor product with entry ``(i1*db + i2, j1*db + j2) = a[i1, j1] * b[i2, j2]``."""
    a = as_matrix(a, max_dim)
    b = as_matrix(b, max_dim)
    dim = a.shape[0] * b.shape[0]
    if dim > max_dim:
        raise CapacityError(f"kron result dimension {dim} exceeds cap {max_dim}")
    return np.kron(a, b)


def partial_trace(m, dims: tuple[int, int], keep: int = 0) -> np.ndarray:
    """Reduce a bipartite operator to one subsystem.

    Args:
        m: operator on ``H_0 (x) H_1``.
        dims: ``(d0, d1)``; must multiply to ``m``'s dimension.
        keep: index of the subsystem that survives (0 = first, 1 = second).

    Returns:
        The reduced ``d_keep x d_keep`` operator.
    """
    m = as_matrix(m)
    d0, d1 = (int(d) for d in dims)
    if d0 < 1 or d1 < 1 or d0 * d1 != m.shape[0]:
        raise DimensionError(f"dims {dims} do not factor dimension {m.shape[0]}")
    if keep not in (0, 1):
        raise ValueError(f"keep must be 0 or 1, got {keep!r}")
    t = m.reshape(d0, d1, d0, d1)
    if keep == 0:
        return np.einsum("ikjk->ij", t)
    return np.einsum("kikj->ij", t)


def hermitian_eig(m, tol: float = HERMITIAN_TOL, clamp_psd: bool = False) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrized as ``(m + m^dagger)/2`` before decomposition. With
    ``clamp_psd`` eigenvalues in ``[-PSD_CLAMP_TOL, 0)`` are set to zero.
    """
    m = as_matrix(m)
    if not is_hermitian(m, tol):
        raise NotHermitianError(
            f"matrix is not Hermitian within {tol:g} "
            f"(max deviation {np.max(np.abs(m - m.conj().T)):.3g})"
        )
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    if clamp_psd:
        vals = np.where((vals < 0) & (vals >= -PSD_CLAMP_TOL), 0.0, vals)
    return HermitianEig(vals, vecs)


def schatten2_norm(m) -> float:
    a = np.asarray(m, dtype=complex)
    return float(np.sqrt(np.real(np.trace(a.conj().T @ a))))


def commutator(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"commutator of {a.shape} and {b.shape} matrices")
    return a @ b - b @ a


# Pauli matrices, read-only.
IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)
for _m in (IDENTITY2, *PAULIS):
    _m.setflags(write=False)
del _m


def pauli_vector(n) -> np.ndarray:
    """Return ``n . sigma`` for a real 3-vector ``n``."""
    nx, ny, nz = (float(v) for v in n)
    return nx * SIGMA_X + ny * SIGMA_Y + nz * SIGMA_Z
