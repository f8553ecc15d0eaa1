"""Density matrices, qubit Bloch parametrization and seeded random sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .linalg import (
    HERMITIAN_TOL,
    IDENTITY2,
    PAULIS,
    as_matrix,
    is_hermitian,
    pauli_vector,
)

STATE_TOL = 1e-9


class InvalidStateError(ValueError):
    pass


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated quantum state: Hermitian, unit trace, positive semidefinite.

    The wrapped array is read-only. Instances convert transparently with
    ``np.asarray``.
    """

    mat: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.mat).copy()
        if not is_hermitian(m, HERMITIAN_TOL):
            raise InvalidStateError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1) > STATE_TOL:
            raise InvalidStateError(f"trace {tr.real:.12g} differs from 1")
        lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
        if lo < -STATE_TOL:
            raise InvalidStateError(f"negative eigenvalue {lo:.3g}")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    @classmethod
    def _trusted(cls, m) -> DensityMatrix:
        """Wrap ``m`` without validation; only for outputs of channels applied to valid states."""
        obj = object.__new__(cls)
        a = np.array(m, dtype=complex)
        a.setflags(write=False)
        object.__setattr__(obj, "mat", a)
        return obj

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def from_pure(cls, psi) -> DensityMatrix:
        v = np.asarray(psi, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise InvalidStateError("zero vector is not a state")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityMatrix:
        return cls(np.eye(dim, dtype=complex) / dim)

    def bloch(self) -> np.ndarray:
        return bloch_from_density(self)

    def is_pure(self, tol: float = STATE_TOL) -> bool:
        return abs(np.real(np.trace(self.mat @ self.mat)) - 1) <= tol


def as_state(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


def check_bloch(r) -> np.ndarray:
    v = np.asarray(r, dtype=float).reshape(-1)
    if v.shape != (3,):
        raise InvalidStateError(f"Bloch vector must have 3 components, got {v.shape}")
    if np.linalg.norm(v) > 1 + STATE_TOL:
        raise InvalidStateError(f"Bloch vector norm {np.linalg.norm(v):.12g} exceeds 1")
    return v


def density_from_bloch(r) -> DensityMatrix:
    """Qubit state ``(1 + r . sigma)/2``."""
    v = check_bloch(r)
    return DensityMatrix(0.5 * (IDENTITY2 + pauli_vector(v)))


def bloch_from_density(rho) -> np.ndarray:
    m = np.asarray(rho)
    if m.shape != (2, 2):
        raise InvalidStateError(f"Bloch vector needs a qubit state, got shape {m.shape}")
    return np.array([np.real(np.trace(m @ s)) for s in PAULIS])


def pure_qubit(theta: float, phi: float) -> np.ndarray:
    """``cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>``."""
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def interpolated_state(p: float, theta: float, phi: float) -> DensityMatrix:
    """Mixture ``(p/2) I + (1 - p) |psi><psi|`` with ``p`` in ``[0, 2]``.

    ``p = 0`` is the pure state ``|psi(theta, phi)>``, ``p = 1`` the maximally
    mixed state and ``p = 2`` the antipodal pure state. The eigenvalues are
    ``p/2`` and ``1 - p/2``.
    """
    if not (0.0 <= p <= 2.0):
        raise InvalidStateError(f"p = {p!r} outside the legal range p ∈ [0,2]")
    psi = pure_qubit(theta, phi)
    return DensityMatrix(0.5 * p * IDENTITY2 + (1 - p) * np.outer(psi, psi.conj()))


# Axis-aligned settings (theta, phi) for the pure component.
AXIS_SETTINGS = {
    "x": (np.pi / 2, 0.0),
    "y": (np.pi / 2, np.pi / 2),
    "z": (0.0, 0.0),
}


def axis_state(p: float, axis: str) -> DensityMatrix:
    try:
        theta, phi = AXIS_SETTINGS[axis]
    except KeyError:
        raise ValueError(f"axis must be one of x, y, z; got {axis!r}") from None
    return interpolated_state(p, theta, phi)


def haar_from_gaussian(z: np.ndarray) -> np.ndarray:
    """Map complex Ginibre matrices (any leading batch shape) to Haar unitaries.

    ``Q`` from the QR decomposition is multiplied by the phases of ``R``'s
    diagonal, which removes the bias of the LAPACK sign convention.
    """
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def random_unitary(dim: int, seed: Any = None) -> np.ndarray:
    """Haar-random ``dim x dim`` unitary; deterministic for a given seed."""
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    rng = _rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    return haar_from_gaussian(z)


def random_pure(dim: int, seed: Any = None) -> DensityMatrix:
    return DensityMatrix.from_pure(random_unitary(dim, seed)[:, 0])


def random_density(dim: int, seed: Any = None) -> DensityMatrix:
    """Hilbert-Schmidt random state ``G G^dagger / Tr(G G^dagger)``.

    For ``dim = 2`` the Hilbert-Schmidt measure is the uniform measure on the
    Bloch ball.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    rng = _rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    return DensityMatrix(m / np.real(np.trace(m)))


def random_bures_density(dim: int, seed: Any = None) -> DensityMatrix:
    """Bures-random state ``(I + U) G G^dagger (I + U)^dagger``, normalized.

    ``U`` is Haar and ``G`` Ginibre. Compared with :func:`random_density` the
    Bures measure puts much more weight near the pure states while keeping
    full support on mixed ones.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    rng = _rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = (np.eye(dim) + random_unitary(dim, rng)) @ g
    m = m @ m.conj().T
    return DensityMatrix(m / np.real(np.trace(m)))


@dataclass(frozen=True)
class Context:
    """A preparation together with two measurements on the same space."""

    preparation: DensityMatrix
    meas_x: Any
    meas_y: Any

    def __post_init__(self):
        object.__setattr__(self, "preparation", as_state(self.preparation))
        dims = {self.preparation.dim, self.meas_x.dim, self.meas_y.dim}
        if len(dims) != 1:
            raise ValueError(f"context members have mismatched dimensions {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.preparation.dim
