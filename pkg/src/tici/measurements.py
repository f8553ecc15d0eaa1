"""Projective and Kraus measurements, outcome statistics and nonselective channels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .linalg import DimensionError, as_matrix, hermitian_eig, is_hermitian, pauli_vector
from .states import DensityMatrix, as_state

MEAS_TOL = 1e-9
DEGENERACY_GAP = 1e-8
PROB_CLAMP = 1e-12


class InvalidMeasurementError(ValueError):
    pass


class DegenerateSpectrumError(InvalidMeasurementError):
    pass


def labels_match(a: Sequence, b: Sequence, tol: float = 1e-9) -> bool:
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if isinstance(x, (int, float, np.number)) and isinstance(y, (int, float, np.number)):
            if abs(float(x) - float(y)) > tol:
                return False
        elif x != y:
            return False
    return True


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Probabilities over labelled outcomes.

    Entries within ``PROB_CLAMP`` outside ``[0, 1]`` are clamped; anything
    further out, or a total off by more than ``MEAS_TOL``, is rejected.
    """

    probs: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1).copy()
        if p.size == 0:
            raise ValueError("empty distribution")
        if np.any(p < -PROB_CLAMP) or np.any(p > 1 + PROB_CLAMP):
            raise ValueError(f"probabilities outside [0, 1]: {p}")
        p = np.clip(p, 0.0, 1.0)
        if abs(p.sum() - 1) > MEAS_TOL:
            raise ValueError(f"probabilities sum to {p.sum():.12g}, not 1")
        labels = tuple(self.labels) if len(self.labels) else tuple(range(p.size))
        if len(labels) != p.size:
            raise ValueError(f"{len(labels)} labels for {p.size} outcomes")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)


@dataclass(frozen=True, eq=False)
class KrausSet:
    """General measurement given by Kraus operators with ``sum K^dagger K = I``."""

    kraus: tuple
    labels: tuple = ()

    def __post_init__(self):
        ops = tuple(as_matrix(k) for k in self.kraus)
        if not ops:
            raise InvalidMeasurementError("a measurement needs at least one operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise DimensionError("Kraus operators have mismatched shapes")
        total = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(total - np.eye(d))) > MEAS_TOL:
            raise InvalidMeasurementError("Kraus operators are not complete (sum K^dagger K != I)")
        labels = tuple(self.labels) if len(self.labels) else tuple(range(len(ops)))
        if len(labels) != len(ops):
            raise InvalidMeasurementError("label count differs from operator count")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ops)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def effects(self) -> tuple:
        return tuple(k.conj().T @ k for k in self.kraus)


@dataclass(frozen=True, eq=False)
class ProjectiveMeasurement:
    """Complete family of orthogonal rank-1 projectors ``|v_i><v_i|``.

    ``basis`` holds the vectors ``v_i`` as columns, in the same order as
    ``projectors`` and ``labels``.
    """

    basis: np.ndarray
    labels: tuple = ()
    projectors: tuple = field(init=False)

    def __post_init__(self):
        u = as_matrix(self.basis).copy()
        d = u.shape[0]
        if np.max(np.abs(u.conj().T @ u - np.eye(d))) > MEAS_TOL:
            raise InvalidMeasurementError("basis vectors are not orthonormal")
        # orthonormal columns make every |v_i><v_i| a Hermitian idempotent
        projs = tuple(np.outer(u[:, i], u[:, i].conj()) for i in range(d))
        labels = tuple(self.labels) if len(self.labels) else tuple(range(d))
        if len(labels) != d:
            raise InvalidMeasurementError("label count differs from dimension")
        u.setflags(write=False)
        for p in projs:
            p.setflags(write=False)
        object.__setattr__(self, "basis", u)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "projectors", projs)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def kraus(self) -> tuple:
        return self.projectors

    @property
    def effects(self) -> tuple:
        return self.projectors

    @classmethod
    def from_projectors(cls, projectors, labels=()) -> ProjectiveMeasurement:
        """Build from explicit rank-1 projectors, checking orthogonality and completeness."""
        ps = [as_matrix(p) for p in projectors]
        d = ps[0].shape[0]
        if len(ps) != d:
            raise InvalidMeasurementError(f"{len(ps)} projectors for dimension {d}")
        for i, p in enumerate(ps):
            if not is_hermitian(p, MEAS_TOL) or np.max(np.abs(p @ p - p)) > MEAS_TOL:
                raise InvalidMeasurementError(f"projector {i} is not a Hermitian idempotent")
            for j in range(i):
                if np.max(np.abs(p @ ps[j])) > MEAS_TOL:
                    raise InvalidMeasurementError(f"projectors {j} and {i} are not orthogonal")
        if np.max(np.abs(sum(ps) - np.eye(d))) > MEAS_TOL:
            raise InvalidMeasurementError("projectors do not sum to identity")
        cols = []
        for p in ps:
            vals, vecs = hermitian_eig(p)
            cols.append(vecs[:, -1])
        return cls(np.column_stack(cols), labels)


Measurement = Union[ProjectiveMeasurement, KrausSet]


def projective_from_observable(obs, gap: float = DEGENERACY_GAP) -> ProjectiveMeasurement:
    """Eigenprojectors of a nondegenerate Hermitian observable, labelled by eigenvalue.

    Raises:
        DegenerateSpectrumError: if two eigenvalues are closer than ``gap``.
    """
    vals, vecs = hermitian_eig(obs)
    if vals.size > 1 and np.min(np.diff(vals)) < gap:
        raise DegenerateSpectrumError(f"observable has a degenerate spectrum {vals}")
    return ProjectiveMeasurement(vecs, tuple(float(v) for v in vals))


def qubit_observable(direction) -> ProjectiveMeasurement:
    """Projective measurement of ``n . sigma`` for a unit 3-vector ``n``."""
    n = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(n) - 1) > MEAS_TOL:
        raise InvalidMeasurementError(f"direction {n} is not a unit vector")
    return projective_from_observable(pauli_vector(n))


def _check_dims(rho, m) -> np.ndarray:
    r = np.asarray(rho)
    if r.shape != (m.dim, m.dim):
        raise DimensionError(f"state of shape {r.shape} vs measurement of dimension {m.dim}")
    return r


def outcome_distribution(rho, m: Measurement) -> OutcomeDistribution:
    r = _check_dims(rho, m)
    probs = [np.real(np.trace(e @ r)) for e in m.effects]
    return OutcomeDistribution(np.array(probs), m.labels)


def nonselective_map(rho, m: Measurement) -> DensityMatrix:
    """Apply ``rho -> sum_i K_i rho K_i^dagger``."""
    r = _check_dims(as_state(rho), m)
    if isinstance(m, ProjectiveMeasurement):
        u = m.basis
        # U diag(U^dagger rho U) U^dagger
        d = np.real(np.sum(u.conj() * (r @ u), axis=0))
        out = (u * d) @ u.conj().T
    else:
        out = sum(k @ r @ k.conj().T for k in m.kraus)
    # a channel maps valid states to valid states
    return DensityMatrix._trusted(out)


def sequential_nonselective(rho, first: Measurement, second: Measurement) -> DensityMatrix:
    """Nonselective ``first`` followed by nonselective ``second``."""
    return nonselective_map(nonselective_map(rho, first), second)


def transition_matrix(ma: ProjectiveMeasurement, mb: ProjectiveMeasurement) -> np.ndarray:
    """Overlaps ``|<a_i|b_j>|^2`` as a doubly stochastic matrix."""
    if ma.dim != mb.dim:
        raise DimensionError(f"measurements of dimension {ma.dim} and {mb.dim}")
    return np.abs(ma.basis.conj().T @ mb.basis) ** 2
