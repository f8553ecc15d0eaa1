"""Waveplate/PBS simulation of the sequential nonselective-measurement experiment.

Register layout: qubit 0 is the signal photon's polarization (``|0> = H``,
``|1> = V``); qubits 1..n are path ancillas, each starting in ``|0>``. A PBS
acts as a CNOT from polarization onto its path qubit.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .incompat import ContextReport, ContextStatistics, tici_distributions
from .linalg import DimensionError, partial_trace, pauli_vector
from .measurements import OutcomeDistribution, ProjectiveMeasurement, projective_from_observable
from .states import DensityMatrix, as_state

UNITARY_TOL = 1e-10


def hwp_unitary(theta: float) -> np.ndarray:
    """Half-wave plate with fast axis at ``theta`` from horizontal."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp_unitary(phi: float) -> np.ndarray:
    """Quarter-wave plate (fast axis horizontal) with retardation ``phi``."""
    return np.array([[1, 0], [0, np.exp(1j * phi)]], dtype=complex)


def pbs_cnot() -> np.ndarray:
    """PBS on ``polarization (x) path``: V flips the path, H leaves it."""
    return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


@dataclass(frozen=True)
class WaveplateSetting:
    kind: str  # "HWP" or "QWP"
    value: float  # fast-axis angle for HWP, retardation for QWP

    def __post_init__(self):
        if self.kind not in ("HWP", "QWP"):
            raise ValueError(f"waveplate kind must be HWP or QWP, got {self.kind!r}")

    @property
    def canonical(self) -> float:
        """HWP angles reduced mod pi, QWP phases mod 2 pi."""
        return self.value % (math.pi if self.kind == "HWP" else 2 * math.pi)

    def unitary(self) -> np.ndarray:
        return hwp_unitary(self.value) if self.kind == "HWP" else qwp_unitary(self.value)


def spdc_state(theta_p: float, delta: float = 0.0) -> np.ndarray:
    """Two-photon state ``cos 2θp |HH> + e^{iδ} sin 2θp |VV>``, ordered (trigger, signal)."""
    psi = np.zeros(4, dtype=complex)
    psi[0] = math.cos(2 * theta_p)
    psi[3] = np.exp(1j * delta) * math.sin(2 * theta_p)
    return psi


def heralded_state(theta_p: float, delta: float = 0.0) -> DensityMatrix:
    """Signal state after detecting the trigger photon without resolving polarization."""
    psi = spdc_state(theta_p, delta)
    return DensityMatrix(partial_trace(np.outer(psi, psi.conj()), (2, 2), keep=1))


def mixing_parameter(theta_p: float) -> float:
    return 1.0 - math.cos(4 * theta_p)


def preparation_unitary(theta_1: float, phi_1: float) -> np.ndarray:
    """HWP_1 followed by QWP_1."""
    return qwp_unitary(phi_1) @ hwp_unitary(theta_1)


def prepare_state(theta_p: float, theta_1: float, phi_1: float, delta: float = 0.0) -> DensityMatrix:
    """Heralded state sent through HWP_1 and QWP_1.

    Equals ``interpolated_state(1 - cos 4θp, 4θ1, φ1)``.
    """
    u = preparation_unitary(theta_1, phi_1)
    rho0 = heralded_state(theta_p, delta).mat
    return DensityMatrix(u @ rho0 @ u.conj().T)


def observable_direction(theta_a: float, bloch_factor: int = 4) -> np.ndarray:
    """Bloch direction of the observable selected by an HWP at ``theta_a``.

    Conjugating ``sigma_z`` by the HWP gives ``(sin 4θ, 0, cos 4θ)``, the
    default. ``bloch_factor=2`` gives ``(sin 2θ, 0, cos 2θ)`` for comparison.
    """
    if bloch_factor not in (2, 4):
        raise ValueError(f"bloch_factor must be 2 or 4, got {bloch_factor!r}")
    g = bloch_factor * theta_a
    return np.array([math.sin(g), 0.0, math.cos(g)])


def angle_to_observable(theta_a: float, bloch_factor: int = 4) -> ProjectiveMeasurement:
    return projective_from_observable(pauli_vector(observable_direction(theta_a, bloch_factor)))


# --- circuits -------------------------------------------------------------


def embed(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Lift a single-qubit operator onto ``qubit`` of an ``n_qubits`` register."""
    out = np.eye(1, dtype=complex)
    for q in range(n_qubits):
        out = np.kron(out, op if q == qubit else np.eye(2))
    return out


def controlled_not(control: int, target: int, n_qubits: int) -> np.ndarray:
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    a = embed(p0, control, n_qubits)
    b = np.eye(1, dtype=complex)
    for q in range(n_qubits):
        b = np.kron(b, p1 if q == control else x if q == target else np.eye(2))
    return a + b


@dataclass(frozen=True, eq=False)
class CircuitElement:
    name: str
    unitary: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.unitary, dtype=complex)
        err = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))
        if err > UNITARY_TOL:
            raise ValueError(f"element {self.name!r} is not unitary (error {err:.3g})")
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)


@dataclass(frozen=True, eq=False)
class OpticalCircuit:
    """Ordered elements on ``polarization (x) path_1 (x) ... (x) path_n``.

    ``path_outcomes[s][i]`` is the index (into stage ``s``'s measurement
    labels) of the outcome recorded when path ``s + 1`` is found in ``|i>``.
    """

    n_qubits: int
    elements: tuple
    path_outcomes: tuple = ()
    measurements: tuple = ()

    def unitary(self) -> np.ndarray:
        u = np.eye(2**self.n_qubits, dtype=complex)
        for el in self.elements:
            u = el.unitary @ u
        return u

    def run(self, rho) -> np.ndarray:
        """Full register output for polarization input ``rho`` and fresh ancillas."""
        rho = as_state(rho)
        if rho.dim != 2:
            raise DimensionError("the circuit acts on a polarization qubit")
        anc = np.zeros((2 ** (self.n_qubits - 1),) * 2, dtype=complex)
        anc[0, 0] = 1.0
        u = self.unitary()
        return u @ np.kron(rho.mat, anc) @ u.conj().T

    def polarization_output(self, rho) -> DensityMatrix:
        """Output with all path qubits traced out."""
        out = self.run(rho)
        return DensityMatrix(partial_trace(out, (2, 2 ** (self.n_qubits - 1)), keep=0))

    def joint_probabilities(self, rho) -> np.ndarray:
        """Detection probabilities indexed ``[pol, path_1, ..., path_n]``."""
        p = np.clip(np.real(np.diagonal(self.run(rho))), 0.0, None)
        return (p / p.sum()).reshape((2,) * self.n_qubits)


def _path_map(m: ProjectiveMeasurement, rotation: np.ndarray) -> tuple:
    """Which outcome ``R|i>`` belongs to, for each computational index ``i``."""
    overlaps = np.abs(rotation.conj().T @ m.basis) ** 2  # [i, k] = |<i|R^dagger|a_k>|^2
    mapping = tuple(int(k) for k in np.argmax(overlaps, axis=1))
    if sorted(mapping) != list(range(m.dim)) or np.any(np.abs(overlaps.max(axis=1) - 1) > 1e-9):
        raise ValueError("rotation does not map the computational basis onto the measurement basis")
    return mapping


def nondemolition_circuit(m: ProjectiveMeasurement, rotation: Optional[np.ndarray] = None) -> OpticalCircuit:
    """``R^dagger``, PBS, ``R`` on polarization with one path ancilla.

    ``rotation`` is the waveplate unitary ``R`` with ``R|i>`` an eigenvector of
    ``m``; by default the measurement basis itself is used.
    """
    return measurement_pipeline([(m, rotation)], omit_final_rotation=False)


def measurement_pipeline(stages: Sequence, omit_final_rotation: bool = True) -> OpticalCircuit:
    """Chain non-demolition stages, each recording into a fresh path qubit.

    Args:
        stages: sequence of ``(measurement, rotation_or_None)``.
        omit_final_rotation: drop the last ``R`` so that the final
            polarization detection happens in the H/V basis.
    """
    n = 1 + len(stages)
    elements, maps, meas = [], [], []
    for s, (m, rot) in enumerate(stages):
        if m.dim != 2:
            raise DimensionError("optical stages act on a qubit")
        r = np.asarray(m.basis if rot is None else rot, dtype=complex)
        maps.append(_path_map(m, r))
        meas.append(m)
        elements.append(CircuitElement(f"R{s}^dagger", embed(r.conj().T, 0, n)))
        elements.append(CircuitElement(f"PBS{s}", controlled_not(0, s + 1, n)))
        if not (omit_final_rotation and s == len(stages) - 1):
            elements.append(CircuitElement(f"R{s}", embed(r, 0, n)))
    return OpticalCircuit(n, tuple(elements), tuple(maps), tuple(meas))


# --- experiment -----------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    theta_p: float = 0.0
    theta_1: float = 0.0
    phi_1: float = 0.0
    theta_a: float = math.pi / 8  # sigma_x
    theta_b: float = 0.0  # sigma_z
    counts_per_setting: Optional[int] = None
    seed: int = 0
    delta: float = 0.0
    bloch_factor: int = 4
    base: float = 2.0

    def __post_init__(self):
        if self.counts_per_setting is not None and self.counts_per_setting < 1:
            raise ValueError("counts_per_setting must be >= 1")
        if self.bloch_factor not in (2, 4):
            raise ValueError("bloch_factor must be 2 or 4")
        if not self.base > 1:
            raise ValueError("base must exceed 1")

    @property
    def p(self) -> float:
        return mixing_parameter(self.theta_p)


@dataclass(frozen=True, eq=False)
class CountsRecord:
    """Detection statistics for both measurement orders.

    ``joint_ab[pol, path_1, path_2]`` is for A first, B second; ``joint_ba``
    the reverse. Sampled fields are filled by :func:`sample_counts`.
    """

    config: ExperimentConfig
    joint_ab: np.ndarray
    joint_ba: np.ndarray
    statistics: ContextStatistics
    report: ContextReport
    counts_ab: Optional[np.ndarray] = None
    counts_ba: Optional[np.ndarray] = None
    sampled_statistics: Optional[ContextStatistics] = None
    sampled_report: Optional[ContextReport] = None
    tici_stderr: Optional[float] = None


def _measurement_and_rotation(theta: float, bloch_factor: int):
    m = angle_to_observable(theta, bloch_factor)
    # The HWP itself diagonalizes the observable only under the 4θ map.
    rot = hwp_unitary(theta) if bloch_factor == 4 else None
    return m, rot


def _order_distributions(joint: np.ndarray, circuit: OpticalCircuit):
    """First-stage statistics (path 1) and second-stage statistics (H/V detector)."""
    m1, m2 = circuit.measurements
    map1, map2 = circuit.path_outcomes
    first = np.zeros(m1.dim)
    second = np.zeros(m2.dim)
    path1 = joint.sum(axis=(0, 2))
    pol = joint.sum(axis=(1, 2))
    for i in range(2):
        first[map1[i]] += path1[i]
        second[map2[i]] += pol[i]
    return OutcomeDistribution(first, m1.labels), OutcomeDistribution(second, m2.labels)


def _statistics(joint_ab, joint_ba, circ_ab, circ_ba) -> ContextStatistics:
    a_on_rho, b_after_a = _order_distributions(joint_ab, circ_ab)
    b_on_rho, a_after_b = _order_distributions(joint_ba, circ_ba)
    return ContextStatistics(x=a_on_rho, x_after_y=a_after_b, y=b_on_rho, y_after_x=b_after_a)


def experiment_circuits(cfg: ExperimentConfig) -> tuple[OpticalCircuit, OpticalCircuit]:
    a = _measurement_and_rotation(cfg.theta_a, cfg.bloch_factor)
    b = _measurement_and_rotation(cfg.theta_b, cfg.bloch_factor)
    return measurement_pipeline([a, b]), measurement_pipeline([b, a])


def simulate_experiment(cfg: ExperimentConfig) -> CountsRecord:
    """Exact detection probabilities for both orders and the resulting quantifier.

    When ``cfg.counts_per_setting`` is set the record is also shot-sampled with
    ``cfg.seed``.
    """
    rho = prepare_state(cfg.theta_p, cfg.theta_1, cfg.phi_1, cfg.delta)
    circ_ab, circ_ba = experiment_circuits(cfg)
    joint_ab = circ_ab.joint_probabilities(rho)
    joint_ba = circ_ba.joint_probabilities(rho)
    stats = _statistics(joint_ab, joint_ba, circ_ab, circ_ba)
    rec = CountsRecord(cfg, joint_ab, joint_ba, stats, tici_distributions(stats, cfg.base))
    if cfg.counts_per_setting is not None:
        rec = sample_counts(rec, cfg.counts_per_setting, cfg.seed)
    return rec


def _from_counts(c_ab, c_ba, n: int, circuits, shape, base):
    stats = _statistics(c_ab.reshape(shape) / n, c_ba.reshape(shape) / n, *circuits)
    return stats, tici_distributions(stats, base)


def sample_counts(record: CountsRecord, n: int, seed=0, n_boot: int = 200) -> CountsRecord:
    """Multinomial shot noise with ``n`` detections per measurement order.

    The standard error is the spread of the quantifier over ``n_boot``
    multinomial resamples of the observed frequencies (``nan`` if fewer than
    two resamples give a finite value).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p_ab = record.joint_ab.reshape(-1)
    p_ba = record.joint_ba.reshape(-1)
    c_ab = rng.multinomial(n, p_ab / p_ab.sum())
    c_ba = rng.multinomial(n, p_ba / p_ba.sum())
    circuits = experiment_circuits(record.config)
    shape, base = record.joint_ab.shape, record.config.base
    stats, report = _from_counts(c_ab, c_ba, n, circuits, shape, base)

    boot_ab = rng.multinomial(n, c_ab / n, size=n_boot)
    boot_ba = rng.multinomial(n, c_ba / n, size=n_boot)
    vals = np.array([
        _from_counts(x, y, n, circuits, shape, base)[1].tici for x, y in zip(boot_ab, boot_ba)
    ])
    finite = vals[np.isfinite(vals)]
    stderr = float(np.std(finite, ddof=1)) if finite.size >= 2 else math.nan
    return dataclasses.replace(
        record,
        counts_ab=c_ab.reshape(record.joint_ab.shape),
        counts_ba=c_ba.reshape(record.joint_ba.shape),
        sampled_statistics=stats,
        sampled_report=report,
        tici_stderr=stderr,
    )
