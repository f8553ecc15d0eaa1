"""Finite classical statistics: joint tables, nonselective measurement and a phase-space demo.

In a classical theory a joint distribution ``p(x, y)`` exists, and averaging
the post-measurement description over unrecorded outcomes gives back the
original description. These routines check that numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .incompat import ContextReport, ContextStatistics, tici_distributions
from .measurements import OutcomeDistribution

JOINT_TOL = 1e-12
GRID_TOL = 1e-9

_AXES = {"x": 0, "y": 1, 0: 0, 1: 1}


def _axis(axis) -> int:
    try:
        return _AXES[axis]
    except KeyError:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}") from None


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Table ``p(x_i, y_j)``; rows index X outcomes, columns Y outcomes."""

    table: np.ndarray
    x_labels: tuple = ()
    y_labels: tuple = ()

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim != 2 or t.size == 0:
            raise ValueError(f"joint table must be a non-empty 2-D array, got shape {t.shape}")
        if np.any(t < 0):
            raise ValueError("joint table has negative entries")
        if abs(t.sum() - 1) > JOINT_TOL:
            raise ValueError(f"joint table sums to {t.sum():.15g}")
        xl = tuple(self.x_labels) or tuple(range(t.shape[0]))
        yl = tuple(self.y_labels) or tuple(range(t.shape[1]))
        if len(xl) != t.shape[0] or len(yl) != t.shape[1]:
            raise ValueError("label counts do not match the table shape")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "x_labels", xl)
        object.__setattr__(self, "y_labels", yl)

    @classmethod
    def random(cls, shape: tuple[int, int], seed=None) -> JointDistribution:
        """Flat-Dirichlet random table of the given shape."""
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        t = rng.dirichlet(np.ones(shape[0] * shape[1])).reshape(shape)
        return cls(t / t.sum())


def marginal(j: JointDistribution, axis="x") -> OutcomeDistribution:
    if _axis(axis) == 0:
        return OutcomeDistribution(j.table.sum(axis=1), j.x_labels)
    return OutcomeDistribution(j.table.sum(axis=0), j.y_labels)


def conditional(j: JointDistribution, given="x") -> np.ndarray:
    """Conditional table; ``given='x'`` returns ``c[i, j] = p(y_j | x_i)``.

    Rows (or columns) of zero-probability conditioning outcomes are zero.
    """
    ax = _axis(given)
    t = j.table if ax == 0 else j.table.T
    m = t.sum(axis=1, keepdims=True)
    out = np.divide(t, m, out=np.zeros_like(t), where=m > 0)
    return out if ax == 0 else out.T


def nonselective_classical(j: JointDistribution, measured="x") -> JointDistribution:
    """Measure ``measured`` without recording the outcome and rebuild the joint.

    The other variable's distribution becomes ``sum_i p(y|x_i) p(x_i)`` and the
    joint is reassembled with Bayes' rule. For a valid table this is the
    identity map.
    """
    ax = _axis(measured)
    if ax == 0:
        cond = conditional(j, "x")  # p(y|x)
        px = j.table.sum(axis=1)
        new = cond * px[:, None]
    else:
        cond = conditional(j, "y")  # p(x|y), indexed [i, j]
        py = j.table.sum(axis=0)
        new = cond * py[None, :]
    return JointDistribution(new, j.x_labels, j.y_labels)


def classical_statistics(j: JointDistribution) -> ContextStatistics:
    px = j.table.sum(axis=1)
    py = j.table.sum(axis=0)
    y_given_x = conditional(j, "x")
    x_given_y = conditional(j, "y")
    return ContextStatistics(
        x=OutcomeDistribution(px, j.x_labels),
        x_after_y=OutcomeDistribution(x_given_y @ py, j.x_labels),
        y=OutcomeDistribution(py, j.y_labels),
        y_after_x=OutcomeDistribution(px @ y_given_x, j.y_labels),
    )


def classical_compat_check(j: JointDistribution, base: float = 2) -> ContextReport:
    return tici_distributions(classical_statistics(j), base)


@dataclass(frozen=True, eq=False)
class PhaseSpaceGrid:
    """Probability density on a rectangular ``(q, pi)`` grid, ``density[iq, ipi]``."""

    density: np.ndarray
    dq: float = 1.0
    dpi: float = 1.0

    def __post_init__(self):
        d = np.array(self.density, dtype=float)
        if d.ndim != 2:
            raise ValueError("density must be 2-D")
        if self.dq <= 0 or self.dpi <= 0:
            raise ValueError("cell widths must be positive")
        if np.any(d < 0):
            raise ValueError("density has negative cells")
        mass = d.sum() * self.dq * self.dpi
        if abs(mass - 1) > GRID_TOL:
            raise ValueError(f"density integrates to {mass:.12g}")
        d.setflags(write=False)
        object.__setattr__(self, "density", d)

    @classmethod
    def gaussian(cls, nq: int = 64, npi: int = 64, width: float = 8.0,
                 center=(0.5, -0.3), sigma=(1.0, 0.7), corr: float = 0.4) -> PhaseSpaceGrid:
        """Discretized correlated Gaussian blob on ``[-width/2, width/2]^2``."""
        q = np.linspace(-width / 2, width / 2, nq)
        p = np.linspace(-width / 2, width / 2, npi)
        dq, dpi = q[1] - q[0], p[1] - p[0]
        zq = (q[:, None] - center[0]) / sigma[0]
        zp = (p[None, :] - center[1]) / sigma[1]
        d = np.exp(-(zq**2 - 2 * corr * zq * zp + zp**2) / (2 * (1 - corr**2)))
        return cls(d / (d.sum() * dq * dpi), dq, dpi)


def _collapse(grid: PhaseSpaceGrid, axis: int, k: int) -> np.ndarray:
    """Selective outcome ``k`` on ``axis``: a discrete delta times the conditional slice."""
    d = grid.density
    width, other = (grid.dq, grid.dpi) if axis == 0 else (grid.dpi, grid.dq)
    out = np.zeros_like(d)
    if axis == 0:
        out[k, :] = d[k, :] / (d[k, :].sum() * other) / width
    else:
        out[:, k] = d[:, k] / (d[:, k].sum() * other) / width
    return out


def nonselective_phase_space(grid: PhaseSpaceGrid, axis="q") -> PhaseSpaceGrid:
    """Average selective collapses over outcomes, weighted by their probability."""
    ax = {"q": 0, "pi": 1}.get(axis, axis)
    if ax not in (0, 1):
        raise ValueError(f"axis must be 'q' or 'pi', got {axis!r}")
    d = grid.density
    width, other = (grid.dq, grid.dpi) if ax == 0 else (grid.dpi, grid.dq)
    # weight of outcome k: marginal density times cell width
    marg = d.sum(axis=1 - ax) * other
    acc = np.zeros_like(d)
    for k in range(d.shape[ax]):
        if marg[k] <= 0:
            continue
        acc += _collapse(grid, ax, k) * marg[k] * width
    return PhaseSpaceGrid(acc, grid.dq, grid.dpi)


@dataclass(frozen=True)
class LiouvilleReport:
    """L1 distances between recovered and original densities."""

    l1_q: float
    l1_pi: float
    l1_q_then_pi: float
    l1_pi_then_q: float
    # largest L1 distance of a single selective outcome from the original;
    # shows that individual collapses do change the description
    max_selective_l1: float

    @property
    def worst(self) -> float:
        return max(self.l1_q, self.l1_pi, self.l1_q_then_pi, self.l1_pi_then_q)


def _l1(a: PhaseSpaceGrid, b: PhaseSpaceGrid) -> float:
    return float(np.abs(a.density - b.density).sum() * a.dq * a.dpi)


def liouville_measurement_demo(grid: PhaseSpaceGrid) -> LiouvilleReport:
    q = nonselective_phase_space(grid, "q")
    p = nonselective_phase_space(grid, "pi")
    qp = nonselective_phase_space(q, "pi")
    pq = nonselective_phase_space(p, "q")
    d = grid.density
    marg = d.sum(axis=1)
    sel = max(
        float(np.abs(_collapse(grid, 0, k) - d).sum() * grid.dq * grid.dpi)
        for k in range(d.shape[0]) if marg[k] > 0
    )
    return LiouvilleReport(_l1(q, grid), _l1(p, grid), _l1(qp, grid), _l1(pq, grid), sel)
