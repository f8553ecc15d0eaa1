"""Context incompatibility: divergences, the TICI quantifier and compatibility criteria.

Divergences are plain floats; ``math.inf`` marks a support violation.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import DimensionError, hermitian_eig, schatten2_norm
from .measurements import (
    OutcomeDistribution,
    ProjectiveMeasurement,
    labels_match,
    nonselective_map,
    outcome_distribution,
    sequential_nonselective,
)
from .states import Context, DensityMatrix, as_state, haar_from_gaussian

COMPAT_EPS = 1e-10
SUPPORT_TOL = 1e-14


def _log(x, base: float):
    return np.log(x) / math.log(base)


def _check_base(base: float) -> None:
    if not base > 1:
        raise ValueError(f"logarithm base must exceed 1, got {base!r}")


def _kl_arrays(p: np.ndarray, q: np.ndarray, base: float) -> float:
    total = 0.0
    for pi, qi in zip(p, q):
        if pi <= 0.0:
            continue
        if qi < SUPPORT_TOL:
            if pi < SUPPORT_TOL:
                continue
            return math.inf
        total += pi * math.log(pi / qi)
    # Gibbs: D >= 0; round-off can leave about -1e-16 for equal arguments.
    return max(total, 0.0) / math.log(base)


def kl_divergence(p, q, base: float = 2) -> float:
    """Kullback-Leibler divergence ``D(p || q)`` in log base ``base``.

    Uses ``0 log(0/q) = 0``. Returns ``math.inf`` when some outcome with
    ``p_i > 0`` has ``q_i`` below ``SUPPORT_TOL``; when both are below that
    level the term is treated as numerically null.

    Raises:
        ValueError: on mismatched labels or invalid distributions.
    """
    _check_base(base)
    p = p if isinstance(p, OutcomeDistribution) else OutcomeDistribution(p)
    q = q if isinstance(q, OutcomeDistribution) else OutcomeDistribution(q)
    if not labels_match(p.labels, q.labels):
        raise ValueError(f"outcome labels differ: {p.labels} vs {q.labels}")
    return _kl_arrays(p.probs, q.probs, base)


def quantum_relative_entropy(rho, sigma, base: float = 2) -> float:
    """``S(rho || sigma) = Tr[rho (log rho - log sigma)]`` from eigendecompositions."""
    _check_base(base)
    rho = as_state(rho)
    sigma = as_state(sigma)
    if rho.dim != sigma.dim:
        raise DimensionError(f"states of dimension {rho.dim} and {sigma.dim}")
    lam, r_vecs = hermitian_eig(rho.mat, clamp_psd=True)
    mu, s_vecs = hermitian_eig(sigma.mat, clamp_psd=True)
    lam = np.clip(lam, 0.0, None)
    mu = np.clip(mu, 0.0, None)
    # weights[i, j] = lam_i |<r_i|s_j>|^2
    weights = lam[:, None] * np.abs(r_vecs.conj().T @ s_vecs) ** 2
    col_weight = weights.sum(axis=0)

    neg_entropy = sum(l * math.log(l) for l in lam if l > 0.0)
    cross = 0.0
    for j, m in enumerate(mu):
        if m < SUPPORT_TOL:
            if col_weight[j] < SUPPORT_TOL:
                continue
            return math.inf
        cross += col_weight[j] * math.log(m)
    # Round-off can leave a value of order -1e-17 for equal arguments.
    return max(neg_entropy - cross, 0.0) / math.log(base)


@dataclass(frozen=True)
class ContextStatistics:
    """The four distributions compared by the quantifier.

    ``x``: X statistics of the preparation; ``x_after_y``: X statistics after a
    nonselective Y; ``y`` and ``y_after_x`` likewise.
    """

    x: OutcomeDistribution
    x_after_y: OutcomeDistribution
    y: OutcomeDistribution
    y_after_x: OutcomeDistribution

    def __post_init__(self):
        for name in ("x", "x_after_y", "y", "y_after_x"):
            v = getattr(self, name)
            if not isinstance(v, OutcomeDistribution):
                object.__setattr__(self, name, OutcomeDistribution(v))
        if not labels_match(self.x.labels, self.x_after_y.labels):
            raise ValueError("X distributions carry different labels")
        if not labels_match(self.y.labels, self.y_after_x.labels):
            raise ValueError("Y distributions carry different labels")


@dataclass(frozen=True)
class ContextReport:
    tici: float
    term_forward: float
    term_backward: float
    compatible: bool
    base: float = 2.0


def context_statistics(rho, mx, my) -> ContextStatistics:
    """Distributions of ``mx`` and ``my`` before and after the other's nonselective map."""
    return ContextStatistics(
        x=outcome_distribution(rho, mx),
        x_after_y=outcome_distribution(nonselective_map(rho, my), mx),
        y=outcome_distribution(rho, my),
        y_after_x=outcome_distribution(nonselective_map(rho, mx), my),
    )


def _report(forward: float, backward: float, base: float, eps: float) -> ContextReport:
    tici = 0.5 * (forward + backward)
    return ContextReport(tici, forward, backward, bool(tici <= eps), float(base))


def tici_distributions(stats: ContextStatistics, base: float = 2, eps: float = COMPAT_EPS) -> ContextReport:
    """Average of ``D(P(X) || P_{after Y}(X))`` and ``D(P(Y) || P_{after X}(Y))``."""
    forward = kl_divergence(stats.x, stats.x_after_y, base)
    backward = kl_divergence(stats.y, stats.y_after_x, base)
    return _report(forward, backward, base, eps)


def _require_projective(*ms) -> None:
    for m in ms:
        if not isinstance(m, ProjectiveMeasurement):
            raise TypeError("operator-level quantifiers need projective measurements")


def tici_quantum(rho, a: ProjectiveMeasurement, b: ProjectiveMeasurement,
                 base: float = 2, eps: float = COMPAT_EPS) -> ContextReport:
    """Quantifier from relative entropies of dephased states.

    ``forward = S(Phi_A(rho) || Phi_A(Phi_B(rho)))`` and
    ``backward = S(Phi_B(rho) || Phi_B(Phi_A(rho)))``.
    """
    _require_projective(a, b)
    rho = as_state(rho)
    phi_a = nonselective_map(rho, a)
    phi_b = nonselective_map(rho, b)
    phi_ab = sequential_nonselective(rho, b, a)
    phi_ba = sequential_nonselective(rho, a, b)
    forward = quantum_relative_entropy(phi_a, phi_ab, base)
    backward = quantum_relative_entropy(phi_b, phi_ba, base)
    return _report(forward, backward, base, eps)


def tici_context(ctx: Context, base: float = 2, eps: float = COMPAT_EPS) -> ContextReport:
    return tici_quantum(ctx.preparation, ctx.meas_x, ctx.meas_y, base, eps)


@dataclass(frozen=True)
class CompatibilityResult:
    compatible: bool
    residual_a: float
    residual_b: float


def compatibility_check(rho, a: ProjectiveMeasurement, b: ProjectiveMeasurement,
                        eps: float = COMPAT_EPS) -> CompatibilityResult:
    """Test ``Phi_A(rho) = Phi_AB(rho)`` and ``Phi_B(rho) = Phi_BA(rho)`` in Schatten-2 norm."""
    _require_projective(a, b)
    rho = as_state(rho)
    res_a = schatten2_norm(nonselective_map(rho, a).mat - sequential_nonselective(rho, b, a).mat)
    res_b = schatten2_norm(nonselective_map(rho, b).mat - sequential_nonselective(rho, a, b).mat)
    return CompatibilityResult(bool(res_a <= eps and res_b <= eps), res_a, res_b)


def eigenstate_closed_form(k: int, a: ProjectiveMeasurement, b: ProjectiveMeasurement,
                           base: float = 2) -> float:
    """``-1/2 log sum_j |<b_j|a_k>|^4`` for the preparation ``|a_k><a_k|``."""
    _check_base(base)
    if a.dim != b.dim:
        raise DimensionError(f"measurements of dimension {a.dim} and {b.dim}")
    if not 0 <= k < a.dim:
        raise IndexError(f"outcome index {k} out of range for dimension {a.dim}")
    overlaps = np.abs(b.basis.conj().T @ a.basis[:, k]) ** 2
    return float(-0.5 * _log(np.sum(overlaps**2), base))


class BlochCase(enum.Enum):
    MAXIMALLY_MIXED = "i"
    COMMUTING = "ii"
    PERPENDICULAR = "iii"
    INCOMPATIBLE = "incompatible"


@dataclass(frozen=True)
class BlochConditions:
    case: BlochCase
    r_dot_u: float
    r_dot_v: float
    mu: float

    @property
    def compatible(self) -> bool:
        return self.case is not BlochCase.INCOMPATIBLE


def qubit_bloch_conditions(r, a_hat, b_hat, eps: float = COMPAT_EPS) -> BlochConditions:
    """Classify a qubit context from its Bloch data.

    With ``u = a - b (a.b)`` and ``v = b - a (a.b)`` the context is compatible
    when ``r.u = r.v = 0``. The thresholds are those of
    :func:`compatibility_check`: the operator residuals equal ``|r.u|/sqrt 2``
    and ``|r.v|/sqrt 2``.
    """
    r = np.asarray(r, dtype=float)
    a_hat = np.asarray(a_hat, dtype=float)
    b_hat = np.asarray(b_hat, dtype=float)
    for name, n in (("a_hat", a_hat), ("b_hat", b_hat)):
        if abs(np.linalg.norm(n) - 1) > 1e-9:
            raise ValueError(f"{name} must be a unit vector, norm is {np.linalg.norm(n):.12g}")
    ab = float(a_hat @ b_hat)
    u = a_hat - b_hat * ab
    v = b_hat - a_hat * ab
    ru, rv = float(r @ u), float(r @ v)
    mu = float(np.linalg.norm(u))
    if max(abs(ru), abs(rv)) / math.sqrt(2) > eps:
        case = BlochCase.INCOMPATIBLE
    elif np.linalg.norm(r) <= eps:
        case = BlochCase.MAXIMALLY_MIXED
    elif mu <= eps:
        case = BlochCase.COMMUTING
    else:
        case = BlochCase.PERPENDICULAR
    return BlochConditions(case, ru, rv, mu)


STATE_MEASURES = {"bures": 4, "hilbert-schmidt": 2, "pure": 2}


def _contexts_from_gaussian(z: np.ndarray, measure: str):
    """Turn stacked standard normals ``z[n, k, d, d]`` into context arrays.

    Slots 0-3 give the Haar bases of both measurements; the remaining slots
    feed the state measure.
    """
    ua = haar_from_gaussian((z[:, 0] + 1j * z[:, 1]) / np.sqrt(2))
    ub = haar_from_gaussian((z[:, 2] + 1j * z[:, 3]) / np.sqrt(2))
    g = z[:, 4] + 1j * z[:, 5]
    if measure == "hilbert-schmidt":
        m = g
    elif measure == "bures":
        d = z.shape[-1]
        m = (np.eye(d) + haar_from_gaussian((z[:, 6] + 1j * z[:, 7]) / np.sqrt(2))) @ g
    elif measure == "pure":
        m = haar_from_gaussian(g / np.sqrt(2))[:, :, :1]
    else:
        raise ValueError(f"unknown state measure {measure!r}; choose from {sorted(STATE_MEASURES)}")
    rho = m @ np.swapaxes(m.conj(), -1, -2)
    rho /= np.real(np.trace(rho, axis1=-2, axis2=-1))[:, None, None]
    return rho, ua, ub


def _draw(rng: np.random.Generator, dim: int, measure: str) -> np.ndarray:
    return rng.standard_normal((4 + STATE_MEASURES[measure], dim, dim))


def random_context(dim: int = 2, seed=None, measure: str = "bures") -> Context:
    """Random context: Haar bases for both measurements and a random state.

    ``measure`` selects the state distribution: ``"bures"`` (default),
    ``"hilbert-schmidt"`` (uniform in the Bloch ball for qubits) or
    ``"pure"`` (Haar-random pure states).
    """
    if measure not in STATE_MEASURES:
        raise ValueError(f"unknown state measure {measure!r}; choose from {sorted(STATE_MEASURES)}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rho, ua, ub = _contexts_from_gaussian(_draw(rng, dim, measure)[None], measure)
    return Context(DensityMatrix(rho[0]), ProjectiveMeasurement(ua[0]), ProjectiveMeasurement(ub[0]))


def random_contexts(n: int, dim: int = 2, seed=None, measure: str = "bures") -> list[Context]:
    """``n`` random contexts drawn from one generator in a single batch.

    Same distribution as :func:`random_context`; the stream differs, so use
    :func:`random_context` when individual samples must be reproducible.
    """
    if measure not in STATE_MEASURES:
        raise ValueError(f"unknown state measure {measure!r}; choose from {sorted(STATE_MEASURES)}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = rng.standard_normal((n, 4 + STATE_MEASURES[measure], dim, dim))
    rho, ua, ub = _contexts_from_gaussian(z, measure)
    return [Context(DensityMatrix(r), ProjectiveMeasurement(a), ProjectiveMeasurement(b))
            for r, a, b in zip(rho, ua, ub)]


def sample_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Seed of sample ``index`` in a search started from ``seed``."""
    return np.random.SeedSequence([int(seed), int(index)])


def _kl_batch(p: np.ndarray, q: np.ndarray, base: float) -> np.ndarray:
    # Row-wise version of _kl_arrays with the same support rule.
    live = p > 0.0
    null_q = q < SUPPORT_TOL
    violated = np.any(live & null_q & (p >= SUPPORT_TOL), axis=-1)
    ok = live & ~null_q
    ratio = np.where(ok, p, 1.0) / np.where(ok, q, 1.0)
    out = np.maximum(np.sum(np.where(ok, p * np.log(ratio), 0.0), axis=-1), 0.0) / math.log(base)
    return np.where(violated, math.inf, out)


def _batch_tici(rho: np.ndarray, ua: np.ndarray, ub: np.ndarray, base: float) -> np.ndarray:
    # Distribution route on stacked arrays; per row equals
    # tici_distributions(context_statistics(rho, A, B)).tici
    pa = np.real(np.einsum("nji,njk,nki->ni", ua.conj(), rho, ua))
    pb = np.real(np.einsum("nji,njk,nki->ni", ub.conj(), rho, ub))
    t = np.abs(np.swapaxes(ua.conj(), -1, -2) @ ub) ** 2
    q_a = np.einsum("nij,nj->ni", t, pb)
    q_b = np.einsum("nij,ni->nj", t, pa)
    return 0.5 * (_kl_batch(pa, q_a, base) + _kl_batch(pb, q_b, base))


def _search_chunk(args) -> tuple[float, int]:
    seed, start, stop, dim, base, measure = args
    z = np.stack([
        _draw(np.random.default_rng(sample_seed(seed, i)), dim, measure)
        for i in range(start, stop)
    ])
    vals = _batch_tici(*_contexts_from_gaussian(z, measure), base)
    # argmax returns the first maximum, i.e. the lowest sample index on ties.
    k = int(np.argmax(vals))
    return float(vals[k]), start + k


@dataclass(frozen=True)
class MaxSearchResult:
    maximum: float
    argmax_index: int
    context: Context
    samples: int
    report: ContextReport


def random_context_max_search(samples: int, seed: int = 0, dim: int = 2, base: float = 2,
                              extra_contexts: Sequence[Context] = (), measure: str = "bures",
                              workers: int = 1, chunk: int = 5000) -> MaxSearchResult:
    """Largest quantifier value over seeded random contexts.

    Sample ``i`` is ``random_context(dim, sample_seed(seed, i), measure)``, so
    the result does not depend on ``workers`` or ``chunk``.
    Contexts in ``extra_contexts`` are indexed after the random ones. Ties go
    to the lowest index.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    _check_base(base)
    if measure not in STATE_MEASURES:
        raise ValueError(f"unknown state measure {measure!r}; choose from {sorted(STATE_MEASURES)}")
    jobs = [(seed, s, min(s + chunk, samples), dim, base, measure) for s in range(0, samples, chunk)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_search_chunk, jobs))
    else:
        results = [_search_chunk(j) for j in jobs]

    best, best_i = -math.inf, -1
    for val, i in results:
        if val > best:
            best, best_i = val, i
    for k, ctx in enumerate(extra_contexts):
        val = tici_context(ctx, base).tici
        if val > best:
            best, best_i = val, samples + k

    if best_i < samples:
        ctx = random_context(dim, np.random.default_rng(sample_seed(seed, best_i)), measure)
    else:
        ctx = extra_contexts[best_i - samples]
    return MaxSearchResult(best, best_i, ctx, samples, tici_context(ctx, base))
