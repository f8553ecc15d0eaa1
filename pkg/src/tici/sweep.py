"""Sweep specifications, figure-data tables and their CSV/JSON emission."""

from __future__ import annotations

import csv
import io
import json
import math
import re
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .classical import JointDistribution, classical_compat_check
from .incompat import STATE_MEASURES, random_context_max_search, tici_quantum
from .optics import ExperimentConfig, angle_to_observable, prepare_state, simulate_experiment
from .states import AXIS_SETTINGS

MODES = ("fig3", "fig4", "max-search", "classical-check", "single")
COLUMNS = ("mode", "sweep_param", "value", "p", "theta_p", "theta_A", "I_bits",
           "term_forward", "term_backward", "I_sampled", "I_stderr")

# Waveplate settings (theta_1, phi_1) that align the prepared state with each axis.
AXIS_WAVEPLATES = {"x": (math.pi / 8, 0.0), "y": (math.pi / 8, math.pi / 2), "z": (0.0, 0.0)}
THETA_SIGMA_X = math.pi / 8
THETA_SIGMA_Z = 0.0
PERIOD_RANGE = (0.0, math.pi / 2)


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class InvariantViolation(RuntimeError):
    """A numerical invariant failed during a run (CLI exit code 3)."""


_ANGLE_RE = re.compile(
    r"^\s*(?P<sign>[+-])?(?P<coef>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*pi"
    r"(?:\s*/\s*(?P<den>\d+(?:\.\d*)?))?\s*$"
)


def parse_angle(value: Any, name: str = "angle") -> float:
    """Angle in radians from a number, ``"<x>deg"`` or ``"<a>pi/<b>"``."""
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected an angle, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{name}: expected an angle, got {value!r}")
    s = value.strip().lower()
    if s.endswith("deg"):
        try:
            return math.radians(float(s[:-3]))
        except ValueError:
            raise ConfigError(f"{name}: cannot parse {value!r} as degrees") from None
    m = _ANGLE_RE.match(s)
    if m:
        coef = float(m["coef"]) if m["coef"] else 1.0
        coef = -coef if m["sign"] == "-" else coef
        den = float(m["den"]) if m["den"] else 1.0
        return coef * math.pi / den
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {value!r} as an angle") from None


@dataclass(frozen=True)
class SweepSpec:
    mode: str
    param: Optional[str] = None
    start: float = 0.0
    stop: float = 0.0
    steps: int = 0
    fixed: Mapping[str, Any] = field(default_factory=dict)
    base: float = 2.0
    counts: Optional[int] = None
    seed: int = 0
    out: Optional[str] = None
    format: str = "csv"
    workers: int = 1

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


_COMMON = {"base", "seed", "counts", "out", "format", "workers"}
_MODE_KEYS = {
    "fig3": {"axis", "range", "steps"},
    "fig4": {"p", "range", "steps", "bloch_factor"},
    "max-search": {"samples", "dim", "measure"},
    "classical-check": {"tables", "min_size", "max_size"},
    "single": {"theta_p", "theta_1", "phi_1", "theta_A", "theta_B", "bloch_factor"},
}


def _int(table, key, default, lo=None, hi=None) -> int:
    v = table.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{key} = {v} must be >= {lo}")
    if hi is not None and v > hi:
        raise ConfigError(f"{key} = {v} must be <= {hi}")
    return v


def _range(table, default) -> tuple[float, float]:
    r = table.get("range", default)
    if not isinstance(r, (list, tuple)) or len(r) != 2:
        raise ConfigError(f"range: expected [start, stop], got {r!r}")
    start, stop = (parse_angle(v, "range") for v in r)
    lo, hi = PERIOD_RANGE
    if min(start, stop) < lo - 1e-12 or max(start, stop) > hi + 1e-12:
        warnings.warn(
            f"range [{start:.6g}, {stop:.6g}] extends beyond [0, pi/2]; the angle is periodic",
            UserWarning, stacklevel=3,
        )
    return start, stop


def spec_from_table(mode: str, table: Mapping[str, Any], defaults: Mapping[str, Any] = {}) -> SweepSpec:
    """Validate one mode table (merged over top-level ``defaults``) into a spec."""
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    t = {**{k: v for k, v in defaults.items() if k in _COMMON}, **table}
    unknown = set(t) - _COMMON - _MODE_KEYS[mode]
    if unknown:
        raise ConfigError(f"[{mode}] unknown key(s): {', '.join(sorted(unknown))}")

    base = t.get("base", 2.0)
    if isinstance(base, bool) or not isinstance(base, (int, float)) or not base > 1:
        raise ConfigError(f"base = {base!r} must be a number > 1")
    fmt = t.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format = {fmt!r} must be 'csv' or 'json'")
    common = dict(
        base=float(base),
        seed=_int(t, "seed", 0, lo=0),
        counts=_int(t, "counts", None, lo=1),
        out=t.get("out"),
        format=fmt,
        workers=_int(t, "workers", 1, lo=1),
    )

    if mode == "fig3":
        axis = t.get("axis", "x")
        if axis not in AXIS_SETTINGS:
            raise ConfigError(f"axis = {axis!r} must be one of x, y, z")
        start, stop = _range(t, [0.0, math.pi / 4])
        return SweepSpec(mode, "theta_p", start, stop, _int(t, "steps", 33, lo=2),
                         {"axis": axis}, **common)
    if mode == "fig4":
        p = t.get("p", 0.0)
        if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0.0 <= p <= 2.0:
            raise ConfigError(f"p = {p!r} is outside the legal range p ∈ [0,2]")
        factor = _int(t, "bloch_factor", 4)
        if factor not in (2, 4):
            raise ConfigError(f"bloch_factor = {factor} must be 2 or 4")
        start, stop = _range(t, [0.0, math.pi / 4])
        return SweepSpec(mode, "theta_A", start, stop, _int(t, "steps", 33, lo=2),
                         {"p": float(p), "bloch_factor": factor}, **common)
    if mode == "max-search":
        measure = t.get("measure", "bures")
        if measure not in STATE_MEASURES:
            raise ConfigError(f"measure = {measure!r} must be one of {', '.join(sorted(STATE_MEASURES))}")
        fixed = {"samples": _int(t, "samples", 100_000, lo=1), "dim": _int(t, "dim", 2, lo=2, hi=8),
                 "measure": measure}
        return SweepSpec(mode, "samples", fixed=fixed, **common)
    if mode == "classical-check":
        lo = _int(t, "min_size", 2, lo=1, hi=64)
        hi = _int(t, "max_size", 6, lo=lo, hi=64)
        fixed = {"tables": _int(t, "tables", 1000, lo=1), "min_size": lo, "max_size": hi}
        return SweepSpec(mode, "table", fixed=fixed, **common)
    # single
    fixed = {k: parse_angle(t.get(k, d), k) for k, d in
             (("theta_p", 0.0), ("theta_1", 0.0), ("phi_1", 0.0),
              ("theta_A", THETA_SIGMA_X), ("theta_B", THETA_SIGMA_Z))}
    factor = _int(t, "bloch_factor", 4)
    if factor not in (2, 4):
        raise ConfigError(f"bloch_factor = {factor} must be 2 or 4")
    fixed["bloch_factor"] = factor
    return SweepSpec(mode, None, fixed=fixed, **common)


def validate_config(raw: str) -> SweepSpec:
    """Parse a TOML document holding exactly one mode table.

    Top-level ``base``, ``seed``, ``counts``, ``out``, ``format`` and
    ``workers`` act as defaults for the table.
    """
    try:
        doc = tomllib.loads(raw)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    tables = {k: v for k, v in doc.items() if isinstance(v, dict)}
    top = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    unknown_top = set(top) - _COMMON
    if unknown_top:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown_top))}")
    if len(tables) != 1:
        raise ConfigError(
            f"config must contain exactly one mode table ({', '.join(MODES)}); found {sorted(tables) or 'none'}"
        )
    (mode, table), = tables.items()
    return spec_from_table(mode, table, top)


# --- running ----------------------------------------------------------------


@dataclass(frozen=True)
class FigureRow:
    mode: str
    sweep_param: Optional[str] = None
    value: Optional[float] = None
    p: Optional[float] = None
    theta_p: Optional[float] = None
    theta_A: Optional[float] = None
    I_bits: Optional[float] = None
    term_forward: Optional[float] = None
    term_backward: Optional[float] = None
    I_sampled: Optional[float] = None
    I_stderr: Optional[float] = None


assert tuple(f.name for f in fields(FigureRow)) == COLUMNS


def _experiment_row(args) -> FigureRow:
    mode, param, value, cfg = args
    rec = simulate_experiment(cfg)
    rho = prepare_state(cfg.theta_p, cfg.theta_1, cfg.phi_1, cfg.delta)
    direct = tici_quantum(rho, angle_to_observable(cfg.theta_a, cfg.bloch_factor),
                          angle_to_observable(cfg.theta_b, cfg.bloch_factor), cfg.base)
    if abs(direct.tici - rec.report.tici) > 1e-9:
        raise InvariantViolation(
            f"{mode} at {param}={value}: circuit gives {rec.report.tici!r}, channels give {direct.tici!r}"
        )
    sampled = rec.sampled_report.tici if rec.sampled_report else None
    return FigureRow(mode, param, value, cfg.p, cfg.theta_p, cfg.theta_a, rec.report.tici,
                     rec.report.term_forward, rec.report.term_backward, sampled, rec.tici_stderr)


def _point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _experiment_jobs(spec: SweepSpec) -> list:
    jobs = []
    for i, v in enumerate(spec.grid()):
        v = float(v)
        common = dict(counts_per_setting=spec.counts, seed=_point_seed(spec.seed, i), base=spec.base)
        if spec.mode == "fig3":
            t1, f1 = AXIS_WAVEPLATES[spec.fixed["axis"]]
            cfg = ExperimentConfig(theta_p=v, theta_1=t1, phi_1=f1, theta_a=THETA_SIGMA_X,
                                   theta_b=THETA_SIGMA_Z, **common)
        else:
            theta_p = math.acos(1.0 - spec.fixed["p"]) / 4
            cfg = ExperimentConfig(theta_p=theta_p, theta_1=0.0, phi_1=0.0, theta_a=v,
                                   theta_b=THETA_SIGMA_Z, bloch_factor=spec.fixed["bloch_factor"],
                                   **common)
        jobs.append((spec.mode, spec.param, v, cfg))
    return jobs


def _map(fn, jobs, workers: int) -> list:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))  # map preserves grid order
    return [fn(j) for j in jobs]


def _classical_row(args) -> FigureRow:
    index, shape, seed, base = args
    rep = classical_compat_check(JointDistribution.random(shape, seed), base)
    return FigureRow("classical-check", "table", float(index), I_bits=rep.tici,
                     term_forward=rep.term_forward, term_backward=rep.term_backward)


def run_sweep(spec: SweepSpec) -> list[FigureRow]:
    """Evaluate ``spec`` and return one row per grid point (or per sample/table)."""
    if spec.mode in ("fig3", "fig4"):
        rows = _map(_experiment_row, _experiment_jobs(spec), spec.workers)
    elif spec.mode == "single":
        f = spec.fixed
        cfg = ExperimentConfig(theta_p=f["theta_p"], theta_1=f["theta_1"], phi_1=f["phi_1"],
                               theta_a=f["theta_A"], theta_b=f["theta_B"], bloch_factor=f["bloch_factor"],
                               counts_per_setting=spec.counts, seed=spec.seed, base=spec.base)
        rows = [_experiment_row(("single", None, None, cfg))]
    elif spec.mode == "max-search":
        f = spec.fixed
        res = random_context_max_search(f["samples"], spec.seed, f["dim"], spec.base,
                                        measure=f["measure"], workers=spec.workers)
        rows = [FigureRow("max-search", "samples", float(f["samples"]), I_bits=res.maximum,
                          term_forward=res.report.term_forward, term_backward=res.report.term_backward)]
    elif spec.mode == "classical-check":
        f = spec.fixed
        rng = np.random.default_rng(spec.seed)
        jobs = []
        for i in range(f["tables"]):
            shape = tuple(int(s) for s in rng.integers(f["min_size"], f["max_size"] + 1, size=2))
            jobs.append((i, shape, _point_seed(spec.seed, i), spec.base))
        rows = _map(_classical_row, jobs, spec.workers)
    else:
        raise ConfigError(f"unknown mode {spec.mode!r}")
    check_invariants(spec, rows)
    return rows


def check_invariants(spec: SweepSpec, rows: list[FigureRow]) -> None:
    """Raise :class:`InvariantViolation` on values that theory rules out."""
    qubit = spec.mode in ("fig3", "fig4", "single") or (
        spec.mode == "max-search" and spec.fixed.get("dim") == 2)
    upper = 0.5 * math.log(2, spec.base) + 1e-9
    for r in rows:
        v = r.I_bits
        if v is None or math.isnan(v):
            raise InvariantViolation(f"{r.mode}: missing or NaN quantifier")
        if v < -1e-12:
            raise InvariantViolation(f"{r.mode}: negative quantifier {v!r}")
        if qubit and v > upper:
            raise InvariantViolation(f"{r.mode}: quantifier {v!r} exceeds the qubit bound {upper!r}")
        if spec.mode == "classical-check" and v > 1e-12:
            raise InvariantViolation(f"classical table {r.value:g} gives nonzero quantifier {v!r}")


# --- emission ---------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return f"{v:.12g}"


def _json_value(v):
    if v is None or isinstance(v, str):
        return v
    if not math.isfinite(v):
        return _fmt(v)
    return float(f"{v:.12g}")


def render(rows: list[FigureRow], fmt: str = "csv") -> str:
    if not rows:
        raise ValueError("no rows to emit")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
        return buf.getvalue()
    if fmt == "json":
        data = [{c: _json_value(getattr(r, c)) for c in COLUMNS} for r in rows]
        return json.dumps(data, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_figure_data(rows: list[FigureRow], path, fmt: str = "csv") -> Path:
    """Write ``rows`` to ``path``. Nothing is created for an empty table."""
    text = render(rows, fmt)
    path = Path(path)
    path.write_text(text, encoding="utf-8")
    return path


def rows_as_dicts(rows: list[FigureRow]) -> list[dict]:
    return [asdict(r) for r in rows]
