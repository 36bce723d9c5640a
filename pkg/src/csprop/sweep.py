"""Scenario configuration, T-sweeps, method comparison and data export."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.signal import find_peaks

from .dynamics import IntegratorOptions
from .errors import (
    CausticDivergence,
    ConfigError,
    CSPropError,
    IntegratorFailure,
    NewtonDivergence,
    NoRealTrajectory,
    WindowEmpty,
)
from .models import FockTruncation, HarmonicModel, KerrModel, ho_exact, kerr_exact, kerr_pi_root
from .phase import CoherentLabel, PhaseScale
from .propagators import (
    METHODS,
    CAUSTIC_EPS,
    PropagatorResult,
    k_complex,
    k_q1p1,
    k_q2p2,
    mixed_contribution,
)
from .solvers import BoundarySpec, ScanWindow, continue_branch, mixed_record, solve_mixed_records, track_complex_branches

logger = logging.getLogger(__name__)

CSV_HEADER = ("T", "method", "re_k", "im_k", "prob", "n_contrib", "flags")
MIXED = ("q1q2", "q1p2", "p1q2", "p1p2")


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _methods(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(text)
    return tuple(m.strip() for m in str(text).split(",") if m.strip())


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a sweep needs; times are in units of ``t_unit``.

    ``t_unit`` is ``abs`` or ``tc``.  For the Kerr model ``tc`` is
    ``pi/(|z1|^2 w)``; for the oscillator it is the period ``2 pi/w``.
    ``q1q2_branches`` is ``window`` (all roots in the scan window) or a
    comma list of loop indices ``n`` for the diagonal Kerr state.
    ``mixed_tracking`` is ``window`` (rescan the window at every T) or
    ``continue`` (follow the roots found at the first grid point until
    they fold or leave, never picking up new ones).
    """

    model: str = "kerr"
    omega: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0
    b: Optional[float] = None
    q1: float = 0.0
    p1: float = 10.0
    q2: float = 0.0
    p2: float = 10.0
    tmin: float = 0.0
    tmax: float = 3.5
    tn: int = 700
    t_unit: str = "tc"
    open_start: bool = False
    open_end: bool = False
    methods: tuple = ("exact", "complex")
    integrator: str = "auto"
    steps_per_period: int = 2000
    window_half_width: float = 4.0
    window_n: int = 512
    q1q2_branches: str = "window"
    mixed_tracking: str = "window"
    seed_radius: float = 1.0
    tail_bound: float = 1e-12
    format: str = "csv"
    out: Optional[str] = None

    def __post_init__(self):
        if self.model not in ("kerr", "harmonic"):
            raise ConfigError(f"unknown model {self.model!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"invalid method list {self.methods!r}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("duplicate methods")
        if self.tn < 1:
            raise ConfigError("tn must be at least 1")
        if self.tn > 1 and not self.tmax > self.tmin:
            raise ConfigError("T grid must be strictly increasing (tmax > tmin)")
        if self.tmin < 0:
            raise ConfigError("times must be nonnegative")
        if self.t_unit not in ("abs", "tc"):
            raise ConfigError(f"unknown t_unit {self.t_unit!r}")
        if self.integrator not in ("auto", "rk4", "exact"):
            raise ConfigError(f"unknown integrator {self.integrator!r}")
        if self.format not in ("csv", "json", "gnuplot"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.omega <= 0 or self.mass <= 0 or self.hbar <= 0 or (self.b is not None and self.b <= 0):
            raise ConfigError("omega, mass, hbar and b must be positive")
        if self.mixed_tracking not in ("window", "continue"):
            raise ConfigError(f"unknown mixed_tracking {self.mixed_tracking!r}")
        if self.window_half_width <= 0 or self.window_n < 16:
            raise ConfigError("scan window needs half_width > 0 and at least 16 points")
        if self.q1q2_branches != "window":
            try:
                ns = self.loop_indices
            except ValueError as exc:
                raise ConfigError(f"bad q1q2_branches {self.q1q2_branches!r}") from exc
            if not ns or min(ns) < 1:
                raise ConfigError("q1q2 loop indices must be positive")
            if self.model != "kerr" or self.q1 != 0 or self.q2 != 0 or self.p1 != self.p2:
                raise ConfigError("explicit q1q2 loop indices need the diagonal Kerr state with q=0")
            if self.hbar != 1 or self.omega != 1 or (self.b or 1.0) != 1:
                raise ConfigError("explicit q1q2 loop indices need hbar = omega = b = 1")

    @property
    def loop_indices(self) -> tuple:
        return tuple(int(x) for x in str(self.q1q2_branches).split(",") if x.strip())

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_mapping(cls, values: dict, base: Optional["ScenarioConfig"] = None) -> "ScenarioConfig":
        """Build from string or typed values, on top of ``base`` (or a preset named in ``values``)."""
        values = dict(values)
        preset = values.pop("preset", None)
        if base is None:
            base = preset_config(preset) if preset else cls()
        elif preset:
            base = preset_config(preset)
        kwargs = dataclasses.asdict(base)
        for key, raw in values.items():
            if raw is None:
                continue
            if key not in kwargs:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _convert(key, raw)
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path, overrides: Optional[dict] = None) -> "ScenarioConfig":
        return cls.from_mapping({**parse_config_text(Path(path).read_text()), **(overrides or {})})

    def scale(self) -> PhaseScale:
        if self.model == "harmonic" and self.b is None:
            return PhaseScale.from_mass_frequency(self.mass, self.omega, self.hbar)
        return PhaseScale(self.b or 1.0, self.hbar)

    def hamiltonian(self):
        if self.model == "harmonic":
            try:
                return HarmonicModel(self.mass, self.omega, self.scale())
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return KerrModel(self.omega, self.scale())

    def labels(self) -> tuple[CoherentLabel, CoherentLabel]:
        s = self.scale()
        return CoherentLabel(self.q1, self.p1, s), CoherentLabel(self.q2, self.p2, s)

    def time_unit(self) -> float:
        if self.t_unit == "abs":
            return 1.0
        if self.model == "kerr":
            n0 = abs(self.labels()[0].z) ** 2
            if n0 == 0:
                raise ConfigError("t_unit=tc is undefined for z1 = 0")
            return math.pi / (n0 * self.omega)
        return 2 * math.pi / self.omega

    def grid(self) -> np.ndarray:
        """Absolute times of the sweep."""
        if self.tn == 1:
            pts = np.array([self.tmin])
        else:
            extra = int(self.open_start) + int(self.open_end)
            pts = np.linspace(self.tmin, self.tmax, self.tn + extra)
            pts = pts[int(self.open_start): len(pts) - int(self.open_end)]
        return pts * self.time_unit()

    def integrator_options(self) -> IntegratorOptions:
        return IntegratorOptions(method=self.integrator, steps_per_period=self.steps_per_period)

    def window(self, kind: str) -> ScanWindow:
        return ScanWindow.around(kind, self.labels()[0], self.scale(), self.window_half_width, self.window_n)


def _convert(key, raw):
    if key == "methods":
        return _methods(raw)
    if key in ("open_start", "open_end"):
        return _bool(raw)
    if key in ("tn", "steps_per_period", "window_n"):
        try:
            return int(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key} must be an integer") from exc
    if key in ("model", "t_unit", "integrator", "format", "out", "q1q2_branches", "mixed_tracking"):
        return str(raw).strip()
    if key == "b" and str(raw).strip().lower() in ("", "none", "auto"):
        return None
    try:
        return float(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key} must be a number, got {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        values[key] = value
    return values


_FIG_BASE = dict(model="kerr", q1=0.0, p1=10.0, q2=0.0, p2=10.0, omega=1.0, hbar=1.0, b=1.0, t_unit="tc")
PRESETS = {
    "fig1": dict(_FIG_BASE, methods=("exact", "complex"), tmin=0.05, tmax=3.5, tn=700, open_start=True),
    "fig2": dict(_FIG_BASE, methods=("exact", "q1p1"), tmin=0.0, tmax=3.5, tn=700, open_start=True),
    "fig3": dict(_FIG_BASE, methods=("exact", "q1q2"), tmin=0.5, tmax=3.5, tn=700, open_start=True,
                 open_end=True, q1q2_branches="1,2,3"),
    "fig4": dict(_FIG_BASE, methods=("exact", "complex", "q1p2"), tmin=0.0, tmax=2.0, tn=400, open_start=True),
    "fig5": dict(_FIG_BASE, methods=("exact", "complex", "p1q2"), tmin=0.0, tmax=2.0, tn=400, open_start=True),
    "fig6": dict(_FIG_BASE, methods=("exact", "p1p2"), tmin=0.0, tmax=3.5, tn=700, open_start=True),
}


def preset_config(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return ScenarioConfig(**PRESETS[name])


@dataclass(frozen=True)
class SweepRow:
    """One (T, method) sample; amplitude fields are None when no value exists."""

    T: float
    method: str
    re_k: Optional[float]
    im_k: Optional[float]
    prob: Optional[float]
    n_contrib: int
    flags: tuple = ()

    @classmethod
    def from_amplitude(cls, T, method, amp, n_contrib, flags=()):
        amp = complex(amp)
        return cls(float(T), method, amp.real, amp.imag, amp.real ** 2 + amp.imag ** 2, int(n_contrib),
                   tuple(flags))

    @classmethod
    def empty(cls, T, method, flags):
        return cls(float(T), method, None, None, None, 0, tuple(flags))

    @property
    def amplitude(self) -> Optional[complex]:
        return None if self.re_k is None else complex(self.re_k, self.im_k)

    def as_dict(self) -> dict:
        return {
            "T": self.T, "method": self.method, "re_k": self.re_k, "im_k": self.im_k,
            "prob": self.prob, "n_contrib": self.n_contrib, "flags": ";".join(self.flags),
        }


_ERROR_FLAGS = (
    (NoRealTrajectory, "no_trajectory"),
    (CausticDivergence, "caustic"),
    (NewtonDivergence, "newton_divergence"),
    (IntegratorFailure, "integrator_failure"),
)


def _error_flag(exc: Exception) -> str:
    for cls, flag in _ERROR_FLAGS:
        if isinstance(exc, cls):
            return flag
    return "solver_error"


class _BranchLabeler:
    """Assigns stable integer ids to roots followed across the T grid."""

    def __init__(self, max_jump: float):
        self.max_jump = max_jump
        self.previous: dict[int, float] = {}
        self.next_id = 0

    def assign(self, roots: Sequence[float]) -> tuple[list[int], bool]:
        ids = [-1] * len(roots)
        free = dict(self.previous)
        pairs = sorted(
            ((abs(r - x), i, bid) for i, r in enumerate(roots) for bid, x in free.items()),
            key=lambda t: (t[0], t[1], t[2]),
        )
        used_r, used_b = set(), set()
        for dist, i, bid in pairs:
            if dist > self.max_jump or i in used_r or bid in used_b:
                continue
            ids[i] = bid
            used_r.add(i)
            used_b.add(bid)
        for i in range(len(roots)):
            if ids[i] < 0:
                ids[i] = self.next_id
                self.next_id += 1
        died = bool(set(self.previous) - used_b)
        self.previous = {bid: r for bid, r in zip(ids, roots)}
        return ids, died


def _mixed_roots(cfg, H, kind, T, opts):
    spec = BoundarySpec.from_labels(kind, cfg.labels()[0], cfg.labels()[1], T, H.scale)
    if kind == "q1q2" and cfg.q1q2_branches != "window":
        roots = []
        for n in cfg.loop_indices:
            try:
                roots.append(kerr_pi_root(n, T))
            except ValueError:
                pass
        return roots, [mixed_record(H, spec, r, opts) for r in roots]
    if not T > 0:
        return [], []
    return solve_mixed_records(H, spec, cfg.window(kind), opts)


def _contribution_row(T, kind, recs, ids, flags, z1, z2):
    contribs = []
    for rec, bid in zip(recs, ids):
        try:
            contribs.append(mixed_contribution(kind, rec, z1, z2, CAUSTIC_EPS, branch=bid))
        except CausticDivergence:
            flags.append("caustic")
    if not contribs:
        return SweepRow.empty(T, kind, sorted(set(flags + ["no_trajectory"])))
    res = PropagatorResult.from_contributions(kind, contribs)
    return SweepRow.from_amplitude(T, kind, res.amplitude, len(contribs), sorted(set(flags)))


def _sweep_continued(cfg, H, kind, grid, opts):
    """Rows from the branches present at the first solvable grid point."""
    z1, z2 = cfg.labels()
    center = z1.p if kind[0] == "q" else z1.q
    rows = []
    traces = None
    for i, T in enumerate(grid):
        if traces is None:
            try:
                roots, _ = _mixed_roots(cfg, H, kind, T, opts)
            except CSPropError as exc:
                rows.append(SweepRow.empty(T, kind, (_error_flag(exc),)))
                continue
            if not roots:
                rows.append(SweepRow.empty(T, kind, ("no_trajectory",)))
                continue
            if kind in ("q1p2", "p1q2"):
                roots = [min(roots, key=lambda r: abs(r - center))]
            spec = BoundarySpec.from_labels(kind, z1, z2, T, H.scale)
            traces = [continue_branch(H, spec, r, grid[i:], opts) for r in roots]
            points = [{pt.T: pt.record for pt in tr.points} for tr in traces]
        recs, ids, flags = [], [], []
        for bid, (tr, pts) in enumerate(zip(traces, points)):
            rec = pts.get(float(T))
            if rec is not None:
                recs.append(rec)
                ids.append(bid)
            elif tr.died_at == float(T):
                flags.append("branch_death")
        rows.append(_contribution_row(T, kind, recs, ids, flags, z1, z2))
    return rows


def _sweep_mixed(cfg, H, kind, grid, opts):
    if cfg.mixed_tracking == "continue" and not (kind == "q1q2" and cfg.q1q2_branches != "window"):
        return _sweep_continued(cfg, H, kind, grid, opts)
    z1, z2 = cfg.labels()
    unit = H.scale.dp if kind[0] == "q" else H.scale.dq
    labeler = _BranchLabeler(cfg.window_half_width * unit)
    center = z1.p if kind[0] == "q" else z1.q
    rows = []
    for T in grid:
        try:
            roots, recs = _mixed_roots(cfg, H, kind, T, opts)
        except CSPropError as exc:
            rows.append(SweepRow.empty(T, kind, (_error_flag(exc),)))
            labeler.assign([])
            continue
        ids, died = labeler.assign(roots)
        flags = ["branch_death"] if died else []
        if not roots:
            rows.append(SweepRow.empty(T, kind, ["no_trajectory"] + flags))
            continue
        if kind in ("q1p2", "p1q2"):
            # separate results are not added; report the root nearest the label
            if len(roots) > 1:
                flags.append("multi_root")
            pick = int(np.argmin([abs(r - center) for r in roots]))
            roots, recs, ids = [roots[pick]], [recs[pick]], [ids[pick]]
        rows.append(_contribution_row(T, kind, recs, ids, flags, z1, z2))
    return rows


def _sweep_complex(cfg, H, grid, opts):
    z1, z2 = cfg.labels()
    if grid[0] <= 0:
        raise ConfigError("the complex method needs T > 0 on the whole grid")
    branches = track_complex_branches(H, z1, z2, grid, opts, seed_radius=cfg.seed_radius,
                                      window=cfg.window("q1q2"))
    rows = []
    alive_prev = set()
    for T in grid:
        contribs, flags = [], []
        alive = set()
        for br in branches:
            rec = br.records.get(float(T))
            if rec is None:
                continue
            alive.add(br.index)
            try:
                contribs.append(k_complex(rec, z1, z2, branch=br.index))
            except CausticDivergence:
                flags.append("caustic")
        if alive_prev - alive:
            flags.append("branch_death")
        alive_prev = alive
        if not contribs:
            rows.append(SweepRow.empty(T, "complex", sorted(set(flags + ["no_trajectory"]))))
            continue
        res = PropagatorResult.from_contributions("complex", contribs)
        rows.append(SweepRow.from_amplitude(T, "complex", res.amplitude, len(contribs), sorted(set(flags))))
    return rows


def _sweep_simple(cfg, H, method, grid, opts):
    z1, z2 = cfg.labels()
    rows = []
    for T in grid:
        try:
            if method == "exact":
                if cfg.model == "kerr":
                    trunc = FockTruncation.for_mean(abs(z1.z * z2.z), cfg.tail_bound)
                    amp = complex(kerr_exact(z1.z, z2.z, T, trunc, cfg.omega))
                else:
                    amp = complex(ho_exact(z1.z, z2.z, T, cfg.omega))
                rows.append(SweepRow.from_amplitude(T, method, amp, 0))
                continue
            fn = k_q1p1 if method == "q1p1" else k_q2p2
            res = fn(H, z1, z2, T, opts=opts)
            rows.append(SweepRow.from_amplitude(T, method, res.amplitude, len(res.contributions)))
        except CSPropError as exc:
            rows.append(SweepRow.empty(T, method, (_error_flag(exc),)))
    return rows


def run_sweep(config: ScenarioConfig, timings: Optional[dict] = None) -> list[SweepRow]:
    """Evaluate every configured method on the T grid.

    Returns ``len(grid) * len(methods)`` rows ordered by T, then by the
    configured method order.  Solver failures become row flags.
    """
    H = config.hamiltonian()
    grid = config.grid()
    opts = config.integrator_options()
    per_method = {}
    for method in config.methods:
        t0 = time.perf_counter()
        if method in MIXED:
            rows = _sweep_mixed(config, H, method, grid, opts)
        elif method == "complex":
            try:
                rows = _sweep_complex(config, H, grid, opts)
            except CSPropError as exc:
                if isinstance(exc, ConfigError):
                    raise
                rows = [SweepRow.empty(T, method, (_error_flag(exc),)) for T in grid]
        else:
            rows = _sweep_simple(config, H, method, grid, opts)
        per_method[method] = rows
        if timings is not None:
            timings[method] = time.perf_counter() - t0
    out = []
    for i in range(len(grid)):
        for method in config.methods:
            out.append(per_method[method][i])
    return out


@dataclass(frozen=True)
class PeakError:
    T: float
    reference: float
    target: float

    @property
    def rel_error(self) -> float:
        return abs(self.target - self.reference) / self.reference


@dataclass(frozen=True)
class ComparisonReport:
    """Differences of ``|K|^2`` between two methods on their shared grid.

    Peaks are local maxima of the reference whose prominence is at least
    ``prominence`` times the largest reference value; the target height
    of a peak is the target maximum between the peak's bases.
    """

    reference: str
    target: str
    window: tuple
    n_points: int
    n_missing: int
    max_abs_error: float
    t_max_error: float
    peaks: tuple = ()
    runtime_s: float = 0.0

    @property
    def peak_rel_errors(self) -> list[float]:
        return [p.rel_error for p in self.peaks]

    def as_dict(self) -> dict:
        return {
            "reference": self.reference, "target": self.target, "window": list(self.window),
            "n_points": self.n_points, "n_missing": self.n_missing,
            "max_abs_error": self.max_abs_error, "t_max_error": self.t_max_error,
            "peaks": [{"T": p.T, "reference": p.reference, "target": p.target, "rel_error": p.rel_error}
                      for p in self.peaks],
            "runtime_s": self.runtime_s,
        }


def compare(rows: Iterable[SweepRow], reference: str, target: str, window: Optional[tuple] = None,
            prominence: float = 0.25) -> ComparisonReport:
    """Compare ``target`` against ``reference`` on the T values both contain.

    Rows without an amplitude count as zero probability (the method has
    no trajectory there) and are tallied in ``n_missing``.
    """
    t0 = time.perf_counter()
    rows = list(rows)
    methods = {r.method for r in rows}
    for tag in (reference, target):
        if tag not in methods:
            raise ConfigError(f"method {tag!r} not present in rows")
    lo, hi = window if window is not None else (-math.inf, math.inf)
    ref = {r.T: r for r in rows if r.method == reference and lo <= r.T <= hi}
    tgt = {r.T: r for r in rows if r.method == target and lo <= r.T <= hi}
    Ts = sorted(set(ref) & set(tgt))
    if not Ts:
        raise WindowEmpty(f"no shared T values for {reference}/{target} in window {window}")
    pr = np.array([ref[t].prob if ref[t].prob is not None else 0.0 for t in Ts])
    pt = np.array([tgt[t].prob if tgt[t].prob is not None else 0.0 for t in Ts])
    missing = sum(1 for t in Ts if ref[t].prob is None or tgt[t].prob is None)
    err = np.abs(pr - pt)
    imax = int(np.argmax(err))
    peaks = []
    if len(Ts) >= 3 and pr.max() > 0:
        idx, props = find_peaks(pr, prominence=prominence * pr.max())
        for i, lb, rb in zip(idx, props["left_bases"], props["right_bases"]):
            peaks.append(PeakError(float(Ts[i]), float(pr[i]), float(pt[lb: rb + 1].max())))
    return ComparisonReport(
        reference, target, (float(Ts[0]), float(Ts[-1])), len(Ts), missing,
        float(err[imax]), float(Ts[imax]), tuple(peaks), time.perf_counter() - t0,
    )


def _fmt(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(r.T), r.method, _fmt(r.re_k), _fmt(r.im_k), _fmt(r.prob), r.n_contrib, ";".join(r.flags)])
    return buf.getvalue()


def rows_to_json(rows: Sequence[SweepRow]) -> str:
    return json.dumps([r.as_dict() for r in rows], indent=1) + "\n"


def rows_to_gnuplot(rows: Sequence[SweepRow]) -> str:
    """One data block per method with columns ``T prob``; blocks are gnuplot indices."""
    order = list(dict.fromkeys(r.method for r in rows))
    blocks = []
    for m in order:
        lines = [f"# method {m}", "# T prob"]
        for r in rows:
            if r.method == m:
                lines.append(f"{_fmt(r.T)} {_fmt(r.prob) if r.prob is not None else 'NaN'}")
        blocks.append("\n".join(lines))
    return "\n\n\n".join(blocks) + "\n"


def emit(obj, fmt: str = "csv", path=None) -> str:
    """Serialize rows (csv, json, gnuplot) or a report (json) and optionally write it."""
    if isinstance(obj, ComparisonReport):
        if fmt != "json":
            raise ConfigError("comparison reports are emitted as json")
        text = json.dumps(obj.as_dict(), indent=1) + "\n"
    else:
        rows = list(obj)
        if fmt == "csv":
            text = rows_to_csv(rows)
        elif fmt == "json":
            text = rows_to_json(rows)
        elif fmt == "gnuplot":
            text = rows_to_gnuplot(rows)
        else:
            raise ConfigError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def _opt_float(s):
    return None if s in ("", None) else float(s)


def _row_from_record(d: dict) -> SweepRow:
    flags = d.get("flags") or ""
    return SweepRow(
        float(d["T"]), str(d["method"]), _opt_float(d["re_k"]), _opt_float(d["im_k"]), _opt_float(d["prob"]),
        int(d["n_contrib"]), tuple(f for f in flags.split(";") if f),
    )


def parse_rows(text: str) -> list[SweepRow]:
    """Parse rows emitted as csv or json."""
    stripped = text.lstrip()
    if stripped.startswith("["):
        return [_row_from_record(d) for d in json.loads(text)]
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ConfigError(f"unexpected csv header {reader.fieldnames!r}")
    return [_row_from_record(d) for d in reader]


def read_rows(path) -> list[SweepRow]:
    return parse_rows(Path(path).read_text())
