"""Boundary-value solvers for real and complex trajectories.

Real mixed problems fix one component at ``t=0`` and one at ``t=T`` and
shoot on the other initial component.  Roots are bracketed on a grid and
refined by a safeguarded Newton iteration whose derivative comes from the
tangent matrix.  Roots are tracked over ``T`` by predictor-corrector
continuation.  The complex problem ``u(0)=z1, v(T)=conj(z2)`` is solved
by damped Newton in ``v'``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import IntegratorOptions, SmoothedHamiltonian, TrajectoryRecord, _propagate
from .errors import IntegratorFailure, NewtonDivergence
from .phase import SQRT2, ComplexPhasePoint, PhaseScale, as_label
from .propagators import SqrtBranchState, sqrt_branch

logger = logging.getLogger(__name__)

MIXED_KINDS = ("q1q2", "q1p2", "p1q2", "p1p2")
KINDS = MIXED_KINDS + ("initial", "final")


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary conditions of a real trajectory.

    ``first`` is the fixed component at ``t=0`` and ``second`` the fixed
    component at ``t=T``; for ``q1p2`` they are ``q1`` and ``p2``.  For
    ``initial`` and ``final`` they are the full point ``(q, p)``.
    """

    kind: str
    first: float
    second: float
    T: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}")

    @property
    def unknown(self) -> str:
        """Initial component solved for: ``"p"`` or ``"q"``."""
        return "p" if self.kind.startswith("q") else "q"

    @property
    def target(self) -> str:
        """Final component that is constrained."""
        return self.kind[-2]

    @classmethod
    def from_labels(cls, kind: str, z1, z2, T: float, scale: PhaseScale) -> "BoundarySpec":
        l1, l2 = as_label(z1, scale), as_label(z2, scale)
        if kind == "initial":
            return cls(kind, l1.q, l1.p, T)
        if kind == "final":
            return cls(kind, l2.q, l2.p, T)
        first = l1.q if kind[0] == "q" else l1.p
        second = l2.q if kind[2] == "q" else l2.p
        return cls(kind, first, second, T)

    def with_T(self, T: float) -> "BoundarySpec":
        return BoundarySpec(self.kind, self.first, self.second, T)


@dataclass(frozen=True)
class ScanWindow:
    """Scan interval ``center +- half_width * unit`` sampled at ``n`` points.

    ``unit`` is the coherent-state uncertainty of the scanned component,
    ``b/sqrt(2)`` or ``c/sqrt(2)``.
    """

    center: float
    half_width: float = 4.0
    n: int = 512
    unit: float = 1 / SQRT2

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if self.n < 16:
            raise ValueError("scan windows need at least 16 points")

    @property
    def bounds(self) -> tuple[float, float]:
        w = self.half_width * self.unit
        return self.center - w, self.center + w

    def grid(self) -> np.ndarray:
        lo, hi = self.bounds
        return np.linspace(lo, hi, self.n)

    @classmethod
    def around(cls, kind: str, z1, scale: PhaseScale, half_width: float = 4.0, n: int = 512) -> "ScanWindow":
        """Default window for ``kind``, centered on the initial label's unknown component."""
        l1 = as_label(z1, scale)
        if kind[0] == "q":
            return cls(l1.p, half_width, n, scale.dp)
        return cls(l1.q, half_width, n, scale.dq)


def _start_point(spec: BoundarySpec, x):
    if spec.unknown == "p":
        return spec.first + 0.0 * x, x
    return x, spec.first + 0.0 * x


def _shoot(H: SmoothedHamiltonian, spec: BoundarySpec, x, opts: IntegratorOptions):
    """Residual, its derivative in the unknown, and the trajectory record."""
    q0, p0 = _start_point(spec, np.asarray(x, dtype=float))
    rec = _propagate(H, q0, p0, spec.T, opts)
    s, m = H.scale, rec.tangent
    rb = s.b / s.c
    if spec.target == "q":
        res = rec.q_end - spec.second
        der = m.m_qp * rb if spec.unknown == "p" else m.m_qq
    else:
        res = rec.p_end - spec.second
        der = m.m_pp if spec.unknown == "p" else m.m_pq / rb
    return np.real(res), np.real(der), rec


def _residual_scale(H, spec):
    return H.scale.b if spec.target == "q" else H.scale.c


def solve_final(H: SmoothedHamiltonian, q2: float, p2: float, T: float,
                opts: Optional[IntegratorOptions] = None, tol: float = 1e-8) -> TrajectoryRecord:
    """Real trajectory arriving at ``(q2, p2)`` after time ``T``.

    Integrates backward to the starting point, then forward to build the
    record; raises IntegratorFailure if the endpoint misses by more than
    ``tol`` in scaled units.
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    opts = opts or IntegratorOptions()
    back = _propagate(H, q2, p2, -T, opts)
    rec = _propagate(H, np.real(back.q_end), np.real(back.p_end), T, opts)
    err = max(abs(rec.q_end - q2) / H.scale.b, abs(rec.p_end - p2) / H.scale.c)
    if not err < tol * max(1.0, abs(q2) / H.scale.b, abs(p2) / H.scale.c):
        raise IntegratorFailure(f"final-point mismatch {err:.3g} after forward re-integration")
    return rec


def _refine(H, spec, lo, hi, rlo, opts, tol, max_iter=100):
    """Batched safeguarded Newton on brackets ``[lo, hi]`` with sign change.

    Returns the converged roots and the batched record evaluated there.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    rlo = np.array(rlo, dtype=float)
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        r, d, rec = _shoot(H, spec, x, opts)
        done = np.abs(r) < tol
        if np.all(done):
            break
        same = np.sign(r) == np.sign(rlo)
        lo = np.where(same & ~done, x, lo)
        rlo = np.where(same & ~done, r, rlo)
        hi = np.where(~same & ~done, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - r / d
        bad = ~np.isfinite(xn) | (xn <= np.minimum(lo, hi)) | (xn >= np.maximum(lo, hi))
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        stalled = np.abs(hi - lo) < 1e-15 * np.maximum(1.0, np.abs(x))
        x = np.where(done | stalled, x, xn)
        if np.all(done | stalled):
            r, d, rec = _shoot(H, spec, x, opts)
            break
    ok = np.abs(r) < 1e3 * tol
    if not np.all(ok):
        logger.warning("root refinement stalled for %d bracket(s)", int(np.sum(~ok)))
    idx = np.flatnonzero(ok)
    return x[idx], [rec.select(i) for i in idx]


def _solve_mixed(H, spec, window, opts, tol):
    if spec.kind not in MIXED_KINDS:
        raise ValueError(f"solve_mixed needs a mixed kind, got {spec.kind!r}")
    if not spec.T > 0:
        raise ValueError("solve_mixed needs T > 0")
    opts = opts or IntegratorOptions()
    grid = window.grid()
    r, _, rec = _shoot(H, spec, grid, opts)
    rtol = tol * _residual_scale(H, spec)
    exact = np.flatnonzero(r == 0)
    change = np.flatnonzero(r[:-1] * r[1:] < 0)
    roots = list(grid[exact])
    recs = [rec.select(i) for i in exact]
    if change.size:
        xs, rs = _refine(H, spec, grid[change], grid[change + 1], r[change], opts, rtol)
        roots.extend(xs)
        recs.extend(rs)
    order = np.argsort(roots, kind="stable")
    out_x, out_r = [], []
    for i in order:
        x = float(roots[i])
        if out_x and abs(x - out_x[-1]) <= 1e-12 * max(1.0, abs(x)):
            continue
        out_x.append(x)
        out_r.append(recs[i])
    return out_x, out_r


def solve_mixed(H: SmoothedHamiltonian, spec: BoundarySpec, window: ScanWindow,
                opts: Optional[IntegratorOptions] = None, tol: float = 1e-10) -> list[float]:
    """All real roots of a mixed boundary problem inside ``window``.

    Returns the unknown initial component (``p_i`` for q-start kinds,
    ``q_i`` for p-start kinds), sorted.  An empty list means no real
    trajectory; callers decide whether that is an error.
    """
    return _solve_mixed(H, spec, window, opts, tol)[0]


def solve_mixed_records(H: SmoothedHamiltonian, spec: BoundarySpec, window: ScanWindow,
                        opts: Optional[IntegratorOptions] = None,
                        tol: float = 1e-10) -> tuple[list[float], list[TrajectoryRecord]]:
    """Like :func:`solve_mixed`, also returning the trajectory of each root."""
    return _solve_mixed(H, spec, window, opts, tol)


def mixed_record(H: SmoothedHamiltonian, spec: BoundarySpec, root: float,
                 opts: Optional[IntegratorOptions] = None) -> TrajectoryRecord:
    """Trajectory for a solved mixed problem."""
    q0, p0 = _start_point(spec, float(root))
    return _propagate(H, float(q0), float(p0), spec.T, opts)


@dataclass(frozen=True)
class BranchPoint:
    T: float
    root: float
    record: TrajectoryRecord
    sqrt_state: SqrtBranchState


@dataclass
class BranchTrace:
    """A root of a mixed problem followed continuously in ``T``."""

    kind: str
    points: list[BranchPoint] = field(default_factory=list)
    alive: bool = True
    died_at: Optional[float] = None

    @property
    def times(self) -> np.ndarray:
        return np.array([pt.T for pt in self.points])

    @property
    def roots(self) -> np.ndarray:
        return np.array([pt.root for pt in self.points])


def _newton_scalar(H, spec, x0, opts, tol, max_iter=30):
    x = float(x0)
    for _ in range(max_iter):
        r, d, rec = _shoot(H, spec, x, opts)
        if abs(r) < tol:
            return x, float(d), rec
        if d == 0 or not np.isfinite(d):
            return None
        x = x - float(r) / float(d)
        if not np.isfinite(x):
            return None
    return None


def continue_branch(H: SmoothedHamiltonian, spec: BoundarySpec, seed: float, T_grid: Sequence[float],
                    opts: Optional[IntegratorOptions] = None, tol: float = 1e-10,
                    max_jump: Optional[float] = None, fold_tol: float = 1e-6) -> BranchTrace:
    """Follow the root ``seed`` (valid at ``spec.T``) across ``T_grid``.

    The grid is walked in the given order.  Each step uses a secant
    predictor and a Newton corrector.  The branch dies when Newton fails,
    the root jumps by more than ``max_jump`` (default: four uncertainties)
    from the prediction, or the shooting derivative nearly vanishes,
    which signals a fold where two roots collide.
    """
    opts = opts or IntegratorOptions()
    unit = H.scale.dp if spec.unknown == "p" else H.scale.dq
    max_jump = 4 * unit if max_jump is None else max_jump
    rtol = tol * _residual_scale(H, spec)
    trace = BranchTrace(spec.kind)
    state = SqrtBranchState()

    found = _newton_scalar(H, spec, seed, opts, rtol)
    if found is None:
        trace.alive, trace.died_at = False, spec.T
        return trace
    prev = [(spec.T, found[0])]
    for T in T_grid:
        if len(prev) >= 2:
            (t0, x0), (t1, x1) = prev[-2], prev[-1]
            guess = x1 + (x1 - x0) * (T - t1) / (t1 - t0) if t1 != t0 else x1
        else:
            guess = prev[-1][1]
        sol = _newton_scalar(H, spec.with_T(T), guess, opts, rtol)
        dead = sol is None
        if not dead:
            x, d, rec = sol
            dead = abs(x - guess) > max_jump or abs(d) < fold_tol
        if dead:
            trace.alive, trace.died_at = False, float(T)
            break
        root, state = sqrt_branch(rec.complex_tangent.M_vv, state)
        trace.points.append(BranchPoint(float(T), float(x), rec, state))
        prev.append((T, x))
    return trace


def complex_start(z1, v0, scale: PhaseScale) -> ComplexPhasePoint:
    return ComplexPhasePoint.from_uv(complex(z1), complex(v0), scale)


def _complex_newton(H, z1, z2, T, seed_v, opts, tol=1e-10, max_iter=50):
    scale = H.scale
    target = as_label(z2, scale).z.conjugate()
    z1 = as_label(z1, scale).z

    def evaluate(v):
        pt = complex_start(z1, v, scale)
        with np.errstate(all="ignore"):
            rec = _propagate(H, complex(pt.q), complex(pt.p), T, opts)
            r = complex(rec.v_end) - target
        if not (np.isfinite(r) and np.isfinite(complex(rec.sqrt_mvv))):
            raise IntegratorFailure("non-finite complex trajectory")
        return rec, r

    v = complex(seed_v)
    try:
        rec, r = evaluate(v)
    except IntegratorFailure as exc:
        raise NewtonDivergence(str(exc)) from exc
    for it in range(max_iter):
        if not np.isfinite(r):
            raise NewtonDivergence("non-finite residual")
        if abs(r) < tol * max(1.0, abs(target)):
            return v, rec, it
        mvv = complex(rec.complex_tangent.M_vv)
        if mvv == 0:
            raise NewtonDivergence("singular Newton derivative (M_vv = 0)")
        step = r / mvv
        lam = 1.0
        while True:
            try:
                rec_n, r_n = evaluate(v - lam * step)
            except IntegratorFailure:
                r_n = np.inf
            if np.isfinite(r_n) and abs(r_n) < abs(r):
                break
            lam *= 0.5
            if lam < 1e-10:
                raise NewtonDivergence("step underflow in damped Newton")
        v, rec, r = v - lam * step, rec_n, r_n
    raise NewtonDivergence(f"no convergence after {max_iter} iterations (|r|={abs(r):.3g})")


def solve_complex(H: SmoothedHamiltonian, z1, z2, T: float, seed_v,
                  opts: Optional[IntegratorOptions] = None, tol: float = 1e-10,
                  max_iter: int = 50) -> ComplexPhasePoint:
    """Initial point with ``u' = z1`` whose flow ends at ``v'' = conj(z2)``."""
    rec = complex_trajectory(H, z1, z2, T, seed_v, opts, tol, max_iter)
    return complex_start(as_label(z1, H.scale).z, rec.v_start, H.scale)


def complex_trajectory(H: SmoothedHamiltonian, z1, z2, T: float, seed_v,
                       opts: Optional[IntegratorOptions] = None, tol: float = 1e-10,
                       max_iter: int = 50) -> TrajectoryRecord:
    """Record of the complex trajectory found by :func:`solve_complex`."""
    if not H.complex_ok:
        raise NewtonDivergence(f"{type(H).__name__} cannot be evaluated at complex arguments")
    opts = opts or IntegratorOptions()
    _, rec, _ = _complex_newton(H, z1, z2, T, seed_v, opts, tol, max_iter)
    return rec


@dataclass
class ComplexBranch:
    """A complex trajectory followed over the ``T`` grid."""

    index: int
    born: float
    records: dict = field(default_factory=dict)
    alive: bool = True
    died_at: Optional[float] = None

    def v_at(self, T):
        return complex(self.records[T].v_start)


def _continue_complex(H, z1, z2, T_from, v_from, T_to, v_prev, opts, tol, depth=0, max_depth=6):
    """Newton at ``T_to`` with a secant predictor, bisecting the step on failure."""
    if v_prev is not None:
        T_p, v_p = v_prev
        guess = v_from + (v_from - v_p) * (T_to - T_from) / (T_from - T_p) if T_from != T_p else v_from
    else:
        guess = v_from
    try:
        v, rec, _ = _complex_newton(H, z1, z2, T_to, guess, opts, tol, max_iter=30)
        jump = abs(v - guess)
        if jump < 0.5 * (1 + abs(v_from - (v_p if v_prev else v_from))) + 1e-3 * (1 + abs(v)) or depth >= max_depth:
            return v, rec
    except NewtonDivergence:
        if depth >= max_depth:
            raise
    T_mid = 0.5 * (T_from + T_to)
    v_mid, _ = _continue_complex(H, z1, z2, T_from, v_from, T_mid, v_prev, opts, tol, depth + 1, max_depth)
    return _continue_complex(H, z1, z2, T_mid, v_mid, T_to, (T_from, v_from), opts, tol, depth + 1, max_depth)


def track_complex_branches(H: SmoothedHamiltonian, z1, z2, T_grid: Sequence[float],
                           opts: Optional[IntegratorOptions] = None, tol: float = 1e-10,
                           seed_from_real: bool = True, window: Optional[ScanWindow] = None,
                           seed_radius: float = 1.0, lead_in: int = 16) -> list[ComplexBranch]:
    """Follow every complex trajectory reachable from the available seeds.

    Branch 0 starts at ``T=0`` with ``v' = conj(z2)``.  When
    ``seed_from_real`` is set, real q1 -> q2 trajectories that nearly
    satisfy the full boundary conditions (``|p_i - p1|`` and ``|p_f - p2|``
    within ``seed_radius`` momentum uncertainties) seed Newton with
    ``v' = (q1/b - i p_i/c)/sqrt(2)``.  These are the nearly real
    branches.  A converged point not matching a known branch starts a new
    branch, which is continued both forward and backward over the grid.
    The grid must be strictly increasing.
    """
    opts = opts or IntegratorOptions()
    scale = H.scale
    grid = [float(t) for t in T_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("T grid must be strictly increasing")
    l1, l2 = as_label(z1, scale), as_label(z2, scale)
    z1c, z2c = l1.z, l2.z
    branches: list[ComplexBranch] = []
    found: dict[float, list] = {T: [] for T in grid}
    last: dict[int, tuple] = {}

    def known(T, v):
        return any(abs(v - c) <= 1e-7 * (1 + abs(c)) for c in found[T])

    def add(br, T, v, rec):
        br.records[T] = rec
        found[T].append(v)

    # lead-in from T=0 for the principal branch
    v, hist, T_prev, ok = z2c.conjugate(), None, 0.0, True
    for t in np.linspace(0.0, grid[0], lead_in + 1)[1:]:
        try:
            v_new, _ = _continue_complex(H, z1c, z2c, T_prev, v, t, hist, opts, tol)
        except NewtonDivergence:
            ok = False
            break
        hist, v, T_prev = (T_prev, v), v_new, t
    if ok:
        branches.append(ComplexBranch(0, 0.0))
        last[0] = (T_prev, v, hist)

    window = window or ScanWindow.around("q1q2", l1, scale)
    radius = seed_radius * scale.dp
    for j, T in enumerate(grid):
        for br in branches:
            if not br.alive:
                continue
            T_from, v_from, hist = last[br.index]
            try:
                if T_from == T:
                    v_new, rec, _ = _complex_newton(H, z1c, z2c, T, v_from, opts, tol)
                else:
                    v_new, rec = _continue_complex(H, z1c, z2c, T_from, v_from, T, hist, opts, tol)
            except NewtonDivergence:
                br.alive, br.died_at = False, T
                continue
            if known(T, v_new):
                br.alive, br.died_at = False, T
                continue
            add(br, T, v_new, rec)
            last[br.index] = (T, v_new, (T_from, v_from))
        if not seed_from_real:
            continue
        spec = BoundarySpec("q1q2", l1.q, l2.q, T)
        try:
            roots, recs = solve_mixed_records(H, spec, window, opts)
        except IntegratorFailure:
            roots, recs = [], []
        for p_i, rr in zip(roots, recs):
            if abs(p_i - l1.p) > radius or abs(float(np.real(rr.p_end)) - l2.p) > radius:
                continue
            try:
                v_new, rec, _ = _complex_newton(H, z1c, z2c, T, scale.v(l1.q, p_i), opts, tol)
            except NewtonDivergence:
                continue
            if known(T, v_new):
                continue
            br = ComplexBranch(len(branches), T)
            add(br, T, v_new, rec)
            branches.append(br)
            last[br.index] = (T, v_new, None)
            # backfill earlier grid points
            T_from, v_from, hist = T, v_new, None
            for T_back in reversed(grid[:j]):
                try:
                    v_b, rec_b = _continue_complex(H, z1c, z2c, T_from, v_from, T_back, hist, opts, tol)
                except NewtonDivergence:
                    break
                if known(T_back, v_b):
                    break
                add(br, T_back, v_b, rec_b)
                hist, T_from, v_from = (T_from, v_from), T_back, v_b
            br.born = min(br.records)
    return branches
