"""Coherent-state propagator formulas.

Every method has the same skeleton

    K = sum_r  N / sqrt(M_vv) * exp{ i(S + I)/hbar + corrections }

with ``N = exp(-|z1|^2/2 - |z2|^2/2)``.  The complex method uses the
trajectory with ``u' = z1, v'' = conj(z2)`` and has no corrections.  The
six real-trajectory methods use real trajectories that satisfy only part
of the boundary conditions and add Gaussian correction terms built from
the tangent matrix.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import IntegratorOptions, SmoothedHamiltonian, TrajectoryRecord, _propagate, nearest_root
from .errors import CausticDivergence, NoRealTrajectory
from .phase import SQRT2, CoherentLabel, PhaseScale, TangentMatrix, as_label

logger = logging.getLogger(__name__)

METHODS = ("q1p1", "q2p2", "q1q2", "q1p2", "p1q2", "p1p2", "complex", "exact")
CAUSTIC_EPS = 1e-6
_DEN_EPS = 1e-12


@dataclass(frozen=True)
class PropagatorContribution:
    """One trajectory's term ``prefactor * exp(exponent)``."""

    trajectory: TrajectoryRecord
    prefactor: complex
    exponent: complex
    branch: int = 0

    @property
    def amplitude(self) -> complex:
        return self.prefactor * np.exp(self.exponent)


@dataclass(frozen=True)
class PropagatorResult:
    """Propagator value with its contributions.

    For trajectory methods ``amplitude`` is the sum of the contribution
    amplitudes; the ``exact`` method carries no contributions.
    """

    method: str
    amplitude: complex
    contributions: tuple = ()
    flags: tuple = ()

    @property
    def probability(self) -> float:
        return float(abs(self.amplitude) ** 2)

    @classmethod
    def from_contributions(cls, method: str, contributions: Sequence[PropagatorContribution],
                           flags: Sequence[str] = ()) -> "PropagatorResult":
        amp = complex(sum((c.amplitude for c in contributions), 0j))
        return cls(method, amp, tuple(contributions), tuple(flags))


@dataclass(frozen=True)
class SqrtBranchState:
    """Last ``M_vv`` and the square root chosen for it."""

    previous_mvv: complex = 1.0 + 0j
    previous_root: complex = 1.0 + 0j


def sqrt_branch(M_vv: complex, state: Optional[SqrtBranchState] = None,
                eps: float = CAUSTIC_EPS) -> tuple[complex, SqrtBranchState]:
    """Square root of ``M_vv`` continuous with the previously chosen root.

    A fresh state corresponds to ``M_vv = 1`` with root ``+1``.  Steps
    must be small enough that ``M_vv`` turns by well under ``pi`` between
    calls.
    """
    state = state or SqrtBranchState()
    M_vv = complex(M_vv)
    if abs(M_vv) < eps:
        raise CausticDivergence(f"|M_vv| = {abs(M_vv):.3g} below caustic threshold")
    root = complex(nearest_root(M_vv, state.previous_root))
    return root, SqrtBranchState(M_vv, root)


def sqrt_along(M_vv_path: Sequence[complex]) -> complex:
    """Root at the end of a path of ``M_vv`` values starting near 1."""
    state = SqrtBranchState()
    root = 1.0 + 0j
    for m in M_vv_path:
        root, state = sqrt_branch(m, state)
    return root


@dataclass(frozen=True)
class CoefficientSet:
    """Gaussian coefficients of one mixed method (A, B, C or D family)."""

    kind: str
    c1: complex
    c2: complex
    c12: complex

    def as_dict(self) -> dict:
        letter = {"q1q2": "A", "q1p2": "B", "p1q2": "C", "p1p2": "D"}[self.kind]
        return {f"{letter}1": self.c1, f"{letter}2": self.c2, f"{letter}12": self.c12}


def coefficients(kind: str, m: TangentMatrix) -> CoefficientSet:
    """Coefficients of the mixed formulas from the tangent matrix.

    The M1..M4 expressions are used when their denominator is safely
    nonzero.  Otherwise the equivalent forms in ``M_uv, M_vu, M_vv`` are
    used; these are identical for real symplectic ``m`` and stay finite
    when the shooting derivative vanishes.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        return _coefficients(kind, m)


def _coefficients(kind, m):
    M1, M2, M3, M4 = (np.asarray(x, dtype=complex) for x in (m.M1, m.M2, m.M3, m.M4))
    mc = _ct(m)
    hvu = mc["vu"] / (2 * mc["vv"])
    huv = mc["uv"] / (2 * mc["vv"])
    if kind == "q1q2":
        den = 1 - M1 * M2
        full = (1 - 0.5 * (1 - np.conj(M1) * M2) / den,
                1 - 0.5 * (1 - np.conj(M2) * M1) / den,
                2j * m.m_qp / den)
        red = (1 - hvu, 1 + huv, -1 / mc["vv"])
    elif kind == "q1p2":
        den = 1 + M2 * np.conj(M3)
        full = (1 - 0.5 * (1 - M2 * M3) / den,
                1 - 0.5 * (1 - np.conj(M2) * np.conj(M3)) / den,
                1j * m.m_pp / den)
        red = (1 - hvu, 1 - huv, 0.5j / mc["vv"])
    elif kind == "p1q2":
        den = 1 + M1 * np.conj(M4)
        full = (1 - 0.5 * (1 - np.conj(M1) * np.conj(M4)) / den,
                1 - 0.5 * (1 - M1 * M4) / den,
                1j * m.m_qq / den)
        red = (1 + hvu, 1 + huv, 0.5j / mc["vv"])
    elif kind == "p1p2":
        den = 1 - np.conj(M3) * np.conj(M4)
        full = (1 - 0.5 * (1 - M3 * np.conj(M4)) / den,
                1 - 0.5 * (1 - np.conj(M3) * M4) / den,
                1j * m.m_pq / den)
        red = (1 + hvu, 1 - huv, 0.5 / mc["vv"])
    else:
        raise ValueError(f"no coefficient set for kind {kind!r}")
    ok = np.abs(den) > _DEN_EPS
    vals = [np.where(ok, f, r) for f, r in zip(full, red)]
    vals = [v.item() if v.ndim == 0 else v for v in vals]
    return CoefficientSet(kind, *vals)


def _ct(m: TangentMatrix) -> dict:
    qq, qp, pq, pp = m.m_qq, m.m_qp, m.m_pq, m.m_pp
    return {
        "uv": 0.5 * (qq - pp + 1j * (pq + qp)),
        "vu": 0.5 * (qq - pp - 1j * (pq + qp)),
        "vv": 0.5 * (qq + pp + 1j * (qp - pq)),
    }


def _norm(l1: CoherentLabel, l2: CoherentLabel) -> complex:
    return np.exp(-0.5 * abs(l1.z) ** 2 - 0.5 * abs(l2.z) ** 2)


def _check_caustic(rec: TrajectoryRecord, eps: float):
    mvv = complex(rec.complex_tangent.M_vv)
    if abs(mvv) < eps:
        raise CausticDivergence(f"|M_vv| = {abs(mvv):.3g} at T={rec.T}")
    return mvv


def _base(rec: TrajectoryRecord, l1, l2, eps):
    _check_caustic(rec, eps)
    hbar = rec.scale.hbar
    pref = _norm(l1, l2) / complex(rec.sqrt_mvv)
    return pref, 1j * complex(rec.s_complex + rec.i_correction) / hbar


def k_complex(traj: TrajectoryRecord, z1, z2, scale: Optional[PhaseScale] = None,
              eps: float = CAUSTIC_EPS, branch: int = 0) -> PropagatorContribution:
    """Contribution of a complex trajectory with ``u'=z1, v''=conj(z2)``."""
    scale = scale or traj.scale
    l1, l2 = as_label(z1, scale), as_label(z2, scale)
    pref, expo = _base(traj, l1, l2, eps)
    return PropagatorContribution(traj, pref, expo, branch)


def leaving_contribution(rec: TrajectoryRecord, z1, z2, eps: float = CAUSTIC_EPS) -> PropagatorContribution:
    """Leaving-trajectory term; ``rec`` starts at the label of ``z1``."""
    l1, l2 = as_label(z1, rec.scale), as_label(z2, rec.scale)
    pref, expo = _base(rec, l1, l2, eps)
    mc = rec.complex_tangent
    d = complex(rec.v_end) - l2.z.conjugate()
    expo += -complex(rec.u_end) * d + 0.5 * complex(mc.M_uv / mc.M_vv) * d * d
    return PropagatorContribution(rec, pref, expo)


def arriving_contribution(rec: TrajectoryRecord, z1, z2, eps: float = CAUSTIC_EPS) -> PropagatorContribution:
    """Arriving-trajectory term; ``rec`` ends at the label of ``z2``."""
    l1, l2 = as_label(z1, rec.scale), as_label(z2, rec.scale)
    pref, expo = _base(rec, l1, l2, eps)
    mc = rec.complex_tangent
    a = complex(rec.u_start) - l1.z
    expo += -complex(rec.v_start) * a - 0.5 * complex(mc.M_vu / mc.M_vv) * a * a
    return PropagatorContribution(rec, pref, expo)


def k_q1p1(H: SmoothedHamiltonian, z1, z2, T: float, scale: Optional[PhaseScale] = None,
           opts: Optional[IntegratorOptions] = None, eps: float = CAUSTIC_EPS) -> PropagatorResult:
    """Propagator from the real trajectory leaving ``(q1, p1)``."""
    scale = _scale(H, scale)
    l1 = as_label(z1, scale)
    rec = _propagate(H, l1.q, l1.p, T, opts)
    return PropagatorResult.from_contributions("q1p1", [leaving_contribution(rec, l1, z2, eps)])


def k_q2p2(H: SmoothedHamiltonian, z1, z2, T: float, scale: Optional[PhaseScale] = None,
           opts: Optional[IntegratorOptions] = None, eps: float = CAUSTIC_EPS) -> PropagatorResult:
    """Propagator from the real trajectory arriving at ``(q2, p2)``."""
    from .solvers import solve_final

    scale = _scale(H, scale)
    l2 = as_label(z2, scale)
    rec = solve_final(H, l2.q, l2.p, T, opts)
    return PropagatorResult.from_contributions("q2p2", [arriving_contribution(rec, z1, l2, eps)])


def mixed_contribution(kind: str, rec: TrajectoryRecord, z1, z2, eps: float = CAUSTIC_EPS,
                       branch: int = 0) -> PropagatorContribution:
    """Term of a mixed method for a trajectory obeying its boundary conditions."""
    s = rec.scale
    b, c, hbar = s.b, s.c, s.hbar
    l1, l2 = as_label(z1, s), as_label(z2, s)
    pref, expo = _base(rec, l1, l2, eps)
    cs = coefficients(kind, rec.tangent)
    c1, c2, c12 = complex(cs.c1), complex(cs.c2), complex(cs.c12)
    z1c, z2 = l1.z.conjugate(), l2.z
    dpi = float(np.real(rec.p_start)) - l1.p
    dqi = float(np.real(rec.q_start)) - l1.q
    dpf = float(np.real(rec.p_end)) - l2.p
    dqf = float(np.real(rec.q_end)) - l2.q
    if kind == "q1q2":
        expo += (1j * z2 * dpf - 1j * z1c * dpi) / (SQRT2 * c)
        expo += -(c1 * dpi ** 2 + c2 * dpf ** 2 + c12 * dpi * dpf) / (2 * c * c)
    elif kind == "q1p2":
        expo += -z2 * dqf / (SQRT2 * b) - 1j * z1c * dpi / (SQRT2 * c)
        expo += -c1 * dpi ** 2 / (2 * c * c) - c2 * dqf ** 2 / (2 * b * b) + c12 * dpi * dqf / hbar
    elif kind == "p1q2":
        expo += 1j * z2 * dpf / (SQRT2 * c) - z1c * dqi / (SQRT2 * b)
        expo += -c1 * dqi ** 2 / (2 * b * b) - c2 * dpf ** 2 / (2 * c * c) - c12 * dqi * dpf / hbar
    elif kind == "p1p2":
        expo += -z1c * dqi / (SQRT2 * b) - z2 * dqf / (SQRT2 * b)
        expo += -(c1 * dqi ** 2 + c2 * dqf ** 2) / (2 * b * b) + c12 * dqi * dqf / (b * b)
    else:
        raise ValueError(f"unknown mixed kind {kind!r}")
    return PropagatorContribution(rec, pref, expo, branch)


def _scale(H, scale):
    if scale is not None and scale != H.scale:
        raise ValueError("scale does not match the Hamiltonian's scale")
    return H.scale


def _mixed_records(kind, H, z1, z2, T, roots, opts, window):
    from .solvers import BoundarySpec, ScanWindow, mixed_record, solve_mixed_records

    spec = BoundarySpec.from_labels(kind, z1, z2, T, H.scale)
    if roots is None:
        window = window or ScanWindow.around(kind, z1, H.scale)
        roots, recs = solve_mixed_records(H, spec, window, opts)
    else:
        recs = [mixed_record(H, spec, r, opts) for r in roots]
    if not recs:
        raise NoRealTrajectory(f"no real {kind} trajectory at T={T}")
    return recs


def _summed(kind, H, z1, z2, T, scale, roots, opts, window, eps):
    _scale(H, scale)
    contribs, flags = [], []
    for i, rec in enumerate(_mixed_records(kind, H, z1, z2, T, roots, opts, window)):
        try:
            contribs.append(mixed_contribution(kind, rec, z1, z2, eps, branch=i))
        except CausticDivergence as exc:
            logger.warning("excluding caustic %s contribution %d: %s", kind, i, exc)
            flags.append("caustic")
    return PropagatorResult.from_contributions(kind, contribs, sorted(set(flags)))


def _separate(kind, H, z1, z2, T, scale, roots, opts, window, eps):
    _scale(H, scale)
    out = []
    for i, rec in enumerate(_mixed_records(kind, H, z1, z2, T, roots, opts, window)):
        try:
            out.append(PropagatorResult.from_contributions(
                kind, [mixed_contribution(kind, rec, z1, z2, eps, branch=i)]))
        except CausticDivergence as exc:
            logger.warning("caustic %s contribution %d: %s", kind, i, exc)
            out.append(PropagatorResult(kind, 0j, (), ("caustic",)))
    return out


def k_q1q2(H, z1, z2, T, scale=None, roots=None, opts=None, window=None, eps=CAUSTIC_EPS) -> PropagatorResult:
    """Coherent sum over real trajectories from ``q1`` to ``q2``.

    ``roots`` are initial momenta; when omitted they are found in the
    default scan window around ``p1``.
    """
    return _summed("q1q2", H, z1, z2, T, scale, roots, opts, window, eps)


def k_p1p2(H, z1, z2, T, scale=None, roots=None, opts=None, window=None, eps=CAUSTIC_EPS) -> PropagatorResult:
    """Coherent sum over real trajectories from ``p1`` to ``p2`` (roots are initial positions)."""
    return _summed("p1p2", H, z1, z2, T, scale, roots, opts, window, eps)


def k_q1p2(H, z1, z2, T, scale=None, roots=None, opts=None, window=None, eps=CAUSTIC_EPS) -> list[PropagatorResult]:
    """One result per real trajectory from ``q1`` to ``p2``; these are not to be added."""
    return _separate("q1p2", H, z1, z2, T, scale, roots, opts, window, eps)


def k_p1q2(H, z1, z2, T, scale=None, roots=None, opts=None, window=None, eps=CAUSTIC_EPS) -> list[PropagatorResult]:
    """One result per real trajectory from ``p1`` to ``q2``; these are not to be added."""
    return _separate("p1q2", H, z1, z2, T, scale, roots, opts, window, eps)
