"""Smoothed Hamiltonians and the trajectory integrator.

A trajectory carries, besides its endpoints, the tangent matrix in the
scaled coordinates ``(q/b, p/c)``, the Hamilton action ``S_H``, the
correction integral ``I`` and a continuously tracked ``sqrt(M_vv)``.
Complex initial conditions are integrated with the same equations.
"""
from __future__ import annotations

import abc
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import IntegratorFailure
from .phase import DEFAULT_SCALE, ComplexTangent, PhaseScale, TangentMatrix, complex_tangent

logger = logging.getLogger(__name__)


class SmoothedHamiltonian(abc.ABC):
    """Interface for ``H(q, p) = <z|H|z>`` with derivatives.

    All methods must accept numpy arrays and, if ``complex_ok`` is true,
    complex arguments.
    """

    scale: PhaseScale = DEFAULT_SCALE
    complex_ok: bool = False

    @abc.abstractmethod
    def value(self, q, p):
        ...

    @abc.abstractmethod
    def gradient(self, q, p):
        """Return ``(dH/dq, dH/dp)``."""

    @abc.abstractmethod
    def hessian(self, q, p):
        """Return ``(H_qq, H_qp, H_pp)``."""

    def derivatives(self, q, p):
        """Return ``(H, H_q, H_p, H_qq, H_qp, H_pp)`` in one call; override for speed."""
        hq, hp = self.gradient(q, p)
        hqq, hqp, hpp = self.hessian(q, p)
        return self.value(q, p), hq, hp, hqq, hqp, hpp

    def exact_flow(self, q0, p0, T) -> Optional["TrajectoryRecord"]:
        """Closed-form trajectory, or None when the model has none."""
        return None

    def frequency_estimate(self, q, p) -> float:
        """Largest local oscillation frequency, from the scaled Hessian."""
        hqq, hqp, hpp = self.hessian(q, p)
        w2 = np.abs(hqq * hpp - hqp * hqp)
        return float(np.sqrt(np.max(w2)))


@dataclass(frozen=True)
class IntegratorOptions:
    """Integrator settings.

    ``method`` is ``"rk4"`` (always integrate), ``"exact"`` (require a
    closed-form flow) or ``"auto"`` (closed form when the model has one).
    """

    dt: Optional[float] = None
    method: str = "rk4"
    tol: float = 1e-9
    steps_per_period: int = 2000
    min_steps: int = 64

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.method not in ("rk4", "exact", "auto"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if self.steps_per_period < 1 or self.min_steps < 1:
            raise ValueError("step counts must be positive")


@dataclass(frozen=True)
class TrajectoryRecord:
    """One (possibly complex, possibly batched) trajectory of duration ``T``.

    ``s_complex`` is derived from the stored fields on access so that the
    boundary term always uses the current endpoints.
    """

    q_start: complex
    p_start: complex
    q_end: complex
    p_end: complex
    T: float
    tangent: TangentMatrix
    s_hamilton: complex
    i_correction: complex
    sqrt_mvv: complex
    energy_start: complex = np.nan
    energy_end: complex = np.nan
    scale: PhaseScale = field(default=DEFAULT_SCALE)

    @property
    def u_start(self):
        return self.scale.u(self.q_start, self.p_start)

    @property
    def v_start(self):
        return self.scale.v(self.q_start, self.p_start)

    @property
    def u_end(self):
        return self.scale.u(self.q_end, self.p_end)

    @property
    def v_end(self):
        return self.scale.v(self.q_end, self.p_end)

    @property
    def complex_tangent(self) -> ComplexTangent:
        return complex_tangent(self.tangent)

    @property
    def s_complex(self):
        return complex_action(
            self.s_hamilton, self.q_start, self.p_start, self.q_end, self.p_end, self.scale
        )

    @property
    def energy_drift(self):
        return np.abs(self.energy_end - self.energy_start)

    def select(self, idx) -> "TrajectoryRecord":
        """Pick entries of a batched record."""
        def pick(x):
            return x[idx] if np.ndim(x) else x

        m = self.tangent
        return replace(
            self,
            q_start=pick(self.q_start),
            p_start=pick(self.p_start),
            q_end=pick(self.q_end),
            p_end=pick(self.p_end),
            tangent=TangentMatrix(pick(m.m_qq), pick(m.m_qp), pick(m.m_pq), pick(m.m_pp)),
            s_hamilton=pick(self.s_hamilton),
            i_correction=pick(self.i_correction),
            sqrt_mvv=pick(self.sqrt_mvv),
            energy_start=pick(self.energy_start),
            energy_end=pick(self.energy_end),
        )


def complex_action(s_hamilton, q0, p0, q1, p1, scale: PhaseScale = DEFAULT_SCALE):
    """Complex action from the Hamilton action and the endpoint boundary terms.

    ``S = S_H + (q'p' - q''p'')/2 - (i hbar/2)(u'v' + u''v'')``; at ``T=0``
    this reduces to ``-i hbar |z|^2``, the value needed to reproduce the
    coherent-state overlap.
    """
    uv0 = scale.u(q0, p0) * scale.v(q0, p0)
    uv1 = scale.u(q1, p1) * scale.v(q1, p1)
    return s_hamilton + 0.5 * (q0 * p0 - q1 * p1) - 0.5j * scale.hbar * (uv0 + uv1)


def i_integrand(H: SmoothedHamiltonian, q, p, scale: Optional[PhaseScale] = None):
    """Rate of the correction integral, ``(b^2 H_qq + c^2 H_pp)/4``."""
    scale = scale or H.scale
    hqq, _, hpp = H.hessian(q, p)
    return 0.25 * (scale.b ** 2 * hqq + scale.c ** 2 * hpp)


def nearest_root(z, previous):
    """Square root of ``z`` closest to ``previous`` (elementwise)."""
    r = np.sqrt(np.asarray(z, dtype=complex))
    flip = np.abs(r - previous) > np.abs(r + previous)
    return np.where(flip, -r, r)


def _rhs(H, scale, y):
    q, p, a, bq, cq, d = y[0], y[1], y[2], y[3], y[4], y[5]
    h, hq, hp, hqq, hqp, hpp = H.derivatives(q, p)
    rb = scale.c / scale.b
    # J = [[H_qp, H_pp c/b], [-H_qq b/c, -H_qp]] in scaled coordinates
    j11, j12, j21, j22 = hqp, hpp * rb, -hqq / rb, -hqp
    out = np.empty_like(y)
    out[0] = hp
    out[1] = -hq
    out[2] = j11 * a + j12 * cq
    out[3] = j11 * bq + j12 * d
    out[4] = j21 * a + j22 * cq
    out[5] = j21 * bq + j22 * d
    out[6] = p * hp - h
    out[7] = 0.25 * (scale.b ** 2 * hqq + scale.c ** 2 * hpp)
    return out


def _step_count(H, q0, p0, T, opts: IntegratorOptions) -> int:
    if T == 0:
        return 0
    if opts.dt is not None:
        n = int(np.ceil(abs(T) / opts.dt))
    else:
        w = H.frequency_estimate(q0, p0)
        if w > 0:
            n = int(np.ceil(abs(T) * w / (2 * np.pi) * opts.steps_per_period))
        else:
            n = opts.steps_per_period
    return max(n, opts.min_steps)


def _integrate(H, q0, p0, T, opts: IntegratorOptions, scale: PhaseScale) -> TrajectoryRecord:
    """Fixed-step RK4 on state, tangent and action integrals; ``T`` may be negative."""
    q0 = np.asarray(q0)
    p0 = np.asarray(p0)
    q0, p0 = np.broadcast_arrays(q0, p0)
    dtype = complex if (np.iscomplexobj(q0) or np.iscomplexobj(p0)) else float
    shape = q0.shape
    y = np.zeros((8,) + shape, dtype=dtype)
    y[0], y[1] = q0, p0
    y[2] = y[5] = 1.0
    # arg(M_vv) is accumulated step by step so sqrt(M_vv) stays continuous in t
    mvv_prev = np.ones(shape, dtype=complex)
    arg = np.zeros(shape)

    n = _step_count(H, q0, p0, T, opts)
    h = T / n if n else 0.0
    # overflow is reported below as IntegratorFailure
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(n):
            k1 = _rhs(H, scale, y)
            k2 = _rhs(H, scale, y + 0.5 * h * k1)
            k3 = _rhs(H, scale, y + 0.5 * h * k2)
            k4 = _rhs(H, scale, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            mvv = 0.5 * (y[2] + y[5] + 1j * (y[3] - y[4]))
            arg += np.angle(mvv / mvv_prev)
            mvv_prev = mvv
    root = np.sqrt(np.abs(mvv_prev)) * np.exp(0.5j * arg)
    if not np.all(np.isfinite(y)):
        raise IntegratorFailure(f"non-finite state after integrating to T={T}")

    tangent = TangentMatrix(y[2], y[3], y[4], y[5])
    rec = TrajectoryRecord(
        q_start=_scalar(q0),
        p_start=_scalar(p0),
        q_end=_scalar(y[0]),
        p_end=_scalar(y[1]),
        T=T,
        tangent=_scalar_tangent(tangent),
        s_hamilton=_scalar(y[6]),
        i_correction=_scalar(y[7]),
        sqrt_mvv=_scalar(root),
        energy_start=_scalar(H.value(q0, p0)),
        energy_end=_scalar(H.value(y[0], y[1])),
        scale=scale,
    )
    return rec


def _scalar(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def _scalar_tangent(m: TangentMatrix) -> TangentMatrix:
    return TangentMatrix(_scalar(m.m_qq), _scalar(m.m_qp), _scalar(m.m_pq), _scalar(m.m_pp))


def flow(
    H: SmoothedHamiltonian,
    q0,
    p0,
    T: float,
    opts: Optional[IntegratorOptions] = None,
    scale: Optional[PhaseScale] = None,
) -> TrajectoryRecord:
    """Integrate Hamilton's equations with the variational equations.

    Parameters
    ----------
    H : SmoothedHamiltonian
    q0, p0 : float, complex or array
        Initial point.  Arrays are integrated as a batch sharing ``T``.
    T : float
        Duration, ``T >= 0``.
    opts : IntegratorOptions, optional
        ``method="auto"`` uses the model's closed-form flow when available.
    scale : PhaseScale, optional
        Must match ``H.scale`` if given.

    Returns
    -------
    TrajectoryRecord
    """
    if T < 0:
        raise ValueError(f"T must be nonnegative, got {T}")
    return _propagate(H, q0, p0, T, opts, scale)


def _propagate(H, q0, p0, T, opts=None, scale=None) -> TrajectoryRecord:
    opts = opts or IntegratorOptions()
    if scale is not None and scale != H.scale:
        raise ValueError("scale does not match the Hamiltonian's scale")
    scale = H.scale
    if opts.method in ("exact", "auto"):
        rec = H.exact_flow(q0, p0, T)
        if rec is not None:
            return rec
        if opts.method == "exact":
            raise IntegratorFailure(f"{type(H).__name__} has no closed-form flow")
    if np.iscomplexobj(q0) or np.iscomplexobj(p0):
        if not H.complex_ok:
            raise IntegratorFailure(f"{type(H).__name__} is not evaluable at complex arguments")
    return _integrate(H, q0, p0, T, opts, scale)


def action_closed_check(record: TrajectoryRecord, closed_S, closed_I):
    """Return ``(|S - closed_S|, |I - closed_I|)``."""
    return abs(record.s_complex - closed_S), abs(record.i_correction - closed_I)
