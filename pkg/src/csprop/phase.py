"""Unit system, coherent-state labels and tangent-matrix conversions.

Positions are measured in units of ``b`` and momenta in units of ``c``,
with ``b * c == hbar``.  A coherent state label is

    z = (q/b + i p/c) / sqrt(2)

and a (possibly complex) phase-space point carries the pair

    u = (q/b + i p/c) / sqrt(2),   v = (q/b - i p/c) / sqrt(2)

where ``v`` is only the conjugate of ``u`` on real points.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class PhaseScale:
    """Position scale ``b`` and action unit ``hbar``; ``c`` is derived so that ``b*c == hbar``."""

    b: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.b > 0 and np.isfinite(self.b)):
            raise ValueError(f"b must be positive and finite, got {self.b}")
        if not (self.hbar > 0 and np.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive and finite, got {self.hbar}")

    @property
    def c(self) -> float:
        return self.hbar / self.b

    @classmethod
    def from_c(cls, c: float, hbar: float = 1.0) -> "PhaseScale":
        if not c > 0:
            raise ValueError(f"c must be positive, got {c}")
        return cls(b=hbar / c, hbar=hbar)

    @classmethod
    def from_mass_frequency(cls, mass: float, omega: float, hbar: float = 1.0) -> "PhaseScale":
        """Scale of the oscillator with ``c/b == mass*omega``."""
        if mass <= 0 or omega <= 0:
            raise ValueError("mass and omega must be positive")
        return cls(b=np.sqrt(hbar / (mass * omega)), hbar=hbar)

    @property
    def dq(self) -> float:
        """Position uncertainty of a coherent state."""
        return self.b / SQRT2

    @property
    def dp(self) -> float:
        """Momentum uncertainty of a coherent state."""
        return self.c / SQRT2

    def u(self, q, p):
        return (q / self.b + 1j * p / self.c) / SQRT2

    def v(self, q, p):
        return (q / self.b - 1j * p / self.c) / SQRT2

    def qp_from_uv(self, u, v):
        q = self.b * (u + v) / SQRT2
        p = -1j * self.c * (u - v) / SQRT2
        return q, p


DEFAULT_SCALE = PhaseScale()


def label_from_qp(q: float, p: float, scale: PhaseScale = DEFAULT_SCALE) -> complex:
    return complex((q / scale.b + 1j * p / scale.c) / SQRT2)


def qp_from_label(z: complex, scale: PhaseScale = DEFAULT_SCALE) -> tuple[float, float]:
    z = complex(z)
    return SQRT2 * scale.b * z.real, SQRT2 * scale.c * z.imag


def overlap(z1: complex, z2: complex) -> complex:
    """<z2|z1> for canonical coherent states."""
    z1, z2 = complex(z1), complex(z2)
    return complex(np.exp(-0.5 * abs(z1) ** 2 - 0.5 * abs(z2) ** 2 + z1 * z2.conjugate()))


@dataclass(frozen=True)
class CoherentLabel:
    """Real phase-space label (q, p) of a coherent state under ``scale``."""

    q: float
    p: float
    scale: PhaseScale = DEFAULT_SCALE

    @property
    def z(self) -> complex:
        return label_from_qp(self.q, self.p, self.scale)

    @classmethod
    def from_z(cls, z: complex, scale: PhaseScale = DEFAULT_SCALE) -> "CoherentLabel":
        q, p = qp_from_label(z, scale)
        return cls(q, p, scale)


def as_label(z: Any, scale: PhaseScale = DEFAULT_SCALE) -> CoherentLabel:
    """Accept a CoherentLabel, a complex z, or a (q, p) pair."""
    if isinstance(z, CoherentLabel):
        return z
    if isinstance(z, tuple) and len(z) == 2:
        return CoherentLabel(float(z[0]), float(z[1]), scale)
    return CoherentLabel.from_z(complex(z), scale)


@dataclass(frozen=True)
class ComplexPhasePoint:
    """A phase-space point with complex (q, p); ``u`` and ``v`` are independent."""

    q: complex
    p: complex
    scale: PhaseScale = DEFAULT_SCALE

    @property
    def u(self):
        return self.scale.u(self.q, self.p)

    @property
    def v(self):
        return self.scale.v(self.q, self.p)

    @classmethod
    def from_uv(cls, u, v, scale: PhaseScale = DEFAULT_SCALE) -> "ComplexPhasePoint":
        q, p = scale.qp_from_uv(u, v)
        return cls(q, p, scale)

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(np.imag(self.q)) == 0) and np.all(np.abs(np.imag(self.p)) == 0))


@dataclass(frozen=True)
class TangentMatrix:
    """Flow derivative in the scaled coordinates (q/b, p/c).

    Entries may be numpy arrays of a common shape for batched trajectories.
    """

    m_qq: Any
    m_qp: Any
    m_pq: Any
    m_pp: Any

    @classmethod
    def identity(cls) -> "TangentMatrix":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def rotation(cls, theta) -> "TangentMatrix":
        c, s = np.cos(theta), np.sin(theta)
        return cls(c, s, -s, c)

    @classmethod
    def from_array(cls, a) -> "TangentMatrix":
        a = np.asarray(a)
        return cls(a[0, 0], a[0, 1], a[1, 0], a[1, 1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.m_qq, self.m_qp], [self.m_pq, self.m_pp]])

    def __matmul__(self, other: "TangentMatrix") -> "TangentMatrix":
        return TangentMatrix(
            self.m_qq * other.m_qq + self.m_qp * other.m_pq,
            self.m_qq * other.m_qp + self.m_qp * other.m_pp,
            self.m_pq * other.m_qq + self.m_pp * other.m_pq,
            self.m_pq * other.m_qp + self.m_pp * other.m_pp,
        )

    @property
    def det(self):
        return self.m_qq * self.m_pp - self.m_qp * self.m_pq

    def symplectic_defect(self):
        return np.abs(self.det - 1.0)

    def is_symplectic(self, tol: float = 1e-9) -> bool:
        return bool(np.all(self.symplectic_defect() < tol))

    # combinations used by the mixed-boundary propagators
    @property
    def M1(self):
        return self.m_qq + 1j * self.m_qp

    @property
    def M2(self):
        return self.m_pp + 1j * self.m_qp

    @property
    def M3(self):
        return self.m_pp + 1j * self.m_pq

    @property
    def M4(self):
        return self.m_qq + 1j * self.m_pq


@dataclass(frozen=True)
class ComplexTangent:
    """Flow derivative in the (u, v) variables."""

    M_uu: Any
    M_uv: Any
    M_vu: Any
    M_vv: Any

    @property
    def det(self):
        return self.M_uu * self.M_vv - self.M_uv * self.M_vu


def complex_tangent(m: TangentMatrix) -> ComplexTangent:
    qq, qp, pq, pp = m.m_qq, m.m_qp, m.m_pq, m.m_pp
    return ComplexTangent(
        M_uu=0.5 * (qq + pp + 1j * (pq - qp)),
        M_uv=0.5 * (qq - pp + 1j * (pq + qp)),
        M_vu=0.5 * (qq - pp - 1j * (pq + qp)),
        M_vv=0.5 * (qq + pp + 1j * (qp - pq)),
    )
