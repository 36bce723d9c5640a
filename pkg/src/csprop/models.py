"""Reference systems: the harmonic oscillator and the Kerr oscillator.

Both have closed-form classical flows (real and complex) and exact
quantum propagators, so every semiclassical formula can be checked.
The Kerr closed forms below are written out independently of the
generic propagator pipeline so that the two can serve as oracles for
each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .dynamics import SmoothedHamiltonian, TrajectoryRecord
from .errors import TruncationInsufficient
from .phase import DEFAULT_SCALE, ComplexPhasePoint, PhaseScale, TangentMatrix


class HarmonicModel(SmoothedHamiltonian):
    """``H = p^2/2m + m w^2 q^2/2``, the smoothed form of ``hbar w a^dagger a``.

    The scale must satisfy ``c/b = m w``; by default it is built from
    ``mass`` and ``omega``.
    """

    complex_ok = True

    def __init__(self, mass: float = 1.0, omega: float = 1.0, scale: Optional[PhaseScale] = None,
                 hbar: float = 1.0):
        if mass <= 0 or omega <= 0:
            raise ValueError("mass and omega must be positive")
        self.mass = float(mass)
        self.omega = float(omega)
        if scale is None:
            scale = PhaseScale.from_mass_frequency(mass, omega, hbar)
        elif not math.isclose(scale.c / scale.b, mass * omega, rel_tol=1e-12):
            raise ValueError("harmonic model requires c/b == mass*omega")
        self.scale = scale

    def __repr__(self):
        return f"HarmonicModel(mass={self.mass}, omega={self.omega}, scale={self.scale})"

    def value(self, q, p):
        return p * p / (2 * self.mass) + 0.5 * self.mass * self.omega ** 2 * q * q

    def gradient(self, q, p):
        return self.mass * self.omega ** 2 * q, p / self.mass

    def hessian(self, q, p):
        one = np.ones_like(q + p)
        return self.mass * self.omega ** 2 * one, 0.0 * one, one / self.mass

    def derivatives(self, q, p):
        k = self.mass * self.omega ** 2
        return self.value(q, p), k * q, p / self.mass, k, 0.0, 1.0 / self.mass

    def frequency_estimate(self, q, p) -> float:
        return self.omega

    def exact_flow(self, q0, p0, T) -> TrajectoryRecord:
        s = self.scale
        hbar = s.hbar
        theta = self.omega * T
        c, sn = np.cos(theta), np.sin(theta)
        x0, y0 = q0 / s.b, p0 / s.c
        x1, y1 = x0 * c + y0 * sn, -x0 * sn + y0 * c
        q1, p1 = s.b * x1, s.c * y1
        one = np.ones_like(x0 * 1.0)
        return TrajectoryRecord(
            q_start=q0, p_start=p0, q_end=q1, p_end=p1, T=T,
            tangent=TangentMatrix(c * one, sn * one, -sn * one, c * one),
            s_hamilton=0.5 * (q1 * p1 - q0 * p0),
            i_correction=0.5 * hbar * self.omega * T * one,
            sqrt_mvv=np.exp(0.5j * theta) * one,
            energy_start=self.value(q0, p0),
            energy_end=self.value(q1, p1),
            scale=s,
        )


class KerrModel(SmoothedHamiltonian):
    """Kerr oscillator ``H = hbar w (a^dagger a)^2`` with smoothed form ``hbar w uv(uv+1)``.

    In scaled coordinates the flow is a rotation with angular frequency
    ``sigma = w (2uv + 1)``, where ``2uv = q^2/b^2 + p^2/c^2``.
    """

    complex_ok = True

    def __init__(self, omega: float = 1.0, scale: PhaseScale = DEFAULT_SCALE):
        if omega <= 0:
            raise ValueError("omega must be positive")
        self.omega = float(omega)
        self.scale = scale

    def __repr__(self):
        return f"KerrModel(omega={self.omega}, scale={self.scale})"

    def _w(self, q, p):
        return 0.5 * ((q / self.scale.b) ** 2 + (p / self.scale.c) ** 2)

    def sigma(self, q, p):
        """Rotation frequency ``w(q^2/b^2 + p^2/c^2 + 1)``; conserved along the flow."""
        return self.omega * (2 * self._w(q, p) + 1)

    def value(self, q, p):
        w = self._w(q, p)
        return self.scale.hbar * self.omega * w * (w + 1)

    def gradient(self, q, p):
        s = self.scale
        f = s.hbar * self.omega * (2 * self._w(q, p) + 1)
        return f * q / s.b ** 2, f * p / s.c ** 2

    def hessian(self, q, p):
        s = self.scale
        k = s.hbar * self.omega
        f = 2 * self._w(q, p) + 1
        hqq = k * (f / s.b ** 2 + 2 * q * q / s.b ** 4)
        hpp = k * (f / s.c ** 2 + 2 * p * p / s.c ** 4)
        hqp = k * 2 * q * p / (s.b ** 2 * s.c ** 2)
        return hqq, hqp, hpp

    def frequency_estimate(self, q, p) -> float:
        # the state rotates at sigma; the linearized shear adds up to 2x more
        return float(np.max(np.abs(3 * self.sigma(q, p))))

    @staticmethod
    def n0(z) -> float:
        """Mean excitation ``|z|^2`` of the coherent state."""
        return abs(complex(z)) ** 2

    def classical_time(self, z) -> float:
        """``T_c = pi / (n0 w)``."""
        return math.pi / (self.n0(z) * self.omega)

    def revival_time(self) -> float:
        """``T_r = 2 pi / w``."""
        return 2 * math.pi / self.omega

    def exact_flow(self, q0, p0, T) -> TrajectoryRecord:
        s = self.scale
        hbar, om = s.hbar, self.omega
        x0, y0 = q0 / s.b, p0 / s.c
        w = 0.5 * (x0 * x0 + y0 * y0)
        theta = om * (2 * w + 1) * T
        c, sn = np.cos(theta), np.sin(theta)
        x1, y1 = x0 * c + y0 * sn, -x0 * sn + y0 * c
        a11, a12 = 1 + 2 * om * T * x0 * y0, 2 * om * T * y0 * y0
        a21, a22 = -2 * om * T * x0 * x0, 1 - 2 * om * T * x0 * y0
        tangent = TangentMatrix(
            c * a11 + sn * a21, c * a12 + sn * a22,
            -sn * a11 + c * a21, -sn * a12 + c * a22,
        )
        q1, p1 = s.b * x1, s.c * y1
        return TrajectoryRecord(
            q_start=q0, p_start=p0, q_end=q1, p_end=p1, T=T,
            tangent=tangent,
            s_hamilton=hbar * om * w * w * T - 0.5 * (q0 * p0 - q1 * p1),
            i_correction=hbar * om * (2 * w + 0.5) * T,
            sqrt_mvv=np.exp(0.5j * theta) * np.sqrt(1 + 2j * om * T * w + 0j),
            energy_start=self.value(q0, p0),
            energy_end=self.value(q1, p1),
            scale=s,
        )


@dataclass(frozen=True)
class FockTruncation:
    """Number of Fock terms kept and the Poisson tail bound they guarantee."""

    n_max: int
    tail_bound: float = 1e-12

    @staticmethod
    def default_n_max(x: float) -> int:
        return int(math.ceil(x + 12 * math.sqrt(x) + 30))

    @classmethod
    def for_mean(cls, x: float, tail_bound: float = 1e-12, n_max: Optional[int] = None) -> "FockTruncation":
        """Truncation for Poisson weights of mean ``x = |z1 z2|``.

        Raises TruncationInsufficient if the tail exceeds ``tail_bound``.
        """
        n = cls.default_n_max(x) if n_max is None else int(n_max)
        tail = cls.tail(n, x)
        if tail > tail_bound:
            raise TruncationInsufficient(
                f"Poisson tail {tail:.3g} beyond n={n} exceeds bound {tail_bound:.3g}"
            )
        return cls(n, tail_bound)

    @staticmethod
    def tail(n_max: int, x: float) -> float:
        """``sum_{n > n_max} e^{-x} x^n / n!``."""
        return float(poisson.sf(n_max, x)) if x > 0 else 0.0


def ho_exact(z1, z2, T, omega: float = 1.0):
    """Exact oscillator propagator ``<z2| exp(-i w T a^dagger a) |z1>``."""
    z1, z2 = complex(z1), complex(z2)
    return np.exp(-0.5 * (abs(z1) ** 2 + abs(z2) ** 2) + np.exp(-1j * omega * np.asarray(T)) * z1 * z2.conjugate())


def kerr_exact(z1, z2, T, trunc: Optional[FockTruncation] = None, omega: float = 1.0):
    """Exact Kerr propagator by direct Fock summation.

    ``T`` may be an array; the sum runs over ascending ``n`` with numpy's
    pairwise reduction.
    """
    z1, z2 = complex(z1), complex(z2)
    x = z1 * z2.conjugate()
    norm = -0.5 * (abs(z1) ** 2 + abs(z2) ** 2)
    if trunc is None:
        trunc = FockTruncation.for_mean(abs(x))
    T = np.asarray(T, dtype=float)
    if x == 0:
        return np.exp(norm) * np.ones_like(T, dtype=complex)
    n = np.arange(trunc.n_max + 1)
    logw = n * np.log(x) - gammaln(n + 1) + norm
    phase = -1j * omega * np.multiply.outer(T, n * n.astype(float))
    return np.sum(np.exp(logw + phase), axis=-1)


def kerr_flow_analytic(q0, p0, T, omega: float = 1.0, scale: PhaseScale = DEFAULT_SCALE) -> TrajectoryRecord:
    """Closed-form Kerr trajectory with tangent matrix and actions."""
    return KerrModel(omega, scale).exact_flow(q0, p0, T)


def kerr_complex_flow(u0, v0, T, omega: float = 1.0, scale: PhaseScale = DEFAULT_SCALE) -> ComplexPhasePoint:
    """Complexified Kerr flow; ``uv`` is conserved and sets the rotation rate."""
    w = u0 * v0
    ph = omega * (2 * w + 1) * T
    return ComplexPhasePoint.from_uv(u0 * np.exp(-1j * ph), v0 * np.exp(1j * ph), scale)


def kerr_pi_root(n: int, T: float) -> float:
    """Initial momentum ``sqrt(2 n pi / T - 1)`` of the ``n``-th q -> q loop (units b=c=1)."""
    x = 2 * n * math.pi / T - 1
    if x < 0:
        raise ValueError(f"no root for n={n} at T={T}: p_i^2 = {x} < 0")
    return math.sqrt(x)


def kerr_pi_roots(T: float, window=None, n_max: Optional[int] = None) -> list[float]:
    """Stationary root 0 plus the loop roots ``sqrt(2 n pi/T - 1)``.

    Loop roots are kept when inside ``window`` (a ScanWindow) and, if
    ``n_max`` is given, for ``n <= n_max``.  One of the two limits is required.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if window is None and n_max is None:
        raise ValueError("give a window or n_max")
    roots = [0.0]
    lo, hi = (-math.inf, math.inf) if window is None else window.bounds
    n = 1
    while n_max is None or n <= n_max:
        x = 2 * n * math.pi / T - 1
        if x >= 0:
            r = math.sqrt(x)
            if r > hi:
                break
            if r >= lo:
                roots.append(r)
        n += 1
    return sorted(roots)


def kerr_k0(p, T):
    """Stationary-trajectory contribution ``exp(-i p^2 sin(T/2) e^{-iT/2})``."""
    return np.exp(-1j * p * p * np.sin(T / 2) * np.exp(-0.5j * T))


def kerr_kn(p, n: int, T):
    """Contribution of the ``n``-th q -> q loop, as written in closed form."""
    pi = kerr_pi_root(n, T)
    x = pi * pi * T
    return (1 + 1j * x) ** -0.5 * np.exp(
        -1j * x / (1 + 1j * x) * (pi - p) ** 2 + 0.25j * T * (pi ** 4 + 4 * pi ** 2 + 2)
    )


def kerr_kq1p1_closed(p, T):
    """Leaving-trajectory propagator for the diagonal state ``q=0``."""
    s = p * p + 1
    x = p * p * T
    return (
        (1 + 1j * x) ** -0.5
        * np.exp(0.25j * T * (p ** 4 + 2 * p * p) - 1j * p * p * np.exp(-0.5j * s * T) * np.sin(s * T / 2))
        * np.exp(1j * p ** 4 * T / (1 + 1j * x) * np.exp(-1j * s * T) * np.sin(s * T / 2) ** 2)
    )


SHORT_TIME_METHODS = ("exact", "q1p1", "q2p2", "p1q2", "q1p2", "p1p2", "q1q2", "q1q2_stated")


def kerr_short_time(p, method: str) -> float:
    """Coefficient ``C`` in ``|K|^2 ~ 1 - C T^2`` for the diagonal Kerr state.

    ``"q1q2"`` is the direct expansion of the stationary contribution
    (``p^2/2``); ``"q1q2_stated"`` is the alternative value ``2 p^2``.
    """
    p2 = p * p
    if method in ("exact", "q1p1", "q2p2", "p1q2"):
        return 0.5 * (p2 ** 3 + 3 * p2 ** 2 + p2)
    if method == "q1p2":
        return p2 ** 3 + 2.5 * p2 ** 2 + p2
    if method == "p1p2":
        return 0.5 * p2 ** 2
    if method == "q1q2":
        return 0.5 * p2
    if method == "q1q2_stated":
        return 2.0 * p2
    raise ValueError(f"unknown method {method!r}")


def kerr_shorttime_qi(p, T) -> float:
    """Small-``T`` initial position for the p -> q and p -> p problems.

    Evaluates ``-(1 - sqrt(1 - 4 p^2 T^2 (p^2+1))) / (2 p T)`` in a form
    without cancellation.
    """
    x = 4 * p * p * T * T * (p * p + 1)
    if x > 1:
        raise ValueError(f"short-time seed undefined: 4p^2T^2(p^2+1) = {x} > 1")
    if T == 0:
        return 0.0
    return -2 * p * T * (p * p + 1) / (1 + math.sqrt(1 - x))
