import cmath
import math

import numpy as np
import pytest

from csprop import (
    BoundarySpec,
    CausticDivergence,
    HarmonicModel,
    IntegratorOptions,
    KerrModel,
    NoRealTrajectory,
    PhaseScale,
    ScanWindow,
    SqrtBranchState,
    TangentMatrix,
    TrajectoryRecord,
    coefficients,
    flow,
    ho_exact,
    k_complex,
    k_p1p2,
    k_p1q2,
    k_q1p1,
    k_q1p2,
    k_q1q2,
    k_q2p2,
    kerr_exact,
    kerr_k0,
    kerr_kn,
    kerr_kq1p1_closed,
    label_from_qp,
    overlap,
    solve_final,
    sqrt_branch,
)
from csprop.models import kerr_pi_root
from csprop.phase import CoherentLabel
from csprop.propagators import PropagatorResult, mixed_contribution, sqrt_along
from csprop.solvers import complex_trajectory, mixed_record, track_complex_branches

AUTO = IntegratorOptions(method="auto")
TC = math.pi / 50
Z = (0.0, 10.0)


def ho_window(kind, label, scale):
    return ScanWindow.around(kind, label, scale, half_width=200.0, n=64)


class TestSqrtBranch:
    def test_identity(self):
        root, state = sqrt_branch(1.0)
        assert root == 1
        assert state.previous_root == 1

    def test_full_turn_ends_at_minus_one(self):
        path = [cmath.exp(1j * t) for t in np.linspace(0, 2 * math.pi, 200)[1:]]
        assert sqrt_along(path) == pytest.approx(-1)

    def test_caustic(self):
        with pytest.raises(CausticDivergence):
            sqrt_branch(1e-9, SqrtBranchState())

    def test_kerr_leaving_phase_is_continuous(self):
        H = KerrModel()
        Ts = np.linspace(0, 3 * TC, 300)[1:]
        state = SqrtBranchState()
        for T in Ts:
            rec = flow(H, *Z, T, AUTO)
            mvv = (1 + 100j * T) * cmath.exp(1j * 101 * T)
            assert rec.complex_tangent.M_vv == pytest.approx(mvv)
            root, state = sqrt_branch(mvv, state)
            assert rec.sqrt_mvv == pytest.approx(root)


class TestCoefficients:
    def test_ho_q1q2(self):
        T = 0.7
        cs = coefficients("q1q2", TangentMatrix.rotation(T))
        assert cs.c1 == pytest.approx(1)
        assert cs.c2 == pytest.approx(1)
        assert cs.c12 == pytest.approx(-cmath.exp(-1j * T))
        assert set(cs.as_dict()) == {"A1", "A2", "A12"}

    @pytest.mark.parametrize("kind", ["q1q2", "q1p2", "p1q2", "p1p2"])
    def test_verbatim_equals_reduced(self, kind):
        m = TangentMatrix.rotation(0.4) @ TangentMatrix(1.0, 2.3, 0.0, 1.0) @ TangentMatrix.rotation(-1.1)
        cs = coefficients(kind, m)
        ct = _ct(m)
        hvu, huv = ct["vu"] / (2 * ct["vv"]), ct["uv"] / (2 * ct["vv"])
        reduced = {
            "q1q2": (1 - hvu, 1 + huv, -1 / ct["vv"]),
            "q1p2": (1 - hvu, 1 - huv, 0.5j / ct["vv"]),
            "p1q2": (1 + hvu, 1 + huv, 0.5j / ct["vv"]),
            "p1p2": (1 + hvu, 1 - huv, 0.5 / ct["vv"]),
        }[kind]
        assert (cs.c1, cs.c2, cs.c12) == pytest.approx(reduced, abs=1e-12)

    def test_fallback_when_denominator_vanishes(self):
        # q1q2 denominator 1 - M1 M2 vanishes at T = 0
        cs = coefficients("q1q2", TangentMatrix.identity())
        assert np.isfinite([cs.c1, cs.c2, cs.c12]).all()
        assert cs.c12 == pytest.approx(-1)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            coefficients("q1q1", TangentMatrix.identity())


def _ct(m):
    return {
        "uv": 0.5 * (m.m_qq - m.m_pp + 1j * (m.m_pq + m.m_qp)),
        "vu": 0.5 * (m.m_qq - m.m_pp - 1j * (m.m_pq + m.m_qp)),
        "vv": 0.5 * (m.m_qq + m.m_pp + 1j * (m.m_qp - m.m_pq)),
    }


class TestHarmonic:
    z1 = CoherentLabel(0.8, -1.3)
    z2 = CoherentLabel(-0.4, 2.1)

    @pytest.mark.parametrize("T", [0.4, 2.0, 4.0, 8.5])
    def test_all_methods_exact(self, T):
        H = HarmonicModel()
        exact = ho_exact(self.z1.z, self.z2.z, T)
        s = H.scale
        got = {
            "q1p1": k_q1p1(H, self.z1, self.z2, T, opts=AUTO).amplitude,
            "q2p2": k_q2p2(H, self.z1, self.z2, T, opts=AUTO).amplitude,
            "complex": k_complex(complex_trajectory(H, self.z1, self.z2, T, self.z2.z.conjugate(), AUTO),
                                 self.z1, self.z2).amplitude,
        }
        for kind, fn in (("q1q2", k_q1q2), ("p1p2", k_p1p2)):
            got[kind] = fn(H, self.z1, self.z2, T, opts=AUTO, window=ho_window(kind, self.z1, s)).amplitude
        for kind, fn in (("q1p2", k_q1p2), ("p1q2", k_p1q2)):
            (res,) = fn(H, self.z1, self.z2, T, opts=AUTO, window=ho_window(kind, self.z1, s))
            got[kind] = res.amplitude
        for kind, val in got.items():
            assert val == pytest.approx(exact, rel=1e-9), kind

    def test_scaled_units(self, ho_scaled):
        H = ho_scaled
        z1 = CoherentLabel(0.3, 0.9, H.scale)
        z2 = CoherentLabel(-0.2, 0.5, H.scale)
        T = 1.9
        exact = ho_exact(z1.z, z2.z, T, H.omega)
        assert k_q1p1(H, z1, z2, T, opts=AUTO).amplitude == pytest.approx(exact, rel=1e-9)
        res = k_q1q2(H, z1, z2, T, opts=AUTO, window=ho_window("q1q2", z1, H.scale))
        assert res.amplitude == pytest.approx(exact, rel=1e-9)
        (res,) = k_p1q2(H, z1, z2, T, opts=AUTO, window=ho_window("p1q2", z1, H.scale))
        assert res.amplitude == pytest.approx(exact, rel=1e-9)

    def test_complex_zero_time(self):
        H = HarmonicModel()
        rec = complex_trajectory(H, self.z1, self.z2, 0.0, self.z2.z.conjugate(), AUTO)
        assert k_complex(rec, self.z1, self.z2).amplitude == pytest.approx(overlap(self.z1.z, self.z2.z))


class TestCorrectionsVanish:
    def test_leaving_lands_on_z2(self, kerr):
        z1 = CoherentLabel(0.3, 4.0)
        rec = flow(kerr, z1.q, z1.p, 0.11, AUTO)
        z2 = CoherentLabel(rec.q_end, rec.p_end)
        assert k_q1p1(kerr, z1, z2, 0.11, opts=AUTO).amplitude == pytest.approx(
            k_complex(rec, z1, z2).amplitude, abs=1e-12)

    def test_arriving_starts_at_z1(self, kerr):
        z2 = CoherentLabel(0.3, 4.0)
        rec = solve_final(kerr, z2.q, z2.p, 0.11, AUTO)
        z1 = CoherentLabel(rec.q_start, rec.p_start)
        assert k_q2p2(kerr, z1, z2, 0.11, opts=AUTO).amplitude == pytest.approx(
            k_complex(rec, z1, z2).amplitude, abs=1e-12)

    @pytest.mark.parametrize("kind", ["q1q2", "q1p2", "p1q2", "p1p2"])
    def test_mixed_on_exact_trajectory(self, kerr, kind):
        rec = flow(kerr, 0.2, 3.0, 0.13, AUTO)
        z1 = CoherentLabel(0.2, 3.0)
        z2 = CoherentLabel(rec.q_end, rec.p_end)
        val = mixed_contribution(kind, rec, z1, z2).amplitude
        assert val == pytest.approx(k_complex(rec, z1, z2).amplitude, abs=1e-12)


class TestKerr:
    @pytest.mark.parametrize("p", [0.0, 3.0, 10.0])
    @pytest.mark.parametrize("T", [0.01, 0.05, 0.2])
    def test_q1p1_closed_form(self, kerr, p, T):
        assert k_q1p1(kerr, (0.0, p), (0.0, p), T, opts=AUTO).amplitude == pytest.approx(
            kerr_kq1p1_closed(p, T), abs=1e-10)

    @pytest.mark.parametrize("T", [0.003, 0.04, 0.09, 0.2])
    def test_q2p2_equals_q1p1(self, kerr, T):
        a = k_q1p1(kerr, Z, Z, T, opts=AUTO).amplitude
        b = k_q2p2(kerr, Z, Z, T, opts=AUTO).amplitude
        assert abs(a - b) < 1e-8

    def test_stationary_root(self, kerr):
        T = 0.08
        res = k_q1q2(kerr, Z, Z, T, roots=[0.0], opts=AUTO)
        assert res.amplitude == pytest.approx(kerr_k0(10.0, T), abs=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_loop_roots_match_closed_form_up_to_sign(self, kerr, n):
        T = 0.1
        res = k_q1q2(kerr, Z, Z, T, roots=[kerr_pi_root(n, T)], opts=AUTO)
        assert res.amplitude == pytest.approx((-1) ** n * kerr_kn(10.0, n, T), rel=1e-9)

    def test_first_loop_modulus(self, kerr):
        T = 2 * math.pi / 101
        res = k_q1q2(kerr, Z, Z, T, roots=[kerr_pi_root(1, T)], opts=AUTO)
        assert res.probability == pytest.approx(0.159, abs=1e-3)

    def test_gaussian_suppression(self, kerr):
        T = 0.1
        p_i = kerr_pi_root(1, T)
        rec = mixed_record(kerr, BoundarySpec("q1q2", 0.0, 0.0, T), p_i, AUTO)
        z2 = CoherentLabel(0.0, float(rec.p_end))

        def logmag(d):
            return math.log(abs(mixed_contribution("q1q2", rec, CoherentLabel(0.0, p_i - d), z2).amplitude))

        base = logmag(0.0)
        d1, d2 = base - logmag(0.5), base - logmag(1.0)
        assert d2 / d1 == pytest.approx(4.0, rel=1e-9)

    def test_complex_half_period(self, kerr):
        grid = np.linspace(0.05, 0.5, 40) * TC
        branches = track_complex_branches(kerr, Z, Z, grid, AUTO)
        T = float(grid[-1])
        amp = sum(k_complex(br.records[T], Z, Z).amplitude for br in branches if T in br.records)
        assert abs(abs(amp) ** 2 - abs(kerr_exact(label_from_qp(*Z), label_from_qp(*Z), T)) ** 2) < 5e-3

    def test_q1p2_two_roots_reported_separately(self, kerr):
        results = k_q1p2(kerr, Z, Z, 0.98 * TC, opts=AUTO)
        assert len(results) == 2
        assert all(isinstance(r, PropagatorResult) for r in results)

    @pytest.mark.parametrize("fn", [k_q1p2, k_p1q2])
    def test_no_trajectory_after_tc(self, kerr, fn):
        with pytest.raises(NoRealTrajectory):
            fn(kerr, Z, Z, 1.02 * TC, opts=AUTO)

    def test_empty_roots(self, kerr):
        with pytest.raises(NoRealTrajectory):
            k_q1q2(kerr, Z, Z, 0.1, roots=[], opts=AUTO)

    def test_scale_mismatch(self, kerr):
        with pytest.raises(ValueError):
            k_q1p1(kerr, Z, Z, 0.1, scale=PhaseScale(b=2.0))


@pytest.mark.parametrize("method", ["q1p1", "q2p2", "complex", "q1q2", "q1p2", "p1q2", "p1p2"])
def test_zero_time_limit_recovers_overlap(kerr, method):
    z = CoherentLabel(0.5, 1.0)
    T = 1e-6
    if method == "q1p1":
        amp = k_q1p1(kerr, z, z, T, opts=AUTO).amplitude
    elif method == "q2p2":
        amp = k_q2p2(kerr, z, z, T, opts=AUTO).amplitude
    elif method == "complex":
        amp = k_complex(complex_trajectory(kerr, z, z, T, z.z.conjugate(), AUTO), z, z).amplitude
    elif method in ("q1q2", "p1p2"):
        amp = (k_q1q2 if method == "q1q2" else k_p1p2)(kerr, z, z, T, opts=AUTO).amplitude
    else:
        (res,) = (k_q1p2 if method == "q1p2" else k_p1q2)(kerr, z, z, T, opts=AUTO)
        amp = res.amplitude
    assert abs(amp - 1.0) < 1e-4


def test_caustic_contribution_rejected():
    m = TangentMatrix(1.0, 0.0, 0.0, -1.0)
    rec = TrajectoryRecord(0.0, 0.0, 0.0, 0.0, 1.0, m, 0.0, 0.0, 1e-9)
    with pytest.raises(CausticDivergence):
        k_complex(rec, 0.0, 0.0)


def test_result_probability():
    res = PropagatorResult("q1p1", 0.3 - 0.4j)
    assert res.probability == pytest.approx(0.25)
