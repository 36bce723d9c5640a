import json
import math

import numpy as np
import pytest

from csprop import ConfigError, WindowEmpty
from csprop.sweep import (
    CSV_HEADER,
    PRESETS,
    ScenarioConfig,
    SweepRow,
    _BranchLabeler,
    compare,
    emit,
    parse_config_text,
    parse_rows,
    preset_config,
    read_rows,
    run_sweep,
)

TC = math.pi / 50


def small(preset, **kw):
    values = {"preset": preset, "tn": 12}
    values.update(kw)
    return ScenarioConfig.from_mapping(values)


class TestConfig:
    def test_parse_text(self):
        text = "# scenario\nmodel = kerr  # inline\n\np1=3.5\nmethods = exact, q1p1\n"
        assert parse_config_text(text) == {"model": "kerr", "p1": "3.5", "methods": "exact, q1p1"}
        with pytest.raises(ConfigError):
            parse_config_text("no equals sign")

    def test_from_file_with_overrides(self, tmp_path):
        path = tmp_path / "s.cfg"
        path.write_text("preset = fig2\ntn = 7\nopen_start = no\n")
        cfg = ScenarioConfig.from_file(path, {"tn": "5"})
        assert cfg.tn == 5 and cfg.methods == ("exact", "q1p1") and not cfg.open_start

    @pytest.mark.parametrize(
        "values",
        [
            {"methods": "exact,bogus"},
            {"methods": "exact,exact"},
            {"tn": "0"},
            {"tmin": "2", "tmax": "1"},
            {"model": "duffing"},
            {"unknown_key": "1"},
            {"open_start": "maybe"},
            {"omega": "abc"},
            {"q1q2_branches": "1,2", "p1": "3", "p2": "4"},
            {"format": "xml"},
            {"mixed_tracking": "sometimes"},
        ],
    )
    def test_invalid(self, values):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_mapping(values)

    def test_presets(self):
        for name in PRESETS:
            cfg = preset_config(name)
            assert (cfg.q1, cfg.p1, cfg.q2, cfg.p2) == (0.0, 10.0, 0.0, 10.0)
        with pytest.raises(ConfigError):
            preset_config("fig9")

    def test_grid(self):
        cfg = small("fig1")
        g = cfg.grid()
        assert len(g) == 12
        assert g[0] > 0.05 * TC and g[-1] == pytest.approx(3.5 * TC)
        assert np.all(np.diff(g) > 0)
        abs_cfg = ScenarioConfig.from_mapping({"t_unit": "abs", "tmin": 0, "tmax": 1, "tn": 3})
        assert list(abs_cfg.grid()) == [0.0, 0.5, 1.0]

    def test_harmonic_time_unit(self):
        cfg = ScenarioConfig.from_mapping({"model": "harmonic", "omega": 2.0, "tmax": 1, "tn": 2})
        assert cfg.time_unit() == pytest.approx(math.pi)


class TestRunSweep:
    def test_row_count_and_order(self):
        cfg = small("fig4")
        rows = run_sweep(cfg)
        assert len(rows) == 12 * 3
        assert [r.method for r in rows[:3]] == ["exact", "complex", "q1p2"]
        assert all(rows[i].T <= rows[i + 1].T for i in range(len(rows) - 1))

    def test_single_point(self):
        cfg = small("fig2", tn=1, tmin=0.3)
        rows = run_sweep(cfg)
        assert [r.method for r in rows] == ["exact", "q1p1"]

    def test_probability_consistent(self):
        for r in run_sweep(small("fig2")):
            assert r.prob == pytest.approx(r.re_k ** 2 + r.im_k ** 2, rel=1e-15, abs=1e-300)

    def test_deterministic_bytes(self):
        cfg = small("fig3")
        assert emit(run_sweep(cfg), "csv") == emit(run_sweep(cfg), "csv")

    def test_p1p2_truncated_after_tc(self):
        cfg = small("fig6", tmin=1.02, tmax=1.7, open_start=False, tn=15)
        rows = [r for r in run_sweep(cfg) if r.method == "p1p2"]
        assert all(r.prob is None and "no_trajectory" in r.flags for r in rows)

    def test_q1p2_flags(self):
        cfg = small("fig4", tmin=0.9, tmax=1.1, tn=9, open_start=False, methods="q1p2")
        rows = run_sweep(cfg)
        before = [r for r in rows if r.T < TC]
        after = [r for r in rows if r.T > 1.01 * TC]
        assert all("multi_root" in r.flags and r.n_contrib == 1 for r in before)
        assert all("no_trajectory" in r.flags for r in after)
        assert any("branch_death" in r.flags for r in rows)

    def test_explicit_loops_match_closed_forms(self):
        from csprop import kerr_kn

        cfg = small("fig3", methods="q1q2")
        for r in run_sweep(cfg):
            expected = sum((-1) ** n * kerr_kn(10.0, n, r.T) for n in (1, 2, 3))
            assert r.amplitude == pytest.approx(expected, rel=1e-8, abs=1e-14)
            assert r.n_contrib == 3

    def test_harmonic_sweep_all_methods(self):
        cfg = ScenarioConfig.from_mapping({
            "model": "harmonic", "q1": 0.3, "p1": -0.5, "q2": 0.1, "p2": 0.4, "tmin": 0.05, "tmax": 0.43,
            "tn": 5, "methods": "exact,complex,q1p1,q2p2,q1q2,q1p2,p1q2,p1p2", "window_half_width": 200,
            "window_n": 64,
        })
        rows = run_sweep(cfg)
        exact = {r.T: r.amplitude for r in rows if r.method == "exact"}
        for r in rows:
            assert r.amplitude == pytest.approx(exact[r.T], rel=1e-8), r.method

    def test_solver_failures_are_flagged(self):
        # q1 -> q2 is degenerate at half periods of the oscillator
        cfg = ScenarioConfig.from_mapping({
            "model": "harmonic", "t_unit": "abs", "tmin": math.pi, "tn": 1, "methods": "q1q2",
            "q1": 0.3, "q2": 0.5,
        })
        (row,) = run_sweep(cfg)
        assert row.prob is None and row.flags == ("no_trajectory",)

    def test_continue_tracking(self):
        cfg = small("fig3", methods="q1q2", q1q2_branches="window", mixed_tracking="continue")
        rows = run_sweep(cfg)
        assert len(rows) == 12
        assert rows[0].n_contrib >= 1


def test_branch_labeler_keeps_ids():
    lab = _BranchLabeler(max_jump=1.0)
    assert lab.assign([1.0, 5.0]) == ([0, 1], False)
    assert lab.assign([5.2, 1.1]) == ([1, 0], False)
    ids, died = lab.assign([5.3])
    assert ids == [1] and died
    assert lab.assign([5.4, 9.0]) == ([1, 2], False)


class TestCompare:
    rows = [SweepRow.from_amplitude(t, m, a, 1) for t in np.linspace(0, 1, 11)
            for m, a in (("exact", math.sin(5 * t) + 0.1j), ("same", math.sin(5 * t) + 0.1j),
                         ("half", 0.5 * math.sin(5 * t)))]

    def test_identical(self):
        rep = compare(self.rows, "exact", "same")
        assert rep.max_abs_error == 0
        assert all(p.rel_error == 0 for p in rep.peaks)
        assert rep.n_points == 11

    def test_errors_nonnegative_and_peaks(self):
        rep = compare(self.rows, "exact", "half")
        assert rep.max_abs_error > 0
        assert rep.peaks and all(e >= 0 for e in rep.peak_rel_errors)

    def test_window(self):
        rep = compare(self.rows, "exact", "half", (0.0, 0.35))
        assert rep.window == (0.0, pytest.approx(0.3))
        with pytest.raises(WindowEmpty):
            compare(self.rows, "exact", "half", (2.0, 3.0))

    def test_missing_tag(self):
        with pytest.raises(ConfigError):
            compare(self.rows, "exact", "q1p1")

    def test_missing_amplitude_counts_as_zero(self):
        rows = self.rows + [SweepRow.empty(2.0, "exact", ("no_trajectory",)),
                            SweepRow.from_amplitude(2.0, "same", 0.5, 1)]
        rep = compare(rows, "exact", "same")
        assert rep.n_missing == 1 and rep.max_abs_error == pytest.approx(0.25)

    def test_q1p1_heights_good_widths_bad(self):
        rows = run_sweep(small("fig2", tn=350))
        rep = compare(rows, "exact", "q1p1", (0.5 * TC, 3.5 * TC))
        assert rep.peaks[0].T == pytest.approx(TC, rel=0.02)
        assert rep.peak_rel_errors[0] < 0.05
        assert rep.max_abs_error > 0.05


class TestEmit:
    rows = [SweepRow.from_amplitude(0.1, "exact", 0.25 + 1 / 3 * 1j, 0),
            SweepRow.empty(0.1, "q1p2", ("branch_death", "no_trajectory")),
            SweepRow.from_amplitude(0.2, "exact", -1e-300 + 0j, 0, ("caustic",))]

    def test_csv_header_and_format(self):
        text = emit(self.rows, "csv")
        lines = text.splitlines()
        assert lines[0] == "T,method,re_k,im_k,prob,n_contrib,flags"
        assert lines[0].split(",") == list(CSV_HEADER)
        assert lines[1].split(",")[3] == "0.33333333333333331"
        assert lines[2] == "0.10000000000000001,q1p2,,,,0,branch_death;no_trajectory"

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_roundtrip(self, fmt, tmp_path):
        path = tmp_path / f"rows.{fmt}"
        emit(self.rows, fmt, path)
        assert read_rows(path) == self.rows

    def test_json_fields(self):
        data = json.loads(emit(self.rows, "json"))
        assert [list(d) for d in data] == [list(CSV_HEADER)] * 3

    def test_gnuplot_reparse(self):
        text = emit(self.rows, "gnuplot")
        blocks = text.strip().split("\n\n\n")
        assert len(blocks) == 2
        data = [line.split() for line in blocks[0].splitlines() if not line.startswith("#")]
        assert [(float(t), float(p)) for t, p in data] == [(0.1, self.rows[0].prob), (0.2, self.rows[2].prob)]
        assert blocks[1].splitlines()[-1].split()[1] == "NaN"

    def test_report_json(self):
        rep = compare(TestCompare.rows, "exact", "half")
        data = json.loads(emit(rep, "json"))
        assert data["reference"] == "exact" and data["max_abs_error"] == rep.max_abs_error
        with pytest.raises(ConfigError):
            emit(rep, "csv")

    def test_bad_header(self):
        with pytest.raises(ConfigError):
            parse_rows("a,b\n1,2\n")
