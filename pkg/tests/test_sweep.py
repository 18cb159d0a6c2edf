"""Grid enumeration, sweep determinism, PTO tuning, and the study drivers."""

import math

import numpy as np
import pytest

from srwec import NumericError, ValidationError
from srwec import magnetics
from srwec.pto import Limits, PtoMode
from srwec.spectra import SeaState
from srwec.sweep import (
    C_PTO_COARSE,
    GridSpec,
    SweepTable,
    _entropy,
    _refine_axis,
    _tilt_realizations,
    best_geometry,
    compare_strategies,
    geometry_sweep,
    knee_report,
    limit_sweep,
    load_strategy_reference,
    representative_sea_states,
    sweep,
    tune_pto,
)


@pytest.fixture(scope="module")
def small_grid():
    return GridSpec.from_dict({"a": [1, 2], "b": [10.0, 20.0, 30.0]}, seed=7)


def product_eval(params, seed):
    if params["a"] == 2 and params["b"] == 20.0:
        raise ValueError("boom")
    return {"y": params["a"] * params["b"]}


@pytest.fixture(scope="module")
def tune_sea():
    return SeaState(hs=1.5, tp=8.0)


@pytest.fixture(scope="module")
def tune_series(tune_sea):
    # shared short realizations so every tuning test is a paired comparison
    from srwec.dynamics import TiltParams

    return _tilt_realizations(tune_sea, TiltParams(), 60.0, 2, 0)


class TestGridSpec:
    def test_no_axes_rejected(self):
        with pytest.raises(ValidationError):
            GridSpec(axes=())

    def test_empty_axis_rejected(self):
        with pytest.raises(ValidationError):
            GridSpec.from_dict({"a": []})

    def test_case_count(self, small_grid):
        assert small_grid.case_count == 6

    def test_last_axis_fastest(self, small_grid):
        got = [(c["a"], c["b"]) for c in small_grid.cases()]
        assert got == [(1, 10.0), (1, 20.0), (1, 30.0),
                       (2, 10.0), (2, 20.0), (2, 30.0)]

    def test_case_params_matches_enumeration(self, small_grid):
        listed = list(small_grid.cases())
        for i in range(small_grid.case_count):
            assert small_grid.case_params(i) == listed[i]

    def test_case_params_out_of_range(self, small_grid):
        with pytest.raises(ValidationError):
            small_grid.case_params(6)

    def test_base_params_constant_across_cases(self):
        grid = GridSpec.from_dict({"a": [1, 2]}, base={"mass_kg": 300.0})
        for case in grid.cases():
            assert case["mass_kg"] == 300.0

    def test_case_seed_derives_from_index(self, small_grid):
        assert small_grid.case_seed(3).entropy == (7, 3)

    def test_provenance_format_and_sensitivity(self, small_grid):
        tag, seed = small_grid.provenance.split(":")
        assert len(tag) == 12 and seed == "7"
        other = GridSpec.from_dict({"a": [1, 2], "b": [10.0, 20.0, 30.0]}, seed=8)
        assert other.provenance != small_grid.provenance


class TestSweepEngine:
    def test_row_order_and_error_capture(self, small_grid):
        table = sweep(small_grid, product_eval)
        assert table.columns == ("a", "b", "y", "error")
        assert [r["y"] for r in table.rows if not r["error"]] == [10.0, 20.0, 30.0, 20.0, 60.0]
        bad = table.rows[4]
        assert bad["error"] == "ValueError: boom"
        assert "y" not in bad

    def test_workers_do_not_change_bytes(self, small_grid):
        serial = sweep(small_grid, product_eval).to_csv()
        threaded = sweep(small_grid, product_eval, workers=4).to_csv()
        assert serial == threaded

    def test_workers_validated(self, small_grid):
        with pytest.raises(ValidationError):
            sweep(small_grid, product_eval, workers=0)

    def test_evaluator_sees_case_seed(self, small_grid):
        table = sweep(small_grid, lambda p, s: {"e": str(s.entropy)})
        expect = [str(small_grid.case_seed(i).entropy) for i in range(6)]
        assert table.column("e") == expect

    def test_rerun_is_byte_identical(self, small_grid):
        assert (sweep(small_grid, product_eval).to_csv()
                == sweep(small_grid, product_eval).to_csv())


class TestSweepTable:
    def test_csv_layout(self, small_grid, tmp_path):
        table = sweep(small_grid, product_eval)
        text = table.to_csv(tmp_path / "out.csv")
        lines = text.splitlines()
        assert lines[0] == f"# provenance={small_grid.provenance}"
        assert lines[1] == "a,b,y,error"
        assert lines[6] == "2,20,,ValueError: boom"
        assert (tmp_path / "out.csv").read_text() == text

    def test_float_formatting(self):
        table = SweepTable(columns=("x", "error"),
                           rows=({"x": 0.1, "error": ""},
                                 {"x": 1234567.25, "error": ""},
                                 {"x": None, "error": ""}),
                           provenance="t:0")
        lines = table.to_csv().splitlines()
        assert lines[2] == "0.1,"
        assert lines[3] == "1234567.25,"
        assert lines[4] == ","

    def test_unknown_column_rejected(self, small_grid):
        with pytest.raises(ValidationError):
            sweep(small_grid, product_eval).column("nope")


class TestHelpers:
    def test_entropy_flattens_tuple_base(self):
        assert _entropy((3, 4), 5).entropy == (3, 4, 5)
        assert _entropy(3, 5).entropy == (3, 5)

    def test_refine_interior_spans_neighbors(self):
        vals = [10.0, 100.0, 1000.0]
        ref = _refine_axis(vals, 1)
        assert ref[0] == pytest.approx(10.0) and ref[-1] == pytest.approx(1000.0)
        assert len(ref) == 5
        # log spacing: constant ratio
        ratios = [b / a for a, b in zip(ref, ref[1:])]
        assert all(r == pytest.approx(ratios[0]) for r in ratios)

    def test_refine_at_edge_clips(self):
        ref = _refine_axis([10.0, 100.0, 1000.0], 0)
        assert ref[0] == pytest.approx(10.0) and ref[-1] == pytest.approx(100.0)

    def test_refine_with_zero_lower_is_linear(self):
        ref = _refine_axis([0.0, 10.0, 20.0], 1)
        assert ref == pytest.approx([0.0, 5.0, 10.0, 15.0, 20.0])

    def test_refine_degenerate_single_value(self):
        assert _refine_axis([5.0], 0) == [5.0]

    def test_tilt_realizations_deterministic(self, tune_sea):
        from srwec.dynamics import TiltParams

        a = _tilt_realizations(tune_sea, TiltParams(), 30.0, 2, 9)
        b = _tilt_realizations(tune_sea, TiltParams(), 30.0, 2, 9)
        assert len(a) == 2
        for (dta, tha), (dtb, thb) in zip(a, b):
            assert dta == dtb
            np.testing.assert_array_equal(tha, thb)
        assert not np.array_equal(a[0][1], a[1][1])

    def test_tilt_realizations_pass_through_series(self):
        series = (0.05, np.zeros(100))
        out = _tilt_realizations(series, None, 30.0, 3, 0)
        assert out == [series]


class TestTunePto:
    def test_zero_motion_returns_smallest_damping(self):
        still = (0.05, np.zeros(1201))
        res = tune_pto("passive", still, duration=30.0)
        assert res.c_pto == pytest.approx(C_PTO_COARSE[0])
        assert res.avg_power == 0.0
        assert res.candidates == 19

    def test_family_validated(self, tune_sea):
        with pytest.raises(ValidationError):
            tune_pto("latching", tune_sea)

    def test_refined_never_worse_than_coarse(self, tune_sea, tune_series):
        res = tune_pto("passive", tune_sea, duration=60.0,
                       tilt_series=tune_series)
        assert res.avg_power >= res.coarse_power - 1e-12
        assert res.avg_power > 0.0

    def test_reactive_contains_passive(self, tune_sea, tune_series):
        # k grid includes 0, so reactive can never tune below passive
        passive = tune_pto("passive", tune_sea, duration=60.0,
                           tilt_series=tune_series)
        reactive = tune_pto("reactive", tune_sea, duration=60.0,
                            tilt_series=tune_series)
        assert reactive.avg_power >= passive.avg_power - 1e-12
        assert reactive.mode.kind == "reactive"

    def test_deterministic(self, tune_sea):
        a = tune_pto("passive", tune_sea, duration=30.0, seeds=1)
        b = tune_pto("passive", tune_sea, duration=30.0, seeds=1)
        assert a.c_pto == b.c_pto and a.avg_power == b.avg_power


@pytest.fixture(scope="module")
def ratings_table(tune_sea):
    return limit_sweep([0.0, 300.0, 1000.0], [0.0, 3000.0], [tune_sea],
                       duration=60.0, seeds=1)


class TestLimitSweep:
    def test_zero_ratings_score_zero_without_error(self, ratings_table):
        for row in ratings_table.rows:
            if row["f_max_n"] == 0.0 or row["p_max_w"] == 0.0:
                assert row["avg_power_w"] == 0.0
                assert row["error"] == ""

    def test_power_nondecreasing_in_force_rating(self, ratings_table):
        by_f = {r["f_max_n"]: r["avg_power_w"] for r in ratings_table.rows
                if r["p_max_w"] == 3000.0}
        assert by_f[0.0] <= by_f[300.0] <= by_f[1000.0]
        assert by_f[1000.0] > 0.0

    def test_sea_identity_recorded(self, ratings_table, tune_sea):
        assert set(ratings_table.column("hs_m")) == {tune_sea.hs}
        assert set(ratings_table.column("tp_s")) == {tune_sea.tp}

    def test_empty_inputs_rejected(self, tune_sea):
        with pytest.raises(ValidationError):
            limit_sweep([], [3000.0], [tune_sea])
        with pytest.raises(ValidationError):
            limit_sweep([1000.0], [3000.0], [])


class TestKneeReport:
    @staticmethod
    def _table(rows):
        cols = ("sea_index", "f_max_n", "p_max_w", "hs_m", "tp_s",
                "avg_power_w", "error")
        full = [dict(r, hs_m=2.0, tp_s=8.0, error="") for r in rows]
        return SweepTable(columns=cols, rows=tuple(full), provenance="t:0")

    def test_knee_at_flattening_point(self):
        # marginal gain per 100 N drops below 2% between 800 and 1000
        powers = {200.0: 100.0, 400.0: 190.0, 600.0: 220.0,
                  800.0: 230.0, 1000.0: 233.0}
        table = self._table([
            {"sea_index": 0, "f_max_n": f, "p_max_w": 3000.0, "avg_power_w": p}
            for f, p in powers.items()])
        report = knee_report(table)
        assert len(report) == 1
        assert report[0]["knee_f_max_n"] == 800.0

    def test_no_knee_is_nan(self):
        table = self._table([
            {"sea_index": 0, "f_max_n": f, "p_max_w": 3000.0,
             "avg_power_w": f}
            for f in (200.0, 400.0, 600.0)])
        report = knee_report(table)
        assert math.isnan(report[0]["knee_f_max_n"])

    def test_grouped_by_other_axis(self):
        rows = []
        for p_max in (1500.0, 3000.0):
            for f, p in ((200.0, 100.0), (400.0, 101.0)):
                rows.append({"sea_index": 0, "f_max_n": f, "p_max_w": p_max,
                             "avg_power_w": p})
        report = knee_report(self._table(rows))
        assert len(report) == 2
        assert all(r["knee_f_max_n"] == 200.0 for r in report)

    def test_power_axis(self):
        table = self._table([
            {"sea_index": 0, "f_max_n": 1000.0, "p_max_w": p,
             "avg_power_w": w}
            for p, w in ((1000.0, 100.0), (2000.0, 104.0), (3000.0, 105.0))])
        report = knee_report(table, axis="p_max_w", step=300.0)
        # 4% over 1000 W is 1.2% per 300 W, below threshold at once
        assert report[0]["knee_p_max_w"] == 1000.0

    def test_missing_axes_rejected(self):
        table = SweepTable(columns=("x", "error"), rows=(), provenance="t:0")
        with pytest.raises(ValidationError):
            knee_report(table)


class TestStrategyReference:
    def test_bundled_rows(self):
        ref = load_strategy_reference()
        assert len(ref) == 11
        row = next(r for r in ref if abs(r["tp_s"] - 8.70) < 1e-9)
        assert row["passive_w"] == pytest.approx(222.69)
        assert row["reactive_w"] == pytest.approx(232.80)
        assert row["discrete_w"] == pytest.approx(286.73)

    def test_reference_tps_match_representative_seas(self):
        tps = [round(s.tp, 2) for s in representative_sea_states()]
        assert tps == [round(r["tp_s"], 2) for r in load_strategy_reference()]


@pytest.fixture(scope="module")
def comparison():
    # one reference-period sea, shortened episodes: structure checks only
    sea = SeaState(hs=1.5, tp=8.70)
    return compare_strategies(seas=[sea], tune_duration=60.0,
                              duration=60.0, seeds=1)


class TestCompareStrategies:
    def test_row_contents(self, comparison):
        row = comparison.simulated.rows[0]
        assert row["tp_s"] == 8.70
        for name in ("passive_w", "reactive_w", "discrete_w"):
            assert row[name] > 0.0
        assert row["c_passive_nspm"] in C_PTO_COARSE or row["c_passive_nspm"] > 0

    def test_dominance_counts(self, comparison):
        dom = comparison.dominance()
        assert dom["states"] == 1
        assert 0 <= dom["discrete_ge_passive"] <= 1
        assert 0 <= dom["discrete_ge_reactive"] <= 1

    def test_merged_pairs_reference_by_period(self, comparison):
        merged = comparison.merged()[0]
        assert merged["ref_discrete_w"] == pytest.approx(286.73)
        assert math.isfinite(merged["ratio_discrete_w"])

    def test_merged_off_reference_period_is_nan(self):
        table = SweepTable(
            columns=("sea_index", "hs_m", "tp_s", "passive_w", "reactive_w",
                     "discrete_w", "error"),
            rows=({"sea_index": 0, "hs_m": 1.0, "tp_s": 5.55,
                   "passive_w": 1.0, "reactive_w": 1.0, "discrete_w": 1.0,
                   "error": ""},),
            provenance="t:0")
        from srwec.sweep import StrategyComparison

        merged = StrategyComparison(table, load_strategy_reference()).merged()
        assert math.isnan(merged[0]["ref_passive_w"])

    def test_empty_seas_rejected(self):
        with pytest.raises(ValidationError):
            compare_strategies(seas=[])


@pytest.fixture(scope="module")
def geom_table():
    return geometry_sweep(axes={
        "magnet_mm": (2, 4),
        "backiron_mm": (5.0, 25.0),
        "length_mm": (300.0,),
        "poles": (8,),
        "winding_mm": (5.0, 25.0),
    })


class TestGeometrySweep:
    def test_feasible_iff_radius_fits(self, geom_table):
        for row in geom_table.rows:
            assert row["feasible"] == (row["re_mm"] <= 105.0 + 1e-9)

    def test_infeasible_rows_have_violation_text_only(self, geom_table):
        bad = [r for r in geom_table.rows if not r["feasible"]]
        assert bad
        for row in bad:
            assert "105" in row["violations"]
            assert row.get("thrust_n") is None

    def test_fullscale_design_point_is_feasible(self, geom_table):
        row = next(r for r in geom_table.rows
                   if r["magnet_mm"] == 4 and r["backiron_mm"] == 25.0
                   and r["winding_mm"] == 5.0)
        assert row["feasible"]
        assert row["thrust_n"] >= 1000.0
        geom = magnetics.table_geometry()
        field = magnetics.solve_field(geom, magnetics.MagnetSpec.from_grade("N50"))
        turns = magnetics.turns_for(geom.coil_width, geom.winding_t, 0.75,
                                    magnetics.awg_area(20))
        winding = magnetics.WindingSpec(turns, magnetics.awg_area(20))
        expect = magnetics.emf_profile(field, geom, winding).amplitude
        assert row["k_e_vs_per_m"] == pytest.approx(expect, rel=1e-9)

    def test_thicker_magnets_give_more_thrust(self, geom_table):
        rows = {r["magnet_mm"]: r["thrust_n"] for r in geom_table.rows
                if r["backiron_mm"] == 5.0 and r["winding_mm"] == 5.0}
        assert rows[4] > rows[2]

    def test_best_geometry_minimizes_magnet_volume(self, geom_table):
        best = best_geometry(geom_table, min_thrust=1000.0)
        candidates = [r for r in geom_table.rows
                      if r["feasible"] and r.get("thrust_n", 0.0) >= 1000.0]
        assert best["magnet_volume_m3"] == min(
            r["magnet_volume_m3"] for r in candidates)

    def test_best_geometry_unreachable_floor(self, geom_table):
        with pytest.raises(NumericError):
            best_geometry(geom_table, min_thrust=1e9)

    def test_broken_case_lands_in_error_column(self):
        table = geometry_sweep(axes={
            "magnet_mm": (4,), "backiron_mm": (25.0,), "length_mm": (300.0,),
            "poles": (0,), "winding_mm": (5.0,)})
        assert len(table) == 1
        assert table.rows[0]["error"] != ""

    def test_odd_pole_count_is_infeasible_not_error(self):
        table = geometry_sweep(axes={
            "magnet_mm": (4,), "backiron_mm": (25.0,), "length_mm": (300.0,),
            "poles": (3,), "winding_mm": (5.0,)})
        row = table.rows[0]
        assert row["error"] == ""
        assert not row["feasible"]
        assert "even" in row["violations"]
