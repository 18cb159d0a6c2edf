"""Deterministic grid evaluation over simulation and design cases.

A sweep is a pure function of its grid and seed policy: cases are
enumerated lexicographically over the named axes, every case gets a seed
derived from (base seed, case index), and rows come back in enumeration
order no matter how the work was scheduled. Rerunning a sweep with the
same inputs reproduces the output CSV byte for byte.

On top of the generic engine sit the study drivers: PTO coefficient
tuning (coarse log grid then local refinement, averaged over common
wave realizations), force/power rating sweeps with a diminishing-
returns knee report, the three-strategy comparison over the
representative site sea states, and the constrained generator geometry
sweep ranked by thrust at rated current density.
"""

import csv
import hashlib
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import magnetics, ndbc
from .dynamics import (
    DEFAULT_DT,
    DEFAULT_WAVE_DT,
    BodyParams,
    TiltParams,
    simulate,
    tilt_from_slope,
)
from .errors import NumericError, ValidationError
from .pto import Limits, PtoMode
from .spectra import SeaState, jonswap, realize

# full-scale machine ratings and a translator heavy enough that they
# bind in moderate seas
RATED_LIMITS = Limits(f_max=1000.0, p_max=3000.0)
FULLSCALE_BODY = BodyParams(mass=300.0)

# coarse tuning grids: quarter-decade damping steps, k grid includes 0
# so the reactive family contains every passive candidate
C_PTO_COARSE = tuple(np.geomspace(10.0, 1e4, 13))
K_PTO_COARSE = (0.0,) + tuple(np.geomspace(10.0, 1e4, 6))
REFINE_POINTS = 5

TUNE_DURATION = 300.0
EVAL_DURATION = 600.0
TUNE_SEEDS = 3

KNEE_THRESHOLD = 0.02  # relative gain per unit step defining the knee
KNEE_FORCE_STEP = 100.0  # N
KNEE_POWER_STEP = 300.0  # W


@dataclass(frozen=True)
class GridSpec:
    """Named axes of explicit values plus fixed base parameters.

    Cases enumerate lexicographically: the last axis varies fastest.
    Per-case seeds derive from (seed, case index).
    """

    axes: tuple
    base: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if not self.axes:
            raise ValidationError("grid needs at least one axis")
        for name, values in self.axes:
            if not isinstance(name, str) or not name:
                raise ValidationError(f"axis name must be a string, got {name!r}")
            if len(values) == 0:
                raise ValidationError(f"axis {name!r} has no values")

    @classmethod
    def from_dict(cls, axes, base=None, seed=0):
        axes_t = tuple((str(k), tuple(v)) for k, v in axes.items())
        base_t = tuple(sorted((base or {}).items()))
        return cls(axes=axes_t, base=base_t, seed=seed)

    @property
    def case_count(self) -> int:
        n = 1
        for _, values in self.axes:
            n *= len(values)
        return n

    def case_params(self, index):
        """Parameter dict of one case (base plus axis values)."""
        if not 0 <= index < self.case_count:
            raise ValidationError(f"case index {index} out of range")
        params = dict(self.base)
        rem = index
        for name, values in reversed(self.axes):
            rem, pos = divmod(rem, len(values))
            params[name] = values[pos]
        return params

    def cases(self):
        names = [name for name, _ in self.axes]
        for combo in itertools.product(*(v for _, v in self.axes)):
            params = dict(self.base)
            params.update(zip(names, combo))
            yield params

    def case_seed(self, index) -> np.random.SeedSequence:
        return np.random.SeedSequence((self.seed, index))

    @property
    def provenance(self) -> str:
        digest = hashlib.sha256(
            repr((self.axes, self.base, self.seed)).encode()).hexdigest()
        return f"{digest[:12]}:{self.seed}"


@dataclass(frozen=True)
class SweepTable:
    """Ordered case rows with their metrics and an origin tag."""

    columns: tuple
    rows: tuple
    provenance: str

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        if name not in self.columns:
            raise ValidationError(f"no column {name!r}")
        return [row.get(name) for row in self.rows]

    def to_csv(self, path=None):
        """Render as CSV; deterministic float formatting, so identical
        tables produce identical bytes."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        buf.write(f"# provenance={self.provenance}\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_format_cell(row.get(col)) for col in self.columns])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.10g" % float(value)
    return str(value)


def sweep(grid, evaluator, workers=1):
    """Evaluate every grid case once and assemble rows in case order.

    evaluator(params, seed) returns a metrics dict; an exception inside
    it is recorded in the row's error column and the sweep continues.
    Worker threads only change scheduling, never content.
    """
    if not workers >= 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    cases = list(grid.cases())

    def run_case(index):
        params = cases[index]
        try:
            metrics = evaluator(dict(params), grid.case_seed(index))
            return params, dict(metrics), ""
        except Exception as exc:  # noqa: BLE001 - per-row error contract
            return params, {}, f"{type(exc).__name__}: {exc}"

    if workers == 1:
        results = [run_case(i) for i in range(len(cases))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_case, range(len(cases))))

    axis_names = [name for name, _ in grid.axes]
    metric_names = []
    for _, metrics, _ in results:
        for key in metrics:
            if key not in metric_names and key not in axis_names:
                metric_names.append(key)
    columns = tuple(axis_names + metric_names + ["error"])
    rows = []
    for params, metrics, error in results:
        row = {name: params[name] for name in axis_names}
        row.update(metrics)
        row["error"] = error
        rows.append(row)
    return SweepTable(columns=columns, rows=tuple(rows),
                      provenance=grid.provenance)


def _entropy(base_seed, index):
    base = base_seed if isinstance(base_seed, tuple) else (base_seed,)
    return np.random.SeedSequence(base + (index,))


def _tilt_realizations(sea, tilt, duration, seeds, base_seed,
                       wave_dt=DEFAULT_WAVE_DT):
    """Common-random-number tilt series for paired candidate comparisons.

    A SeaState yields one realization per seed index; an external
    (dt, theta) series is already a realization and is used as is.
    """
    if isinstance(sea, SeaState):
        out = []
        for i in range(seeds):
            wave = realize(jonswap(sea), duration + wave_dt, wave_dt,
                           _entropy(base_seed, i))
            out.append((wave_dt, tilt_from_slope(wave.slope, wave_dt, tilt)))
        return out
    return [sea]


def _mean_power(realizations, body, mode, duration, dt, warmup):
    total = 0.0
    for series in realizations:
        result = simulate(series, body=body, pto=mode, duration=duration,
                          dt=dt, warmup=warmup)
        total += result.avg_power_out
    return total / len(realizations)


def _refine_axis(values, best_index, n=REFINE_POINTS):
    """Points spanning the coarse cells adjacent to the best one."""
    lo = values[max(best_index - 1, 0)]
    hi = values[min(best_index + 1, len(values) - 1)]
    if lo == hi:
        return [lo]
    if lo <= 0.0:
        return list(np.linspace(lo, hi, n))
    return list(np.geomspace(lo, hi, n))


@dataclass(frozen=True)
class TuneResult:
    """Best PTO parameters for one sea state and the power they achieve."""

    mode: PtoMode
    avg_power: float
    coarse_power: float
    candidates: int

    @property
    def c_pto(self):
        return self.mode.c_pto

    @property
    def k_pto(self):
        return self.mode.k_pto


def tune_pto(family, sea, limits=RATED_LIMITS, body=FULLSCALE_BODY,
             tilt=TiltParams(), duration=TUNE_DURATION, seeds=TUNE_SEEDS,
             base_seed=0, dt=DEFAULT_DT, warmup=None, tilt_series=None):
    """Maximize net average power over the damping (and stiffness) grid.

    Two stages: the coarse log grid, then REFINE_POINTS-per-axis
    refinement spanning the cells around the best coarse candidate.
    Every candidate sees the same wave realizations (common random
    numbers), so the comparison is paired and the refined winner is
    never worse than the coarse one. Ties keep the earliest candidate,
    i.e. the smallest damping.
    """
    if family not in ("passive", "reactive"):
        raise ValidationError(f"family must be passive or reactive, got {family!r}")
    if warmup is None:
        warmup = min(60.0, 0.2 * duration)
    realizations = tilt_series or _tilt_realizations(
        sea, tilt, duration, seeds, base_seed)

    def build(c, k):
        if family == "passive":
            return PtoMode.passive(c, limits)
        return PtoMode.reactive(k, c, limits)

    def best_of(candidates):
        powers = [
            _mean_power(realizations, body, build(c, k), duration, dt, warmup)
            for c, k in candidates
        ]
        i = int(np.argmax(powers))
        return candidates[i], powers[i]

    k_values = K_PTO_COARSE if family == "reactive" else (0.0,)
    coarse = [(c, k) for c in C_PTO_COARSE for k in k_values]
    (c0, k0), p0 = best_of(coarse)

    c_ref = _refine_axis(C_PTO_COARSE, C_PTO_COARSE.index(c0))
    k_ref = (_refine_axis(list(K_PTO_COARSE), list(K_PTO_COARSE).index(k0))
             if family == "reactive" else [0.0])
    refined = [(c0, k0)] + [(c, k) for c in c_ref for k in k_ref]
    (c1, k1), p1 = best_of(refined)

    return TuneResult(mode=build(c1, k1), avg_power=p1, coarse_power=p0,
                      candidates=len(coarse) + len(refined))


def representative_sea_states():
    """One sea state per energy-period column of the bundled site table."""
    return ndbc.select_representative(ndbc.load_occurrence_reference())


def limit_sweep(f_grid, p_grid, seas, body=FULLSCALE_BODY, tilt=TiltParams(),
                duration=EVAL_DURATION, seeds=TUNE_SEEDS, base_seed=0,
                dt=DEFAULT_DT, v_stop=0.02, safety=1.5, workers=1):
    """Discrete-PTO average power over a force/power rating grid.

    A zero force or power rating cannot extract anything and is scored
    0 W without simulation. Realizations are shared per sea state, so
    power differences across ratings are paired comparisons.
    """
    seas = list(seas)
    f_grid = [float(f) for f in f_grid]
    p_grid = [float(p) for p in p_grid]
    if not seas or not f_grid or not p_grid:
        raise ValidationError("limit sweep needs sea states and nonempty grids")
    cache = {}

    def realizations(sea_index):
        if sea_index not in cache:
            cache[sea_index] = _tilt_realizations(
                seas[sea_index], tilt, duration, seeds,
                (base_seed, sea_index))
        return cache[sea_index]

    grid = GridSpec.from_dict(
        {"sea_index": list(range(len(seas))), "f_max_n": f_grid,
         "p_max_w": p_grid},
        seed=base_seed,
    )

    def evaluate(params, _seed):
        sea = seas[params["sea_index"]]
        row = {"hs_m": sea.hs, "tp_s": sea.tp}
        if params["f_max_n"] <= 0.0 or params["p_max_w"] <= 0.0:
            row["avg_power_w"] = 0.0
            return row
        mode = PtoMode.discrete(
            Limits(params["f_max_n"], params["p_max_w"]),
            v_stop=v_stop, safety=safety)
        row["avg_power_w"] = _mean_power(
            realizations(params["sea_index"]), body, mode, duration, dt,
            min(60.0, 0.2 * duration))
        return row

    return sweep(grid, evaluate, workers=workers)


def knee_report(table, axis="f_max_n", step=KNEE_FORCE_STEP,
                threshold=KNEE_THRESHOLD):
    """Rating beyond which the marginal power gain goes flat.

    For each sea state (and fixed value of the other rating axis) the
    knee is the first grid value where the relative gain to the next
    value, scaled per `step` units, falls below `threshold`. NaN when
    the curve never flattens within the grid.
    """
    other = "p_max_w" if axis == "f_max_n" else "f_max_n"
    if axis not in table.columns or other not in table.columns:
        raise ValidationError(f"table lacks rating axes {axis!r}/{other!r}")
    groups = {}
    for row in table.rows:
        key = (row["tp_s"], row["hs_m"], row[other])
        groups.setdefault(key, []).append(row)
    report = []
    for (tp, hs, fixed), rows in sorted(groups.items()):
        rows = sorted(rows, key=lambda r: r[axis])
        knee = math.nan
        for a, b in zip(rows, rows[1:]):
            dx = b[axis] - a[axis]
            if dx <= 0 or a["avg_power_w"] <= 0:
                continue
            gain = (b["avg_power_w"] - a["avg_power_w"]) / a["avg_power_w"]
            if gain * (step / dx) < threshold:
                knee = a[axis]
                break
        report.append({"tp_s": tp, "hs_m": hs, other: fixed,
                       "knee_" + axis: knee})
    return report


@dataclass(frozen=True)
class StrategyComparison:
    """Tuned three-strategy powers next to the bundled reference."""

    simulated: SweepTable
    reference: tuple

    def merged(self):
        """Row dicts pairing simulated and reference powers by tp."""
        ref_by_tp = {round(r["tp_s"], 2): r for r in self.reference}
        out = []
        for row in self.simulated.rows:
            ref = ref_by_tp.get(round(row["tp_s"], 2))
            merged = dict(row)
            for name in ("passive_w", "reactive_w", "discrete_w"):
                merged[f"ref_{name}"] = ref[name] if ref else math.nan
                if ref and ref[name]:
                    merged[f"ratio_{name}"] = row[name] / ref[name]
                else:
                    merged[f"ratio_{name}"] = math.nan
            out.append(merged)
        return out

    def dominance(self):
        """How often the discrete strategy beats the tuned others."""
        ge_passive = sum(
            1 for r in self.simulated.rows if r["discrete_w"] >= r["passive_w"])
        ge_reactive = sum(
            1 for r in self.simulated.rows if r["discrete_w"] >= r["reactive_w"])
        return {"discrete_ge_passive": ge_passive,
                "discrete_ge_reactive": ge_reactive,
                "states": len(self.simulated.rows)}


def load_strategy_reference():
    """Bundled per-sea-state average power of the three PTO strategies."""
    from importlib.resources import files

    text = files("srwec").joinpath(
        "fixtures/strategy_power_reference.csv").read_text()
    rows = []
    for record in csv.DictReader(io.StringIO(text)):
        rows.append({key: float(value) for key, value in record.items()})
    return tuple(rows)


def compare_strategies(seas=None, limits=RATED_LIMITS, body=FULLSCALE_BODY,
                       tilt=TiltParams(), tune_duration=TUNE_DURATION,
                       duration=EVAL_DURATION, seeds=TUNE_SEEDS, base_seed=0,
                       dt=DEFAULT_DT, v_stop=0.02, safety=1.5, workers=1):
    """Tune passive and reactive PTO per sea state and score all three.

    Defaults run the representative site sea states. Tuning and scoring
    share wave realizations per sea state; the discrete strategy has no
    tuned coefficient, only the common ratings.
    """
    seas = list(seas) if seas is not None else representative_sea_states()
    if not seas:
        raise ValidationError("no sea states to compare")

    grid = GridSpec.from_dict({"sea_index": list(range(len(seas)))},
                              seed=base_seed)

    def evaluate(params, _seed):
        index = params["sea_index"]
        sea = seas[index]
        warm = min(60.0, 0.2 * duration)
        tune_series = _tilt_realizations(
            sea, tilt, tune_duration, seeds, (base_seed, index))
        eval_series = _tilt_realizations(
            sea, tilt, duration, seeds, (base_seed, index, 1))
        passive = tune_pto("passive", sea, limits, body, tilt,
                           duration=tune_duration, dt=dt,
                           tilt_series=tune_series)
        reactive = tune_pto("reactive", sea, limits, body, tilt,
                            duration=tune_duration, dt=dt,
                            tilt_series=tune_series)
        discrete = PtoMode.discrete(limits, v_stop=v_stop, safety=safety)
        return {
            "hs_m": sea.hs,
            "tp_s": sea.tp,
            "c_passive_nspm": passive.c_pto,
            "c_reactive_nspm": reactive.c_pto,
            "k_reactive_npm": reactive.k_pto,
            "passive_w": _mean_power(eval_series, body, passive.mode,
                                     duration, dt, warm),
            "reactive_w": _mean_power(eval_series, body, reactive.mode,
                                      duration, dt, warm),
            "discrete_w": _mean_power(eval_series, body, discrete,
                                      duration, dt, warm),
        }

    table = sweep(grid, evaluate, workers=workers)
    failed = [row["error"] for row in table.rows if row["error"]]
    if failed:
        raise NumericError(f"strategy comparison failed: {failed[0]}")
    return StrategyComparison(simulated=table,
                              reference=load_strategy_reference())


GEOMETRY_GRID = {
    "magnet_mm": tuple(range(2, 11)),
    "backiron_mm": (5.0, 10.0, 15.0, 20.0, 25.0),
    "length_mm": (100.0, 150.0, 200.0, 250.0, 300.0),
    "poles": (2, 4, 6, 8, 10, 12),
    "winding_mm": (5.0, 10.0, 15.0, 20.0, 25.0),
}


def geometry_sweep(axes=None, shaft_r_mm=50.0, airgap_mm=1.0, yoke_mm=5.0,
                   fill=0.75, wire_gauge=20, j_rms=magnetics.RATED_J_RMS,
                   grade="N50", n_harmonics=15, base_seed=0, workers=1):
    """Thrust at rated current density over the generator design grid.

    Infeasible cases (radius cap, shaft floor, malformed stack) stay in
    the table with their violation text and no metrics. Thrust uses the
    yoked field solution and a full winding at the given fill.
    """
    grid = GridSpec.from_dict(dict(GEOMETRY_GRID, **(axes or {})),
                              seed=base_seed)
    magnet = magnetics.MagnetSpec.from_grade(grade)
    wire = magnetics.awg_area(wire_gauge)

    def evaluate(params, _seed):
        tau_p = params["length_mm"] * 1e-3 / params["poles"]
        geom = magnetics.GeneratorGeometry.from_thicknesses(
            shaft_r=shaft_r_mm * 1e-3,
            backiron_t=params["backiron_mm"] * 1e-3,
            magnet_t=params["magnet_mm"] * 1e-3,
            airgap=airgap_mm * 1e-3,
            winding_t=params["winding_mm"] * 1e-3,
            yoke_t=yoke_mm * 1e-3,
            poles=params["poles"],
            tau_p=tau_p,
        )
        violations = magnetics.validate_geometry(geom)
        volume = math.pi * (geom.rm**2 - geom.r0**2) * geom.le
        row = {
            "re_mm": geom.re * 1e3,
            "feasible": not violations,
            "magnet_volume_m3": volume,
        }
        if violations:
            row["violations"] = "; ".join(violations)
            return row
        field = magnetics.solve_field(geom, magnet, n_harmonics=n_harmonics)
        turns = magnetics.turns_for(geom.coil_width, geom.winding_t, fill, wire)
        winding = magnetics.WindingSpec(turns, wire, fill=fill, j_rms=j_rms)
        profile = magnetics.emf_profile(field, geom, winding)
        row["k_e_vs_per_m"] = profile.amplitude
        row["thrust_n"] = magnetics.thrust(field, geom, winding, j_rms=j_rms)
        row["violations"] = ""
        return row

    return sweep(grid, evaluate, workers=workers)


def best_geometry(table, min_thrust=1000.0):
    """Smallest-magnet-volume feasible design meeting the thrust floor."""
    best = None
    for row in table.rows:
        if not row.get("feasible") or row.get("error"):
            continue
        if row.get("thrust_n") is None or row["thrust_n"] < min_thrust:
            continue
        if best is None or row["magnet_volume_m3"] < best["magnet_volume_m3"]:
            best = row
    if best is None:
        raise NumericError(
            f"no feasible design reaches {min_thrust:g} N at rated current")
    return best
