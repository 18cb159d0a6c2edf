"""Command-line front end: one subcommand per workflow, CSV artifacts out.

Every subcommand reads an optional config file (or preset name) plus
``--set section.key=value`` overrides, writes its results as CSV under
the output directory, and prints a one-line summary. Exit codes: 0
success, 1 usage, 2 data or validation error, 3 numeric failure; every
failure also writes a machine-readable ``error_code=N`` line to stderr.
"""

import argparse
import csv
import dataclasses
import os
import sys

import numpy as np

from . import circuit, magnetics, ndbc, spectra
from . import sweep as sweep_mod
from .config import PRESETS, RunConfig, describe_keys, resolve_config
from .dynamics import BodyParams, TiltParams, simulate
from .errors import DataFormatError, NumericError, ValidationError
from .pto import Limits, PtoMode
from .spectra import SeaState

_EPILOG = "config keys (all optional unless noted):\n" + describe_keys()


def main() -> None:
    sys.exit(run(sys.argv[1:]))


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        print("error_code=1", file=sys.stderr)
        return 1
    try:
        cfg = _load_config(args)
        args.handler(args, cfg)
        return 0
    except (ValidationError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("error_code=2", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("error_code=3", file=sys.stderr)
        return 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srwec",
        description="Wave-to-wire simulation and design toolkit for a "
                    "surface-riding wave energy converter.")
    groups = parser.add_subparsers(dest="group", required=True,
                                   metavar="command")

    def leaf(sub, name, help_text, handler):
        p = sub.add_parser(
            name, help=help_text, epilog=_EPILOG,
            formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", metavar="PATH",
                       help="config file or preset name "
                            f"({', '.join(PRESETS)})")
        p.add_argument("--out", metavar="DIR",
                       help="output directory (default: output.dir or '.')")
        p.add_argument("--seed", type=int, default=None, metavar="N",
                       help="base random seed (default 0)")
        p.add_argument("--workers", type=int, default=None, metavar="N",
                       help="parallel case workers (default: available cores)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="override one config value (repeatable)")
        p.set_defaults(handler=handler)
        return p

    wave = groups.add_parser("wave", help="irregular wave synthesis")
    wave_sub = wave.add_subparsers(dest="command", required=True,
                                   metavar="subcommand")
    leaf(wave_sub, "synth", "synthesize an elevation/slope record",
         cmd_wave_synth)

    buoy = groups.add_parser("ndbc", help="buoy spectral data ingestion")
    buoy_sub = buoy.add_subparsers(dest="command", required=True,
                                   metavar="subcommand")
    ingest = leaf(buoy_sub, "ingest",
                  "characterize a spectral density file into an "
                  "occurrence table", cmd_ndbc_ingest)
    ingest.add_argument("path", help="swden-format spectral density file")

    leaf(groups, "simulate", "run one wave-to-wire episode", cmd_simulate)

    sw = groups.add_parser("sweep", help="deterministic grid studies")
    sw_sub = sw.add_subparsers(dest="command", required=True,
                               metavar="subcommand")
    leaf(sw_sub, "limits", "discrete-PTO power over force/power ratings",
         cmd_sweep_limits)
    leaf(sw_sub, "pto", "tune PTO coefficients per sea state",
         cmd_sweep_pto)
    leaf(sw_sub, "geometry", "generator thrust over the design grid",
         cmd_sweep_geometry)

    design = groups.add_parser("design", help="single-point generator design")
    design_sub = design.add_subparsers(dest="command", required=True,
                                       metavar="subcommand")
    leaf(design_sub, "generator", "evaluate one generator geometry",
         cmd_design_generator)

    bench = groups.add_parser("bench", help="tilting-rail bench replication")
    bench_sub = bench.add_subparsers(dest="command", required=True,
                                     metavar="subcommand")
    rep = leaf(bench_sub, "replicate",
               "release the prototype down the tilted rail", cmd_bench_replicate)
    rep.add_argument("--angle", type=float, default=50.0, metavar="DEG",
                     help="rail tilt angle in degrees (default 50)")

    report = groups.add_parser("report", help="fixture reproduction reports")
    report_sub = report.add_subparsers(dest="command", required=True,
                                       metavar="subcommand")
    leaf(report_sub, "table2",
         "three-strategy powers next to the bundled reference", cmd_report_table2)

    return parser


def _load_config(args) -> RunConfig:
    cfg = resolve_config(args.config) if args.config else RunConfig()
    if args.overrides:
        cfg = cfg.with_overrides(args.overrides)
    return cfg


# -- config to domain objects -------------------------------------------


def _sea_from(cfg: RunConfig) -> SeaState:
    hs = cfg.get_float("sea", "hs_m")
    tp = cfg.get_float("sea", "tp_s")
    if hs is None or tp is None:
        raise ValidationError("sea.hs_m and sea.tp_s are required")
    return SeaState(hs=hs, tp=tp, gamma=cfg.get_float("sea", "gamma", 1.0))


def _seas_from(cfg: RunConfig):
    """Sea-state list: explicit lists, else the single state, else the
    bundled representative set."""
    hs_list = cfg.get_floats("sea", "hs_list_m")
    tp_list = cfg.get_floats("sea", "tp_list_s")
    if hs_list or tp_list:
        if len(hs_list) != len(tp_list):
            raise ValidationError(
                f"sea.hs_list_m has {len(hs_list)} values but sea.tp_list_s "
                f"has {len(tp_list)}")
        gamma = cfg.get_float("sea", "gamma", 1.0)
        return [SeaState(hs=h, tp=t, gamma=gamma)
                for h, t in zip(hs_list, tp_list)]
    if cfg.get("sea", "hs_m") is not None:
        return [_sea_from(cfg)]
    return sweep_mod.representative_sea_states()


def _tilt_from(cfg: RunConfig) -> TiltParams:
    return TiltParams(
        natural_period=cfg.get_float("tilt", "natural_period_s", 7.5),
        damping_ratio=cfg.get_float("tilt", "damping_ratio", 0.2),
        static_gain=cfg.get_float("tilt", "static_gain", 3.0))


def _body_from(cfg: RunConfig) -> BodyParams:
    return BodyParams(
        mass=cfg.get_float("body", "mass_kg", 300.0),
        stroke=cfg.get_float("body", "stroke_m", 1.0),
        coulomb_friction=cfg.get_float("body", "friction_n", 0.0))


def _limits_from(cfg: RunConfig) -> Limits:
    return Limits(f_max=cfg.get_float("pto", "f_max_n", 1000.0),
                  p_max=cfg.get_float("pto", "p_max_w", 3000.0))


def _pto_from(cfg: RunConfig) -> PtoMode | None:
    kind = cfg.get_str("pto", "kind")
    if kind is None:
        return None
    limits = _limits_from(cfg)
    if kind == "passive":
        c = cfg.get_float("pto", "c_nspm")
        if c is None:
            raise ValidationError("pto.c_nspm is required for passive")
        return PtoMode.passive(c, limits)
    if kind == "reactive":
        c = cfg.get_float("pto", "c_nspm")
        k = cfg.get_float("pto", "k_npm")
        if c is None or k is None:
            raise ValidationError(
                "pto.c_nspm and pto.k_npm are required for reactive")
        return PtoMode.reactive(k, c, limits)
    if kind == "discrete":
        return PtoMode.discrete(limits,
                                v_stop=cfg.get_float("pto", "v_stop_mps", 0.02),
                                safety=cfg.get_float("pto", "safety", 1.5))
    raise ValidationError(
        f"pto.kind must be passive, reactive or discrete, got {kind!r}")


def _geom_from(cfg: RunConfig) -> magnetics.GeneratorGeometry:
    # defaults reproduce the shipped full-scale design point
    return magnetics.GeneratorGeometry.from_thicknesses(
        shaft_r=cfg.get_float("geom", "shaft_r_mm", 50.0) * 1e-3,
        backiron_t=cfg.get_float("geom", "backiron_mm", 25.0) * 1e-3,
        magnet_t=cfg.get_float("geom", "magnet_mm", 4.0) * 1e-3,
        airgap=cfg.get_float("geom", "airgap_mm", 1.0) * 1e-3,
        winding_t=cfg.get_float("geom", "winding_mm", 5.0) * 1e-3,
        yoke_t=cfg.get_float("geom", "yoke_mm", 5.0) * 1e-3,
        poles=cfg.get_int("geom", "poles", 8),
        tau_p=cfg.get_float("geom", "tau_p_mm", 37.5) * 1e-3)


def _magnet_from(cfg: RunConfig) -> magnetics.MagnetSpec:
    spec = magnetics.MagnetSpec.from_grade(
        cfg.get_str("magnet", "grade", "N50"),
        mu_r=cfg.get_float("magnet", "mu_r", 1.05))
    br = cfg.get_float("magnet", "br_t")
    if br is not None:
        spec = dataclasses.replace(spec, br=br)
    return spec


def _winding_from(cfg: RunConfig,
                  geom: magnetics.GeneratorGeometry) -> magnetics.WindingSpec:
    wire = magnetics.awg_area(cfg.get_int("winding", "awg", 20))
    fill = cfg.get_float("winding", "fill", 0.75)
    turns = cfg.get_int("winding", "turns")
    if turns is None:
        turns = magnetics.turns_for(geom.coil_width, geom.winding_t, fill, wire)
    return magnetics.WindingSpec(
        turns, wire, fill=fill,
        j_rms=cfg.get_float("winding", "j_rms_apmm2", 5.0) * 1e6)


# -- output helpers ------------------------------------------------------


def _out_path(args, cfg: RunConfig, default_name: str) -> str:
    out_dir = args.out or cfg.get_str("output", "dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    prefix = cfg.get_str("output", "prefix", "")
    return os.path.join(out_dir, prefix + default_name)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.10g" % float(value)
    return str(value)


def _write_rows(path: str, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(col)) for col in columns])


def _seed(args) -> int:
    return args.seed if args.seed is not None else 0


def _workers(args) -> int:
    if args.workers is not None:
        if args.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {args.workers}")
        return args.workers
    return os.cpu_count() or 1


# -- subcommands ---------------------------------------------------------


def cmd_wave_synth(args, cfg: RunConfig) -> None:
    sea = _sea_from(cfg)
    duration = cfg.get_float("sea", "duration_s", 3600.0)
    dt = cfg.get_float("sea", "dt_s", 0.05)
    wave = spectra.realize(spectra.jonswap(sea), duration, dt, _seed(args))
    path = _out_path(args, cfg, "wave.csv")
    _write_rows(path, ("t_s", "elevation_m", "slope_rad"),
                [{"t_s": t, "elevation_m": e, "slope_rad": s}
                 for t, e, s in zip(wave.t, wave.elevation, wave.slope)])
    achieved = 4.0 * float(np.std(wave.elevation))
    print(f"wave synth: Hs {achieved:.3f} m (target {sea.hs:g} m), "
          f"{duration:g} s at {dt:g} s -> {path}")


def cmd_ndbc_ingest(args, cfg: RunConfig) -> None:
    try:
        with open(args.path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {args.path}: {exc}") from None
    parsed = ndbc.parse_swden(text)
    table = ndbc.characterize(parsed.records)
    path = _out_path(args, cfg, "occurrence.csv")
    with open(path, "w", newline="") as fh:
        fh.write(ndbc.write_table(table))
    print(f"ndbc ingest: {table.n_records} usable of {len(parsed.records)} "
          f"records ({len(parsed.row_errors)} bad rows), "
          f"{table.pct.sum():.2f}% binned -> {path}")


def cmd_simulate(args, cfg: RunConfig) -> None:
    sea = _sea_from(cfg)
    duration = cfg.get_float("sea", "duration_s", 600.0)
    result = simulate(sea, _tilt_from(cfg), _body_from(cfg), _pto_from(cfg),
                      duration=duration, seed=_seed(args),
                      warmup=min(60.0, 0.2 * duration))
    path = _out_path(args, cfg, "simulate.csv")
    _write_rows(path, ("hs_m", "tp_s", "duration_s", "seed",
                       "avg_power_out_w", "avg_power_gen_w", "peak_force_n",
                       "peak_power_w", "endstop_impacts", "max_penetration_m",
                       "energy_drift_rel"),
                [{"hs_m": sea.hs, "tp_s": sea.tp, "duration_s": duration,
                  "seed": _seed(args),
                  "avg_power_out_w": result.avg_power_out,
                  "avg_power_gen_w": result.avg_power_gen,
                  "peak_force_n": result.peak_force,
                  "peak_power_w": result.peak_power,
                  "endstop_impacts": result.endstop_impacts,
                  "max_penetration_m": result.max_penetration,
                  "energy_drift_rel": result.energy.relative_drift}])
    print(f"simulate: Hs {sea.hs:g} m Tp {sea.tp:g} s, {duration:g} s -> "
          f"{result.avg_power_out:.1f} W avg -> {path}")


def cmd_sweep_limits(args, cfg: RunConfig) -> None:
    seas = _seas_from(cfg)
    f_grid = cfg.get_floats("sweep", "f_grid_n", (500.0, 1000.0, 1500.0))
    p_grid = cfg.get_floats("sweep", "p_grid_w", (3000.0,))
    table = sweep_mod.limit_sweep(
        f_grid, p_grid, seas, _body_from(cfg), _tilt_from(cfg),
        duration=cfg.get_float("sweep", "duration_s", 600.0),
        seeds=cfg.get_int("sweep", "seeds", 3),
        base_seed=_seed(args),
        v_stop=cfg.get_float("pto", "v_stop_mps", 0.02),
        safety=cfg.get_float("pto", "safety", 1.5),
        workers=_workers(args))
    path = _out_path(args, cfg, "limits.csv")
    table.to_csv(path)
    knees = sweep_mod.knee_report(table)
    knee_path = _out_path(args, cfg, "limits_knee.csv")
    _write_rows(knee_path, ("tp_s", "hs_m", "p_max_w", "knee_f_max_n"), knees)
    print(f"sweep limits: {len(table)} cases over {len(seas)} sea states -> "
          f"{path}, knees -> {knee_path}")


def cmd_sweep_pto(args, cfg: RunConfig) -> None:
    family = cfg.get_str("sweep", "family", "passive")
    seas = _seas_from(cfg)
    limits = _limits_from(cfg)
    body, tilt = _body_from(cfg), _tilt_from(cfg)
    duration = cfg.get_float("sweep", "tune_duration_s", 300.0)
    seeds = cfg.get_int("sweep", "seeds", 3)
    base_seed = _seed(args)
    grid = sweep_mod.GridSpec.from_dict(
        {"sea_index": list(range(len(seas)))}, seed=base_seed)

    def evaluate(params, _seed_seq):
        index = params["sea_index"]
        sea = seas[index]
        tuned = sweep_mod.tune_pto(
            family, sea, limits, body, tilt, duration=duration, seeds=seeds,
            base_seed=(base_seed, index))
        return {"hs_m": sea.hs, "tp_s": sea.tp, "c_nspm": tuned.c_pto,
                "k_npm": tuned.k_pto, "avg_power_w": tuned.avg_power}

    table = sweep_mod.sweep(grid, evaluate, workers=_workers(args))
    path = _out_path(args, cfg, "pto.csv")
    table.to_csv(path)
    print(f"sweep pto: tuned {family} damping for {len(seas)} sea states -> "
          f"{path}")


def cmd_sweep_geometry(args, cfg: RunConfig) -> None:
    axes = {}
    for key, axis in (("magnet_grid_mm", "magnet_mm"),
                      ("backiron_grid_mm", "backiron_mm"),
                      ("length_grid_mm", "length_mm"),
                      ("winding_grid_mm", "winding_mm")):
        values = cfg.get_floats("sweep", key)
        if values:
            axes[axis] = values
    poles = cfg.get_ints("sweep", "poles_grid")
    if poles:
        axes["poles"] = poles
    geom_defaults = _geom_from(cfg)
    table = sweep_mod.geometry_sweep(
        axes=axes or None,
        shaft_r_mm=geom_defaults.shaft_r * 1e3,
        airgap_mm=geom_defaults.g * 1e3,
        yoke_mm=geom_defaults.yoke_t * 1e3,
        fill=cfg.get_float("winding", "fill", 0.75),
        wire_gauge=cfg.get_int("winding", "awg", 20),
        j_rms=cfg.get_float("winding", "j_rms_apmm2", 5.0) * 1e6,
        grade=cfg.get_str("magnet", "grade", "N50"),
        workers=_workers(args))
    path = _out_path(args, cfg, "geometry.csv")
    table.to_csv(path)
    feasible = sum(1 for r in table.rows if r.get("feasible"))
    min_thrust = cfg.get_float("sweep", "min_thrust_n", 1000.0)
    try:
        best = sweep_mod.best_geometry(table, min_thrust=min_thrust)
        pick = (f"best: magnet {best['magnet_mm']:g} mm, "
                f"{best['poles']:g} poles, {best['thrust_n']:.0f} N")
    except NumericError:
        pick = f"no design reaches {min_thrust:g} N"
    print(f"sweep geometry: {len(table)} cases, {feasible} feasible, "
          f"{pick} -> {path}")


def cmd_design_generator(args, cfg: RunConfig) -> None:
    geom = _geom_from(cfg)
    case_id = (f"p{geom.poles}-tau{geom.tau_p * 1e3:g}"
               f"-mag{geom.magnet_t * 1e3:g}")
    row = {"case_id": case_id, "shaft_r_mm": geom.shaft_r * 1e3,
           "backiron_mm": geom.backiron_t * 1e3,
           "magnet_mm": geom.magnet_t * 1e3, "airgap_mm": geom.g * 1e3,
           "winding_mm": geom.winding_t * 1e3, "yoke_mm": geom.yoke_t * 1e3,
           "poles": geom.poles, "tau_p_mm": geom.tau_p * 1e3}
    violations = magnetics.validate_geometry(geom)
    path = _out_path(args, cfg, "design.csv")
    columns = tuple(row) + ("force_n", "ke_vspm", "ripple_pct", "feasible",
                            "violations")
    if violations:
        row.update(feasible=False, violations="; ".join(violations))
        _write_rows(path, columns, [row])
        print(f"design generator: {case_id} infeasible "
              f"({'; '.join(violations)}) -> {path}")
        return
    magnet = _magnet_from(cfg)
    winding = _winding_from(cfg, geom)
    field = magnetics.solve_field(geom, magnet)
    profile = magnetics.emf_profile(field, geom, winding)
    force = magnetics.thrust(field, geom, winding, j_rms=winding.j_rms)
    ripple = magnetics.force_ripple(field, geom, winding)
    row.update(force_n=force, ke_vspm=profile.amplitude,
               ripple_pct=100.0 * ripple, feasible=True, violations="")
    _write_rows(path, columns, [row])
    print(f"design generator: {case_id} -> {force:.0f} N at rated current, "
          f"k_e {profile.amplitude:.1f} V s/m, ripple "
          f"{100.0 * ripple:.2f}% -> {path}")


def cmd_bench_replicate(args, cfg: RunConfig) -> None:
    proto = circuit.prototype_bench()
    overrides = {}
    for key, field_name in (("r_phase_ohm", "r_phase"), ("l_phase_h", "l_phase"),
                            ("r_load_ohm", "r_load"), ("stroke_m", "stroke")):
        value = cfg.get_float("circuit", key)
        if value is not None:
            overrides[field_name] = value
    if overrides:
        proto = dataclasses.replace(proto, **overrides)
    run_result = circuit.replicate_bench(args.angle, proto=proto, record=True)
    path = _out_path(args, cfg, "bench.csv")
    circuit.write_bench_csv(path, run_result)
    print(f"bench replicate: {args.angle:g} deg -> peak "
          f"{run_result.peak_voltage:.2f} V, {run_result.peak_current:.3f} A, "
          f"{run_result.peak_power:.1f} W, slide "
          f"{run_result.slide_time:.2f} s -> {path}")


def cmd_report_table2(args, cfg: RunConfig) -> None:
    configured = (cfg.get_floats("sea", "hs_list_m")
                  or cfg.get_floats("sea", "tp_list_s")
                  or cfg.get("sea", "hs_m") is not None)
    seas = _seas_from(cfg) if configured else None
    comparison = sweep_mod.compare_strategies(
        seas=seas, limits=_limits_from(cfg), body=_body_from(cfg),
        tilt=_tilt_from(cfg),
        tune_duration=cfg.get_float("sweep", "tune_duration_s", 300.0),
        duration=cfg.get_float("sweep", "duration_s", 600.0),
        seeds=cfg.get_int("sweep", "seeds", 3),
        base_seed=_seed(args),
        v_stop=cfg.get_float("pto", "v_stop_mps", 0.02),
        safety=cfg.get_float("pto", "safety", 1.5),
        workers=_workers(args))
    merged = comparison.merged()
    columns = ("tp_s", "hs_m", "passive_w", "reactive_w", "discrete_w",
               "ref_passive_w", "ref_reactive_w", "ref_discrete_w",
               "ratio_passive_w", "ratio_reactive_w", "ratio_discrete_w")
    path = _out_path(args, cfg, "table2.csv")
    _write_rows(path, columns, merged)

    print("  Tp     passive (sim/ref)      reactive (sim/ref)     "
          "discrete (sim/ref)")
    for row in merged:
        cells = []
        for name in ("passive_w", "reactive_w", "discrete_w"):
            ratio = row[f"ratio_{name}"]
            ratio_txt = f"x{ratio:.2f}" if np.isfinite(ratio) else "  n/a"
            cells.append(f"{row[name]:7.1f}/{row[f'ref_{name}']:7.1f} "
                         f"{ratio_txt}")
        print(f"{row['tp_s']:6.2f} " + "  ".join(cells))
    dom = comparison.dominance()
    print(f"report table2: discrete >= passive in "
          f"{dom['discrete_ge_passive']}/{dom['states']}, >= reactive in "
          f"{dom['discrete_ge_reactive']}/{dom['states']} -> {path}")
