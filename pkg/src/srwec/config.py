"""Sectioned run configuration with typed access and named presets.

A config is a set of flat string-valued sections; every key carries its
unit in the name (hs_m, f_max_n). Files are INI by default, JSON as an
alternative for machine generation; both parse to the same structure
and emit back as INI. Unknown sections or keys are rejected up front so
a typo cannot silently fall back to a default.
"""

import configparser
import io
import json
from dataclasses import dataclass, field

from .errors import ValidationError

# every key the CLI recognizes, with unit and meaning; --help renders this
SCHEMA = {
    "sea": {
        "hs_m": "significant wave height, m",
        "tp_s": "spectral peak period, s",
        "gamma": "JONSWAP peakedness (1 = Pierson-Moskowitz)",
        "duration_s": "record length to synthesize, s",
        "dt_s": "wave sample spacing, s",
        "hs_list_m": "comma list of Hs for multi-sea commands, m",
        "tp_list_s": "comma list of Tp for multi-sea commands, s",
    },
    "tilt": {
        "natural_period_s": "floater pitch natural period, s",
        "damping_ratio": "pitch damping ratio",
        "static_gain": "tilt per unit wave slope at zero frequency",
    },
    "body": {
        "mass_kg": "translator mass, kg",
        "stroke_m": "usable rail stroke, m",
        "friction_n": "rail Coulomb friction magnitude, N",
    },
    "pto": {
        "kind": "control law: passive | reactive | discrete",
        "c_nspm": "damping coefficient, N s/m",
        "k_npm": "stiffness coefficient, N/m",
        "f_max_n": "force rating, N",
        "p_max_w": "power rating, W",
        "v_stop_mps": "discrete-mode re-engagement speed, m/s",
        "safety": "discrete-mode force headroom factor",
    },
    "geom": {
        "shaft_r_mm": "shaft radius, mm",
        "backiron_mm": "back-iron thickness, mm",
        "magnet_mm": "magnet thickness, mm",
        "airgap_mm": "mechanical airgap, mm",
        "winding_mm": "coil annulus depth, mm",
        "yoke_mm": "stator yoke thickness, mm",
        "poles": "pole count (even)",
        "tau_p_mm": "pole pitch, mm",
    },
    "magnet": {
        "grade": "magnet grade: N50 | N42",
        "br_t": "remanence override, T",
        "mu_r": "recoil permeability",
    },
    "winding": {
        "turns": "turns per coil",
        "awg": "wire gauge",
        "fill": "copper fill factor",
        "j_rms_apmm2": "rated winding current density, A/mm^2",
    },
    "circuit": {
        "r_phase_ohm": "per-phase winding resistance, ohm",
        "l_phase_h": "per-phase inductance, H",
        "r_load_ohm": "per-phase load resistance, ohm",
        "stroke_m": "bench rail stroke, m",
    },
    "sweep": {
        "family": "tuning family: passive | reactive",
        "seeds": "realizations averaged per case",
        "duration_s": "evaluation episode length, s",
        "tune_duration_s": "tuning episode length, s",
        "f_grid_n": "comma list of force ratings, N",
        "p_grid_w": "comma list of power ratings, W",
        "magnet_grid_mm": "comma list of magnet thicknesses, mm",
        "backiron_grid_mm": "comma list of back-iron thicknesses, mm",
        "length_grid_mm": "comma list of translator lengths, mm",
        "poles_grid": "comma list of pole counts",
        "winding_grid_mm": "comma list of coil depths, mm",
        "min_thrust_n": "thrust floor for the best-design pick, N",
    },
    "output": {
        "dir": "output directory for CSV artifacts",
        "prefix": "output file name prefix",
    },
}

PRESETS = ("fullscale", "prototype", "paper-seastates")


def _check_known(section, key=None):
    if section not in SCHEMA:
        raise ValidationError(
            f"unknown config section {section!r}; known: {', '.join(SCHEMA)}")
    if key is not None and key not in SCHEMA[section]:
        raise ValidationError(
            f"unknown key {key!r} in section {section!r}; "
            f"known: {', '.join(SCHEMA[section])}")


@dataclass(frozen=True)
class RunConfig:
    """Validated key-value sections; values kept verbatim as strings."""

    sections: tuple = field(default_factory=tuple)

    def __post_init__(self):
        seen = set()
        for name, items in self.sections:
            if name in seen:
                raise ValidationError(f"duplicate section {name!r}")
            seen.add(name)
            _check_known(name)
            for key, value in items:
                _check_known(name, key)
                if not isinstance(value, str):
                    raise ValidationError(
                        f"{name}.{key} value must be a string, got {value!r}")

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        """Read INI text, or JSON when the first character is '{'."""
        stripped = text.lstrip()
        if stripped.startswith("{"):
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"bad JSON config: {exc}") from None
            if not isinstance(data, dict) or not all(
                    isinstance(v, dict) for v in data.values()):
                raise ValidationError("JSON config must be an object of sections")
            sections = tuple(
                (name, tuple((k, _stringify(v)) for k, v in items.items()))
                for name, items in data.items())
            return cls(sections=sections)
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ValidationError(f"bad config: {exc}") from None
        sections = tuple(
            (name, tuple(parser.items(name))) for name in parser.sections())
        return cls(sections=sections)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                return cls.parse(fh.read())
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from None

    def emit(self) -> str:
        """INI text that parses back to an equal config."""
        parser = configparser.ConfigParser(interpolation=None)
        for name, items in self.sections:
            parser.add_section(name)
            for key, value in items:
                parser.set(name, key, value)
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def with_overrides(self, assignments) -> "RunConfig":
        """Apply `section.key=value` strings on top of this config."""
        updates = {}
        for text in assignments:
            target, sep, value = text.partition("=")
            section, dot, key = target.partition(".")
            if not sep or not dot or not section or not key:
                raise ValidationError(
                    f"override must look like section.key=value, got {text!r}")
            _check_known(section, key)
            updates[(section, key)] = value
        merged = {name: dict(items) for name, items in self.sections}
        for (section, key), value in updates.items():
            merged.setdefault(section, {})[key] = value
        return RunConfig(sections=tuple(
            (name, tuple(items.items())) for name, items in merged.items()))

    # -- typed access ---------------------------------------------------

    def get(self, section, key, default=None):
        _check_known(section, key)
        for name, items in self.sections:
            if name == section:
                return dict(items).get(key, default)
        return default

    def get_str(self, section, key, default=None):
        return self.get(section, key, default)

    def get_float(self, section, key, default=None):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ValidationError(
                f"{section}.{key} must be a number, got {raw!r}") from None

    def get_int(self, section, key, default=None):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(
                f"{section}.{key} must be an integer, got {raw!r}") from None

    def get_floats(self, section, key, default=()):
        raw = self.get(section, key)
        if raw is None:
            return tuple(default)
        try:
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        except ValueError:
            raise ValidationError(
                f"{section}.{key} must be comma-separated numbers, got {raw!r}"
            ) from None

    def get_ints(self, section, key, default=()):
        raw = self.get(section, key)
        if raw is None:
            return tuple(default)
        try:
            return tuple(int(tok) for tok in raw.split(",") if tok.strip())
        except ValueError:
            raise ValidationError(
                f"{section}.{key} must be comma-separated integers, got {raw!r}"
            ) from None


def _stringify(value):
    if isinstance(value, bool):
        raise ValidationError("config values must be numbers or strings")
    if isinstance(value, (int, float)):
        return "%.10g" % value if isinstance(value, float) else str(value)
    if isinstance(value, str):
        return value
    raise ValidationError(f"config value {value!r} is not a number or string")


def load_preset(name: str) -> RunConfig:
    """One of the shipped configurations (see PRESETS)."""
    if name not in PRESETS:
        raise ValidationError(
            f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    from importlib.resources import files

    text = files("srwec").joinpath(f"presets/{name}.ini").read_text()
    return RunConfig.parse(text)


def resolve_config(spec: str) -> RunConfig:
    """A config file path, or a preset name when no such file exists."""
    import os

    if os.path.exists(spec):
        return RunConfig.from_file(spec)
    if spec in PRESETS:
        return load_preset(spec)
    raise ValidationError(
        f"config {spec!r} is neither a file nor a preset "
        f"({', '.join(PRESETS)})")


def describe_keys() -> str:
    """Every recognized section.key with its meaning, for --help."""
    lines = []
    for section, keys in SCHEMA.items():
        for key, meaning in keys.items():
            lines.append(f"  {section}.{key:<18} {meaning}")
    return "\n".join(lines)
