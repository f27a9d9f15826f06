"""Flat ``key = value`` scenario files.

::

    [nopo1]
    cavity_length = 101.5 mm
    finesse = 195

Each key has a fixed unit.  A value may repeat the unit after the number;
any other unit is rejected.  Unknown sections and keys are rejected too, and
every error names the offending line.  The stdlib ``configparser`` does not
keep line numbers, hence this small reader.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable

from .cascade_model import CascadeConfig
from .errors import ConfigError
from .nopo_model import NoiseInputSpectrum, NopoParams


@dataclass(frozen=True)
class Key:
    unit: str | None
    kind: Callable[[str], Any] = float
    default: Any = None
    required: bool = False
    doc: str = ""


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _text(text: str) -> str:
    return text


_NOPO_KEYS = {
    "pump_wavelength": Key("nm", required=True),
    "signal_wavelength": Key("nm", required=True),
    "idler_wavelength": Key("nm", required=True),
    "cavity_length": Key("mm", required=True),
    "finesse": Key(None, required=True),
    "output_transmission": Key(None, required=True, doc="output coupler power transmission"),
    "threshold_power": Key("mW", required=True),
    "pump_power": Key("mW", required=True),
    "intracavity_loss": Key(None, doc="optional; checked against 2π/finesse"),
    "input_transmission": Key(None, default=0.0),
    "pump_coupling": Key(None, default=1.0, doc="fraction of pump fluctuations reaching the crystal"),
}

SCHEMA: dict[str, dict[str, Key]] = {
    "nopo1": _NOPO_KEYS,
    "nopo2": _NOPO_KEYS,
    "cascade": {
        "analysis_frequency": Key("MHz", required=True),
        "a1_power": Key("mW", default=17.0),
        "tap_ratio": Key(None),
        "bypass_nopo1": Key(None, _bool, False),
        "bypass_nopo2": Key(None, _bool, False),
    },
    "detection": {
        "eta_a2": Key(None, default=1.0),
        "eta_a3": Key(None, default=1.0),
        "eta_a4": Key(None, default=1.0),
    },
    "pump": {
        "s_x": Key(None, default=1.0, doc="laser amplitude noise relative to QNL"),
        "s_y": Key(None, default=1.0, doc="laser phase noise relative to QNL"),
    },
    "paths": {
        "attenuation_table": Key(None, _text),
        "dispersion_data": Key(None, _text),
        "targets": Key(None, _text, doc="measurement CSV used by calibrate"),
    },
    "calibration": {
        "free": Key(None, _text, doc="comma-separated parameter names"),
        "weights": Key(None, _text, "1,1,1,1,1,1"),
        "max_evaluations": Key(None, int, 10_000),
        **{f"start_{p}": Key(None) for p in ("eta_a2", "eta_a3", "eta_a4", "eta_a34", "pump_s_x", "pump_s_y", "tap_ratio")},
    },
}

REQUIRED_SECTIONS = ("nopo1", "nopo2", "cascade")


def _convert(section: str, name: str, key: Key, raw: str, where: str) -> Any:
    parts = raw.split()
    if key.kind is _text:
        return raw
    if not parts:
        raise ConfigError(f"{where}: {section}.{name} has no value")
    if len(parts) > 2:
        raise ConfigError(f"{where}: {section}.{name}: cannot parse {raw!r}")
    if len(parts) == 2:
        unit = parts[1]
        if key.unit is None:
            raise ConfigError(f"{where}: {section}.{name} is dimensionless, got unit {unit!r}")
        if unit != key.unit:
            raise ConfigError(f"{where}: {section}.{name} must be given in {key.unit}, got {unit!r}")
    try:
        value = key.kind(parts[0])
    except ValueError as exc:
        raise ConfigError(f"{where}: {section}.{name}: {exc}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"{where}: {section}.{name} must be finite")
    return value


@dataclass(frozen=True)
class ScenarioConfig:
    values: dict[str, dict[str, Any]]
    source: Path | None = None

    def get(self, section: str, name: str) -> Any:
        return self.values.get(section, {}).get(name, SCHEMA[section][name].default)

    def has(self, section: str, name: str) -> bool:
        return name in self.values.get(section, {})

    def path(self, name: str) -> Path | None:
        value = self.get("paths", name)
        if value is None:
            return None
        p = Path(value)
        if not p.is_absolute() and self.source is not None:
            p = self.source.parent / p
        return p

    def nopo(self, section: str) -> NopoParams:
        g = lambda k: self.get(section, k)  # noqa: E731
        try:
            return NopoParams(
                pump_wavelength=g("pump_wavelength"),
                signal_wavelength=g("signal_wavelength"),
                idler_wavelength=g("idler_wavelength"),
                cavity_length=g("cavity_length"),
                finesse=g("finesse"),
                t_out=g("output_transmission"),
                p_threshold=g("threshold_power"),
                p_pump=g("pump_power"),
                l_intra=g("intracavity_loss"),
                t_in_pump=g("input_transmission"),
                eta_pump_coupling=g("pump_coupling"),
            )
        except ValueError as exc:
            raise ConfigError(f"[{section}] {exc}") from exc

    def cascade(self) -> CascadeConfig:
        try:
            return CascadeConfig(
                nopo1=self.nopo("nopo1"),
                nopo2=self.nopo("nopo2"),
                omega=2.0 * math.pi * self.get("cascade", "analysis_frequency") * 1e6,
                pump0_spectrum=NoiseInputSpectrum(self.get("pump", "s_x"), self.get("pump", "s_y")),
                detection_efficiency=tuple(self.get("detection", f"eta_a{i}") for i in (2, 3, 4)),
                a1_power=self.get("cascade", "a1_power"),
                tap_ratio=self.get("cascade", "tap_ratio"),
                bypass_nopo1=self.get("cascade", "bypass_nopo1"),
                bypass_nopo2=self.get("cascade", "bypass_nopo2"),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def parse_config(text: str, source: str | Path | None = None) -> ScenarioConfig:
    label = str(source) if source is not None else "<config>"
    values: dict[str, dict[str, Any]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        where = f"{label}:{lineno}"
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{where}: malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"{where}: unknown section [{section}]; known: {', '.join(SCHEMA)}")
            values.setdefault(section, {})
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        name, value = name.strip(), value.strip()
        if section is None:
            raise ConfigError(f"{where}: key {name!r} appears before any [section]")
        key = SCHEMA[section].get(name)
        if key is None:
            raise ConfigError(f"{where}: unknown key {name!r} in [{section}]")
        if name in values[section]:
            raise ConfigError(f"{where}: {section}.{name} is set twice")
        values[section][name] = _convert(section, name, key, value, where)
    for sec in REQUIRED_SECTIONS:
        if sec not in values:
            raise ConfigError(f"{label}: missing section [{sec}]")
    for sec, keys in SCHEMA.items():
        if sec not in values:
            continue
        for name, key in keys.items():
            if key.required and name not in values[sec]:
                raise ConfigError(f"{label}: missing required key {sec}.{name}")
    return ScenarioConfig(values, Path(source) if source is not None else None)


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from exc
    return parse_config(text, p)


def shipped(name: str) -> Path:
    """Path of a data file shipped with the package."""
    return Path(str(resources.files("tricolor").joinpath("data", name)))
