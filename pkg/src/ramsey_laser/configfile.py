"""Flat ``key = value`` configuration documents.

One assignment per line, ``#`` starts a comment. Keys are dotted paths:

==================  =========================  ======
key                 symbol                     unit
==================  =========================  ======
cavity.kappa        kappa                      rad/s
cavity.g            g                          rad/s
atom.gamma_a        gamma_a                    rad/s
atom.gamma_a_prime  gamma_a'                   rad/s
atom.gamma_b        gamma_b                    rad/s
atom.gamma_ab       gamma_ab                   rad/s
geometry.tau        tau                        s
geometry.T_drift    T                          s
geometry.omega_R    Omega_R                    rad/s
geometry.delta2     Delta_2                    rad/s
geometry.theta      Omega_R tau (sets omega_R) rad
geometry.phi        Delta_2 T (sets delta2)    rad
pump.R              R                          1/s
pump.p              p                          1
==================  =========================  ======

``preset = ca40`` or ``preset = desk`` supplies every value not given; with no
preset line the Ca-40 values are used. ``sim.*``, ``sweep.*`` and ``run.*``
keys configure the subcommands; ``output.*`` and ``tool.*`` lines written in
run manifests are accepted and ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from ramsey_laser.core import LaserConfig, ca40_preset, desk_preset

__all__ = ["ConfigError", "ConfigDocument", "PRESETS", "parse_document", "parse_config", "emit_config", "format_value"]

PRESETS: dict[str, Callable[[], LaserConfig]] = {"ca40": ca40_preset, "desk": desk_preset}

VIRTUAL_KEYS = ("geometry.theta", "geometry.phi")


def _to_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


SIM_KEYS: dict[str, Callable[[str], Any]] = {
    "sim.dt": float,
    "sim.duration": float,
    "sim.output_stride": int,
    "sim.dipole_seed": float,
    "sim.injection_mode": str,
    "sim.drift_reference": str,
    "sim.records": _to_bool,
}
SWEEP_KEYS: dict[str, Callable[[str], Any]] = {
    "sweep.path": str,
    "sweep.start": float,
    "sweep.stop": float,
    "sweep.count": int,
    "sweep.spacing": str,
    "sweep.simulate": _to_bool,
    "sweep.sim_every": int,
    "sweep.seed_policy": str,
}
RUN_KEYS: dict[str, Callable[[str], Any]] = {
    "run.command": str,
    "run.seed": int,
    "run.trajectories": int,
    "run.seeds": str,
    "run.timestamp": str,
}
IGNORED_PREFIXES = ("output.", "tool.")


class ConfigError(ValueError):
    """Problem in a configuration document, located by key and line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class ConfigDocument:
    laser: LaserConfig
    preset: str
    sim: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)


def _split(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError("empty key or value", key=key or None, line=lineno)
        yield lineno, key, value


def parse_document(text: str) -> ConfigDocument:
    """Parse a full document (laser parameters plus subcommand settings).

    Raises
    ------
    ConfigError
        For an unknown key, a repeated key, an unparseable value or a value
        that violates a parameter constraint.
    """
    laser_keys = set(LaserConfig.keys())
    seen: dict[str, int] = {}
    preset = "ca40"
    numbers: dict[str, tuple[float, int]] = {}
    virtual: dict[str, tuple[float, int]] = {}
    extra: dict[str, dict] = {"sim": {}, "sweep": {}, "run": {}}
    for lineno, key, value in _split(text):
        if key in seen:
            raise ConfigError(f"repeated (first set on line {seen[key]})", key, lineno)
        seen[key] = lineno
        if key.startswith(IGNORED_PREFIXES):
            continue
        if key == "preset":
            if value not in PRESETS:
                raise ConfigError(f"unknown preset {value!r} (known: {', '.join(PRESETS)})", key, lineno)
            preset = value
            continue
        if key in laser_keys or key in VIRTUAL_KEYS:
            try:
                number = float(value)
            except ValueError:
                raise ConfigError(f"expected a number, got {value!r}", key, lineno) from None
            (virtual if key in VIRTUAL_KEYS else numbers)[key] = (number, lineno)
            continue
        table = {**SIM_KEYS, **SWEEP_KEYS, **RUN_KEYS}
        if key in table:
            try:
                extra[key.split(".", 1)[0]][key.split(".", 1)[1]] = table[key](value)
            except ValueError:
                raise ConfigError(f"cannot parse {value!r}", key, lineno) from None
            continue
        raise ConfigError("unknown key", key, lineno)

    base = PRESETS[preset]()
    flat = base.flatten()
    for key, (number, _) in numbers.items():
        flat[key] = number
    try:
        laser = LaserConfig.from_flat(flat)
    except ValueError as exc:
        key = _blame(str(exc), numbers)
        raise ConfigError(str(exc), key, numbers[key][1] if key in numbers else None) from None
    for key in VIRTUAL_KEYS:
        if key in virtual:
            number, lineno = virtual[key]
            try:
                laser = laser.with_value(key, number)
            except ValueError as exc:
                raise ConfigError(str(exc), key, lineno) from None
    return ConfigDocument(laser, preset, extra["sim"], extra["sweep"], extra["run"])


def _blame(message: str, numbers: dict) -> str | None:
    for key in numbers:
        if message.startswith(key):
            return key
    return None


def parse_config(text: str) -> LaserConfig:
    """Laser parameters of a document; see :func:`parse_document`."""
    return parse_document(text).laser


def format_value(value: Any) -> str:
    """Nine significant digits for floats, plain text otherwise."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def emit_config(laser: LaserConfig, exact: bool = True) -> str:
    """Fully resolved document, one ``key = value`` per parameter.

    With ``exact`` the values use repr so that parsing the text gives back
    an identical configuration.
    """
    lines = []
    for key, value in laser.flatten().items():
        lines.append(f"{key} = {repr(float(value)) if exact else format_value(float(value))}")
    return "\n".join(lines) + "\n"

