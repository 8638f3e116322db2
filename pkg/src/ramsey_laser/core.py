"""Physical parameters, regime validation and presets.

All rates and frequencies are angular (rad/s), times are in seconds.
Linewidths are reported in rad/s and mirrored in Hz (value / 2 pi).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any

from scipy import constants

__all__ = [
    "CavityParams",
    "AtomParams",
    "RamseyGeometry",
    "PumpParams",
    "LaserConfig",
    "RegimeLink",
    "RegimeReport",
    "validate_regime",
    "coupling_from_dipole",
    "ca40_preset",
    "desk_preset",
    "DEFAULT_MIN_SEPARATION",
]

DEFAULT_MIN_SEPARATION = 5.0


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def _finite(x: float) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


@dataclass(frozen=True)
class CavityParams:
    """Cavity field decay rate ``kappa`` and atom-field coupling ``g`` (rad/s).

    ``mode_volume`` (m^3) and ``mode_frequency`` (rad/s) are optional and only
    used when the coupling is derived from a dipole moment.
    """

    kappa: float
    g: float
    mode_volume: float | None = None
    mode_frequency: float | None = None

    def __post_init__(self) -> None:
        _require(_finite(self.kappa) and self.kappa > 0, f"cavity.kappa must be > 0, got {self.kappa!r}")
        _require(_finite(self.g) and self.g > 0, f"cavity.g must be > 0, got {self.g!r}")
        for name in ("mode_volume", "mode_frequency"):
            v = getattr(self, name)
            _require(v is None or (_finite(v) and v > 0), f"cavity.{name} must be > 0 when given, got {v!r}")


@dataclass(frozen=True)
class AtomParams:
    """Atomic decay rates (rad/s).

    gamma_a: upper level to outside; gamma_a_prime: upper to lower;
    gamma_b: lower level; gamma_ab: dipole decoherence.
    Zero rates describe an idealized atom and are allowed.
    """

    gamma_a: float = 0.0
    gamma_a_prime: float = 0.0
    gamma_b: float = 0.0
    gamma_ab: float = 0.0

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            _require(_finite(v) and v >= 0, f"atom.{f.name} must be >= 0, got {v!r}")

    @property
    def gamma_max(self) -> float:
        return max(self.gamma_a, self.gamma_a_prime, self.gamma_b, self.gamma_ab)


@dataclass(frozen=True)
class RamseyGeometry:
    """Two interaction zones of duration ``tau`` separated by a drift ``T_drift``.

    ``omega_R`` is the resonant Rabi frequency inside a zone and ``delta2`` the
    detuning in the drift region. The pulse area and drift phase are always
    derived from these, never stored.
    """

    tau: float
    T_drift: float
    omega_R: float
    delta2: float = 0.0

    def __post_init__(self) -> None:
        _require(_finite(self.tau) and self.tau > 0, f"geometry.tau must be > 0, got {self.tau!r}")
        _require(_finite(self.T_drift) and self.T_drift >= 0, f"geometry.T_drift must be >= 0, got {self.T_drift!r}")
        _require(_finite(self.omega_R), f"geometry.omega_R must be finite, got {self.omega_R!r}")
        _require(_finite(self.delta2), f"geometry.delta2 must be finite, got {self.delta2!r}")

    @property
    def theta(self) -> float:
        """Pulse area of one zone, rad."""
        return self.omega_R * self.tau

    @property
    def phi(self) -> float:
        """Drift phase, rad."""
        return self.delta2 * self.T_drift

    @property
    def transit_time(self) -> float:
        return 2 * self.tau + self.T_drift


@dataclass(frozen=True)
class PumpParams:
    """Mean injection rate ``R`` (atoms/s) and pumping statistics ``p``.

    p = 1 is regular injection, p = 0 Poissonian.
    """

    R: float
    p: float = 1.0

    def __post_init__(self) -> None:
        _require(_finite(self.R) and self.R > 0, f"pump.R must be > 0, got {self.R!r}")
        _require(_finite(self.p) and 0.0 <= self.p <= 1.0, f"pump.p must lie in [0, 1], got {self.p!r}")


_SECTIONS = {
    "cavity": CavityParams,
    "atom": AtomParams,
    "geometry": RamseyGeometry,
    "pump": PumpParams,
}


@dataclass(frozen=True)
class LaserConfig:
    cavity: CavityParams
    atom: AtomParams
    geometry: RamseyGeometry
    pump: PumpParams

    def flatten(self) -> dict[str, Any]:
        """Dotted-key view, e.g. ``{"cavity.kappa": 1e7, ...}``; None values are skipped."""
        out: dict[str, Any] = {}
        for section in _SECTIONS:
            obj = getattr(self, section)
            for f in dataclasses.fields(obj):
                v = getattr(obj, f.name)
                if v is not None:
                    out[f"{section}.{f.name}"] = v
        return out

    @classmethod
    def from_flat(cls, values: dict[str, Any]) -> "LaserConfig":
        per_section: dict[str, dict[str, Any]] = {s: {} for s in _SECTIONS}
        for key, v in values.items():
            section, _, name = key.partition(".")
            per_section[section][name] = v
        return cls(**{s: _SECTIONS[s](**kw) for s, kw in per_section.items()})

    def with_value(self, path: str, value: float) -> "LaserConfig":
        """Return a copy with one dotted parameter replaced.

        Besides the stored fields, ``geometry.theta`` and ``geometry.phi`` are
        accepted and translated into ``omega_R`` and ``delta2``.
        """
        section, _, name = path.partition(".")
        if section not in _SECTIONS:
            raise KeyError(path)
        if path == "geometry.theta":
            return self.with_value("geometry.omega_R", value / self.geometry.tau)
        if path == "geometry.phi":
            if self.geometry.T_drift == 0:
                raise ValueError("geometry.phi cannot be set when T_drift = 0")
            return self.with_value("geometry.delta2", value / self.geometry.T_drift)
        obj = getattr(self, section)
        if name not in {f.name for f in dataclasses.fields(obj)}:
            raise KeyError(path)
        return dataclasses.replace(self, **{section: dataclasses.replace(obj, **{name: value})})

    @staticmethod
    def keys() -> list[str]:
        return [f"{s}.{f.name}" for s, c in _SECTIONS.items() for f in dataclasses.fields(c)]


@dataclass(frozen=True)
class RegimeLink:
    name: str
    left: float
    right: float
    ratio: float
    passed: bool
    status: str  # "ok", "unbounded" or "degenerate"


@dataclass(frozen=True)
class RegimeReport:
    links: tuple[RegimeLink, ...]
    min_separation: float
    passed: bool = False

    @property
    def degenerate(self) -> bool:
        return any(ln.status == "degenerate" for ln in self.links)

    def __str__(self) -> str:
        lines = [f"regime chain (min separation {self.min_separation:g}): {'PASS' if self.passed else 'FAIL'}"]
        for ln in self.links:
            mark = "pass" if ln.passed else ("skip" if ln.status == "degenerate" else "FAIL")
            lines.append(f"  {ln.name:<22} {ln.left:.4g} vs {ln.right:.4g}  ratio={ln.ratio:.4g}  [{mark}, {ln.status}]")
        return "\n".join(lines)


def validate_regime(config: LaserConfig, min_separation: float = DEFAULT_MIN_SEPARATION) -> RegimeReport:
    """Check the bad-cavity chain gamma_max << 1/T << 1/tau << kappa/2.

    Each link passes when right/left >= ``min_separation``. With T = 0 the
    two links involving 1/T are degenerate: they are reported but skipped.
    """
    if min_separation <= 0:
        raise ValueError("min_separation must be > 0")
    geo, cav = config.geometry, config.cavity
    # the dataclasses already enforce these; kept for configs built by hand
    if not geo.tau > 0 or not cav.kappa > 0:
        raise ValueError("tau and kappa must be positive")
    gmax = config.atom.gamma_max
    inv_T = math.inf if geo.T_drift == 0 else 1.0 / geo.T_drift
    chain = [
        ("gamma_max << 1/T", gmax, inv_T),
        ("1/T << 1/tau", inv_T, 1.0 / geo.tau),
        ("1/tau << kappa/2", 1.0 / geo.tau, cav.kappa / 2),
    ]
    links = []
    for name, left, right in chain:
        if geo.T_drift == 0 and "1/T" in name:
            links.append(RegimeLink(name, left, right, math.nan, False, "degenerate"))
            continue
        if left == 0:
            links.append(RegimeLink(name, left, right, math.inf, True, "unbounded"))
            continue
        ratio = right / left
        links.append(RegimeLink(name, left, right, ratio, ratio >= min_separation, "ok"))
    ok = all(ln.passed for ln in links if ln.status != "degenerate")
    return RegimeReport(tuple(links), min_separation, ok)


def coupling_from_dipole(mu: float, omega: float, volume: float) -> float:
    """Single-photon coupling g = mu * sqrt(omega / (2 hbar eps0 V)) in rad/s."""
    for name, v in (("mu", mu), ("omega", omega), ("volume", volume)):
        if not (_finite(v) and v > 0):
            raise ValueError(f"{name} must be > 0, got {v!r}")
    return mu * math.sqrt(omega / (2 * constants.hbar * constants.epsilon_0 * volume))


def ca40_preset() -> LaserConfig:
    """Ca-40 intercombination line (4s4p 3P1 -> 4s2 1S0) on a thermal beam.

    1 mm zones crossed at 500 m/s give tau = 2 us. kappa and g are the
    order-of-magnitude values 1e7 and 1e3 rad/s. The 320 Hz natural linewidth
    sets gamma_a_prime = 2 pi 320 rad/s and gamma_ab is half of it. The drift
    time 20 us (10 mm) and the pulse and drift settings
    omega_R tau = delta2 T = pi/2 are conventions.
    """
    length, speed = 1e-3, 500.0
    tau = length / speed
    T = 20e-6
    gamma_nat = 2 * math.pi * 320.0
    return LaserConfig(
        cavity=CavityParams(kappa=1e7, g=1e3),
        atom=AtomParams(gamma_a=0.0, gamma_a_prime=gamma_nat, gamma_b=0.0, gamma_ab=gamma_nat / 2),
        geometry=RamseyGeometry(tau=tau, T_drift=T, omega_R=(math.pi / 2) / tau, delta2=(math.pi / 2) / T),
        pump=PumpParams(R=1e6, p=1.0),
    )


def desk_preset(
    atoms_per_zone: float = 80.0,
    theta: float = math.pi / 2,
    phi: float = 0.0,
    p: float = 1.0,
    kappa: float = 1e7,
    tau: float = 1.2e-6,
    drift_ratio: float = 6.0,
) -> LaserConfig:
    """Scaled configuration small enough to simulate atom by atom.

    Keeps kappa, raises R to ``atoms_per_zone / tau`` and picks g so that the
    steady-state field itself produces the pulse area ``theta``:
    omega_R = 2 g sqrt(I0) with I0 = R sin^2(theta) cos^2(phi/2) / kappa.
    The Ca-40 decay rates are kept; they are negligible on these time scales.
    """
    T = drift_ratio * tau
    R = atoms_per_zone / tau
    flux = math.sin(theta) ** 2 * math.cos(phi / 2) ** 2
    if flux <= 1e-12:
        raise ValueError("desk preset needs a nonzero emission flux (not a dark fringe)")
    photons = R * flux / kappa
    g = theta / (2 * tau * math.sqrt(photons))
    gamma_nat = 2 * math.pi * 320.0
    return LaserConfig(
        cavity=CavityParams(kappa=kappa, g=g),
        atom=AtomParams(gamma_a=0.0, gamma_a_prime=gamma_nat, gamma_b=0.0, gamma_ab=gamma_nat / 2),
        geometry=RamseyGeometry(tau=tau, T_drift=T, omega_R=theta / tau, delta2=phi / T),
        pump=PumpParams(R=R, p=p),
    )
