"""Bad-cavity Ramsey laser: closed-form linewidth theory and Monte Carlo checks."""

from ramsey_laser.core import (
    AtomParams,
    CavityParams,
    LaserConfig,
    PumpParams,
    RamseyGeometry,
    RegimeReport,
    ca40_preset,
    coupling_from_dipole,
    desk_preset,
    validate_regime,
)
from ramsey_laser.analytic import (
    BelowThresholdError,
    DarkFringe,
    LinewidthResult,
    RamseyCoefficients,
    SteadyState,
    excitation_flux,
    fringe_sweep,
    linewidth_approx,
    linewidth_full,
    phase_noise_spectrum,
    ramsey_coefficients,
    steady_state,
)

__version__ = "0.1.0"

__all__ = [
    "AtomParams",
    "BelowThresholdError",
    "CavityParams",
    "DarkFringe",
    "LaserConfig",
    "LinewidthResult",
    "PumpParams",
    "RamseyCoefficients",
    "RamseyGeometry",
    "RegimeReport",
    "SteadyState",
    "ca40_preset",
    "coupling_from_dipole",
    "desk_preset",
    "excitation_flux",
    "fringe_sweep",
    "linewidth_approx",
    "linewidth_full",
    "phase_noise_spectrum",
    "ramsey_coefficients",
    "steady_state",
    "validate_regime",
]
