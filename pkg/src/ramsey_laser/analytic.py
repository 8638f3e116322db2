"""Closed-form Ramsey-laser theory: coefficients, steady state, spectrum, linewidth.

Notation: theta = omega_R tau is the pulse area of one zone, phi = delta2 T
the drift phase, flux = sin^2(theta) cos^2(phi/2) the net photon emission per
atom. Everything is in angular units; ``hz_*`` fields are value / 2 pi.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ramsey_laser.core import LaserConfig

__all__ = [
    "RamseyCoefficients",
    "SteadyState",
    "DarkFringe",
    "BelowThresholdError",
    "SpectrumCurve",
    "LinewidthResult",
    "FringeRow",
    "ramsey_coefficients",
    "excitation_flux",
    "steady_state",
    "phase_noise_spectrum",
    "phase_noise_spectrum_from_coefficients",
    "linewidth_full",
    "linewidth_approx",
    "fringe_bracket",
    "fringe_sweep",
    "DARK_FLUX",
]

# Emission flux at or below this counts as a dark fringe.
DARK_FLUX = 1e-12

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class RamseyCoefficients:
    """Populations and coherences at the exits of zone 1, the drift and zone 2."""

    A0: float
    A1: float
    A2: float
    B0: float
    B1: float
    B2: float
    C0: complex
    C1: complex
    C2: complex

    @property
    def coherence_sum(self) -> complex:
        """C0 - C1 + C2, the coherence the field sees at steady state."""
        return self.C0 - self.C1 + self.C2

    def as_tuple(self) -> tuple:
        return (self.A0, self.A1, self.A2, self.B0, self.B1, self.B2, self.C0, self.C1, self.C2)


def ramsey_coefficients(theta: float, phi: float) -> RamseyCoefficients:
    """Exit-epoch expectation values for an atom injected in the upper state.

    Parameters
    ----------
    theta : float
        Pulse area of a single zone, rad.
    phi : float
        Drift phase, rad.

    Returns
    -------
    RamseyCoefficients

    Notes
    -----
    The coherences follow from the pulse/drift/pulse propagator with the
    convention <-i sigma_minus>:

        C0 = sin(theta)/2
        C1 = C0 exp(i phi)
        C2 = sin(theta) cos(phi/2) [cos^2(theta/2) e^{i phi/2} - sin^2(theta/2) e^{-i phi/2}]

    so that Im C1 = Im C2 and (C1 - C1*)^2 = -sin^2(theta) sin^2(phi).
    """
    ch2, sh2 = math.cos(theta / 2) ** 2, math.sin(theta / 2) ** 2
    s = math.sin(theta)
    bright = s * s * math.cos(phi / 2) ** 2
    half = cmath.exp(0.5j * phi)
    c2 = s * math.cos(phi / 2) * (ch2 * half - sh2 / half)
    return RamseyCoefficients(
        A0=ch2,
        A1=ch2,
        A2=1.0 - bright,
        B0=sh2,
        B1=sh2,
        B2=bright,
        C0=complex(s / 2, 0.0),
        C1=(s / 2) * cmath.exp(1j * phi),
        C2=c2,
    )


def excitation_flux(coeffs: RamseyCoefficients) -> tuple[float, float]:
    """Net downward flux per atom seen from the upper and from the lower level.

    Returns ``(1 - A0 + A1 - A2, B0 - B1 + B2)``; the two agree for a closed
    two-level atom.
    """
    c = coeffs
    return 1.0 - c.A0 + c.A1 - c.A2, c.B0 - c.B1 + c.B2


@dataclass(frozen=True)
class SteadyState:
    """Mean photon number and zone populations above threshold.

    ``N_a_ss + N_b_ss = R tau`` by construction. ``zone_occupancy`` is the mean
    number of atoms actually inside the two zones, 2 R tau, kept for
    comparison with simulated populations.
    """

    photon_number: float
    N_a_ss: float
    N_b_ss: float
    amplitude: float
    flux: float
    coherence_sum: complex
    zone_occupancy: float

    @property
    def inversion(self) -> float:
        return self.N_a_ss - self.N_b_ss


@dataclass(frozen=True)
class DarkFringe:
    """Typed outcome for a working point with no net emission (below threshold)."""

    theta: float
    phi: float
    flux: float

    def __str__(self) -> str:
        return f"dark fringe: theta={self.theta:.6g}, phi={self.phi:.6g}, flux={self.flux:.3g}"


class BelowThresholdError(ValueError):
    """Raised where a lasing quantity is requested at a dark fringe."""

    def __init__(self, outcome: DarkFringe):
        super().__init__(str(outcome))
        self.outcome = outcome


def steady_state(config: LaserConfig) -> SteadyState | DarkFringe:
    """Steady-state photon number and populations.

    Returns a :class:`DarkFringe` instead of dividing by a vanishing flux.
    """
    geo, cav, pump = config.geometry, config.cavity, config.pump
    coeffs = ramsey_coefficients(geo.theta, geo.phi)
    _, flux = excitation_flux(coeffs)
    if flux <= DARK_FLUX:
        return DarkFringe(geo.theta, geo.phi, flux)
    R, tau = pump.R, geo.tau
    I0 = R * flux / cav.kappa
    csum = coeffs.coherence_sum
    shift = csum.real / (cav.g * tau) * math.sqrt(cav.kappa / (R * flux))
    return SteadyState(
        photon_number=I0,
        N_a_ss=0.5 * R * tau * (1.0 + shift),
        N_b_ss=0.5 * R * tau * (1.0 - shift),
        amplitude=math.sqrt(I0),
        flux=flux,
        coherence_sum=csum,
        zone_occupancy=2 * R * tau,
    )


def _lasing_state(config: LaserConfig) -> SteadyState:
    ss = steady_state(config)
    if isinstance(ss, DarkFringe):
        raise BelowThresholdError(ss)
    return ss


def fringe_bracket(theta: float, phi: float, p: float) -> float:
    """2 - p sin^2(theta) sin^2(phi)."""
    return 2.0 - p * math.sin(theta) ** 2 * math.sin(phi) ** 2


@dataclass(frozen=True)
class SpectrumCurve:
    omega: np.ndarray
    value: np.ndarray

    def __post_init__(self) -> None:
        if self.omega.shape != self.value.shape:
            raise ValueError("omega and value must have the same shape")


def _check_omega(omega_grid: Sequence[float]) -> np.ndarray:
    w = np.asarray(omega_grid, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("omega grid must be a nonempty 1-d sequence")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("omega grid must be finite and > 0 (the spectrum diverges at 0)")
    if np.any(np.diff(w) <= 0):
        raise ValueError("omega grid must be strictly increasing")
    return w


def phase_noise_spectrum(config: LaserConfig, omega_grid: Sequence[float]) -> SpectrumCurve:
    """Phase-fluctuation spectral density on ``omega_grid`` (rad/s, all > 0).

    The low-frequency law is D_full / omega^2, rolled off by the cavity-atom
    pole at kappa/2 + gamma_ab.
    """
    w = _check_omega(omega_grid)
    D = linewidth_full(config).D_full
    a2 = (config.cavity.kappa / 2 + config.atom.gamma_ab) ** 2
    return SpectrumCurve(w, a2 / (w**2 * (a2 + w**2)) * D)


def phase_noise_spectrum_from_coefficients(config: LaserConfig, omega_grid: Sequence[float]) -> SpectrumCurve:
    """Same spectrum assembled term by term from the Ramsey coefficients.

    Uses the population sums (A0 + B0) + (A2 + B2) and the squared imaginary
    parts (C_i - C_i*)^2 directly, with no D_ST / D_Ram decomposition. Serves
    as an independent check of :func:`phase_noise_spectrum`.
    """
    w = _check_omega(omega_grid)
    ss = _lasing_state(config)
    geo, cav, pump = config.geometry, config.cavity, config.pump
    c = ramsey_coefficients(geo.theta, geo.phi)
    gab = config.atom.gamma_ab
    a2 = (cav.kappa / 2 + gab) ** 2
    imag_sq = sum(((z - z.conjugate()) ** 2).real for z in (c.C0, c.C1, c.C2))
    braces = (
        4 * gab * ss.N_a_ss
        + 2 * pump.R * ((c.A0 + c.B0) + (c.A2 + c.B2))
        + pump.R * pump.p * imag_sq
    )
    value = a2 / (ss.photon_number * w**2 * (a2 + w**2)) * cav.g**2 / (4 * a2) * braces
    return SpectrumCurve(w, value)


@dataclass(frozen=True)
class LinewidthResult:
    """Linewidths in rad/s with cyclic mirrors.

    ``D_ST`` and ``D_Ram`` are infinite when gamma_ab = 0; ``D_full`` is always
    finite because it is evaluated in the form where gamma_ab cancels.
    """

    D_full: float
    D_approx: float
    D_ST: float
    D_Ram: float
    hz_full: float
    hz_approx: float
    D_full_uncancelled: float


def linewidth_approx(config: LaserConfig) -> float:
    """Bad-cavity linewidth (2 g^2 / kappa)[2 - p sin^2(theta) sin^2(phi)], rad/s."""
    geo = config.geometry
    return 2 * config.cavity.g**2 / config.cavity.kappa * fringe_bracket(geo.theta, geo.phi, config.pump.p)


def linewidth_full(config: LaserConfig) -> LinewidthResult:
    """Full linewidth including the spontaneous-emission term.

    Raises
    ------
    BelowThresholdError
        At a dark fringe.

    Notes
    -----
    With prefactor gamma_ab^2 / (kappa/2 + gamma_ab)^2 the gamma_ab^2 in D_Ram
    cancels, giving

        D = g^2 / (I0 (kappa/2 + gamma_ab)^2) [gamma_ab N_a + R bracket / 2]

    which stays finite at gamma_ab = 0.
    """
    ss = _lasing_state(config)
    cav, pump, gab = config.cavity, config.pump, config.atom.gamma_ab
    I0 = ss.photon_number
    br = fringe_bracket(config.geometry.theta, config.geometry.phi, pump.p)
    den = (cav.kappa / 2 + gab) ** 2
    D_full = cav.g**2 / (I0 * den) * (gab * ss.N_a_ss + 0.5 * pump.R * br)
    if gab > 0:
        D_ST = cav.g**2 * ss.N_a_ss / (I0 * gab)
        D_Ram = cav.g**2 * pump.R / (2 * I0 * gab**2)
        D_unc = gab**2 / den * (D_ST + D_Ram * br)
    else:
        D_ST = D_Ram = D_unc = math.inf
    D_approx = linewidth_approx(config)
    return LinewidthResult(
        D_full=D_full,
        D_approx=D_approx,
        D_ST=D_ST,
        D_Ram=D_Ram,
        hz_full=D_full / TWO_PI,
        hz_approx=D_approx / TWO_PI,
        D_full_uncancelled=D_unc,
    )


@dataclass(frozen=True)
class FringeRow:
    phi: float
    D_full: float
    D_approx: float
    dark: bool


def fringe_sweep(config: LaserConfig, phi_grid: Sequence[float]) -> list[FringeRow]:
    """Linewidths along a drift-phase grid; dark points carry NaN for D_full."""
    grid = [float(x) for x in phi_grid]
    if not grid:
        raise ValueError("phi grid is empty")
    rows = []
    for phi in grid:
        cfg = config.with_value("geometry.phi", phi)
        try:
            res = linewidth_full(cfg)
            rows.append(FringeRow(phi, res.D_full, res.D_approx, False))
        except BelowThresholdError:
            rows.append(FringeRow(phi, math.nan, linewidth_approx(cfg), True))
    return rows
