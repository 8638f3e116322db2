"""Run trajectory ensembles and reduce them to linewidth estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ramsey_laser.analytic import BelowThresholdError, linewidth_full
from ramsey_laser.core import LaserConfig
from ramsey_laser.sim import SimConfig, SimulationAbort, TrajectoryResult, max_dt, run_ensemble
from ramsey_laser.spectral import (
    LinewidthEstimate,
    average_spectra,
    default_lag_window,
    ensemble_phase_diffusion_fit,
    field_psd,
    lorentzian_fit,
    phase_diffusion_fit,
    unwrap_phase,
)

MIN_SUCCESS_FRACTION = 0.8
PSD_SEGMENTS = 8

DEFAULT_DURATION = 2e-2
DEFAULT_STRIDE = 40


@dataclass(frozen=True)
class TrajectorySummary:
    index: int
    seed: int
    status: str
    photons: float = math.nan
    N_a: float = math.nan
    N_b: float = math.nan
    emission_per_atom: float = math.nan
    phase_fit: LinewidthEstimate | None = None
    lorentz_fit: LinewidthEstimate | None = None


@dataclass(frozen=True)
class EnsembleSummary:
    """Per-trajectory rows and the combined estimates of one ensemble.

    ``phase_fit`` fits the trajectory-averaged variance curve;
    ``lorentz_fit`` fits the trajectory-averaged field spectrum.
    """

    rows: tuple[TrajectorySummary, ...]
    phase_fit: LinewidthEstimate | None
    lorentz_fit: LinewidthEstimate | None
    D_analytic: float
    lag_window: tuple[float, float] | None

    @property
    def n_ok(self) -> int:
        return sum(r.status == "ok" for r in self.rows)

    @property
    def success_fraction(self) -> float:
        return self.n_ok / len(self.rows) if self.rows else 0.0

    def ratio(self, method: str = "phase") -> float:
        est = self.phase_fit if method == "phase" else self.lorentz_fit
        if est is None or not self.D_analytic > 0:
            return math.nan
        return est.D_hat / self.D_analytic


def sim_config(
    laser: LaserConfig,
    seed: int = 0,
    dt: float | None = None,
    duration: float = DEFAULT_DURATION,
    output_stride: int = DEFAULT_STRIDE,
    **options,
) -> SimConfig:
    """SimConfig with the largest allowed step unless ``dt`` is given."""
    return SimConfig(laser, dt if dt is not None else max_dt(laser), duration, seed, output_stride, **options)


def summarize(
    outcomes: Sequence[TrajectoryResult | SimulationAbort],
    seeds: Sequence[int],
    laser: LaserConfig,
    lag_window: tuple[float, float] | None = None,
) -> EnsembleSummary:
    """Estimate the linewidth of every trajectory and of the ensemble."""
    rows = []
    series = []
    spectra = []
    for i, (out, seed) in enumerate(zip(outcomes, seeds)):
        if isinstance(out, SimulationAbort):
            rows.append(TrajectorySummary(i, seed, out.reason))
            continue
        try:
            ph = unwrap_phase(out.times, out.alphas)
        except ValueError as exc:
            rows.append(TrajectorySummary(i, seed, f"phase undefined: {exc}"))
            continue
        window = lag_window or default_lag_window(laser, ph.duration)
        pfit = phase_diffusion_fit(ph, window, seed=seed)
        try:
            psd = field_psd(out.times, out.alphas, PSD_SEGMENTS)
            spectra.append(psd)
            lfit = lorentzian_fit(psd)
        except ValueError:
            lfit = None
        series.append(ph)
        rows.append(
            TrajectorySummary(
                i, seed, "ok",
                photons=float(out.photon_numbers.mean()),
                N_a=float(out.macro_Na.mean()),
                N_b=float(out.macro_Nb.mean()),
                emission_per_atom=out.emission_per_atom,
                phase_fit=pfit,
                lorentz_fit=lfit,
            )
        )
    try:
        D_an = linewidth_full(laser).D_full
    except BelowThresholdError:
        D_an = math.nan
    phase = lorentz = None
    window = None
    if len(series) >= 2:
        window = lag_window or default_lag_window(laser, min(s.duration for s in series))
        phase = ensemble_phase_diffusion_fit(series, window)
    if len(spectra) >= 2:
        try:
            lorentz = lorentzian_fit(average_spectra(spectra))
        except ValueError:
            lorentz = None
    return EnsembleSummary(tuple(rows), phase, lorentz, D_an, window)


def simulate_ensemble(
    laser: LaserConfig,
    seeds: Sequence[int],
    workers: int = 1,
    lag_window: tuple[float, float] | None = None,
    **sim_options,
) -> tuple[list[TrajectoryResult | SimulationAbort], EnsembleSummary]:
    """Run one trajectory per seed and summarize the ensemble."""
    base = sim_config(laser, seed=int(seeds[0]), **sim_options)
    outcomes = run_ensemble(base, seeds, workers=workers)
    return outcomes, summarize(outcomes, seeds, laser, lag_window)


def paired_difference(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Mean and standard error of b - a over paired entries."""
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    if d.size < 2:
        raise ValueError("need at least two pairs")
    return float(d.mean()), float(d.std(ddof=1) / math.sqrt(d.size))
