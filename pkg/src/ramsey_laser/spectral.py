"""Linewidth estimation from simulated field records.

Two estimators:

* phase-diffusion fit: Var[phi(t + l) - phi(t)] = D l over a lag window,
  slope through the origin, block-bootstrap error;
* Lorentzian fit of the segment-averaged field spectrum. The model is the
  exact expected periodogram of a phase-diffusing field seen through the
  analysis window, so lines narrower than a frequency bin are still fitted
  and flagged as resolution-limited.

For a field whose phase diffuses with Var = D t the spectrum is Lorentzian
with FWHM D (rad/s), so both estimators target the same D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize, signal

from ramsey_laser.analytic import SpectrumCurve
from ramsey_laser.core import LaserConfig

__all__ = [
    "PhaseSeries",
    "LinewidthEstimate",
    "FieldSpectrum",
    "unwrap_phase",
    "phase_diffusion_fit",
    "ensemble_phase_diffusion_fit",
    "default_lag_window",
    "field_psd",
    "average_spectra",
    "lorentzian_fit",
    "phase_psd",
    "combine_estimates",
]

MIN_INCREMENTS = 100
MIN_BLOCKS = 20
MIN_SEGMENTS = 8
MIN_SEGMENT_SAMPLES = 1024
UNRELIABLE_R2 = 0.9
ZERO_FIELD = 1e-6
MEMORY_TRANSITS = 20


@dataclass(frozen=True)
class PhaseSeries:
    times: np.ndarray
    phases: np.ndarray

    @property
    def interval(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])


@dataclass(frozen=True)
class LinewidthEstimate:
    """Linewidth D_hat in rad/s with standard error.

    ``reliable`` is False when a diagnostic flag was raised; ``flags`` names
    them (e.g. "nonlinear", "resolution-limited").
    """

    D_hat: float
    stderr: float
    method: str
    diagnostics: dict = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    @property
    def reliable(self) -> bool:
        return not self.flags

    @property
    def hz(self) -> float:
        return self.D_hat / (2 * math.pi)


def unwrap_phase(times: np.ndarray, alphas: np.ndarray) -> PhaseSeries:
    """Continuous phase of a complex field record.

    Raises
    ------
    ValueError
        If any |alpha| is below 1e-6 times the median amplitude, naming the
        first such index.
    """
    t = np.asarray(times, dtype=float)
    a = np.asarray(alphas, dtype=complex)
    if t.shape != a.shape or t.ndim != 1 or t.size < 2:
        raise ValueError("times and alphas must be 1-d arrays of equal length >= 2")
    amp = np.abs(a)
    floor = ZERO_FIELD * np.median(amp)
    bad = np.flatnonzero(~(amp > floor))
    if bad.size:
        raise ValueError(f"field amplitude too small for a phase at index {bad[0]} (|alpha| = {amp[bad[0]]:.3g})")
    return PhaseSeries(t, np.unwrap(np.angle(a)))


def default_lag_window(laser: LaserConfig, duration: float) -> tuple[float, float]:
    """Lag window for the phase-diffusion fit.

    Starts at max(10/kappa, 20 transits). Atoms carry the field phase from
    zone 1 across the drift and re-emit it in zone 2, so at lags of a few
    transits the increments are correlated and the variance oscillates;
    this memory has relaxed after about ten transits. The window ends at ten
    times its start, capped at duration / 10.
    """
    lo = max(10.0 / laser.cavity.kappa, MEMORY_TRANSITS * laser.geometry.transit_time)
    hi = min(duration / 10.0, 10.0 * lo)
    if hi <= lo:
        raise ValueError(f"record of {duration:.3g} s is too short for a lag window starting at {lo:.3g} s")
    return lo, hi


def _lag_grid(dt: float, window: tuple[float, float], n_lags: int) -> np.ndarray:
    lo = max(1, int(math.ceil(window[0] / dt - 1e-9)))
    hi = int(math.floor(window[1] / dt + 1e-9))
    if hi < lo:
        raise ValueError("lag window contains no sample lag")
    return np.unique(np.linspace(lo, hi, min(n_lags, hi - lo + 1)).round().astype(int))


def _slope(lags: np.ndarray, V: np.ndarray) -> float:
    return float(lags @ V / (lags @ lags))


def phase_diffusion_fit(
    series: PhaseSeries,
    lag_window: tuple[float, float],
    n_lags: int = 12,
    n_blocks: int = MIN_BLOCKS,
    n_boot: int = 400,
    seed: int = 0,
) -> LinewidthEstimate:
    """Phase-diffusion coefficient from increment variances.

    Parameters
    ----------
    series : PhaseSeries
    lag_window : (float, float)
        Smallest and largest lag, s. The largest must not exceed a tenth of
        the record.
    n_lags : int
        Lags evaluated, evenly spaced over the window.
    n_blocks : int
        Contiguous blocks for the bootstrap (at least 20).
    n_boot : int
        Bootstrap resamples.
    seed : int
        Seed of the bootstrap resampling.

    Returns
    -------
    LinewidthEstimate
        Flagged "nonlinear" when R^2 of the line through the origin is below 0.9.
    """
    dt = series.interval
    lo, hi = lag_window
    if not (0 < lo < hi):
        raise ValueError("lag window must satisfy 0 < min < max")
    if hi > series.duration / 10 * (1 + 1e-9):
        raise ValueError(f"largest lag {hi:.3g} s exceeds a tenth of the record ({series.duration:.3g} s)")
    if n_blocks < MIN_BLOCKS:
        raise ValueError(f"need at least {MIN_BLOCKS} bootstrap blocks")
    phi = series.phases
    n = phi.size
    ks = _lag_grid(dt, lag_window, n_lags)
    if n - ks[-1] < MIN_INCREMENTS:
        raise ValueError("fewer than 100 increments at the largest lag")
    ells = ks * dt

    # per-block sums of increments and squared increments, by start index
    edges = np.linspace(0, n, n_blocks + 1).astype(int)
    s1 = np.zeros((len(ks), n_blocks))
    s2 = np.zeros((len(ks), n_blocks))
    cnt = np.zeros((len(ks), n_blocks))
    for i, k in enumerate(ks):
        d = phi[k:] - phi[:-k]
        for b in range(n_blocks):
            seg = d[edges[b] : min(edges[b + 1], d.size)]
            s1[i, b] = seg.sum()
            s2[i, b] = (seg * seg).sum()
            cnt[i, b] = seg.size

    def variances(weights: np.ndarray) -> np.ndarray:
        c = cnt @ weights
        m1 = (s1 @ weights) / c
        return (s2 @ weights) / c - m1 * m1

    ones = np.ones(n_blocks)
    V = variances(ones)
    D = _slope(ells, V)
    ss_res = float(np.sum((V - D * ells) ** 2))
    ss_tot = float(np.sum((V - V.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0

    rng = np.random.default_rng(seed)
    boot = np.empty(n_boot)
    for j in range(n_boot):
        w = np.bincount(rng.integers(0, n_blocks, n_blocks), minlength=n_blocks).astype(float)
        boot[j] = _slope(ells, variances(w))
    flags = () if r2 >= UNRELIABLE_R2 else ("nonlinear",)
    return LinewidthEstimate(
        D_hat=max(D, 0.0),
        stderr=float(boot.std(ddof=1)),
        method="phase_diffusion_fit",
        diagnostics={"r2": r2, "lag_window": (float(ells[0]), float(ells[-1])), "lags": ells, "variances": V},
        flags=flags,
    )


def _increment_variances(series: PhaseSeries, ks: np.ndarray) -> np.ndarray:
    phi = series.phases
    return np.array([np.var(phi[k:] - phi[:-k]) for k in ks])


def ensemble_phase_diffusion_fit(
    ensemble: Sequence[PhaseSeries], lag_window: tuple[float, float], n_lags: int = 12, n_boot: int = 400, seed: int = 0
) -> LinewidthEstimate:
    """Phase-diffusion fit to the trajectory-averaged variance curve.

    The standard error comes from resampling whole trajectories, which
    keeps the correlations between lags of one record intact.
    """
    if len(ensemble) < 2:
        raise ValueError("need at least two trajectories")
    dt = ensemble[0].interval
    if any(not np.isclose(s.interval, dt) for s in ensemble):
        raise ValueError("trajectories have different sampling intervals")
    shortest = min(s.duration for s in ensemble)
    if lag_window[1] > shortest / 10 * (1 + 1e-9):
        raise ValueError(f"largest lag {lag_window[1]:.3g} s exceeds a tenth of the shortest record")
    ks = _lag_grid(dt, lag_window, n_lags)
    ells = ks * dt
    Vs = np.array([_increment_variances(s, ks) for s in ensemble])
    V = Vs.mean(axis=0)
    D = _slope(ells, V)
    ss_res = float(np.sum((V - D * ells) ** 2))
    ss_tot = float(np.sum((V - V.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    rng = np.random.default_rng(seed)
    n = len(ensemble)
    boot = np.array([_slope(ells, Vs[rng.integers(0, n, n)].mean(axis=0)) for _ in range(n_boot)])
    return LinewidthEstimate(
        D_hat=max(D, 0.0),
        stderr=float(boot.std(ddof=1)),
        method="phase_diffusion_fit",
        diagnostics={"r2": r2, "lag_window": (float(ells[0]), float(ells[-1])), "lags": ells, "variances": V, "n": n},
        flags=() if r2 >= UNRELIABLE_R2 else ("nonlinear",),
    )


@dataclass(frozen=True)
class FieldSpectrum(SpectrumCurve):
    """Segment-averaged field spectrum with the settings needed to model it.

    ``omega`` are angular offsets from zero frequency (both signs), ``value``
    the density per rad/s.
    """

    window: str = "hann"
    nperseg: int = 0
    interval: float = 0.0
    n_averaged: int = 0

    @property
    def resolution(self) -> float:
        """Bin spacing in rad/s."""
        return 2 * math.pi / (self.nperseg * self.interval)


def _check_uniform(times: np.ndarray) -> float:
    d = np.diff(times)
    if d.size == 0 or not np.allclose(d, d[0], rtol=1e-6, atol=0):
        raise ValueError("times must be uniformly spaced")
    return float(d[0])


def field_psd(times: np.ndarray, alphas: np.ndarray, segments: int = MIN_SEGMENTS, window: str = "hann") -> FieldSpectrum:
    """Welch spectrum of the complex field with non-overlapping segments.

    Raises
    ------
    ValueError
        Unless the record holds at least 8 segments of at least 1024 samples.
    """
    t = np.asarray(times, dtype=float)
    a = np.asarray(alphas, dtype=complex)
    dt = _check_uniform(t)
    if segments < MIN_SEGMENTS:
        raise ValueError(f"need at least {MIN_SEGMENTS} segments")
    nper = a.size // segments
    if nper < MIN_SEGMENT_SAMPLES:
        raise ValueError(f"{a.size} samples give segments of {nper} < {MIN_SEGMENT_SAMPLES} samples")
    f, p = signal.welch(
        a[: nper * segments], fs=1.0 / dt, window=window, nperseg=nper, noverlap=0,
        detrend=False, return_onesided=False, scaling="density",
    )
    f = np.fft.fftshift(f)
    p = np.fft.fftshift(p)
    return FieldSpectrum(2 * math.pi * f, p / (2 * math.pi), window, nper, dt, segments)


def average_spectra(spectra: Sequence[FieldSpectrum]) -> FieldSpectrum:
    """Mean of spectra computed with identical settings."""
    first = spectra[0]
    for s in spectra[1:]:
        if (s.nperseg, s.window) != (first.nperseg, first.window) or not np.isclose(s.interval, first.interval):
            raise ValueError("spectra were computed with different settings")
    value = np.mean([s.value for s in spectra], axis=0)
    return FieldSpectrum(first.omega, value, first.window, first.nperseg, first.interval,
                         sum(s.n_averaged for s in spectra))


def _window_lag_weights(window: str, n: int) -> np.ndarray:
    w = signal.get_window(window, n)
    r = np.correlate(w, w, mode="full")[n - 1 :]
    return r / r[0]


def _windowed_lorentzian(omega, amp, center, width, floor, lagw, interval):
    k = np.arange(lagw.size)
    decay = lagw * np.exp(-0.5 * width * k * interval)
    phase = np.cos(np.outer(omega - center, k * interval))
    shape = (phase[:, 1:] @ decay[1:]) * 2 + decay[0]
    return amp * shape + floor


def lorentzian_fit(spectrum: SpectrumCurve, half_span: int = 12, min_points: int = 10) -> LinewidthEstimate:
    """FWHM of the spectral line, rad/s.

    A :class:`FieldSpectrum` is fitted with the window-convolved line shape
    plus a flat floor. Any other curve is fitted with a plain Lorentzian
    plus floor.

    Parameters
    ----------
    spectrum : SpectrumCurve
    half_span : int
        Fit region in units of the larger of the estimated FWHM and the bin
        spacing, on each side of the peak.
    min_points : int
        Points required across the FWHM before the result counts as resolved.
    """
    w = np.asarray(spectrum.omega, dtype=float)
    v = np.asarray(spectrum.value, dtype=float)
    ipk = int(np.argmax(v))
    if ipk in (0, w.size - 1):
        raise ValueError("spectral peak lies at the edge of the frequency window")
    step = float(np.median(np.diff(w)))
    half = v[ipk] / 2
    left = ipk
    while left > 0 and v[left] > half:
        left -= 1
    right = ipk
    while right < w.size - 1 and v[right] > half:
        right += 1
    width0 = max(w[right] - w[left], step)
    span = half_span * max(width0, 2 * step)
    sel = np.abs(w - w[ipk]) <= span
    ws, vs = w[sel], v[sel]
    floor0 = max(float(np.min(vs)), 0.0)

    windowed = isinstance(spectrum, FieldSpectrum) and spectrum.nperseg > 0
    if windowed:
        lagw = _window_lag_weights(spectrum.window, spectrum.nperseg)
        interval = spectrum.interval

        def model(x, amp, center, width, floor):
            return _windowed_lorentzian(x, amp, center, abs(width), floor, lagw, interval)

        amp0 = (v[ipk] - floor0) / max(float(_windowed_lorentzian(np.array([0.0]), 1.0, 0.0, width0, 0.0, lagw, interval)[0]), 1e-300)
        sigma = vs / math.sqrt(max(spectrum.n_averaged, 1))
    else:

        def model(x, amp, center, width, floor):
            return amp / (1 + ((x - center) / (0.5 * abs(width))) ** 2) + floor

        amp0 = v[ipk] - floor0
        sigma = None
    p0 = [amp0, w[ipk], width0, floor0]
    try:
        popt, pcov = optimize.curve_fit(model, ws, vs, p0=p0, sigma=sigma, absolute_sigma=sigma is not None, maxfev=20000)
    except (RuntimeError, optimize.OptimizeWarning) as exc:
        raise ValueError(f"Lorentzian fit failed: {exc}") from exc
    width = abs(float(popt[2]))
    err = float(np.sqrt(pcov[2, 2])) if np.all(np.isfinite(pcov)) else math.inf
    points_across = width / step
    flags = ("resolution-limited",) if points_across < min_points else ()
    return LinewidthEstimate(
        D_hat=width,
        stderr=err,
        method="lorentzian_fit",
        diagnostics={
            "center": float(popt[1]),
            "floor": float(popt[3]),
            "points_across": points_across,
            "frequency_window": (float(ws[0]), float(ws[-1])),
            "window_model": windowed,
        },
        flags=flags,
    )


def phase_psd(series: PhaseSeries, segments: int = MIN_SEGMENTS) -> SpectrumCurve:
    """Phase spectral density at positive angular frequencies.

    Estimated from the increments and divided by the difference filter
    4 sin^2(omega dt / 2). Normalized so that a phase with Var = D t gives
    omega^2 S -> D at low frequency.
    """
    dt = series.interval
    inc = np.diff(series.phases)
    nper = inc.size // segments
    if segments < MIN_SEGMENTS or nper < MIN_SEGMENT_SAMPLES:
        raise ValueError(f"need >= {MIN_SEGMENTS} segments of >= {MIN_SEGMENT_SAMPLES} samples")
    f, p = signal.welch(inc[: nper * segments], fs=1.0 / dt, window="hann", nperseg=nper, noverlap=0,
                        detrend="constant", return_onesided=True, scaling="density")
    keep = f > 0
    omega = 2 * math.pi * f[keep]
    # one-sided to two-sided, then undo the difference filter
    value = 0.5 * p[keep] / (4 * np.sin(omega * dt / 2) ** 2)
    return SpectrumCurve(omega, value)


def combine_estimates(estimates: Sequence[LinewidthEstimate]) -> LinewidthEstimate:
    """Ensemble mean of independent estimates, stderr from their scatter."""
    if len(estimates) < 2:
        raise ValueError("need at least two estimates to combine")
    methods = {e.method for e in estimates}
    if len(methods) != 1:
        raise ValueError(f"cannot combine different methods {sorted(methods)}")
    d = np.array([e.D_hat for e in estimates])
    flags = tuple(sorted({f for e in estimates for f in e.flags}))
    return LinewidthEstimate(
        D_hat=float(d.mean()),
        stderr=float(d.std(ddof=1) / math.sqrt(d.size)),
        method=methods.pop(),
        diagnostics={"n": int(d.size), "spread": float(d.std(ddof=1))},
        flags=flags,
    )
