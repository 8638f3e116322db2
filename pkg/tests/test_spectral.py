import math

import numpy as np
import pytest

from ramsey_laser.analytic import SpectrumCurve
from ramsey_laser.core import desk_preset
from ramsey_laser.spectral import (
    LinewidthEstimate,
    PhaseSeries,
    average_spectra,
    combine_estimates,
    default_lag_window,
    ensemble_phase_diffusion_fit,
    field_psd,
    lorentzian_fit,
    phase_diffusion_fit,
    phase_psd,
    unwrap_phase,
)

DT = 1e-3


def _wiener(D, n, seed):
    rng = np.random.default_rng(seed)
    phi = np.concatenate([[0.0], np.cumsum(rng.normal(0, math.sqrt(D * DT), n - 1))])
    t = DT * np.arange(n)
    return t, np.exp(1j * phi), phi


@pytest.fixture(scope="module")
def wiener():
    return _wiener(1.0, 2**19, 7)


def test_unwrap_recovers_phase(wiener):
    t, a, phi = wiener
    series = unwrap_phase(t, 3.0 * a)
    assert np.allclose(series.phases - series.phases[0], phi - phi[0], atol=1e-9)


def test_unwrap_names_zero_amplitude_index():
    t = np.arange(10.0)
    a = np.ones(10, complex)
    a[6] = 0
    with pytest.raises(ValueError, match="index 6"):
        unwrap_phase(t, a)


def test_phase_diffusion_fit_on_wiener(wiener):
    t, a, _ = wiener
    est = phase_diffusion_fit(unwrap_phase(t, a), (0.01, 10.0))
    assert est.method == "phase_diffusion_fit"
    assert abs(est.D_hat - 1.0) < max(4 * est.stderr, 0.1)
    assert est.reliable


def test_phase_diffusion_rejects_long_lags(wiener):
    t, a, _ = wiener
    with pytest.raises(ValueError):
        phase_diffusion_fit(unwrap_phase(t, a), (0.01, t[-1]))


def test_ensemble_fit_on_wiener():
    series = []
    for s in range(8):
        t, a, _ = _wiener(2.0, 2**16, 100 + s)
        series.append(unwrap_phase(t, a))
    est = ensemble_phase_diffusion_fit(series, (0.01, 5.0))
    assert abs(est.D_hat - 2.0) < max(4 * est.stderr, 0.2)


def test_lorentzian_fit_recovers_fwhm(wiener):
    t, a, _ = wiener
    psd = field_psd(t, a, segments=64)
    est = lorentzian_fit(psd)
    assert abs(est.D_hat - 1.0) < max(4 * est.stderr, 0.1)


def test_lorentzian_fit_plain_curve():
    w = np.linspace(-50, 50, 1001)
    curve = SpectrumCurve(w, 3.0 / (1 + ((w - 2.0) / 2.5) ** 2) + 0.01)
    est = lorentzian_fit(curve)
    assert est.D_hat == pytest.approx(5.0, rel=1e-6)
    assert est.diagnostics["center"] == pytest.approx(2.0, rel=1e-6)


def test_lorentzian_fit_flags_unresolved_line():
    w = np.linspace(-50, 50, 101)
    curve = SpectrumCurve(w, 1.0 / (1 + (w / 1.5) ** 2))
    assert "resolution-limited" in lorentzian_fit(curve).flags


def test_lorentzian_fit_rejects_edge_peak():
    w = np.linspace(0, 10, 50)
    with pytest.raises(ValueError, match="edge"):
        lorentzian_fit(SpectrumCurve(w, np.exp(-w)))


def test_field_psd_parseval():
    rng = np.random.default_rng(0)
    n = 8 * 2048
    a = rng.normal(size=n) + 1j * rng.normal(size=n)
    psd = field_psd(DT * np.arange(n), a, segments=8)
    power = np.sum(psd.value) * (psd.omega[1] - psd.omega[0])
    assert power == pytest.approx(2.0, rel=0.05)


@pytest.mark.parametrize("n, segments", [(8 * 1000, 8), (64 * 2048, 4)])
def test_field_psd_rejects_short_records(n, segments):
    with pytest.raises(ValueError):
        field_psd(DT * np.arange(n), np.ones(n, complex), segments=segments)


def test_average_spectra_checks_settings():
    n = 8 * 1024
    a = np.exp(1j * np.linspace(0, 1, n))
    s1 = field_psd(DT * np.arange(n), a)
    s2 = field_psd(DT * np.arange(2 * n), np.concatenate([a, a]))
    with pytest.raises(ValueError):
        average_spectra([s1, s2])
    assert average_spectra([s1, s1]).n_averaged == 16


def test_phase_psd_low_frequency_law(wiener):
    t, a, _ = wiener
    curve = phase_psd(unwrap_phase(t, a), segments=64)
    band = (curve.omega > 0.5) & (curve.omega < 20)
    estimate = np.mean(curve.omega[band] ** 2 * curve.value[band])
    assert estimate == pytest.approx(1.0, rel=0.1)


def test_default_lag_window():
    cfg = desk_preset()
    lo, hi = default_lag_window(cfg, 2e-2)
    assert lo == pytest.approx(20 * cfg.geometry.transit_time)
    assert hi == pytest.approx(min(2e-3, 10 * lo))
    with pytest.raises(ValueError):
        default_lag_window(cfg, 1e-4)


def test_combine_estimates():
    ests = [LinewidthEstimate(x, 0.1, "m") for x in (1.0, 2.0, 3.0)]
    out = combine_estimates(ests)
    assert out.D_hat == pytest.approx(2.0)
    assert out.stderr == pytest.approx(1 / math.sqrt(3))
    with pytest.raises(ValueError):
        combine_estimates([LinewidthEstimate(1, 0, "a"), LinewidthEstimate(1, 0, "b")])


def test_phase_series_properties():
    s = PhaseSeries(np.array([0.0, 0.5, 1.0]), np.zeros(3))
    assert s.interval == 0.5 and s.duration == 1.0
