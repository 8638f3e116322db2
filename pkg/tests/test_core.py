import math

import pytest
from hypothesis import given, strategies as st
from scipy import constants

from ramsey_laser.core import (
    AtomParams,
    CavityParams,
    LaserConfig,
    PumpParams,
    RamseyGeometry,
    ca40_preset,
    coupling_from_dipole,
    desk_preset,
    validate_regime,
)


def _config(kappa=1e7, tau=2e-6, T=2e-5, gammas=(0.0, 2000.0, 0.0, 1000.0)):
    return LaserConfig(
        cavity=CavityParams(kappa=kappa, g=1e3),
        atom=AtomParams(*gammas),
        geometry=RamseyGeometry(tau=tau, T_drift=T, omega_R=math.pi / 2 / tau),
        pump=PumpParams(R=1e6, p=1.0),
    )


def test_ca40_preset_values():
    cfg = ca40_preset()
    assert cfg.geometry.tau == pytest.approx(1e-3 / 500, rel=1e-15)
    assert cfg.cavity.kappa == 1e7
    assert cfg.cavity.g == 1e3
    assert cfg.atom.gamma_a_prime == pytest.approx(2 * math.pi * 320)
    assert cfg.atom.gamma_ab == pytest.approx(math.pi * 320)
    assert cfg.geometry.theta == pytest.approx(math.pi / 2, rel=1e-15)
    assert cfg.geometry.phi == pytest.approx(math.pi / 2, rel=1e-15)
    assert cfg.pump.p == 1.0


def test_ca40_regime_passes():
    report = validate_regime(ca40_preset(), 5)
    assert report.passed
    # direct arithmetic: 1/T = 5e4 over 2 pi 320; 1/tau over 1/T = 10; kappa/2 over 1/tau = 10
    ratios = [ln.ratio for ln in report.links]
    assert ratios == pytest.approx([5e4 / (2 * math.pi * 320), 10.0, 10.0], rel=1e-12)


def test_boundary_link_fails_with_ratio_one():
    tau = 2e-6
    cfg = _config(kappa=2 / tau, tau=tau)
    link = validate_regime(cfg, 5).links[2]
    assert link.ratio == pytest.approx(1.0)
    assert not link.passed


def test_ideal_atom_unbounded():
    report = validate_regime(_config(gammas=(0, 0, 0, 0)), 5)
    first = report.links[0]
    assert first.passed and first.status == "unbounded" and math.isinf(first.ratio)


def test_zero_drift_is_degenerate():
    report = validate_regime(_config(T=0.0), 5)
    assert report.degenerate
    assert [ln.status for ln in report.links] == ["degenerate", "degenerate", "ok"]


@pytest.mark.parametrize(
    "build, key",
    [
        (lambda: CavityParams(kappa=0, g=1), "cavity.kappa"),
        (lambda: CavityParams(kappa=1, g=-1), "cavity.g"),
        (lambda: AtomParams(gamma_ab=-1), "atom.gamma_ab"),
        (lambda: RamseyGeometry(tau=0, T_drift=1, omega_R=1), "geometry.tau"),
        (lambda: RamseyGeometry(tau=1, T_drift=-1, omega_R=1), "geometry.T_drift"),
        (lambda: PumpParams(R=0), "pump.R"),
        (lambda: PumpParams(R=1, p=1.5), "pump.p"),
        (lambda: PumpParams(R=1, p=math.nan), "pump.p"),
    ],
)
def test_invalid_fields_name_the_key(build, key):
    with pytest.raises(ValueError, match=key.replace(".", r"\.")):
        build()


def test_theta_phi_recomputed_after_replace():
    cfg = ca40_preset().with_value("geometry.tau", 4e-6)
    assert cfg.geometry.theta == cfg.geometry.omega_R * 4e-6
    cfg = cfg.with_value("geometry.phi", 1.25)
    assert cfg.geometry.phi == pytest.approx(1.25, rel=1e-15)
    assert cfg.geometry.delta2 == pytest.approx(1.25 / cfg.geometry.T_drift)


def test_with_value_unknown_path():
    with pytest.raises(KeyError):
        ca40_preset().with_value("cavity.q", 1.0)


def test_flatten_roundtrip():
    cfg = desk_preset()
    assert LaserConfig.from_flat(cfg.flatten()) == cfg


@given(st.floats(1e-3, 1e3))
def test_regime_ratios_invariant_under_time_rescaling(s):
    base = ca40_preset()
    g, a, c = base.geometry, base.atom, base.cavity
    scaled = LaserConfig(
        cavity=CavityParams(kappa=c.kappa * s, g=c.g * s),
        atom=AtomParams(a.gamma_a * s, a.gamma_a_prime * s, a.gamma_b * s, a.gamma_ab * s),
        geometry=RamseyGeometry(tau=g.tau / s, T_drift=g.T_drift / s, omega_R=g.omega_R * s, delta2=g.delta2 * s),
        pump=PumpParams(R=base.pump.R * s, p=1.0),
    )
    r0 = [ln.ratio for ln in validate_regime(base).links]
    r1 = [ln.ratio for ln in validate_regime(scaled).links]
    assert r1 == pytest.approx(r0, rel=1e-9)


def test_coupling_scaling():
    g = coupling_from_dipole(3.16e-30, 2 * math.pi * 4.54e14, 1e-9)
    assert coupling_from_dipole(3.16e-30, 2 * math.pi * 4.54e14, 4e-9) == pytest.approx(g / 2)
    assert coupling_from_dipole(6.32e-30, 2 * math.pi * 4.54e14, 1e-9) == pytest.approx(2 * g)


def test_coupling_ca_line_independent_constants():
    mu, omega, V = 3.16e-30, 2 * math.pi * 4.54e14, 1e-9
    # CODATA 2018 values typed in by hand
    hbar, eps0 = 1.054571817e-34, 8.8541878128e-12
    expected = mu * (omega / (2 * hbar * eps0 * V)) ** 0.5
    assert coupling_from_dipole(mu, omega, V) == pytest.approx(expected, rel=1e-9)
    assert constants.hbar == pytest.approx(hbar, rel=1e-9)


@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_coupling_homogeneity(s_mu, s_v):
    g = coupling_from_dipole(1e-30, 1e15, 1e-9)
    assert coupling_from_dipole(s_mu * 1e-30, 1e15, s_v * 1e-9) == pytest.approx(g * s_mu / math.sqrt(s_v), rel=1e-12)


@pytest.mark.parametrize("bad", [(0, 1, 1), (1, -1, 1), (1, 1, 0)])
def test_coupling_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        coupling_from_dipole(*bad)


def test_desk_preset_is_self_consistent():
    cfg = desk_preset()
    assert validate_regime(cfg).passed
    I0 = cfg.pump.R / cfg.cavity.kappa
    assert 2 * cfg.cavity.g * math.sqrt(I0) * cfg.geometry.tau == pytest.approx(math.pi / 2)
    assert I0 >= 5
