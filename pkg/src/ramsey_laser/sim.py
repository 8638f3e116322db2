"""Atom-by-atom Monte Carlo of the Ramsey laser.

Each atom carries a c-number dipole ``m = -i s_minus`` and inversion
``w = s_z``. Inside a zone it precesses about the cavity field,

    dm/dt = g alpha w,        dw/dt = -4 g Re(alpha* m),

and the field obeys d alpha/dt = -(kappa/2) alpha + g M with M the gated sum
of m over both zones. During the drift the dipole only picks up the phase
delta2 per unit time. Noise enters through the injection times and through
the random phase of the seeded dipole; nothing stochastic happens inside a
step.

Stepping scheme (one step of length dt):

1. M, N_a, N_b from the step-start atomic state, weighted by the fraction of
   the step each atom spends inside a zone.
2. Exponential-Euler field update with M held constant.
3. Exact rotation of every in-zone atom about the midpoint field, through
   the angle 2 g |alpha_mid| times its in-zone overlap.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numba as nb
import numpy as np

from ramsey_laser.analytic import DarkFringe, BelowThresholdError, linewidth_full, steady_state
from ramsey_laser.core import LaserConfig, RamseyGeometry

InjectionMode = Literal["regular", "poisson"]
Stage = Literal["waiting", "pulse1", "drift", "pulse2", "exited"]

# Seeded |s_minus| for an atom injected in the upper state: symmetric-ordering
# (Wigner) value sqrt(<sx^2> + <sy^2>) / 2 = 1/sqrt(2).
DEFAULT_DIPOLE_SEED = 1 / math.sqrt(2)
RUNAWAY_FACTOR = 1e6
DT_DIVISOR = 20

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_RUNAWAY = 2


class SimulationAbort(RuntimeError):
    """Numerical failure inside a trajectory; carries a snapshot for diagnosis."""

    def __init__(self, reason: str, time: float, alpha: complex, seed: int):
        super().__init__(f"{reason} at t={time:.6g} s (alpha={alpha!r}, seed={seed})")
        self.reason = reason
        self.time = time
        self.alpha = alpha
        self.seed = seed


def warmup_time(laser: LaserConfig) -> float:
    """Data discarded before recording: 5/kappa plus three full transits."""
    return 5.0 / laser.cavity.kappa + 3.0 * laser.geometry.transit_time


def max_dt(laser: LaserConfig) -> float:
    return min(laser.geometry.tau, 2.0 / laser.cavity.kappa) / DT_DIVISOR


def default_mode(p: float) -> InjectionMode:
    if p == 1.0:
        return "regular"
    if p == 0.0:
        return "poisson"
    raise ValueError(f"the simulator implements p = 0 or p = 1 only, got p = {p!r}")


@dataclass(frozen=True)
class SimConfig:
    """Settings of one simulated trajectory.

    Parameters
    ----------
    laser : LaserConfig
    dt : float
        Integration step, s. Must not exceed min(tau, 2/kappa) / 20.
    duration : float
        Total simulated time, s, including the warm-up that is discarded.
    seed : int
        Seed of the trajectory's random stream.
    output_stride : int
        Steps per recorded sample.
    injection_mode : {"regular", "poisson"}, optional
        Defaults to the endpoint matching ``laser.pump.p``.
    dipole_seed : float
        Magnitude of the injected dipole; its phase is uniform.
    drift_reference : {"lab", "field"}
        "field" is a diagnostic: the dipole phase is stored relative to the
        field at zone-1 exit and re-attached to the field at zone-2 entry,
        removing the memory of the field phase across the drift.
    classical_field : complex, optional
        Hold the field fixed at this value (no back-action).
    keep_atoms : bool
        Return final per-atom states.
    """

    laser: LaserConfig
    dt: float
    duration: float
    seed: int = 0
    output_stride: int = 1
    injection_mode: InjectionMode | None = None
    dipole_seed: float = DEFAULT_DIPOLE_SEED
    drift_reference: Literal["lab", "field"] = "lab"
    classical_field: complex | None = None
    keep_atoms: bool = False

    def __post_init__(self) -> None:
        bound = max_dt(self.laser)
        if not (self.dt > 0 and self.dt <= bound * (1 + 1e-9)):
            raise ValueError(f"dt = {self.dt!r} violates 0 < dt <= min(tau, 2/kappa)/20 = {bound:.6g}")
        if not (isinstance(self.output_stride, (int, np.integer)) and self.output_stride >= 1):
            raise ValueError("output_stride must be an integer >= 1")
        if not self.duration > warmup_time(self.laser):
            raise ValueError(
                f"duration {self.duration:.6g} s does not exceed the warm-up {warmup_time(self.laser):.6g} s"
            )
        if self.injection_mode is None:
            object.__setattr__(self, "injection_mode", default_mode(self.laser.pump.p))
        if self.injection_mode not in ("regular", "poisson"):
            raise ValueError(f"unknown injection mode {self.injection_mode!r}")
        if self.drift_reference not in ("lab", "field"):
            raise ValueError(f"unknown drift reference {self.drift_reference!r}")
        if not self.dipole_seed >= 0:
            raise ValueError("dipole_seed must be >= 0")
        try:
            D = linewidth_full(self.laser).D_full
        except BelowThresholdError:
            return
        if self.duration * D < 10:
            warnings.warn(
                f"duration {self.duration:.3g} s is short against 1/D = {1 / D:.3g} s; "
                "phase diffusion may be unresolvable",
                stacklevel=2,
            )

    @property
    def nsteps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def record_interval(self) -> float:
        return self.dt * self.output_stride


def schedule_injections(
    R: float, mode: InjectionMode, duration: float, seed: int | np.random.Generator
) -> np.ndarray:
    """Sorted atom entry times in [0, duration).

    Regular mode places atoms at j / R. Poisson mode draws independent
    exponential gaps of mean 1 / R.
    """
    if not (R > 0 and duration > 0):
        raise ValueError("R and duration must be > 0")
    if R * duration < 1:
        raise ValueError("no atoms in window (R * duration < 1)")
    if mode == "regular":
        n = math.ceil(R * duration)
        t = np.arange(n) / R
        t = t[t < duration]
    elif mode == "poisson":
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        chunks = []
        last = 0.0
        expected = R * duration
        while last < duration:
            n = int(expected + 6 * math.sqrt(expected) + 16)
            t = last + np.cumsum(rng.exponential(1.0 / R, n))
            chunks.append(t)
            last = t[-1]
        t = np.concatenate(chunks)
        t = t[t < duration]
    else:
        raise ValueError(f"unknown injection mode {mode!r}")
    if t.size == 0:
        raise ValueError("no atoms in window")
    return t


@nb.njit(cache=True, inline="always")
def _rotate(mr, mi, w, pr, pi, c, s):
    # (mr, mi) is the dipole, (pr, pi) the unit field phasor. In the frame
    # where the field is real, x = 2 Re(m') and w turn by the angle with
    # cosine c and sine s while Im(m') is conserved.
    ar = mr * pr + mi * pi
    ai = mi * pr - mr * pi
    x = 2.0 * ar
    xn = x * c + w * s
    wn = w * c - x * s
    h = 0.5 * xn
    return h * pr - ai * pi, h * pi + ai * pr, wn


@nb.njit(cache=True)
def _cmul(ar, ai, br, bi):
    return ar * br - ai * bi, ar * bi + ai * br


@nb.njit(cache=True)
def _integrate(
    entry, mre, mim, w, kappa, g, tau, T, drift_phase, dt, t0, nsteps, alpha0, stride, clamp_until,
    fieldref, runaway, rec_alpha, rec_na, rec_nb, rec_m, rec_noise, stats, emission_after,
):
    n = entry.shape[0]
    L = 2.0 * tau + T
    lam = kappa / 2.0
    dec = math.exp(-lam * dt)
    src = (1.0 - dec) / lam
    dpr = math.cos(drift_phase)
    dpi = math.sin(drift_phase)
    ar = alpha0.real
    ai = alpha0.imag
    nrec = rec_alpha.shape[0]
    z1lo = 0
    z2lo = 0
    hi = 0
    z2hi = 0
    # edge pointers: atoms before x1 have left zone 1, before x2 zone 2
    x1 = 0
    x2 = 0
    for step in range(nsteps):
        # one expression for both ends of the step keeps all edge tests consistent
        t = t0 + step * dt
        t1 = t0 + (step + 1) * dt
        while z1lo < n and entry[z1lo] + tau <= t:
            z1lo += 1
        while z2lo < n and entry[z2lo] + L <= t:
            z2lo += 1
        nr = 0.0
        ni = 0.0
        while hi < n and entry[hi] < t1:
            nr += mre[hi]
            ni += mim[hi]
            hi += 1
        while z2hi < n and entry[z2hi] + tau + T < t1:
            j = z2hi
            if fieldref:
                a0 = math.sqrt(ar * ar + ai * ai)
                if a0 > 0.0:
                    mre[j], mim[j] = _cmul(mre[j], mim[j], ar / a0, ai / a0)
            nr += mre[j]
            ni += mim[j]
            z2hi += 1

        # gated sum of the dipoles; populations only on recorded steps
        record = (step + 1) % stride == 0
        sr = 0.0
        si = 0.0
        gsum = 0.0
        wsum = 0.0
        for j in range(z1lo, hi):
            s0 = t - entry[j]
            if s0 >= 0.0 and s0 + dt <= tau:
                f = 1.0
            else:
                f = (min(s0 + dt, tau) - max(s0, 0.0)) / dt
            if f > 0.0:
                sr += f * mre[j]
                si += f * mim[j]
                if record:
                    gsum += f
                    wsum += f * w[j]
        for j in range(z2lo, z2hi):
            s0 = t - entry[j]
            if s0 >= tau + T and s0 + dt <= L:
                f = 1.0
            else:
                f = (min(s0 + dt, L) - max(s0, tau + T)) / dt
            if f > 0.0:
                sr += f * mre[j]
                si += f * mim[j]
                if record:
                    gsum += f
                    wsum += f * w[j]

        if t1 <= clamp_until:
            br = ar
            bi = ai
        else:
            br = ar * dec + g * sr * src
            bi = ai * dec + g * si * src
        if not (math.isfinite(br) and math.isfinite(bi)):
            return STATUS_NONFINITE, step, complex(ar, ai)
        if br * br + bi * bi > runaway:
            return STATUS_RUNAWAY, step, complex(br, bi)

        hr = 0.5 * (ar + br)
        hm = 0.5 * (ai + bi)
        amp = math.sqrt(hr * hr + hm * hm)
        if amp > 0.0:
            pr = hr / amp
            pi = hm / amp
        else:
            pr = 1.0
            pi = 0.0
        om = 2.0 * g * amp
        cf = math.cos(om * dt)
        sf = math.sin(om * dt)

        for j in range(z1lo, hi):
            s0 = t - entry[j]
            if s0 >= 0.0 and s0 + dt <= tau:
                mre[j], mim[j], w[j] = _rotate(mre[j], mim[j], w[j], pr, pi, cf, sf)
            else:
                o = min(s0 + dt, tau) - max(s0, 0.0)
                if o > 0.0:
                    mre[j], mim[j], w[j] = _rotate(mre[j], mim[j], w[j], pr, pi, math.cos(om * o), math.sin(om * o))
        for j in range(z2lo, z2hi):
            s0 = t - entry[j]
            if s0 >= tau + T and s0 + dt <= L:
                mre[j], mim[j], w[j] = _rotate(mre[j], mim[j], w[j], pr, pi, cf, sf)
            else:
                o = min(s0 + dt, L) - max(s0, tau + T)
                if o > 0.0:
                    mre[j], mim[j], w[j] = _rotate(mre[j], mim[j], w[j], pr, pi, math.cos(om * o), math.sin(om * o))

        while x1 < n and entry[x1] + tau <= t1:
            j = x1
            nr -= mre[j]
            ni -= mim[j]
            mre[j], mim[j] = _cmul(mre[j], mim[j], dpr, dpi)
            if fieldref:
                mre[j], mim[j] = _cmul(mre[j], mim[j], pr, -pi)
            x1 += 1
        while x2 < n and entry[x2] + L <= t1:
            j = x2
            nr -= mre[j]
            ni -= mim[j]
            if entry[j] + L >= emission_after:
                stats[0] += 0.5 * (1.0 - w[j])
                stats[1] += 1.0
            x2 += 1
        ar = br
        ai = bi

        k = step // stride
        if k < nrec:
            rec_noise[k] += complex(nr, ni)
            if record:
                rec_alpha[k] = complex(ar, ai)
                rec_na[k] = 0.5 * (gsum + wsum)
                rec_nb[k] = 0.5 * (gsum - wsum)
                rec_m[k] = complex(sr, si)
    return STATUS_OK, nsteps, complex(ar, ai)


@dataclass(frozen=True)
class FieldState:
    alpha: complex
    time: float

    @property
    def photon_number(self) -> float:
        return abs(self.alpha) ** 2


@dataclass(frozen=True)
class AtomRecord:
    """One atom: entry time and c-number spin (s_minus, s_z)."""

    entry_time: float
    s_minus: complex
    s_z: float

    def stage(self, t: float, geometry: RamseyGeometry) -> Stage:
        s = t - self.entry_time
        tau, T = geometry.tau, geometry.T_drift
        if s < 0:
            return "waiting"
        if s < tau:
            return "pulse1"
        if s < tau + T:
            return "drift"
        if s < 2 * tau + T:
            return "pulse2"
        return "exited"

    @property
    def m(self) -> complex:
        return -1j * self.s_minus


def _gate_overlap(s0: np.ndarray, dt: float, tau: float, T: float) -> tuple[np.ndarray, np.ndarray]:
    o1 = np.clip(np.minimum(s0 + dt, tau) - np.maximum(s0, 0.0), 0.0, None)
    o2 = np.clip(np.minimum(s0 + dt, 2 * tau + T) - np.maximum(s0, tau + T), 0.0, None)
    return o1, o2


def _rotate_complex(m: complex, w: float, ph: complex, angle: float) -> tuple[complex, float]:
    mr, mi, wn = _rotate(m.real, m.imag, w, ph.real, ph.imag, math.cos(angle), math.sin(angle))
    return complex(mr, mi), float(wn)


def step(
    field: FieldState, atoms: Sequence[AtomRecord], dt: float, laser: LaserConfig
) -> tuple[FieldState, list[AtomRecord]]:
    """Advance the field and the given atoms by one step.

    Plain-numpy version of the trajectory kernel with the drift phase applied
    step by step. Atoms that have left zone 2 by the end of the step are
    dropped.
    """
    if not (dt > 0 and dt <= max_dt(laser) * (1 + 1e-9)):
        raise ValueError(f"dt = {dt!r} violates the step bound {max_dt(laser):.6g}")
    geo, cav = laser.geometry, laser.cavity
    tau, T, L = geo.tau, geo.T_drift, geo.transit_time
    t = field.time
    entry = np.array([a.entry_time for a in atoms], dtype=float)
    m = np.array([a.m for a in atoms], dtype=complex)
    w = np.array([a.s_z for a in atoms], dtype=float)
    s0 = t - entry
    o1, o2 = _gate_overlap(s0, dt, tau, T)
    gate = (o1 + o2) / dt
    M = complex(math.fsum((gate * m.real).tolist()), math.fsum((gate * m.imag).tolist()))
    lam = cav.kappa / 2
    dec = math.exp(-lam * dt)
    anew = field.alpha * dec + cav.g * M * (1 - dec) / lam
    if not (math.isfinite(anew.real) and math.isfinite(anew.imag)):
        raise SimulationAbort("non-finite field", t, field.alpha, -1)
    amid = 0.5 * (field.alpha + anew)
    amp = abs(amid)
    ph = amid / amp if amp > 0 else 1.0 + 0j
    om = 2 * cav.g * amp
    # drift phase for the part of the step spent between the zones
    od = np.clip(np.minimum(s0 + dt, tau + T) - np.maximum(s0, tau), 0.0, None)
    out = []
    for j in range(entry.size):
        mj, wj = m[j], w[j]
        if o1[j] > 0:
            mj, wj = _rotate_complex(mj, wj, ph, om * o1[j])
        if od[j] > 0:
            mj *= np.exp(1j * geo.delta2 * od[j])
        if o2[j] > 0:
            mj, wj = _rotate_complex(mj, wj, ph, om * o2[j])
        if s0[j] + dt < L:
            out.append(AtomRecord(float(entry[j]), complex(1j * mj), float(wj)))
    return FieldState(complex(anew), t + dt), out


def macroscopic_observables(atoms: Sequence[AtomRecord], t: float, geometry: RamseyGeometry) -> tuple[float, float, complex]:
    """(N_a, N_b, M) over atoms inside either zone at time ``t``.

    Uses compensated summation so the result does not depend on atom order.
    """
    inside = [a for a in atoms if a.stage(t, geometry) in ("pulse1", "pulse2")]
    Na = math.fsum(0.5 * (1 + a.s_z) for a in inside)
    Nb = math.fsum(0.5 * (1 - a.s_z) for a in inside)
    M = complex(math.fsum(a.m.real for a in inside), math.fsum(a.m.imag for a in inside))
    return Na, Nb, M


@dataclass
class TrajectoryResult:
    """Recorded output of one trajectory (after the warm-up).

    ``gating_noise`` holds, per record bin, the sum of the jumps of M caused
    by atoms crossing a zone edge (+m on entry, -m on exit).
    """

    times: np.ndarray
    alphas: np.ndarray
    photon_numbers: np.ndarray
    macro_Na: np.ndarray
    macro_Nb: np.ndarray
    macro_M: np.ndarray
    gating_noise: np.ndarray
    seed: int
    config: SimConfig
    n_atoms: int
    emission_per_atom: float
    final_m: np.ndarray | None = field(default=None, repr=False)
    final_w: np.ndarray | None = field(default=None, repr=False)

    @property
    def record_interval(self) -> float:
        return self.config.record_interval

    def __len__(self) -> int:
        return self.times.size


def _analytic_photons(laser: LaserConfig) -> float | None:
    ss = steady_state(laser)
    return None if isinstance(ss, DarkFringe) else ss.photon_number


def run_trajectory(config: SimConfig) -> TrajectoryResult:
    """Simulate one trajectory; output is a pure function of ``config``.

    During the first transit the field is held at the analytic steady-state
    amplitude so the zones fill with pulsed atoms before the field is
    released. Records before :func:`warmup_time` are discarded.

    Raises
    ------
    SimulationAbort
        On a non-finite value or a photon number above 1e6 times the
        analytic value.
    """
    laser = config.laser
    geo, cav = laser.geometry, laser.cavity
    ss = np.random.SeedSequence(config.seed)
    inj_seq, phase_seq = ss.spawn(2)
    entry = schedule_injections(laser.pump.R, config.injection_mode, config.duration, np.random.default_rng(inj_seq))
    psi = np.random.default_rng(phase_seq).uniform(0.0, 2 * math.pi, entry.size)
    mre = config.dipole_seed * np.cos(psi)
    mim = config.dipole_seed * np.sin(psi)
    w = np.ones(entry.size)

    I0 = _analytic_photons(laser)
    ref_photons = I0 if I0 is not None else max(laser.pump.R / cav.kappa, 1.0)
    if config.classical_field is not None:
        alpha0 = complex(config.classical_field)
        clamp_until = math.inf
    else:
        alpha0 = complex(math.sqrt(I0)) if I0 is not None else 0j
        clamp_until = geo.transit_time

    nsteps = config.nsteps
    stride = int(config.output_stride)
    nrec = nsteps // stride
    rec_alpha = np.zeros(nrec, np.complex128)
    rec_na = np.zeros(nrec)
    rec_nb = np.zeros(nrec)
    rec_m = np.zeros(nrec, np.complex128)
    rec_noise = np.zeros(nrec, np.complex128)
    stats = np.zeros(2)
    t_warm = warmup_time(laser)
    status, at_step, alpha_end = _integrate(
        entry, mre, mim, w, cav.kappa, cav.g, geo.tau, geo.T_drift, geo.phi,
        config.dt, 0.0, nsteps, alpha0, stride, clamp_until,
        config.drift_reference == "field", RUNAWAY_FACTOR * ref_photons,
        rec_alpha, rec_na, rec_nb, rec_m, rec_noise, stats, t_warm,
    )
    if status == STATUS_NONFINITE:
        raise SimulationAbort("non-finite value", at_step * config.dt, complex(alpha_end), config.seed)
    if status == STATUS_RUNAWAY:
        raise SimulationAbort("runaway field", at_step * config.dt, complex(alpha_end), config.seed)

    times = config.record_interval * np.arange(1, nrec + 1)
    keep = times >= t_warm
    emitted = stats[0] / stats[1] if stats[1] > 0 else math.nan
    return TrajectoryResult(
        times=times[keep],
        alphas=rec_alpha[keep],
        photon_numbers=np.abs(rec_alpha[keep]) ** 2,
        macro_Na=rec_na[keep],
        macro_Nb=rec_nb[keep],
        macro_M=rec_m[keep],
        gating_noise=rec_noise[keep],
        seed=config.seed,
        config=config,
        n_atoms=int(entry.size),
        emission_per_atom=float(emitted),
        final_m=mre + 1j * mim if config.keep_atoms else None,
        final_w=w if config.keep_atoms else None,
    )


def _run_one(config: SimConfig) -> TrajectoryResult | SimulationAbort:
    try:
        return run_trajectory(config)
    except SimulationAbort as exc:
        return exc


def run_ensemble(
    config: SimConfig, seeds: Sequence[int], workers: int = 1
) -> list[TrajectoryResult | SimulationAbort]:
    """Run one trajectory per seed; the output order follows ``seeds``.

    Aborted trajectories appear as their :class:`SimulationAbort` instead of
    stopping the ensemble.
    """
    configs = [_with_seed(config, s) for s in seeds]
    if workers <= 1:
        return [_run_one(c) for c in configs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, configs))


def _with_seed(config: SimConfig, seed: int) -> SimConfig:
    import dataclasses

    return dataclasses.replace(config, seed=int(seed))


@dataclass(frozen=True)
class LagAmplitude:
    label: str
    lag: float
    bins: int
    amplitude: float
    stderr: float
    control: bool

    @property
    def z(self) -> float:
        return self.amplitude / self.stderr if self.stderr > 0 else math.inf


@dataclass(frozen=True)
class NoiseLagReport:
    """Autocovariance of the gating jumps of M at the predicted and control lags.

    Amplitudes are Re <dX*(t) dX(t+lag)> averaged over trajectories, in units
    of the lag-0 value; ``stderr`` is the standard error over trajectories.
    """

    lags: tuple[LagAmplitude, ...]
    n_trajectories: int
    record_interval: float

    def by_label(self, label: str) -> LagAmplitude:
        for lag in self.lags:
            if lag.label == label:
                return lag
        raise KeyError(label)

    @property
    def peaks(self) -> tuple[LagAmplitude, ...]:
        return tuple(x for x in self.lags if not x.control)

    @property
    def controls(self) -> tuple[LagAmplitude, ...]:
        return tuple(x for x in self.lags if x.control)


MIN_LAG_ENSEMBLE = 32


def noise_lag_structure(
    results: Sequence[TrajectoryResult], control_lags: Sequence[float] | None = None
) -> NoiseLagReport:
    """Correlation amplitudes of the M fluctuations at the gate-edge lags.

    Predicted lags are 0, tau, T, tau + T and 2 tau + T, the differences
    between the four times at which an atom enters or leaves a zone. The
    default control lags are 1.75 tau and 3.3 tau, which match no such
    difference for the usual T >= 4 tau.

    Raises
    ------
    ValueError
        With fewer than 32 trajectories.
    """
    if len(results) < MIN_LAG_ENSEMBLE:
        raise ValueError(f"noise_lag_structure needs >= {MIN_LAG_ENSEMBLE} trajectories, got {len(results)}")
    geo = results[0].config.laser.geometry
    dtr = results[0].record_interval
    tau, T = geo.tau, geo.T_drift
    named = [("0", 0.0), ("tau", tau), ("T", T), ("tau+T", tau + T), ("2tau+T", 2 * tau + T)]
    ctrl = control_lags if control_lags is not None else (1.75 * tau, 3.3 * tau)
    named += [(f"control {c / tau:.3g}tau", float(c)) for c in ctrl]
    bins = [int(round(lag / dtr)) for _, lag in named]
    per_traj = np.empty((len(results), len(named)))
    for i, res in enumerate(results):
        x = res.gating_noise - res.gating_noise.mean()
        c0 = np.mean(np.abs(x) ** 2)
        for k, b in enumerate(bins):
            if b >= x.size:
                raise ValueError("record too short for the requested lags")
            per_traj[i, k] = np.mean((np.conj(x[: x.size - b]) * x[b:]).real) / c0
    mean = per_traj.mean(axis=0)
    se = per_traj.std(axis=0, ddof=1) / math.sqrt(len(results))
    lags = tuple(
        LagAmplitude(label, lag, b, float(mu), float(s), label.startswith("control"))
        for (label, lag), b, mu, s in zip(named, bins, mean, se)
    )
    return NoiseLagReport(lags, len(results), dtr)
