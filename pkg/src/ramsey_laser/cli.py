"""Command-line front end: ``ramsey-laser {analytic,simulate,sweep,validate,rerun}``.

Exit codes: 0 success, 1 rerun digest mismatch, 2 configuration error,
3 numerical abort, 4 statistical insufficiency.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence, TextIO

import numpy as np

from ramsey_laser import __version__
from ramsey_laser.analytic import BelowThresholdError, DarkFringe, linewidth_approx, linewidth_full, steady_state
from ramsey_laser.configfile import VIRTUAL_KEYS, ConfigDocument, ConfigError, emit_config, format_value, parse_document
from ramsey_laser.core import LaserConfig, validate_regime
from ramsey_laser.ensemble import MIN_SUCCESS_FRACTION, simulate_ensemble
from ramsey_laser.sim import SimulationAbort, TrajectoryResult

log = logging.getLogger("ramsey_laser")

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_STATS = 4

ANALYTIC_COLUMNS = (
    "theta", "phi", "p", "I0", "N_a_ss", "N_b_ss", "D_ST", "D_Ram",
    "D_full_radps", "D_full_hz", "D_approx_radps", "D_approx_hz",
    "dark_fringe", "regime_pass", "ratio_gamma_T", "ratio_T_tau", "ratio_tau_kappa",
)
RECORD_COLUMNS = ("time", "re_alpha", "im_alpha", "photons", "N_a", "N_b")
TRAJECTORY_COLUMNS = (
    "index", "seed", "status", "photons", "N_a", "N_b", "emission_per_atom",
    "D_phase_radps", "D_phase_stderr", "D_lorentz_radps", "D_lorentz_stderr", "D_analytic_radps", "ratio_phase",
)
ENSEMBLE_COLUMNS = ("method", "n_ok", "D_hat_radps", "stderr_radps", "D_analytic_radps", "ratio", "flags")
SWEEP_COLUMNS = (
    "index", "value", "theta", "phi", "p", "D_full_radps", "D_approx_radps", "dark_fringe",
    "D_sim_radps", "D_sim_stderr", "n_sim",
)


def _fmt(value: Any) -> str:
    if value is None:
        return "nan"
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return format_value(float(value))
    return str(value)


def write_csv(stream: TextIO, columns: Sequence[str], rows: Iterable[dict]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])


def _write_file(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        write_csv(fh, columns, rows)


def analytic_row(laser: LaserConfig) -> dict:
    """One CSV row of closed-form results for ``laser``."""
    geo = laser.geometry
    report = validate_regime(laser)
    ratios = [ln.ratio for ln in report.links]
    row = {
        "theta": geo.theta, "phi": geo.phi, "p": laser.pump.p,
        "D_approx_radps": linewidth_approx(laser),
        "regime_pass": report.passed,
        "ratio_gamma_T": ratios[0], "ratio_T_tau": ratios[1], "ratio_tau_kappa": ratios[2],
    }
    row["D_approx_hz"] = row["D_approx_radps"] / (2 * math.pi)
    ss = steady_state(laser)
    if isinstance(ss, DarkFringe):
        row["dark_fringe"] = True
        return row
    res = linewidth_full(laser)
    row.update(
        dark_fringe=False, I0=ss.photon_number, N_a_ss=ss.N_a_ss, N_b_ss=ss.N_b_ss,
        D_ST=res.D_ST, D_Ram=res.D_Ram, D_full_radps=res.D_full, D_full_hz=res.hz_full,
    )
    return row


@dataclass(frozen=True)
class SweepPlan:
    """Linear grid over one parameter path of the laser configuration."""

    path: str
    start: float
    stop: float
    count: int
    spacing: str = "linear"
    simulate: bool = False
    sim_every: int = 1
    seed_policy: str = "same"

    def __post_init__(self) -> None:
        if self.count < 2:
            raise ConfigError("count must be >= 2", "sweep.count")
        if self.spacing != "linear":
            raise ConfigError(f"unsupported spacing {self.spacing!r}", "sweep.spacing")
        if self.path not in LaserConfig.keys() and self.path not in VIRTUAL_KEYS:
            raise ConfigError("parameter path does not resolve in the laser configuration", "sweep.path")
        if self.sim_every < 1:
            raise ConfigError("sim_every must be >= 1", "sweep.sim_every")
        if self.seed_policy not in ("same", "offset"):
            raise ConfigError(f"unknown seed policy {self.seed_policy!r}", "sweep.seed_policy")

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    def seeds(self, point: int, base: int, n: int) -> list[int]:
        shift = 0 if self.seed_policy == "same" else 1000 * point
        return [base + shift + i for i in range(n)]


def fringe_visibility(
    values: Sequence[float],
    errors: Sequence[float],
    high: Sequence[int] | None = None,
    low: Sequence[int] | None = None,
) -> tuple[float, float]:
    """Contrast (a - b) / (a + b) and its propagated standard error.

    ``a`` and ``b`` are the means over the ``high`` and ``low`` indices;
    without them the largest and smallest finite values are used, which
    biases the contrast upward on noisy data.
    """
    v = np.asarray(values, dtype=float)
    e = np.asarray(errors, dtype=float)
    if high is None or low is None:
        ok = np.flatnonzero(np.isfinite(v))
        if ok.size < 2:
            raise ValueError("need at least two finite values")
        high = [int(ok[np.argmax(v[ok])])]
        low = [int(ok[np.argmin(v[ok])])]
    hi_i, lo_i = list(high), list(low)
    if not hi_i or not lo_i or not np.all(np.isfinite(v[hi_i + lo_i])):
        raise ValueError("contrast points must be finite")
    a, b = v[hi_i].mean(), v[lo_i].mean()
    ea = math.sqrt(np.sum(e[hi_i] ** 2)) / len(hi_i)
    eb = math.sqrt(np.sum(e[lo_i] ** 2)) / len(lo_i)
    vis = (a - b) / (a + b)
    err = math.hypot(2 * b / (a + b) ** 2 * ea, 2 * a / (a + b) ** 2 * eb)
    return float(vis), float(err)


def sha256_of(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(
    out: Path, command: str, laser: LaserConfig, seed: int, trajectories: int, seeds: Sequence[int],
    sim: dict, sweep: dict, files: Sequence[Path],
) -> Path:
    """Flat key=value manifest; it is itself a valid configuration document."""
    lines = [
        "tool.name = ramsey-laser",
        f"tool.version = {__version__}",
        f"run.timestamp = {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}",
        f"run.command = {command}",
        f"run.seed = {seed}",
        f"run.trajectories = {trajectories}",
        f"run.seeds = {','.join(str(s) for s in seeds) if seeds else 'none'}",
    ]
    lines += emit_config(laser).splitlines()
    lines += [f"sim.{k} = {_manifest_value(v)}" for k, v in sorted(sim.items())]
    lines += [f"sweep.{k} = {_manifest_value(v)}" for k, v in sorted(sweep.items())]
    lines += [f"output.{f.name}.sha256 = {sha256_of(f)}" for f in files]
    path = out / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def _manifest_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _sim_options(doc: ConfigDocument) -> tuple[dict, bool]:
    sim = dict(doc.sim)
    records = sim.pop("records", True)
    return sim, records


def cmd_analytic(doc: ConfigDocument, args: argparse.Namespace, stdout: TextIO) -> int:
    row = analytic_row(doc.laser)
    write_csv(stdout, ANALYTIC_COLUMNS, [row])
    print(validate_regime(doc.laser), file=sys.stderr)
    if args.out:
        out = _outdir(args.out)
        path = out / "analytic.csv"
        _write_file(path, ANALYTIC_COLUMNS, [row])
        write_manifest(out, "analytic", doc.laser, args.seed, 0, [], {}, {}, [path])
    return EXIT_OK


def cmd_validate(doc: ConfigDocument, args: argparse.Namespace, stdout: TextIO) -> int:
    report = validate_regime(doc.laser)
    print(report, file=stdout)
    return EXIT_OK if report.passed else EXIT_CONFIG


def _record_rows(res: TrajectoryResult) -> Iterable[dict]:
    for t, a, n, na, nb in zip(res.times, res.alphas, res.photon_numbers, res.macro_Na, res.macro_Nb):
        yield {"time": t, "re_alpha": a.real, "im_alpha": a.imag, "photons": n, "N_a": na, "N_b": nb}


def cmd_simulate(doc: ConfigDocument, args: argparse.Namespace, stdout: TextIO) -> int:
    if not args.out:
        raise ConfigError("simulate needs --out DIR")
    n = args.trajectories
    if n < 1:
        raise ConfigError("--trajectories must be >= 1")
    seeds = [args.seed + i for i in range(n)]
    sim, records = _sim_options(doc)
    try:
        outcomes, summary = simulate_ensemble(doc.laser, seeds, workers=args.workers, **sim)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    out = _outdir(args.out)
    files = []
    if records:
        for i, res in enumerate(outcomes):
            if isinstance(res, TrajectoryResult):
                path = out / f"trajectory_{i:04d}.csv"
                _write_file(path, RECORD_COLUMNS, _record_rows(res))
                files.append(path)
    traj_rows = []
    for r in summary.rows:
        row = {"index": r.index, "seed": r.seed, "status": r.status, "photons": r.photons, "N_a": r.N_a,
               "N_b": r.N_b, "emission_per_atom": r.emission_per_atom, "D_analytic_radps": summary.D_analytic}
        if r.phase_fit:
            row.update(D_phase_radps=r.phase_fit.D_hat, D_phase_stderr=r.phase_fit.stderr,
                       ratio_phase=r.phase_fit.D_hat / summary.D_analytic)
        if r.lorentz_fit:
            row.update(D_lorentz_radps=r.lorentz_fit.D_hat, D_lorentz_stderr=r.lorentz_fit.stderr)
        traj_rows.append(row)
    path = out / "trajectories.csv"
    _write_file(path, TRAJECTORY_COLUMNS, traj_rows)
    files.append(path)
    ens_rows = []
    for method, est in (("phase_diffusion_fit", summary.phase_fit), ("lorentzian_fit", summary.lorentz_fit)):
        if est is not None:
            ens_rows.append({"method": method, "n_ok": summary.n_ok, "D_hat_radps": est.D_hat, "stderr_radps": est.stderr,
                             "D_analytic_radps": summary.D_analytic, "ratio": est.D_hat / summary.D_analytic,
                             "flags": ";".join(est.flags) or "none"})
    path = out / "ensemble.csv"
    _write_file(path, ENSEMBLE_COLUMNS, ens_rows)
    files.append(path)
    write_manifest(out, "simulate", doc.laser, args.seed, n, seeds, doc.sim, {}, files)
    write_csv(stdout, ENSEMBLE_COLUMNS, ens_rows)
    if summary.success_fraction < MIN_SUCCESS_FRACTION:
        log.error("only %d of %d trajectories succeeded", summary.n_ok, n)
        return EXIT_NUMERIC
    if summary.phase_fit is None:
        log.error("fewer than two usable trajectories; no ensemble estimate")
        return EXIT_STATS
    return EXIT_OK


def _sweep_plan(doc: ConfigDocument, args: argparse.Namespace) -> SweepPlan:
    plan = dict(doc.sweep)
    for key, attr in (("path", "param"), ("start", "start"), ("stop", "stop"), ("count", "count"), ("sim_every", "sim_every")):
        if getattr(args, attr, None) is not None:
            plan[key] = getattr(args, attr)
    if getattr(args, "simulate", False):
        plan["simulate"] = True
    missing = [k for k in ("path", "start", "stop", "count") if k not in plan]
    if missing:
        raise ConfigError(f"sweep is missing {', '.join('sweep.' + k for k in missing)}")
    return SweepPlan(**plan)


def sweep_rows(doc: ConfigDocument, plan: SweepPlan, seed: int, trajectories: int, workers: int = 1) -> list[dict]:
    """Analytic (and optionally simulated) linewidth at every grid point."""
    sim, _ = _sim_options(doc)
    rows = []
    for i, value in enumerate(plan.grid()):
        try:
            laser = doc.laser.with_value(plan.path, float(value))
        except ValueError as exc:
            raise ConfigError(f"grid value {value!r}: {exc}", "sweep.path") from None
        row = {"index": i, "value": float(value), "theta": laser.geometry.theta, "phi": laser.geometry.phi,
               "p": laser.pump.p, "D_approx_radps": linewidth_approx(laser), "n_sim": 0}
        try:
            row.update(D_full_radps=linewidth_full(laser).D_full, dark_fringe=False)
        except BelowThresholdError:
            row["dark_fringe"] = True
        if plan.simulate and i % plan.sim_every == 0:
            _, summary = simulate_ensemble(laser, plan.seeds(i, seed, trajectories), workers=workers, **sim)
            row["n_sim"] = summary.n_ok
            if summary.phase_fit is not None:
                row.update(D_sim_radps=summary.phase_fit.D_hat, D_sim_stderr=summary.phase_fit.stderr)
        rows.append(row)
    return rows


def cmd_sweep(doc: ConfigDocument, args: argparse.Namespace, stdout: TextIO) -> int:
    plan = _sweep_plan(doc, args)
    rows = sweep_rows(doc, plan, args.seed, args.trajectories, args.workers)
    buf = io.StringIO()
    write_csv(buf, SWEEP_COLUMNS, rows)
    stdout.write(buf.getvalue())
    if args.out:
        out = _outdir(args.out)
        path = out / "sweep.csv"
        path.write_text(buf.getvalue())
        sweep_keys = {k: getattr(plan, k) for k in ("path", "start", "stop", "count", "spacing", "simulate",
                                                     "sim_every", "seed_policy")}
        seeds = plan.seeds(0, args.seed, args.trajectories) if plan.simulate else []
        write_manifest(out, "sweep", doc.laser, args.seed, args.trajectories if plan.simulate else 0, seeds,
                       doc.sim, sweep_keys, [path])
    if plan.simulate and not any(r.get("D_sim_radps") is not None for r in rows):
        return EXIT_STATS
    return EXIT_OK


def _read_digests(text: str) -> dict[str, str]:
    digests = {}
    for line in text.splitlines():
        key, _, value = line.partition("=")
        key = key.strip()
        if key.startswith("output.") and key.endswith(".sha256"):
            digests[key[len("output."):-len(".sha256")]] = value.strip()
    return digests


def cmd_rerun(args: argparse.Namespace, stdout: TextIO) -> int:
    """Repeat the run recorded in a manifest and compare output digests."""
    text = Path(args.manifest).read_text()
    doc = parse_document(text)
    command = doc.run.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"manifest names no rerunnable command ({command!r})", "run.command")
    if not args.out:
        raise ConfigError("rerun needs --out DIR")
    ns = argparse.Namespace(
        out=args.out, seed=doc.run.get("seed", 0), trajectories=doc.run.get("trajectories", 1), workers=args.workers,
        param=None, start=None, stop=None, count=None, sim_every=None, simulate=False,
    )
    code = COMMANDS[command](doc, ns, io.StringIO())
    expected = _read_digests(text)
    out = Path(args.out)
    mismatch = 0
    for name, digest in sorted(expected.items()):
        path = out / name
        got = sha256_of(path) if path.exists() else "missing"
        same = got == digest
        mismatch += not same
        print(f"{'same' if same else 'DIFFERENT'} {name}", file=stdout)
    if code != EXIT_OK:
        return code
    return EXIT_OK if mismatch == 0 else EXIT_MISMATCH


COMMANDS = {"analytic": cmd_analytic, "simulate": cmd_simulate, "sweep": cmd_sweep, "validate": cmd_validate}


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ramsey-laser", description="Bad-cavity Ramsey laser: theory and simulation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("analytic", "closed-form steady state and linewidths"),
        ("simulate", "Monte Carlo ensemble with linewidth estimates"),
        ("sweep", "linewidth along a parameter grid"),
        ("validate", "check the bad-cavity regime chain"),
        ("rerun", "repeat a run from its manifest and compare digests"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--workers", type=int, default=1)
        if name == "rerun":
            p.add_argument("--manifest", required=True, metavar="PATH")
            continue
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--preset", metavar="NAME")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trajectories", type=int, default=1)
        if name == "sweep":
            p.add_argument("--param", metavar="PATH", help="parameter path, e.g. geometry.phi")
            p.add_argument("--start", type=float)
            p.add_argument("--stop", type=float)
            p.add_argument("--count", type=int)
            p.add_argument("--simulate", action="store_true", help="add a simulated column")
            p.add_argument("--sim-every", dest="sim_every", type=int, help="simulate every n-th grid point")
    return parser


def load_document(args: argparse.Namespace) -> ConfigDocument:
    text = Path(args.config).read_text() if args.config else ""
    if args.preset:
        text = f"preset = {args.preset}\n" + text
    return parse_document(text)


def main(argv: Sequence[str] | None = None, stdout: TextIO | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    stdout = stdout or sys.stdout
    try:
        if args.command == "rerun":
            return cmd_rerun(args, stdout)
        doc = load_document(args)
        sys.stderr.write("# resolved configuration\n" + emit_config(doc.laser, exact=False))
        return COMMANDS[args.command](doc, args, stdout)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
