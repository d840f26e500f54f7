"""Command-line front end.

Subcommands ``design``, ``simulate``, ``validate`` and ``sweep`` read a flat
``key = value`` config file. Frequencies carry a unit suffix (``_hz`` is a
linear frequency, so ``omega0_hz = 250`` means 2*pi*250 rad/s; ``_rad_s`` is
angular) and so do durations (``_s`` or ``_ms``). Lists are comma separated.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from frictionless_bec._io import atomic_write_text, key_value_text, write_csv
from frictionless_bec.errors import ConfigError, DesignError, FrictionlessError, NumericalFailure
from frictionless_bec.gpe_solver import (
    PropagationPlan,
    ground_state_imaginary_time,
    max_stable_dt,
    observables,
    propagate,
)
from frictionless_bec.grid import Grid, Wavefunction
from frictionless_bec.trajectory_design import (
    Ansatz,
    DesignSpec,
    Regime,
    coupling_schedule,
    design,
    omega_squared,
    sample_frequency_trajectory,
    write_trajectory_csv,
)
from frictionless_bec.validation import (
    default_grid,
    hold_and_verify_stationarity,
    run_frictionless_check,
)

log = logging.getLogger("frictionless_bec")

SWEEP_HEADER = "regime,ansatz,g_tilde,fidelity_designed,fidelity_baseline,min_omega_sq"
OBSERVABLES_HEADER = "t_s,norm,r2,energy,mu"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


@dataclass(frozen=True)
class RunConfig:
    omega0: float = 2 * math.pi * 250.0
    omega_f: float = 2 * math.pi * 2.5
    t_f: float = 6e-3
    regimes: tuple = (Regime.ONE_D_TF, Regime.TWO_D, Regime.THREE_D_TF)
    ansatze: tuple = (Ansatz.POLYNOMIAL5, Ansatz.EXP_POLYNOMIAL5)
    samples: int = 1000
    g_tilde: tuple = (0.0, 1.0, 10.0, 100.0)
    points_1d: int = 1024
    points_2d: int = 256
    safety_factor: float = 4.0
    extent: float | None = None
    steps: int = 20_000
    records: int = 50
    hold_periods: float = 0.0
    seed: int = 0
    trajectory_table: str | None = None
    output_dir: str | None = None

    def spec(self, regime: Regime, ansatz: Ansatz) -> DesignSpec:
        return DesignSpec(self.omega0, self.omega_f, self.t_f, regime, ansatz, self.samples)

    def grid(self, spec: DesignSpec, g_tilde: float) -> Grid:
        d = spec.regime.dimension
        points = self.points_1d if d == 1 else self.points_2d
        if self.extent is not None:
            return Grid(d, points, self.extent)
        return default_grid(spec, g_tilde, points, self.safety_factor)

    def to_text(self) -> str:
        """Canonical, re-loadable form of the resolved configuration."""
        lines = [
            f"omega0_rad_s = {self.omega0!r}",
            f"omegaf_rad_s = {self.omega_f!r}",
            f"tf_s = {self.t_f!r}",
            f"regimes = {', '.join(r.value for r in self.regimes)}",
            f"ansatze = {', '.join(a.value for a in self.ansatze)}",
            f"samples = {self.samples}",
            f"g_tilde = {', '.join(repr(g) for g in self.g_tilde)}",
            f"points_1d = {self.points_1d}",
            f"points_2d = {self.points_2d}",
            f"safety_factor = {self.safety_factor!r}",
            f"steps = {self.steps}",
            f"records = {self.records}",
            f"hold_periods = {self.hold_periods!r}",
            f"seed = {self.seed}",
        ]
        if self.extent is not None:
            lines.append(f"extent = {self.extent!r}")
        if self.trajectory_table is not None:
            lines.append(f"trajectory_table = {self.trajectory_table}")
        if self.output_dir is not None:
            lines.append(f"output_dir = {self.output_dir}")
        return "\n".join(lines) + "\n"


def _float(key, text):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: expected a finite number, got {text!r}")
    return value


def _int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _list(text):
    return [item.strip() for item in text.split(",") if item.strip()]


def _unique(items):
    return tuple(dict.fromkeys(items))


def parse_config(text: str) -> RunConfig:
    """Parse and validate ``key = value`` lines; unknown keys are rejected."""
    values = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        if key in ("omega0_hz", "omega0_rad_s", "omegaf_hz", "omegaf_rad_s"):
            name = "omega0" if key.startswith("omega0") else "omega_f"
            if name in values:
                raise ConfigError(f"line {lineno}: {name} given twice")
            scale = 2 * math.pi if key.endswith("_hz") else 1.0
            values[name] = scale * _float(key, value)
        elif key in ("tf_s", "tf_ms"):
            if "t_f" in values:
                raise ConfigError(f"line {lineno}: duration given twice")
            values["t_f"] = _float(key, value) * (1e-3 if key == "tf_ms" else 1.0)
        elif key == "regimes":
            try:
                values[key] = _unique(Regime.parse(v) for v in _list(value))
            except DesignError as exc:
                raise ConfigError(f"line {lineno}: {exc}") from None
        elif key == "ansatze":
            try:
                values[key] = _unique(Ansatz.parse(v) for v in _list(value))
            except DesignError as exc:
                raise ConfigError(f"line {lineno}: {exc}") from None
        elif key == "g_tilde":
            values[key] = _unique(_float(key, v) for v in _list(value))
        elif key in ("samples", "points_1d", "points_2d", "steps", "records", "seed"):
            values[key] = _int(key, value)
        elif key in ("safety_factor", "extent", "hold_periods"):
            values[key] = _float(key, value)
        elif key in ("trajectory_table", "output_dir"):
            values[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    config = RunConfig(**values)
    validate_config(config)
    return config


def validate_config(config: RunConfig) -> None:
    for name in ("omega0", "omega_f", "t_f", "safety_factor"):
        if not getattr(config, name) > 0:
            raise ConfigError(f"{name} must be > 0")
    if config.extent is not None and not config.extent > 0:
        raise ConfigError("extent must be > 0")
    if config.samples < 2:
        raise ConfigError("samples must be >= 2")
    for name in ("points_1d", "points_2d"):
        n = getattr(config, name)
        if n < 4 or n & (n - 1):
            raise ConfigError(f"{name} must be a power of two >= 4")
    if config.steps < 1 or config.records < 1:
        raise ConfigError("steps and records must be >= 1")
    if config.hold_periods < 0:
        raise ConfigError("hold_periods must be >= 0")
    if any(g < 0 for g in config.g_tilde):
        raise ConfigError("g_tilde values must be >= 0")
    if not config.ansatze:
        raise ConfigError("at least one ansatz is required")


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


def _simulable(regimes):
    return [r for r in regimes if r.dimension in (1, 2)]


def _first(config: RunConfig):
    regimes = _simulable(config.regimes)
    if not regimes:
        raise ConfigError("no 1D or 2D regime configured; 3D regimes are design-only")
    if not config.g_tilde:
        raise ConfigError("g_tilde must list at least one value")
    return regimes[0], config.ansatze[0], config.g_tilde[0]


def _snapshot_rows(t_s: float, wf: Wavefunction):
    grid = wf.grid
    amps = wf.amplitudes
    if grid.dimension == 1:
        cols = [np.full(grid.points, t_s), grid.axis]
    else:
        x, y = np.meshgrid(grid.axis, grid.axis, indexing="ij")
        cols = [np.full(amps.size, t_s), x.ravel(), y.ravel()]
    flat = amps.ravel()
    return np.column_stack(cols + [flat.real, flat.imag, np.abs(flat) ** 2])


def write_snapshot(path: Path, t_s: float, wf: Wavefunction) -> Path:
    header = "t_s,x,re_psi,im_psi,density" if wf.grid.dimension == 1 else "t_s,x,y,re_psi,im_psi,density"
    return write_csv(path, header, _snapshot_rows(t_s, wf))


def _prepare(out: Path, config: RunConfig) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "config.resolved.txt", config.to_text())
    return out


def cmd_design(config: RunConfig, out: Path) -> list[Path]:
    _prepare(out, config)
    written = []
    for regime in config.regimes:
        for ansatz in config.ansatze:
            traj = design(config.spec(regime, ansatz))
            written.append(write_trajectory_csv(traj, out / f"trajectory_{regime.value}_{ansatz.value}.csv"))
    return written


def _read_table(path: Path, omega0: float):
    """Dimensionless (t, omega^2, g/g0) columns of a trajectory CSV."""
    try:
        with open(path) as fh:
            header = [h.strip() for h in fh.readline().split(",")]
        data = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read trajectory table {path}: {exc}") from None
    try:
        t = data[:, header.index("t_s")] * omega0
        w2 = data[:, header.index("omega_sq_rad2_s2")] / omega0 ** 2
    except ValueError:
        raise ConfigError("trajectory table needs columns t_s and omega_sq_rad2_s2") from None
    g = data[:, header.index("g_over_g0")] if "g_over_g0" in header else np.ones_like(t)
    if t.size < 2 or np.any(np.diff(t) <= 0) or t[0] != 0:
        raise ConfigError("trajectory table times must start at 0 and increase")
    return t, w2, g


def cmd_simulate(config: RunConfig, out: Path) -> Path:
    """Propagate the initial ground state along a designed or tabulated ramp."""
    _prepare(out, config)
    regime, ansatz, g_tilde = _first(config)
    spec = config.spec(regime, ansatz)
    grid = config.grid(spec, g_tilde)
    w0 = config.omega0
    if config.trajectory_table:
        t_tab, w2_tab, g_tab = _read_table(Path(config.trajectory_table), w0)
        t_end = float(t_tab[-1])
        omega_sq = lambda t: float(np.interp(t, t_tab, w2_tab))  # noqa: E731
        g_fn = lambda t: g_tilde * float(np.interp(t, t_tab, g_tab))  # noqa: E731
        source = str(config.trajectory_table)
    else:
        traj = design(spec.dimensionless())
        t_end = traj.spec.t_f
        sched = coupling_schedule(traj, g_tilde)
        omega_sq = lambda t: float(omega_squared(traj, min(max(t, 0.0), t_end)))  # noqa: E731
        g_fn = lambda t: float(sched(t))  # noqa: E731
        source = "designed"
    atomic_write_text(out / "metadata.txt", key_value_text([
        ("command", "simulate"),
        ("trajectory_source", source),
        ("regime", regime),
        ("ansatz", ansatz),
        ("g_tilde", g_tilde),
        ("grid_dimension", grid.dimension),
        ("grid_points", grid.points),
        ("grid_extent_osc_lengths", grid.extent),
        ("length_unit", "oscillator length of the initial trap"),
        ("energy_unit", "hbar * omega0"),
        ("time_column_unit", "s"),
    ] + [(f.name, getattr(config, f.name)) for f in fields(config)]))

    initial = ground_state_imaginary_time(grid, 1.0, g_fn(0.0))
    dt = min(t_end / config.steps, max_stable_dt(grid))
    probe = PropagationPlan(omega_sq, g_fn, dt, t_end)
    plan = replace(probe, record_every=max(1, probe.steps // config.records))
    trace = []
    count = [0]

    def on_record(t, wf):
        t_s = t / w0
        write_snapshot(out / f"snapshot_{count[0]:05d}.csv", t_s, wf)
        count[0] += 1
        obs = observables(wf, math.sqrt(max(omega_sq(t), 0.0)), g_fn(t))
        trace.append((t_s, obs.norm, obs.r2, obs.energy, obs.mu))

    try:
        propagate(initial.psi0, plan, callback=on_record)
    finally:
        write_csv(out / "observables.csv", OBSERVABLES_HEADER, trace)
    return out


def cmd_validate(config: RunConfig, out: Path) -> Path:
    _prepare(out, config)
    regime, ansatz, g_tilde = _first(config)
    spec = config.spec(regime, ansatz)
    grid = config.grid(spec, g_tilde)
    report = run_frictionless_check(spec, g_tilde, grid, steps=config.steps, records=config.records)
    run = report.run
    t_f = spec.t_f
    write_snapshot(out / "state_initial.csv", 0.0, run.initial.psi0)
    write_snapshot(out / "state_final.csv", t_f, run.designed.final)
    write_snapshot(out / "state_prediction.csv", t_f, run.prediction)
    write_snapshot(out / "state_target.csv", t_f, run.target.psi0)
    if run.baseline is not None:
        write_snapshot(out / "state_baseline_final.csv", t_f, run.baseline.final)
    if config.hold_periods > 0:
        hold_time = config.hold_periods * 2 * math.pi / run.spec.omega_f
        hold = hold_and_verify_stationarity(run, hold_time)
        report.extras.update({
            "hold_time_s": hold.hold_time / spec.omega0,
            "hold_density_change_l1": hold.density_change,
            "hold_max_density_change_l1": hold.max_density_change,
            "hold_measured_mu_hbar_omega0": hold.measured_mu,
            "hold_predicted_mu_hbar_omega0": hold.predicted_mu,
            "hold_mu_relative_error": hold.mu_relative_error,
        })
    atomic_write_text(out / "report.txt", report.to_text())
    return out / "report.txt"


def _sweep_job(args):
    config, regime, ansatz, g_tilde = args
    spec = config.spec(regime, ansatz)
    report = run_frictionless_check(spec, g_tilde, config.grid(spec, g_tilde),
                                    steps=config.steps, records=config.records)
    min_w2 = float(np.min(sample_frequency_trajectory(design(spec)).omega_sq))
    return (regime.value, ansatz.value, g_tilde, report.fidelity_to_target,
            report.baseline_fidelity, min_w2)


def cmd_sweep(config: RunConfig, out: Path, jobs: int = 1) -> Path:
    """Regimes x ansatze x g_tilde; rows in configuration order."""
    _prepare(out, config)
    regimes = _simulable(config.regimes)
    for skipped in set(config.regimes) - set(regimes):
        log.warning("skipping %s: 3D regimes are design-only", skipped.value)
    tasks = [(config, r, a, g) for r in regimes for a in config.ansatze for g in config.g_tilde]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_job, tasks))
    else:
        rows = [_sweep_job(t) for t in tasks]
    lines = [SWEEP_HEADER]
    for regime, ansatz, g, f_design, f_base, w2 in rows:
        lines.append(f"{regime},{ansatz},{g:.17g},{f_design:.17g},{f_base:.17g},{w2:.17g}")
    return atomic_write_text(out / "summary.csv", "\n".join(lines) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frictionless-bec", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("design", "write trajectory tables for every regime/ansatz pair"),
        ("simulate", "propagate along a designed or tabulated ramp"),
        ("validate", "design, simulate and score one trajectory"),
        ("sweep", "score regimes x ansatze x g_tilde and write a summary CSV"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config) if args.config else RunConfig()
        out_dir = args.out or config.output_dir
        if not out_dir:
            raise ConfigError("no output directory: pass --out or set output_dir")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        out = Path(out_dir)
        if args.command == "design":
            cmd_design(config, out)
        elif args.command == "simulate":
            cmd_simulate(config, out)
        elif args.command == "validate":
            cmd_validate(config, out)
        else:
            cmd_sweep(config, out, args.jobs)
    except (ConfigError, DesignError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, FrictionlessError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
