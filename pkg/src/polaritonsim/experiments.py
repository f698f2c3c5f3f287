"""Reproduction drivers: sweeps, delay maps, CSV output, run manifest.

Each driver takes a parsed config dict and an output directory, writes
deterministic CSV files (comment header with the full configuration,
12 significant digits, fixed iteration order, no wall-clock content in
the data), and returns a :class:`RunManifest` that records checksums,
per-point failures, and timing.  Sweep points are independent and can
be dispatched to a process pool; results are assembled in point order
so the worker count never changes the bytes written.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import params_from_config
from .correlations import (
    VacuumOutputError,
    classify_blockade,
    delay_inequalities,
    g2_delay,
    g3_delay,
    g_equal_time,
    output_operator,
)
from .dissipation import build_generator, build_jump_set
from .dynamics import (
    ConvergenceError,
    PropagationError,
    STEPS_PER_PERIOD,
    default_step,
    limit_cycle,
)
from .hilbert import HilbertSpace
from .model import (
    EigenSystem,
    SystemParams,
    dressed_system,
    track_by_overlap,
    transition_energy,
    truncation_shift,
)

__all__ = [
    "SweepSpec",
    "RunManifest",
    "TruncationError",
    "prepare_system",
    "run_spectrum",
    "run_drive_sweep",
    "run_coupling_sweep",
    "run_delay_maps",
    "run_convergence",
]

TRUNCATION_ENERGY_TOL = 1e-6
_POINT_ERRORS = (ConvergenceError, PropagationError, VacuumOutputError,
                 np.linalg.LinAlgError)


class TruncationError(RuntimeError):
    """The configured Fock truncation fails its convergence check."""


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep axis with optional drive-resonance locking."""

    axis: str
    start: float
    stop: float
    points: int
    resonance_lock: bool = True

    def __post_init__(self):
        if self.axis not in ("coupling", "drive"):
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        if self.points < 2:
            raise ValueError("a sweep needs at least 2 points")
        if not self.stop > self.start:
            raise ValueError("sweep stop must exceed start")

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass
class RunManifest:
    """What a driver produced, with enough context to reproduce it."""

    command: str
    config: dict
    version: str = __version__
    outputs: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)
    wall_seconds: float = 0.0

    def add_file(self, path: Path) -> None:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.outputs.append({"file": path.name, "sha256": digest})

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        payload = {
            "command": self.command,
            "version": self.version,
            "config": {k: self.config[k] for k in sorted(self.config)},
            "outputs": self.outputs,
            "errors": self.errors,
            "notes": self.notes,
            "wall_seconds": round(self.wall_seconds, 3),
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, (float, np.floating)):
        return f"{value:.12g}"
    return str(value)


def _write_csv(path: Path, cfg: dict, command: str, columns: list[str],
               rows: list[tuple], extra_comments: list[str] | None = None) -> None:
    lines = [f"# command = {command}", f"# version = {__version__}"]
    for key in sorted(cfg):
        lines.append(f"# {key} = {_fmt(cfg[key])}")
    for comment in extra_comments or []:
        lines.append(f"# {comment}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _pool_map(task, items: list, workers: int) -> list:
    """Run ``task`` over ``items`` preserving order; workers > 1 uses a
    process pool (the tasks are CPU-bound pure functions)."""
    if workers <= 1 or len(items) <= 1:
        return [task(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(task, items))


def prepare_system(params: SystemParams, n_cavity: int, lock_drive: bool = True):
    """Diagonalize, optionally lock the drive to the 0 -> 2 dressed
    transition, and assemble the generator and output operator."""
    space = HilbertSpace(n_cavity)
    eig = dressed_system(params, space)
    if lock_drive:
        params = params.updated(omega_l=transition_energy(eig, 0, 2))
        eig = EigenSystem(eig.energies, eig.vectors, params, space)
    jumps = (
        build_jump_set(eig, "cavity", params.gamma_a, params.omega_ref),
        build_jump_set(eig, "atom", params.gamma_sigma, params.omega_ref),
    )
    gen = build_generator(eig, jumps, params)
    return params, eig, gen, output_operator(eig)


def _check_truncation(cfg: dict, g_max: float) -> float:
    params = params_from_config(cfg, g=g_max)
    shift = truncation_shift(params, cfg["n_cavity"])
    if shift > TRUNCATION_ENERGY_TOL:
        raise TruncationError(
            f"lowest energies move by {shift:.3e} omega_c when the Fock space "
            f"grows from {cfg['n_cavity']} to {cfg['n_cavity'] + 5} at g={g_max}; "
            "raise n_cavity"
        )
    return shift


# ---------------------------------------------------------------- spectrum

def run_spectrum(cfg: dict, out_dir: str | Path, workers: int = 1) -> RunManifest:
    """Dressed energies versus coupling, levels tracked by overlap."""
    t0 = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = SweepSpec(
        axis="coupling",
        start=cfg["sweep_start"] if cfg["sweep_start"] is not None else 0.0,
        stop=cfg["sweep_stop"] if cfg["sweep_stop"] is not None else 0.8,
        points=cfg["sweep_points"] if cfg["sweep_points"] is not None else 161,
        resonance_lock=False,
    )
    manifest = RunManifest(command="spectrum", config=cfg)
    manifest.notes["truncation_shift"] = _check_truncation(cfg, spec.stop)

    n_levels = cfg["spectrum_levels"]
    rows = []
    reference = None
    min_overlap = 1.0
    for g in spec.grid():
        eig = dressed_system(params_from_config(cfg, g=g), HilbertSpace(cfg["n_cavity"]))
        if reference is None:
            order = np.arange(eig.dim)
        else:
            order = track_by_overlap(reference, eig.vectors)
            kept = np.abs(np.einsum("ij,ij->j", reference.conj(),
                                    eig.vectors[:, order]))
            min_overlap = min(min_overlap, float(kept[:n_levels].min()))
        reference = eig.vectors[:, order]
        rows.append((g, *(eig.energies[order[j]] for j in range(n_levels))))

    manifest.notes["min_tracked_overlap"] = min_overlap
    path = out_dir / "spectrum.csv"
    _write_csv(path, cfg, "spectrum",
               ["g", *(f"level_{j}" for j in range(n_levels))], rows,
               ["energies in omega_c units, columns follow overlap-tracked levels"])
    manifest.add_file(path)
    _emit_plot_script(out_dir, manifest)
    manifest.wall_seconds = time.perf_counter() - t0
    manifest.write(out_dir)
    return manifest


# ------------------------------------------------------------- drive sweep

def _drive_point_task(args):
    cfg, omega_l = args
    params = params_from_config(cfg)
    params = params.updated(omega_l=omega_l)
    try:
        params, eig, gen, out = prepare_system(params, cfg["n_cavity"], lock_drive=False)
        cycle = limit_cycle(gen, tol=cfg["cycle_tol"], max_periods=cfg["max_periods"])
        g2 = g_equal_time(2, cycle, out)
        g3 = g_equal_time(3, cycle, out)
        flux = np.trace(out.flux_op @ cycle.average).real
        label = classify_blockade(g2.value, g3.value)
        return (omega_l, g2.value, g3.value, float(flux), label), None
    except _POINT_ERRORS as exc:
        return (omega_l, float("nan"), float("nan"), float("nan"), "error"), str(exc)


def run_drive_sweep(cfg: dict, out_dir: str | Path, workers: int = 1) -> RunManifest:
    """Equal-time statistics versus drive frequency at fixed coupling."""
    t0 = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(command="drive-sweep", config=cfg)
    manifest.notes["truncation_shift"] = _check_truncation(cfg, cfg["g"])

    # default window: centered on the locked 0 -> 2 transition
    params = params_from_config(cfg)
    eig = dressed_system(params, HilbertSpace(cfg["n_cavity"]))
    e20 = transition_energy(eig, 0, 2)
    spec = SweepSpec(
        axis="drive",
        start=cfg["sweep_start"] if cfg["sweep_start"] is not None else e20 - 0.25,
        stop=cfg["sweep_stop"] if cfg["sweep_stop"] is not None else e20 + 0.25,
        points=cfg["sweep_points"] if cfg["sweep_points"] is not None else 161,
        resonance_lock=False,
    )
    results = _pool_map(_drive_point_task, [(cfg, w) for w in spec.grid()], workers)
    rows = []
    for row, err in results:
        rows.append(row)
        if err is not None:
            manifest.errors.append({"omega_l": row[0], "message": err})

    path = out_dir / "drive_sweep.csv"
    _write_csv(path, cfg, "drive-sweep",
               ["omega_l", "g2", "g3", "denominator", "classification"], rows,
               [f"g = {_fmt(cfg['g'])}, denominator = <Xdot- Xdot+> on the cycle average",
                "classification from equal-time values only"])
    manifest.add_file(path)
    _emit_plot_script(out_dir, manifest)
    manifest.wall_seconds = time.perf_counter() - t0
    manifest.write(out_dir)
    return manifest


# ---------------------------------------------------------- coupling sweep

def _coupling_point_task(args):
    cfg, g = args
    try:
        params, eig, gen, out = prepare_system(
            params_from_config(cfg, g=g), cfg["n_cavity"], lock_drive=True)
        assert params.omega_l == transition_energy(eig, 0, 2)
        cycle = limit_cycle(gen, tol=cfg["cycle_tol"], max_periods=cfg["max_periods"])
        g2 = g_equal_time(2, cycle, out)
        g3 = g_equal_time(3, cycle, out)
        flux = float(np.trace(out.flux_op @ cycle.average).real)
        pops = np.diag(cycle.average).real
        cascade = gen.gain[1, 2] / max(gen.gain[0, 2], gen.gain[0, 1])
        label = classify_blockade(g2.value, g3.value)
        return (g, params.omega_l, g2.value, g3.value, flux,
                pops[0], pops[1], pops[2], float(cascade), label), None
    except _POINT_ERRORS as exc:
        nan = float("nan")
        return (g, nan, nan, nan, nan, nan, nan, nan, nan, "error"), str(exc)


def run_coupling_sweep(cfg: dict, out_dir: str | Path, workers: int = 1) -> RunManifest:
    """Resonance-locked statistics, populations, and cascade rate versus g."""
    t0 = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = SweepSpec(
        axis="coupling",
        start=cfg["sweep_start"] if cfg["sweep_start"] is not None else 0.05,
        stop=cfg["sweep_stop"] if cfg["sweep_stop"] is not None else 0.65,
        points=cfg["sweep_points"] if cfg["sweep_points"] is not None else 81,
        resonance_lock=True,
    )
    manifest = RunManifest(command="coupling-sweep", config=cfg)
    manifest.notes["truncation_shift"] = _check_truncation(cfg, spec.stop)

    results = _pool_map(_coupling_point_task, [(cfg, g) for g in spec.grid()], workers)
    rows = []
    for row, err in results:
        rows.append(row)
        if err is not None:
            manifest.errors.append({"g": row[0], "message": err})

    path = out_dir / "coupling_sweep.csv"
    _write_csv(path, cfg, "coupling-sweep",
               ["g", "omega_l", "g2", "g3", "denominator",
                "pop_ground", "pop_lower", "pop_upper",
                "cascade_ratio", "classification"], rows,
               ["drive locked to the 0 -> 2 dressed transition at every point",
                "cascade_ratio = rate(2 -> 1) / max(rate(2 -> 0), rate(1 -> 0))",
                "classification from equal-time values only"])
    manifest.add_file(path)
    _emit_plot_script(out_dir, manifest)
    manifest.wall_seconds = time.perf_counter() - t0
    manifest.write(out_dir)
    return manifest


# ------------------------------------------------------------- delay maps

def _delay_point_task(args):
    cfg, label, g = args
    params, eig, gen, out = prepare_system(
        params_from_config(cfg, g=g), cfg["n_cavity"], lock_drive=True)
    cycle = limit_cycle(gen, tol=cfg["cycle_tol"], max_periods=cfg["max_periods"])
    g2_zero = g_equal_time(2, cycle, out).value
    g3_zero = g_equal_time(3, cycle, out).value
    # the delayed correlators oscillate at the drive period, so splice a
    # sub-period section into the configured grid; dedupe in step marks to
    # keep the snapped grid strictly increasing
    dt = default_step(gen)
    fine = np.arange(0.0, min(4.0 * gen.period, cfg["tau_max"]), 32 * dt)
    coarse = np.linspace(0.0, cfg["tau_max"], cfg["tau_points"])
    marks = np.unique(np.rint(np.concatenate([fine, coarse]) / dt).astype(int))
    tau_grid = marks * dt
    g2_tau = g2_delay(gen, cycle, out, tau_grid)
    g3_diag = g3_delay(gen, cycle, out, tau_grid, mode="diagonal")
    g3_slice = g3_delay(gen, cycle, out, tau_grid, tau_prime_grid=tau_grid, mode="slice")
    checks = delay_inequalities(g2_zero, g3_zero, g2_tau, g3_diag, g3_slice)
    return label, g, params.omega_l, g2_zero, g3_zero, g2_tau, g3_diag, g3_slice, checks


def run_delay_maps(cfg: dict, out_dir: str | Path, workers: int = 1) -> RunManifest:
    """Delayed g2/g3 cuts at the two configured operating points."""
    t0 = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(command="delay-maps", config=cfg)
    manifest.notes["truncation_shift"] = _check_truncation(
        cfg, max(cfg["sc_g"], cfg["usc_g"]))

    points = [(cfg, "sc", cfg["sc_g"]), (cfg, "usc", cfg["usc_g"])]
    summary_rows = []
    for label, g, omega_l, g2_zero, g3_zero, g2_tau, g3_diag, g3_slice, checks \
            in _pool_map(_delay_point_task, points, workers):
        for name, result, col in (
            (f"delay_g2_{label}", g2_tau, "g2"),
            (f"delay_g3_diag_{label}", g3_diag, "g3"),
            (f"delay_g3_slice_{label}", g3_slice, "g3"),
        ):
            grid = result.tau if result.tau is not None else result.tau_prime
            axis = "tau" if result.tau is not None else "tau_prime"
            path = out_dir / f"{name}.csv"
            _write_csv(path, cfg, "delay-maps", [axis, col],
                       list(zip(grid, result.values)),
                       [f"operating point {label}: g = {_fmt(g)}, "
                        f"omega_l = {_fmt(omega_l)}"])
            manifest.add_file(path)
        summary_rows.append((label, g, omega_l, g2_zero, g3_zero,
                             *checks, classify_blockade(g2_zero, g3_zero, checks)))

    path = out_dir / "delay_summary.csv"
    _write_csv(path, cfg, "delay-maps",
               ["point", "g", "omega_l", "g2_0", "g3_0",
                "check_g2_dip", "check_g3_delayed_rise", "check_g3_slice_rise",
                "classification"], summary_rows,
               ["delay checks evaluated on the emitted grids, zero-delay entries excluded"])
    manifest.add_file(path)
    _emit_plot_script(out_dir, manifest)
    manifest.wall_seconds = time.perf_counter() - t0
    manifest.write(out_dir)
    return manifest


# ------------------------------------------------------------ convergence

def _convergence_task(args):
    cfg, n_cavity, steps = args
    params, eig, gen, out = prepare_system(
        params_from_config(cfg, g=cfg["usc_g"]), n_cavity, lock_drive=True)
    cycle = limit_cycle(gen, tol=cfg["cycle_tol"], max_periods=cfg["max_periods"],
                        steps_per_period=steps)
    return n_cavity, steps, g_equal_time(2, cycle, out).value


def run_convergence(cfg: dict, out_dir: str | Path, workers: int = 1) -> RunManifest:
    """Truncation and step-size stability of the strong-point g2(0).

    Repeats the observable at Fock truncations 10, 14, 19 (pinned step)
    and at the halved step for the default truncation.  The manifest
    gains a ``converged`` flag; the 14 vs 19 and step-halving deviations
    must both stay below 1e-3 relative.
    """
    t0 = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(command="converge", config=cfg)

    variants = [(cfg, 10, STEPS_PER_PERIOD), (cfg, 14, STEPS_PER_PERIOD),
                (cfg, 19, STEPS_PER_PERIOD), (cfg, 14, 2 * STEPS_PER_PERIOD)]
    values = {(n, s): g2 for n, s, g2 in _pool_map(_convergence_task, variants, workers)}
    ref = values[(19, STEPS_PER_PERIOD)]
    base = values[(14, STEPS_PER_PERIOD)]
    rows = []
    for (n, s), g2 in values.items():
        against = base if s != STEPS_PER_PERIOD else ref
        rows.append((n, s, g2, abs(g2 / against - 1.0)))
    dev_truncation = abs(base / ref - 1.0)
    dev_step = abs(base / values[(14, 2 * STEPS_PER_PERIOD)] - 1.0)
    converged = bool(dev_truncation < 1e-3 and dev_step < 1e-3)

    path = out_dir / "convergence.csv"
    _write_csv(path, cfg, "converge",
               ["n_cavity", "steps_per_period", "g2", "rel_deviation"], rows,
               ["strong-point g2(0); deviations vs n_cavity=19 (same step) "
                "or vs the default truncation (halved step)"])
    manifest.add_file(path)
    manifest.notes["dev_truncation"] = dev_truncation
    manifest.notes["dev_step"] = dev_step
    manifest.notes["converged"] = converged
    _emit_plot_script(out_dir, manifest)
    manifest.wall_seconds = time.perf_counter() - t0
    manifest.write(out_dir)
    return manifest


# ------------------------------------------------------------ plot script

_PLOT_TEMPLATE = '''"""Quick-look plots for the CSV files next to this script.

Generated alongside the data; entirely optional and presentation-only.
Requires matplotlib.
"""
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).parent
FILES = {files}

for name in FILES:
    path = HERE / name
    with path.open() as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    header, data = rows[0], rows[1:]
    numeric = []
    for row in data:
        try:
            numeric.append([float(v) for v in row[: len(header)]])
        except ValueError:
            numeric.append([float("nan")] * len(header))
    if not numeric:
        continue
    cols = list(zip(*numeric))
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, col in zip(header[1:], cols[1:]):
        ax.plot(cols[0], col, label=label)
    ax.set_xlabel(header[0])
    ax.legend(fontsize=7)
    ax.set_title(name)
    fig.tight_layout()
    fig.savefig(path.with_suffix(".png"), dpi=150)
    plt.close(fig)
    print("wrote", path.with_suffix(".png").name)
'''


def _emit_plot_script(out_dir: Path, manifest: RunManifest) -> None:
    files = [entry["file"] for entry in manifest.outputs if entry["file"].endswith(".csv")]
    path = out_dir / "plot_results.py"
    path.write_text(_PLOT_TEMPLATE.format(files=repr(files)))
    manifest.add_file(path)
