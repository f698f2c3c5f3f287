"""Time evolution of the dressed-basis master equation.

Everything here works in the dressed (eigenstate) basis and in units of
the cavity frequency.  The evolution is linear,

    d rho / dt = L0 rho - i Omega cos(omega_l t) [X, rho],

with the static part applied through its structured form (elementwise
phase/decay plus a diagonal gain term, see :mod:`.dissipation`) and the
drive through the dressed quadrature commutator.  The integrator is a
classical fixed-step RK4 with dt = (2 pi / omega_l) / 256; the step is
deliberately tied to the drive period so that limit-cycle sampling and
drive-phase averages fall on exact step boundaries.  RK4 preserves the
trace of a linear trace-free generator identically, so trace drift is a
pure rounding diagnostic, monitored rather than renormalized away.

Driven steady states are computed as limit cycles by brute-force time
evolution from the dressed vacuum: period-averaged density matrices are
compared period over period, and convergence is declared only when both
the drift and its extrapolated geometric tail fall below the tolerance
(the tail guard keeps independently started runs within the tolerance
of each other, not merely slowly drifting).

Multi-time correlations use the regression theorem: an operator-sandwich
of the cycle state is propagated with the same generator and traced
against an observable, averaged over drive phases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dissipation import Generator

__all__ = [
    "STEPS_PER_PERIOD",
    "Trajectory",
    "PeriodicState",
    "PropagationError",
    "ConvergenceError",
    "propagate",
    "limit_cycle",
    "advance_batch",
    "regression_correlate",
    "rwa_steady_state",
]

STEPS_PER_PERIOD = 256

# Limit-cycle sampling densities.  Correlation routines subsample the
# stored samples, so the phase counts must divide evenly.
CYCLE_SAMPLES = 64
PHASE_SAMPLES = 16

_TRACE_DRIFT_LIMIT = 1e-6


class PropagationError(RuntimeError):
    """Raised when the fixed-step integration loses the trace."""


class ConvergenceError(RuntimeError):
    """Raised when the limit cycle fails to settle within max_periods."""

    def __init__(self, message: str, last_drift: float):
        super().__init__(message)
        self.last_drift = last_drift


@dataclass(frozen=True)
class Trajectory:
    """Recorded states of a single propagation, times absolute."""

    times: np.ndarray
    states: np.ndarray


@dataclass(frozen=True)
class PeriodicState:
    """Converged limit cycle of the driven system.

    ``samples`` holds one drive period sampled at ``CYCLE_SAMPLES``
    equally spaced phases (absolute times in ``sample_times``);
    ``average`` is the mean over all integration steps of that period.
    ``drift`` is the final period-to-period entrywise change of the
    average, ``t_converged`` the absolute time at which the sampled
    period starts.
    """

    samples: np.ndarray
    sample_times: np.ndarray
    average: np.ndarray
    period: float
    t_converged: float
    n_periods: int
    drift: float


def _apply_full(gen: Generator, t, rho: np.ndarray) -> np.ndarray:
    """Generator action at absolute time t (scalar, or one entry per batch
    element) on a stack of dressed-basis matrices."""
    dim = gen.dim
    out = gen.phase_decay * rho
    pops = rho.reshape(rho.shape[:-2] + (dim * dim,))[..., :: dim + 1]
    out.reshape(out.shape[:-2] + (dim * dim,))[..., :: dim + 1] += pops @ gen.gain.T
    if gen.Omega != 0.0:
        x = gen.drive_matrix
        comm = x @ rho - rho @ x
        coeff = -1j * gen.Omega * np.cos(gen.omega_l * t)
        if np.ndim(coeff):
            coeff = coeff[..., None, None]
        out += coeff * comm
    return out


def _rk4_step(gen: Generator, t, rho: np.ndarray, dt: float) -> np.ndarray:
    half = 0.5 * dt
    k1 = _apply_full(gen, t, rho)
    k2 = _apply_full(gen, t + half, rho + half * k1)
    k3 = _apply_full(gen, t + half, rho + half * k2)
    k4 = _apply_full(gen, t + dt, rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def default_step(gen: Generator) -> float:
    """The pinned integrator step, one 256th of the drive period."""
    return gen.period / STEPS_PER_PERIOD


def propagate(gen: Generator, rho0: np.ndarray, t0: float, t1: float,
              dt: float | None = None, record_stride: int = 1) -> Trajectory:
    """Evolve a single density matrix from t0 to t1 with fixed-step RK4.

    The span is snapped to a whole number of steps.  States are recorded
    every ``record_stride`` steps, initial state included.  The trace is
    monitored against its initial value and a drift beyond 1e-6 aborts
    with :class:`PropagationError`; no renormalization is ever applied.
    """
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    if dt is None:
        dt = default_step(gen)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")
    n_steps = max(int(round((t1 - t0) / dt)), 0)
    rho = np.array(rho0, dtype=complex)
    trace0 = rho.trace()
    times = [t0]
    states = [rho.copy()]
    for n in range(n_steps):
        rho = _rk4_step(gen, t0 + n * dt, rho, dt)
        if (n + 1) % record_stride == 0 or n + 1 == n_steps:
            times.append(t0 + (n + 1) * dt)
            states.append(rho.copy())
        if (n + 1) % STEPS_PER_PERIOD == 0 or n + 1 == n_steps:
            drift = abs(rho.trace() - trace0)
            if drift > _TRACE_DRIFT_LIMIT:
                raise PropagationError(
                    f"trace drifted by {drift:.3e} after {n + 1} steps "
                    f"(dt={dt:.6g}); the step is unstable for this generator"
                )
    return Trajectory(times=np.array(times), states=np.array(states))


def limit_cycle(gen: Generator, tol: float = 1e-9, max_periods: int = 6000,
                rho0: np.ndarray | None = None,
                steps_per_period: int = STEPS_PER_PERIOD) -> PeriodicState:
    """Drive the system from the dressed vacuum into its limit cycle.

    Integrates period by period, comparing the period-averaged density
    matrix with the previous period's.  Convergence requires the
    entrywise drift below ``tol`` and, once the decay has turned
    geometric, a projected remaining tail below ``tol`` as well.  The
    undriven case returns the dressed vacuum immediately (it is exactly
    dark).  One extra period is then integrated to record the phase
    samples.

    ``steps_per_period`` exists for step-halving convergence studies;
    it must stay a multiple of the stored sample count.
    """
    dim = gen.dim
    if gen.Omega == 0.0:
        # the dressed vacuum is exactly dark, no transient to integrate
        vac = np.zeros((dim, dim), dtype=complex)
        vac[0, 0] = 1.0
        return PeriodicState(
            samples=vac[None],
            sample_times=np.zeros(1),
            average=vac.copy(),
            period=gen.period,
            t_converged=0.0,
            n_periods=0,
            drift=0.0,
        )
    if rho0 is None:
        rho0 = np.zeros((dim, dim), dtype=complex)
        rho0[0, 0] = 1.0
    if steps_per_period % CYCLE_SAMPLES != 0:
        raise ValueError(f"steps_per_period must be a multiple of {CYCLE_SAMPLES}")

    steps = steps_per_period
    dt = gen.period / steps
    rho = np.array(rho0, dtype=complex)
    prev_avg = None
    prev_drift = None
    drift = np.inf
    converged_at = None
    for period in range(max_periods):
        acc = np.zeros_like(rho)
        base = period * steps
        for n in range(steps):
            acc += rho
            rho = _rk4_step(gen, (base + n) * dt, rho, dt)
        avg = acc / steps
        converged = False
        if prev_avg is not None:
            drift = float(np.max(np.abs(avg - prev_avg)))
            tail_ok = drift < 0.01 * tol
            if prev_drift is not None and 0.0 < drift < prev_drift:
                ratio = drift / prev_drift
                tail_ok = tail_ok or drift * ratio / (1.0 - ratio) < tol
            converged = drift < tol and tail_ok
            prev_drift = drift
        prev_avg = avg
        if converged:
            converged_at = period + 1
            break
    if converged_at is None:
        raise ConvergenceError(
            f"limit cycle not converged after {max_periods} periods "
            f"(last drift {drift:.3e}, tol {tol:.1e})",
            last_drift=drift,
        )

    # one more period for the phase samples and the reported average
    stride = steps // CYCLE_SAMPLES
    base = converged_at * steps
    t_conv = base * dt
    samples = np.empty((CYCLE_SAMPLES, dim, dim), dtype=complex)
    sample_times = np.empty(CYCLE_SAMPLES)
    acc = np.zeros_like(rho)
    for n in range(steps):
        if n % stride == 0:
            samples[n // stride] = rho
            sample_times[n // stride] = (base + n) * dt
        acc += rho
        rho = _rk4_step(gen, (base + n) * dt, rho, dt)
    avg = acc / steps
    final_drift = float(np.max(np.abs(avg - prev_avg)))
    return PeriodicState(
        samples=samples,
        sample_times=sample_times,
        average=avg,
        period=gen.period,
        t_converged=t_conv,
        n_periods=converged_at,
        drift=final_drift,
    )


def advance_batch(gen: Generator, states: np.ndarray, t_abs: np.ndarray,
                  tau_grid: np.ndarray, observable: np.ndarray | None = None):
    """Propagate a batch of dressed-basis matrices over a delay grid.

    Each batch element carries its own absolute start time (the drive
    phase keeps running during the delay).  The grid is snapped to whole
    RK4 steps of the pinned dt; snapped values are returned.

    With ``observable`` given, returns ``(taus, traces)`` where traces
    has shape (n_tau, batch); otherwise returns ``(taus, stack)`` with
    the recorded matrices, shape (n_tau, batch, dim, dim).
    """
    dt = default_step(gen)
    tau_grid = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    marks = np.rint(tau_grid / dt).astype(int)
    if np.any(marks < 0):
        raise ValueError("delays must be non-negative")
    if np.any(np.diff(marks) <= 0):
        raise ValueError("delay grid must be strictly increasing after snapping to dt")
    taus = marks * dt
    b = np.array(states, dtype=complex)
    t_abs = np.asarray(t_abs, dtype=float)
    if observable is not None:
        out = np.empty((len(marks),) + b.shape[:-2], dtype=complex)
    else:
        out = np.empty((len(marks),) + b.shape, dtype=complex)
    next_mark = 0
    for step in range(marks[-1] + 1):
        if next_mark < len(marks) and step == marks[next_mark]:
            if observable is not None:
                out[next_mark] = np.einsum("ij,...ji->...", observable, b)
            else:
                out[next_mark] = b
            next_mark += 1
        if step < marks[-1]:
            b = _rk4_step(gen, t_abs + step * dt, b, dt)
    return taus, out


def cycle_phases(cycle: PeriodicState, n_phases: int = PHASE_SAMPLES):
    """Subsample the stored cycle to ``n_phases`` drive phases."""
    total = cycle.samples.shape[0]
    if n_phases < 1 or total % n_phases != 0:
        raise ValueError(f"n_phases must divide the {total} stored samples")
    stride = total // n_phases
    return cycle.samples[::stride], cycle.sample_times[::stride]


def regression_correlate(gen: Generator, cycle: PeriodicState,
                         insert_left: np.ndarray, insert_right: np.ndarray,
                         observable: np.ndarray, tau_grid: np.ndarray,
                         n_phases: int = PHASE_SAMPLES):
    """Two-time correlation by the regression theorem.

    For each sampled drive phase t0, forms
    ``B(0) = insert_right @ rho(t0) @ insert_left``, propagates B over
    the delay grid with the running drive phase, and traces against
    ``observable``.  Returns ``(taus, values)`` with values averaged
    over the phases (complex; callers decide how real they must be).
    """
    states, t0s = cycle_phases(cycle, n_phases)
    b0 = insert_right @ states @ insert_left
    taus, traces = advance_batch(gen, b0, t0s, tau_grid, observable=observable)
    return taus, traces.mean(axis=1)


def rwa_steady_state(gen: Generator) -> np.ndarray:
    """Algebraic steady state of the drive-rotating-frame generator.

    Cross-check mode: dressed levels are graded by their rounded
    excitation number (omega_j - omega_0) / omega_l, the drive quadrature
    is restricted to grade-raising/lowering elements with the co-rotating
    half of the cosine kept, and the resulting time-independent generator
    is solved for its null state.  The dissipators are invariant under
    the frame rotation.  Valid where the dressed ladder is nearly
    harmonic; intended for weak-coupling validation of the limit cycle,
    not for production numbers.

    The returned matrix is the lab-frame period average of that steady
    state: coherences between levels of different grade pick up e^{i n
    omega_l t} phases in the lab frame and average to zero over a drive
    period, so they are projected out.  Same-grade coherences are static
    in both frames and survive.  This makes the result directly
    comparable to ``limit_cycle(...).average``.
    """
    dim = gen.dim
    omega = gen.energies
    grade = np.rint((omega - omega[0]) / gen.omega_l).astype(int)
    detuned = omega - omega[0] - grade * gen.omega_l
    lower = np.where(grade[None, :] - grade[:, None] == 1, gen.drive_matrix, 0.0)
    h_rwa = np.diag(detuned.astype(complex)) + 0.5 * gen.Omega * (lower + lower.conj().T)

    eye = np.eye(dim)
    # remove the bare-phase commutator baked into static_part, then add
    # the rotating-frame Hamiltonian commutator
    phases = 1j * (omega[None, :] - omega[:, None])
    l_rwa = gen.static_part - np.diag(phases.reshape(-1))
    l_rwa = l_rwa + (-1j) * (np.kron(h_rwa, eye) - np.kron(eye, h_rwa.T))

    trace_row = np.zeros(dim * dim, dtype=complex)
    trace_row[:: dim + 1] = 1.0
    a = np.vstack([l_rwa, trace_row[None, :]])
    b = np.zeros(dim * dim + 1, dtype=complex)
    b[-1] = 1.0
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    rho = sol.reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= rho.trace().real
    residual = np.max(np.abs(l_rwa @ rho.reshape(-1)))
    if residual > 1e-8:
        raise np.linalg.LinAlgError(
            f"rotating-frame steady state residual {residual:.3e}; "
            "the graded rotating-wave reduction does not apply at these parameters"
        )
    # lab-frame period average: grade-offdiagonal coherences rotate at
    # multiples of omega_l and average out
    rho = np.where(grade[:, None] == grade[None, :], rho, 0.0)
    return rho
