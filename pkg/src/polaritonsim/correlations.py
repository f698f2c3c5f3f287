"""Output-field correlation functions in the dressed basis.

Beyond weak coupling the photodetector does not see the bare cavity
field; the emission operator must be built from dressed transitions.
The positive-frequency output quadrature derivative is

    Xdot+ = -i sum_{j, k>j} (omega_k - omega_j) X_jk |psi_j><psi_k|,
    X_jk = <psi_j| (a + a^dag) |psi_k>,

an annihilation-like operator: nonzero only above the diagonal in the
ascending dressed energy ordering (it maps level k onto all lower
levels j).  Normal-and-time-ordered moments of Xdot-/Xdot+ give the
degree-n coherence

    g^(n)(0)           = <Xdot-^n Xdot+^n> / <Xdot- Xdot+>^n
    g^(n)(tau_1, ...)  = time-ordered insertions at 0, tau, tau + tau'

evaluated on the period-averaged limit cycle, with delayed versions by
the regression theorem averaged over drive phases.  The blockade
classifier consumes the equal-time values plus the delay-inequality
checks: conventional (single-excitation) blockade needs g2 < 1 and
g3 < 1; the two-excitation window needs g2 > 1 with g3 < 1 together
with delayed bunching growth in g3 and an initial dip of g2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dissipation import Generator
from .dynamics import (
    PHASE_SAMPLES,
    PeriodicState,
    _rk4_step,
    advance_batch,
    cycle_phases,
    default_step,
    regression_correlate,
)
from .model import EigenSystem, drive_quadrature

__all__ = [
    "PolaritonOutput",
    "CorrelationResult",
    "VacuumOutputError",
    "output_operator",
    "g_equal_time",
    "g_equal_time_from_state",
    "g2_delay",
    "g3_delay",
    "g3_delay_map",
    "delay_inequalities",
    "classify_blockade",
]

_DENOMINATOR_FLOOR = 1e-18
_IMAG_TOL = 1e-10


class VacuumOutputError(ValueError):
    """Output flux too small to normalize correlation functions."""


@dataclass(frozen=True)
class PolaritonOutput:
    """Dressed emission operator and its adjoint.

    ``flux_op = xdot_minus @ xdot_plus`` is cached since every
    normalization and every delayed observable uses it.
    """

    xdot_plus: np.ndarray
    xdot_minus: np.ndarray
    flux_op: np.ndarray


@dataclass(frozen=True)
class CorrelationResult:
    """A correlation curve (or single value) with its normalization.

    ``kind`` is one of g2_equal, g3_equal, g2_delay, g3_delay_diag,
    g3_delay_slice, g3_delay_map.  ``values`` is real: the imaginary
    residue is asserted below 1e-10 (relative to the largest real part)
    and dropped at construction.  For
    map results ``values[i, j]`` belongs to delays (tau[i], tau_prime[j])
    measured from the first and second detection respectively.
    """

    kind: str
    values: np.ndarray
    denominator: float
    tau: np.ndarray | None = None
    tau_prime: np.ndarray | None = None

    @property
    def value(self) -> float:
        """The scalar payload of an equal-time result."""
        return float(self.values.reshape(-1)[0])


def output_operator(eig: EigenSystem) -> PolaritonOutput:
    """Build the polaritonic output operator from an eigensystem."""
    x = drive_quadrature(eig.space).matrix
    x_dressed = eig.vectors.conj().T @ x @ eig.vectors
    delta = eig.energies[None, :] - eig.energies[:, None]
    xp = -1j * np.triu(delta * x_dressed, k=1)
    return PolaritonOutput(
        xdot_plus=xp,
        xdot_minus=xp.conj().T,
        flux_op=xp.conj().T @ xp,
    )


def _realize(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values)
    if values.size == 0:
        return np.ascontiguousarray(values.real)
    worst = float(np.max(np.abs(values.imag)))
    scale = max(1.0, float(np.max(np.abs(values.real))))
    if worst > _IMAG_TOL * scale:
        raise FloatingPointError(
            f"{what} has imaginary residue {worst:.3e} beyond "
            f"{_IMAG_TOL:.0e} relative"
        )
    return np.ascontiguousarray(values.real)


def _mean_flux(rho: np.ndarray, out: PolaritonOutput) -> float:
    value = np.trace(out.flux_op @ rho)
    return float(value.real)


def _check_denominator(flux: float, n: int) -> float:
    denom = flux**n
    if not np.isfinite(denom) or denom < _DENOMINATOR_FLOOR:
        raise VacuumOutputError(
            f"output flux {flux:.3e} gives denominator {denom:.3e} below "
            f"{_DENOMINATOR_FLOOR:.0e}; the output is essentially vacuum"
        )
    return denom


def g_equal_time_from_state(rho: np.ndarray, out: PolaritonOutput, n: int) -> float:
    """Equal-time degree-n coherence evaluated on a single state."""
    if n < 2:
        raise ValueError(f"degree must be >= 2, got {n}")
    flux = _mean_flux(rho, out)
    denom = _check_denominator(flux, n)
    high = np.linalg.matrix_power(out.xdot_plus, n)
    moment = np.trace(high.conj().T @ high @ rho)
    g = np.asarray(moment / denom).reshape(())
    return _realize(g, f"g{n}(0)").item()


def g_equal_time(n: int, cycle: PeriodicState, out: PolaritonOutput) -> CorrelationResult:
    """Equal-time g^(n) on the period-averaged limit cycle."""
    flux = _mean_flux(cycle.average, out)
    value = g_equal_time_from_state(cycle.average, out, n)
    return CorrelationResult(
        kind=f"g{n}_equal",
        values=np.asarray(value),
        denominator=flux**n,
    )


def g2_delay(gen: Generator, cycle: PeriodicState, out: PolaritonOutput,
             tau_grid: np.ndarray, n_phases: int = PHASE_SAMPLES) -> CorrelationResult:
    """Delayed second-order coherence g^(2)(tau) by regression.

    Detections at times 0 and tau; the first insertion is taken at
    ``n_phases`` equally spaced drive phases of the cycle and results are
    phase averaged.  The grid snaps to whole RK4 steps.
    """
    flux = _mean_flux(cycle.average, out)
    denom = _check_denominator(flux, 2)
    taus, vals = regression_correlate(
        gen, cycle,
        insert_left=out.xdot_minus,
        insert_right=out.xdot_plus,
        observable=out.flux_op,
        tau_grid=tau_grid,
        n_phases=n_phases,
    )
    values = _realize(vals / denom, "g2(tau)")
    return CorrelationResult(kind="g2_delay", values=values, denominator=denom, tau=taus)


def _second_insertion(out: PolaritonOutput, states: np.ndarray) -> np.ndarray:
    return out.xdot_plus @ states @ out.xdot_minus


def g3_delay(gen: Generator, cycle: PeriodicState, out: PolaritonOutput,
             tau_grid: np.ndarray, tau_prime_grid: np.ndarray | None = None,
             mode: str = "diagonal", n_phases: int = PHASE_SAMPLES) -> CorrelationResult:
    """Third-order coherence cuts with detections at (0, tau, tau + tau').

    mode "diagonal": tau' = tau along ``tau_grid`` (tau_prime_grid is
    ignored).  mode "slice": tau = 0, scanning ``tau_prime_grid`` so both
    early detections coincide.  Values are normalized by the cubed mean
    flux of the cycle.
    """
    flux = _mean_flux(cycle.average, out)
    denom = _check_denominator(flux, 3)
    if mode == "slice":
        if tau_prime_grid is None:
            raise ValueError("slice mode needs tau_prime_grid")
        xp2 = out.xdot_plus @ out.xdot_plus
        taus_p, vals = regression_correlate(
            gen, cycle,
            insert_left=xp2.conj().T,
            insert_right=xp2,
            observable=out.flux_op,
            tau_grid=tau_prime_grid,
            n_phases=n_phases,
        )
        values = _realize(vals / denom, "g3(0,tau')")
        return CorrelationResult(kind="g3_delay_slice", values=values,
                                 denominator=denom, tau_prime=taus_p)
    if mode != "diagonal":
        raise ValueError(f"unknown mode {mode!r}; expected 'diagonal' or 'slice'")

    # First leg: bring the once-detected state to every tau on the grid.
    states, t0s = cycle_phases(cycle, n_phases)
    b0 = out.xdot_plus @ states @ out.xdot_minus
    taus, legs = advance_batch(gen, b0, t0s, tau_grid)

    # Second leg, shrinking batch: row i only needs tau' = tau_i more.
    dt = default_step(gen)
    marks = np.rint(taus / dt).astype(int)
    live = _second_insertion(out, legs)              # (n_tau, P, d, d)
    live_t = t0s[None, :] + taus[:, None]            # start times of each row
    vals = np.empty(len(marks), dtype=complex)
    step = 0
    for i in range(len(marks)):
        while step < marks[i]:
            live = _rk4_step(gen, live_t + step * dt, live, dt)
            step += 1
        vals[i] = np.einsum("ij,pji->p", out.flux_op, live[0]).mean()
        live = live[1:]
        live_t = live_t[1:]
    values = _realize(vals / denom, "g3(tau,tau)")
    return CorrelationResult(kind="g3_delay_diag", values=values,
                             denominator=denom, tau=taus)


def g3_delay_map(gen: Generator, cycle: PeriodicState, out: PolaritonOutput,
                 tau_grid: np.ndarray, tau_prime_grid: np.ndarray,
                 n_phases: int = PHASE_SAMPLES) -> CorrelationResult:
    """Full g^(3)(tau, tau') map on the product of the two delay grids."""
    flux = _mean_flux(cycle.average, out)
    denom = _check_denominator(flux, 3)
    states, t0s = cycle_phases(cycle, n_phases)
    b0 = out.xdot_plus @ states @ out.xdot_minus
    taus, legs = advance_batch(gen, b0, t0s, tau_grid)

    n_tau, n_ph, dim, _ = legs.shape
    flat = _second_insertion(out, legs).reshape(n_tau * n_ph, dim, dim)
    flat_t = (t0s[None, :] + taus[:, None]).reshape(-1)
    taus_p, traces = advance_batch(gen, flat, flat_t, tau_prime_grid,
                                   observable=out.flux_op)
    grid = traces.reshape(len(taus_p), n_tau, n_ph).mean(axis=2).T
    values = _realize(grid / denom, "g3(tau,tau')")
    return CorrelationResult(kind="g3_delay_map", values=values,
                             denominator=denom, tau=taus, tau_prime=taus_p)


def delay_inequalities(g2_zero: float, g3_zero: float,
                       g2_tau: CorrelationResult,
                       g3_delayed: CorrelationResult,
                       g3_slice: CorrelationResult) -> tuple[bool, bool, bool]:
    """The three delayed-coherence checks of the two-excitation window.

    Returns (g2 dips below g2(0), delayed g3 exceeds g3(0,0) for tau > 0,
    the tau = 0 slice of g3 exceeds g3(0,0) for tau' > 0).  Accepts the
    diagonal cut or the full map for the second check; grid entries at
    zero delay are excluded from all three.
    """
    mask2 = g2_tau.tau > 0
    ok_g2 = bool(np.all(g2_tau.values[mask2] < g2_zero))

    if g3_delayed.kind == "g3_delay_map":
        rows = g3_delayed.tau > 0
        cols = g3_delayed.tau_prime > 0
        block = g3_delayed.values[np.ix_(rows, cols)]
        ok_g3 = bool(np.all(block > g3_zero))
    else:
        mask3 = g3_delayed.tau > 0
        ok_g3 = bool(np.all(g3_delayed.values[mask3] > g3_zero))

    mask_s = g3_slice.tau_prime > 0
    ok_slice = bool(np.all(g3_slice.values[mask_s] > g3_zero))
    return ok_g2, ok_g3, ok_slice


def classify_blockade(g2_zero: float, g3_zero: float,
                      delay_checks: tuple[bool, ...] = ()) -> str:
    """Label the emission statistics: '1pb', '2pb' or 'none'.

    Single-excitation blockade needs sub-unity g2 and g3.  The
    two-excitation window needs g2 above one with g3 below one, plus
    every delay inequality that was actually checked; an empty
    ``delay_checks`` means only the equal-time signature is available
    and the label rests on it alone.  Exact unity in either value
    classifies as 'none'.
    """
    for name, val in (("g2(0)", g2_zero), ("g3(0)", g3_zero)):
        if not np.isfinite(val) or val < 0:
            raise ValueError(f"{name} must be finite and non-negative, got {val}")
    if g2_zero < 1.0 and g3_zero < 1.0:
        return "1pb"
    if g2_zero > 1.0 and g3_zero < 1.0 and all(delay_checks):
        return "2pb"
    return "none"
