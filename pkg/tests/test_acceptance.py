"""Eight headline acceptance checks, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -s`` to watch the verdicts
land; a failing check repeats its line in the failure message.  Heavy
inputs (limit cycles, the coupling sweep, the delay maps) are session
fixtures shared across checks.  Expect roughly twenty to thirty
minutes on one core, dominated by the coupling sweep and the delayed
third-order map.

Checks 3, 5, 6 and 7 fail on this implementation and are left red on
purpose.  The common mechanism: away from theta = m*pi/2 the
two-excitation eigenstate relaxes through the sequential cascade
(upper polariton -> lower polariton -> ground), and at weak drive the
resulting incoherent pair emission dominates the second-order
numerator.  That pulls the g2(0) = 1 crossing to much smaller
coupling, keeps the lower polariton populated well above the 1e-3
mark, makes the normalized equal-time moments scale with the inverse
square of the drive amplitude, and turns the small-delay rise of
g2(tau) into a decay.  On top of that the phase-averaged delayed
correlators oscillate at the drive period: within the first few
periods the delayed third-order moments dip below their zero-delay
value at drive-phase-locked delays, so the delay grids sample
sub-period phases (a coarser grid happens to hit only the high-phase
points and would report a misleading pass).  Every verdict line
prints the measured numbers so the gap stays auditable.
"""

import csv

import numpy as np
import pytest

from polaritonsim.config import DEFAULTS
from polaritonsim.correlations import (
    delay_inequalities,
    g2_delay,
    g3_delay,
    g3_delay_map,
    g_equal_time,
    g_equal_time_from_state,
)
from polaritonsim.dissipation import apply_static, build_jump_set
from polaritonsim.dynamics import limit_cycle, propagate, rwa_steady_state
from polaritonsim.experiments import prepare_system, run_coupling_sweep
from polaritonsim.hilbert import HilbertSpace
from polaritonsim.model import SystemParams, dressed_system, parity_diagnostic

N_CAVITY = 14
SC_G = 0.08
USC_G = 0.6
THETA = 0.3 * np.pi
GAMMA = 1e-2
DRIVE = 1e-3


def base_params(g: float, **overrides) -> SystemParams:
    kw = dict(g=g, theta=THETA, omega_g=1.0, gamma_a=GAMMA,
              gamma_sigma=GAMMA, Omega=DRIVE)
    kw.update(overrides)
    return SystemParams(**kw)


def verdict(number: int, ok: bool, details: str) -> None:
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {details}"
    print(line, flush=True)
    if not ok:
        pytest.fail(line)


# ------------------------------------------------------------- fixtures

@pytest.fixture(scope="session")
def sc_point():
    params, eig, gen, out = prepare_system(base_params(SC_G), N_CAVITY)
    return params, eig, gen, out, limit_cycle(gen)


@pytest.fixture(scope="session")
def usc_point():
    params, eig, gen, out = prepare_system(base_params(USC_G), N_CAVITY)
    return params, eig, gen, out, limit_cycle(gen)


@pytest.fixture(scope="session")
def coupling_sweep(tmp_path_factory):
    cfg = dict(DEFAULTS)
    cfg.update(sweep_start=0.05, sweep_stop=0.65, sweep_points=13)
    out_dir = tmp_path_factory.mktemp("sweep")
    manifest = run_coupling_sweep(cfg, out_dir, workers=1)
    assert manifest.errors == []
    with open(out_dir / "coupling_sweep.csv") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        rows = list(reader)
    cols = {name: np.array([float(r[i]) for r in rows])
            for i, name in enumerate(header) if name != "classification"}
    cols["classification"] = [r[header.index("classification")] for r in rows]
    return cols


@pytest.fixture(scope="session")
def usc_delays(usc_point):
    _, _, gen, out, cycle = usc_point
    g2_0 = g_equal_time(2, cycle, out).value
    g3_0 = g_equal_time(3, cycle, out).value
    # the delayed correlators oscillate at the drive period, so the grids
    # must resolve sub-period phases as well as reach 4/gamma; period/8 and
    # period/4 land exactly on integrator steps
    period = cycle.period
    window = np.concatenate([np.arange(0, 41) * (period / 8.0),
                             np.arange(4, 41) * 10.0])
    nodes = np.concatenate([np.arange(0, 11) * (period / 4.0),
                            np.arange(1, 9) * 50.0])
    curve = g2_delay(gen, cycle, out, window)
    g3_map = g3_delay_map(gen, cycle, out, nodes, nodes)
    g3_sl = g3_delay(gen, cycle, out, window, tau_prime_grid=window,
                     mode="slice")
    return g2_0, g3_0, curve, g3_map, g3_sl


# ---------------------------------------------------------------- checks

def test_acceptance_1_single_excitation_window(sc_point):
    params, _, _, out, cycle = sc_point
    g2 = g_equal_time(2, cycle, out).value
    g3 = g_equal_time(3, cycle, out).value
    verdict(1, g2 < 1.0 and g3 < 1.0,
            f"g={SC_G}, locked omega_l={params.omega_l:.6f}: "
            f"g2(0)={g2:.6f}, g3(0)={g3:.6f} (need both < 1)")


def test_acceptance_2_two_excitation_window(usc_point):
    params, _, _, out, cycle = usc_point
    g2 = g_equal_time(2, cycle, out).value
    g3 = g_equal_time(3, cycle, out).value
    verdict(2, g2 > 1.0 and g3 < 1.0,
            f"g={USC_G}, locked omega_l={params.omega_l:.6f}: "
            f"g2(0)={g2:.6f} (need > 1), g3(0)={g3:.6f} (need < 1)")


def test_acceptance_3_coupling_crossing(coupling_sweep):
    g = coupling_sweep["g"]
    g2 = coupling_sweep["g2"]
    g3 = coupling_sweep["g3"]
    cross = None
    for i in range(len(g) - 1):
        if (g2[i] - 1.0) * (g2[i + 1] - 1.0) < 0.0:
            cross = g[i] + (g[i + 1] - g[i]) * (1.0 - g2[i]) / (g2[i + 1] - g2[i])
            break
    sub = g <= 0.6 + 1e-12
    ok_cross = cross is not None and abs(cross - 0.27) <= 0.03
    ok_g3 = bool(np.all(g3[sub] < 1.0))
    cross_txt = "none" if cross is None else f"{cross:.3f}"
    i_max = int(np.argmax(g3[sub]))
    verdict(3, ok_cross and ok_g3,
            f"g2(0)=1 crossing at g={cross_txt} (need 0.27 +- 0.03); "
            f"g3(0) < 1 through g=0.6: {ok_g3} "
            f"(max g3={g3[sub][i_max]:.3f} at g={g[sub][i_max]:.2f})")


def test_acceptance_4_rate_structure():
    gs = np.round(np.arange(0.02, 0.6001, 0.01), 10)
    ratios = []
    for gval in gs:
        params = base_params(float(gval))
        eig = dressed_system(params, HilbertSpace(N_CAVITY))
        total = (build_jump_set(eig, "cavity", GAMMA, params.omega_ref).rates
                 + build_jump_set(eig, "atom", GAMMA, params.omega_ref).rates)
        ratios.append(total[1, 2] / max(total[0, 2], total[0, 1]))
    ratios = np.array(ratios)
    weak = gs <= 0.1 + 1e-12
    band = gs >= 0.3 - 1e-12
    ok_weak = bool(np.all(ratios[weak] < 1e-2))
    ok_mono = bool(np.all(np.diff(ratios[band]) > 0.0))
    verdict(4, ok_weak and ok_mono,
            f"cascade/dominant rate ratio max {ratios[weak].max():.2e} "
            f"for g<=0.1 (need < 1e-2); strictly increasing on [0.3, 0.6]: "
            f"{ok_mono} ({ratios[band][0]:.4f} -> {ratios[band][-1]:.4f})")


def test_acceptance_5_population_onset(coupling_sweep):
    g = coupling_sweep["g"]
    ratio = coupling_sweep["pop_lower"] / coupling_sweep["pop_upper"]
    below = g < 0.25 - 1e-12
    above = ~below
    ok_low = bool(np.all(ratio[below] < 1e-3))
    ok_rise = bool(np.all(np.diff(ratio[above]) > 0.0))
    i_max = int(np.argmax(ratio[below]))
    verdict(5, ok_low and ok_rise,
            f"pop(lower)/pop(upper) for g<0.25: max {ratio[below].max():.2e} "
            f"at g={g[below][i_max]:.2f}, min {ratio[below].min():.2e} "
            f"(need < 1e-3); strictly rising for g>=0.25: {ok_rise}")


def test_acceptance_6_delay_structure(usc_delays, sc_point):
    g2_0, g3_0, curve, g3_map, g3_sl = usc_delays
    c1, c2, c3 = delay_inequalities(g2_0, g3_0, curve, g3_map, g3_sl)
    pos_map = g3_map.values[np.ix_(g3_map.tau > 0, g3_map.tau_prime > 0)]
    pos_sl = g3_sl.values[g3_sl.tau_prime > 0]

    sparams, _, sgen, sout, scycle = sc_point
    sc_g2_0 = g_equal_time(2, scycle, sout).value
    small = g2_delay(sgen, scycle, sout, np.linspace(0.0, 10.0, 21))
    mask = small.tau > 0
    c4 = bool(np.all(small.values[mask] > sc_g2_0))

    verdict(6, c1 and c2 and c3 and c4,
            f"two-excitation window at g={USC_G} over (0, 400]: "
            f"g2(tau)<g2(0)={c1} (max {curve.values[curve.tau > 0].max():.4f} "
            f"vs {g2_0:.4f}); g3(tau,tau')>g3(0,0)={c2} "
            f"(map min {pos_map.min():.4f} vs {g3_0:.4f}); "
            f"g3(0,tau')>g3(0,0)={c3} (slice min {pos_sl.min():.4f}); "
            f"single-excitation rise at g={SC_G} on (0, 10]: {c4} "
            f"(min {small.values[mask].min():.4f} vs g2(0)={sc_g2_0:.4f})")


def test_acceptance_7_property_suite(sc_point, usc_point):
    sp, _, sgen, sout, scycle = sc_point
    up, _, ugen, uout, ucycle = usc_point
    checks = {}

    # trace conservation over one relaxation time
    t0 = float(scycle.sample_times[0])
    traj = propagate(sgen, scycle.samples[0], t0, t0 + 1.0 / GAMMA,
                     record_stride=10**9)
    drift = abs(traj.states[-1].trace() - traj.states[0].trace())
    checks["trace_drift"] = (drift < 1e-8, f"{drift:.1e}")

    # period-averaged states stay positive
    low = min(np.linalg.eigvalsh(scycle.average).min(),
              np.linalg.eigvalsh(ucycle.average).min())
    checks["positivity"] = (low > -1e-7, f"{low:.1e}")

    # undriven dressed vacuum is exactly dark
    _, _, gen0, _ = prepare_system(up.updated(Omega=0.0), N_CAVITY)
    vac = np.zeros((gen0.dim, gen0.dim), dtype=complex)
    vac[0, 0] = 1.0
    residual = float(np.max(np.abs(apply_static(gen0, vac))))
    dark = residual == 0.0 and limit_cycle(gen0).n_periods == 0
    checks["vacuum_dark"] = (dark, f"residual={residual:.1e}")

    # parity closes every equal-parity decay channel at theta = pi/2;
    # the level order shifts there, so the check stays index-free
    _, peig, gpar, _ = prepare_system(up.updated(theta=np.pi / 2), N_CAVITY)
    sign = np.sign(parity_diagnostic(peig))
    closed = float(gpar.gain[np.outer(sign, sign) > 0].max())
    open_ = float(ugen.gain[1, 2])
    checks["parity_gate"] = (closed < 1e-20 < open_,
                             f"{closed:.1e} vs open {open_:.1e}")

    # bare limit: one-photon cavity rate is exactly gamma_a (detuned
    # qubit so the photon level is unambiguous)
    bare = dressed_system(base_params(0.0, omega_g=0.7),
                          HilbertSpace(N_CAVITY))
    cav = build_jump_set(bare, "cavity", GAMMA, 1.0)
    checks["bare_rate"] = (cav.rates[0, 2] == GAMMA,
                           f"{cav.rates[0, 2]:.6e}")

    # long-delay decorrelation at the weak-drive operating point
    far = np.array([0.0, 1200.0])
    g2_far = g2_delay(sgen, scycle, sout, far).values[1]
    g3_far = g3_delay(sgen, scycle, sout, far, mode="diagonal").values[1]
    checks["tails"] = (abs(g2_far - 1.0) < 0.02 and abs(g3_far - 1.0) < 0.02,
                       f"g2={g2_far:.4f} g3={g3_far:.4f}")

    # halving the drive must leave the normalized moments unchanged
    g2_0 = g_equal_time(2, scycle, sout).value
    g3_0 = g_equal_time(3, scycle, sout).value
    _, _, ghalf, ohalf = prepare_system(base_params(SC_G, Omega=DRIVE / 2),
                                        N_CAVITY)
    half = limit_cycle(ghalf)
    dg2 = abs(g_equal_time(2, half, ohalf).value - g2_0) / g2_0
    dg3 = abs(g_equal_time(3, half, ohalf).value - g3_0) / g3_0
    checks["drive_halving"] = (dg2 < 0.02 and dg3 < 0.02,
                               f"dg2={dg2:.1%} dg3={dg3:.1%}")

    # truncation and step halving leave the strong-coupling g2 alone
    g2_usc = g_equal_time(2, ucycle, uout).value
    _, _, g19, o19 = prepare_system(base_params(USC_G), 19)
    d_trunc = abs(g_equal_time(2, limit_cycle(g19), o19).value - g2_usc) / g2_usc
    fine = limit_cycle(ugen, rho0=ucycle.samples[0], steps_per_period=512)
    d_step = abs(g_equal_time(2, fine, uout).value - g2_usc) / g2_usc
    checks["truncation_14_19"] = (d_trunc < 1e-3, f"{d_trunc:.1e}")
    checks["step_halving"] = (d_step < 1e-3, f"{d_step:.1e}")

    ok = all(good for good, _ in checks.values())
    detail = ", ".join(f"{name}={txt}" + ("" if good else " FAIL")
                       for name, (good, txt) in checks.items())
    verdict(7, ok, f"property suite: {detail}")


def test_acceptance_8_rotating_frame_crosscheck(sc_point):
    _, _, gen, out, cycle = sc_point
    alg = g_equal_time_from_state(rwa_steady_state(gen), out, 2)
    ref = g_equal_time(2, cycle, out).value
    rel = abs(alg - ref) / ref
    verdict(8, rel < 0.05,
            f"algebraic rotating-frame g2(0)={alg:.6f} vs limit cycle "
            f"{ref:.6f}, rel diff {rel:.2e} (need < 5e-2)")
