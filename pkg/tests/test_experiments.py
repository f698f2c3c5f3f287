import json
import hashlib
import math

import numpy as np
import pytest

from polaritonsim.config import parse_config
from polaritonsim.experiments import (
    RunManifest,
    SweepSpec,
    TruncationError,
    prepare_system,
    run_convergence,
    run_coupling_sweep,
    run_delay_maps,
    run_drive_sweep,
    run_spectrum,
)
from polaritonsim.hilbert import HilbertSpace
from polaritonsim.model import SystemParams, dressed_system, transition_energy


def read_csv(path):
    comments, header, rows = [], None, []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            comments.append(line)
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return comments, header, rows


def test_sweep_spec_validation_and_grid():
    spec = SweepSpec(axis="coupling", start=0.0, stop=0.4, points=5)
    assert np.allclose(spec.grid(), [0.0, 0.1, 0.2, 0.3, 0.4])
    with pytest.raises(ValueError):
        SweepSpec(axis="flux", start=0.0, stop=1.0, points=5)
    with pytest.raises(ValueError):
        SweepSpec(axis="drive", start=0.0, stop=1.0, points=1)
    with pytest.raises(ValueError):
        SweepSpec(axis="drive", start=1.0, stop=1.0, points=5)


def test_prepare_system_locks_drive():
    params = SystemParams(g=0.2, theta=0.3 * math.pi, omega_l=1.0)
    locked, eig, gen, out = prepare_system(params, 8)
    assert locked.omega_l == transition_energy(eig, 0, 2)
    assert gen.params.omega_l == locked.omega_l
    unlocked, *_ = prepare_system(params, 8, lock_drive=False)
    assert unlocked.omega_l == 1.0


def test_run_spectrum_small(tmp_path):
    cfg = parse_config(
        "n_cavity = 8\nsweep_stop = 0.3\nsweep_points = 5\nspectrum_levels = 4"
    )
    manifest = run_spectrum(cfg, tmp_path)
    csv_path = tmp_path / "spectrum.csv"
    assert csv_path.exists()
    assert (tmp_path / "manifest.json").exists()
    assert (tmp_path / "plot_results.py").exists()

    comments, header, rows = read_csv(csv_path)
    assert header == ["g", "level_0", "level_1", "level_2", "level_3"]
    assert len(rows) == 5
    assert any("# command = spectrum" in c for c in comments)
    # resonant bare ladder at g = 0
    first = [float(v) for v in rows[0]]
    assert first[0] == 0.0
    assert first[1] == pytest.approx(0.0, abs=1e-12)
    assert first[2] == pytest.approx(1.0, abs=1e-12)
    assert first[4] == pytest.approx(2.0, abs=1e-12)
    # a 5-point grid steps straight through the g = 0 degeneracy, so the
    # tracked overlap is moderate here; the production grid keeps it high
    assert 0.5 < manifest.notes["min_tracked_overlap"] <= 1.0
    assert manifest.notes["truncation_shift"] < 1e-6

    payload = json.loads((tmp_path / "manifest.json").read_text())
    assert payload["command"] == "spectrum"
    assert list(payload["config"]) == sorted(payload["config"])
    digest = hashlib.sha256(csv_path.read_bytes()).hexdigest()
    assert payload["outputs"][0] == {"file": "spectrum.csv", "sha256": digest}


def test_run_spectrum_rejects_bad_truncation(tmp_path):
    cfg = parse_config("n_cavity = 3\nsweep_stop = 0.8\nsweep_points = 3")
    with pytest.raises(TruncationError):
        run_spectrum(cfg, tmp_path)


def test_spectrum_output_is_deterministic(tmp_path):
    cfg = parse_config("n_cavity = 8\nsweep_stop = 0.3\nsweep_points = 4")
    run_spectrum(cfg, tmp_path / "a")
    run_spectrum(cfg, tmp_path / "b")
    assert (tmp_path / "a/spectrum.csv").read_bytes() == \
        (tmp_path / "b/spectrum.csv").read_bytes()


def test_drive_sweep_reports_failed_points(tmp_path):
    # a 2-period budget cannot converge, so every point lands in errors
    cfg = parse_config(
        "n_cavity = 8\ng = 0.1\nsweep_points = 3\nmax_periods = 2"
    )
    manifest = run_drive_sweep(cfg, tmp_path)
    assert len(manifest.errors) == 3
    comments, header, rows = read_csv(tmp_path / "drive_sweep.csv")
    assert header == ["omega_l", "g2", "g3", "denominator", "classification"]
    assert len(rows) == 3
    for row in rows:
        assert row[1] == "nan"
        assert row[4] == "error"


def test_drive_sweep_workers_agree(tmp_path):
    cfg = parse_config(
        "n_cavity = 8\ng = 0.1\nsweep_points = 3\nmax_periods = 2"
    )
    run_drive_sweep(cfg, tmp_path / "serial", workers=1)
    run_drive_sweep(cfg, tmp_path / "pool", workers=2)
    assert (tmp_path / "serial/drive_sweep.csv").read_bytes() == \
        (tmp_path / "pool/drive_sweep.csv").read_bytes()


def test_drive_sweep_values(tmp_path):
    cfg = parse_config(
        "n_cavity = 8\ng = 0.1\ngamma_a = 0.05\ngamma_sigma = 0.05\n"
        "sweep_start = 1.0\nsweep_stop = 1.1\nsweep_points = 2"
    )
    manifest = run_drive_sweep(cfg, tmp_path)
    assert manifest.errors == []
    _, _, rows = read_csv(tmp_path / "drive_sweep.csv")
    for row in rows:
        assert float(row[1]) > 0.0
        assert float(row[3]) > 0.0
        assert row[4] in ("1pb", "2pb", "none")


def test_coupling_sweep_locks_every_point(tmp_path):
    cfg = parse_config(
        "n_cavity = 8\ngamma_a = 0.05\ngamma_sigma = 0.05\n"
        "sweep_start = 0.1\nsweep_stop = 0.2\nsweep_points = 2"
    )
    manifest = run_coupling_sweep(cfg, tmp_path)
    assert manifest.errors == []
    _, header, rows = read_csv(tmp_path / "coupling_sweep.csv")
    assert header == ["g", "omega_l", "g2", "g3", "denominator", "pop_ground",
                      "pop_lower", "pop_upper", "cascade_ratio", "classification"]
    for row in rows:
        g = float(row[0])
        eig = dressed_system(
            SystemParams(g=g, theta=0.3 * math.pi, gamma_a=0.05,
                         gamma_sigma=0.05), HilbertSpace(8))
        assert float(row[1]) == pytest.approx(transition_energy(eig, 0, 2),
                                              abs=1e-10)
        pops = [float(row[5]), float(row[6]), float(row[7])]
        assert all(0.0 <= p <= 1.0 for p in pops)
        assert pops[0] > 0.9  # weak drive barely leaves the dressed vacuum
        assert float(row[8]) >= 0.0
        assert row[9] in ("1pb", "2pb", "none")


def test_delay_maps_small(tmp_path):
    cfg = parse_config(
        "n_cavity = 8\ngamma_a = 0.08\ngamma_sigma = 0.08\n"
        "sc_g = 0.1\nusc_g = 0.3\ntau_max = 20\ntau_points = 5"
    )
    manifest = run_delay_maps(cfg, tmp_path)
    names = sorted(entry["file"] for entry in manifest.outputs
                   if entry["file"].endswith(".csv"))
    assert names == [
        "delay_g2_sc.csv", "delay_g2_usc.csv",
        "delay_g3_diag_sc.csv", "delay_g3_diag_usc.csv",
        "delay_g3_slice_sc.csv", "delay_g3_slice_usc.csv",
        "delay_summary.csv",
    ]
    _, header, rows = read_csv(tmp_path / "delay_g2_sc.csv")
    assert header == ["tau", "g2"]
    taus = np.array([float(r[0]) for r in rows])
    # configured points plus the spliced sub-period section, strictly increasing
    assert len(taus) >= 5
    assert taus[0] == 0.0
    assert np.all(np.diff(taus) > 0)
    assert abs(taus[-1] - 20.0) < 0.05
    _, header, rows = read_csv(tmp_path / "delay_g3_slice_usc.csv")
    assert header == ["tau_prime", "g3"]
    _, header, rows = read_csv(tmp_path / "delay_summary.csv")
    assert header[:5] == ["point", "g", "omega_l", "g2_0", "g3_0"]
    assert [r[0] for r in rows] == ["sc", "usc"]
    for row in rows:
        assert row[5] in ("true", "false")
        assert row[8] in ("1pb", "2pb", "none")


def test_convergence_trivial_at_zero_coupling(tmp_path):
    # a linear cavity is insensitive to both knobs, so the flag must pass
    cfg = parse_config(
        "omega_g = 0.9\nusc_g = 0.0\ngamma_a = 0.1\ngamma_sigma = 0.1"
    )
    manifest = run_convergence(cfg, tmp_path)
    assert manifest.notes["converged"] is True
    assert manifest.notes["dev_truncation"] < 1e-6
    assert manifest.notes["dev_step"] < 1e-6
    _, header, rows = read_csv(tmp_path / "convergence.csv")
    assert header == ["n_cavity", "steps_per_period", "g2", "rel_deviation"]
    assert len(rows) == 4
    for row in rows:
        assert float(row[2]) == pytest.approx(1.0, abs=0.05)
