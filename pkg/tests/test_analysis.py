import math

import numpy as np
import pytest

from dicke2 import fixed_points as F
from dicke2.analysis.basins import BlochGrid, basin_map
from dicke2.analysis.bifurcation import bifurcation_scan
from dicke2.analysis.classify import AttractorKind, ClassifierConfig, classify_attractor, winding
from dicke2.analysis.extrema import cluster_amplitudes, local_maxima
from dicke2.analysis.lyapunov import Localized, lyapunov_exponent
from dicke2.analysis.parallel import WORKERS_ENV, ordered_map, resolve_workers
from dicke2.analysis.spectrum import TooShort, dominant_frequency, peak_to_floor_db, power_spectrum
from dicke2.analysis.support import attractor_support
from dicke2.analysis.sweep import Axis, phase_sweep
from dicke2.integrator import Trajectory
from dicke2.model import MeanFieldState, ModelParams


def test_local_maxima_refined():
    t = np.arange(0, 20, 0.1)
    pos, peak = local_maxima(np.sin(1.3 * t + 0.2), t)
    expect = (np.pi / 2 - 0.2 + 2 * np.pi * np.arange(len(pos))) / 1.3
    np.testing.assert_allclose(pos, expect, atol=1e-3)
    np.testing.assert_allclose(peak, 1.0, atol=1e-4)


def test_cluster_amplitudes():
    m = np.array([1.0, 2.0, 1.00001, 2.00001, 1.0])
    np.testing.assert_allclose(cluster_amplitudes(m), [1.000003, 2.000005], rtol=1e-6)
    assert cluster_amplitudes(np.array([])).size == 0


def test_sinusoid_peak_within_one_bin():
    dt, w1 = 0.02, 2.7
    t = np.arange(8192) * dt
    omega, psd = power_spectrum(3.0 * np.sin(w1 * t), dt=dt)
    assert abs(dominant_frequency(omega, psd) - w1) <= omega[1] - omega[0]
    assert peak_to_floor_db(omega, psd) > 40


def test_noise_has_flat_floor():
    x = np.random.default_rng(0).normal(size=8192)
    omega, psd = power_spectrum(x, dt=0.02)
    assert peak_to_floor_db(omega, psd) < 15


def test_psd_too_short():
    with pytest.raises(TooShort):
        power_spectrum(np.ones(100), dt=0.1)


def _traj(x):
    t = np.arange(len(x), dtype=float)
    st = np.zeros((len(x), 6))
    st[:, 0] = x
    st[:, 5] = -1
    return Trajectory(t, st)


def test_support_labels():
    assert attractor_support(_traj(np.r_[np.zeros(10), np.full(10, 0.5)])).label == "Isolated+"
    assert attractor_support(_traj(np.r_[np.zeros(10), np.full(10, -0.5)])).label == "Isolated-"
    s = attractor_support(_traj(np.r_[np.zeros(10), np.tile([0.5, -0.5], 6)]))
    assert s.merged and s.transitions == 10
    # excursions inside the dead band do not count
    assert not attractor_support(_traj(np.r_[np.zeros(10), np.tile([0.5, -1e-4], 6)])).merged


def test_winding():
    a = np.linspace(0, 6 * np.pi, 500)
    spin = np.c_[0.3 * np.cos(a), 0.3 * np.sin(a), -np.ones_like(a)]
    assert winding(spin, np.array([0, 0, -1.0])) == pytest.approx(-3, abs=1e-9)


def test_exponent_at_stable_fixed_point():
    p = ModelParams(omega_q=0.2, g=0.6, lam=0.5)
    sp = F.sp_fixed_points(p)[0]
    lead = F.leading_real_part(sp.state, p)
    s0 = sp.state.as_array() + np.r_[0.01, 0, 0, 0, 0, 0]
    le = lyapunov_exponent(MeanFieldState.from_array(s0), p, transient=50, span=300)
    assert le < 0 and le <= lead + 0.01


def test_exponent_localized():
    p = ModelParams.from_omega_z(0.2, g=1.3, lam=0.5)
    with pytest.raises(Localized):
        lyapunov_exponent(MeanFieldState.from_spin(-0.3), p, transient=50, span=100)


FIG4 = ModelParams.from_omega_z(1.5, g=0.669, lam=1.11)


def test_classify_converges_to_np_down():
    v = classify_attractor(MeanFieldState.from_spin(0.9), FIG4)
    assert v.kind is AttractorKind.FIXED_POINT and v.label == "NPdown"


def test_classify_limit_cycle():
    v = classify_attractor(MeanFieldState.from_spin(-0.5, n=5.0), FIG4)
    assert v.kind is AttractorKind.LIMIT_CYCLE
    assert abs(v.lyapunov) <= 0.01 and len(v.extrema_amplitudes) >= 1


def test_classify_np_up():
    p = ModelParams.from_omega_z(1.5, n_qubits=10, g=0.3, lam=2.0)
    v = classify_attractor(MeanFieldState.from_spin(0.95), p)
    assert v.label == "NPup"


def test_classify_localized():
    p = ModelParams.from_omega_z(0.2, g=1.3, lam=0.5)
    v = classify_attractor(MeanFieldState.from_spin(-0.3), p)
    assert v.kind is AttractorKind.LOCALIZED and v.t_div is not None


def test_basin_parity_symmetry():
    p = ModelParams.from_omega_z(0.2, g=0.45, lam=1.8)
    cfg = ClassifierConfig()
    a = classify_attractor(MeanFieldState(0, 0, 0, 0.6, 0.3, -math.sqrt(0.55)), p, cfg)
    b = classify_attractor(MeanFieldState(0, 0, 0, -0.6, -0.3, -math.sqrt(0.55)), p, cfg)
    assert a.kind is b.kind and a.label == b.label
    swap = {"SPplus": "SPminus", "SPminus": "SPplus"}
    assert swap.get(a.fine_label, a.fine_label) == b.fine_label


def test_bloch_grid():
    g = BlochGrid(12, 7)
    assert len(g.nodes()) == 2 + 5 * 12
    assert g.weights().sum() == pytest.approx(4 * np.pi)
    with pytest.raises(ValueError):
        BlochGrid(1, 1)


def test_basin_worker_independence():
    p = ModelParams.from_omega_z(0.2, g=0.45, lam=1.8)
    grid = BlochGrid(6, 4)
    a = basin_map(p, grid, workers=1)
    b = basin_map(p, grid, workers=2)
    assert a.to_json() == b.to_json()
    assert sum(a.area_fractions().values()) == pytest.approx(1.0)


def test_resolve_workers(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert resolve_workers() == 1
    assert resolve_workers(None, 3) == 3
    monkeypatch.setenv(WORKERS_ENV, "2")
    assert resolve_workers(None, 3) == 2
    assert resolve_workers(4, 3) == 4
    with pytest.raises(ValueError):
        resolve_workers(0)


def _square(v):
    return v * v


def test_ordered_map_keeps_order():
    assert ordered_map(_square, range(50), workers=2) == [v * v for v in range(50)]


def test_analytic_sweep_matches_stable_phase():
    base = ModelParams(lam=0.5)
    x, y = Axis.linspace("omega_z", 0.05, 1.5, 9), Axis.linspace("g", 0.05, 1.5, 9)
    d = phase_sweep(x, y, base)
    lab = d.labels
    for i, gv in enumerate(y.values):
        for j, wz in enumerate(x.values):
            assert lab[i][j] == F.stable_phase(base.with_(omega_q=wz, g=gv)).label
    assert d.resolved_fraction() == 1.0
    assert d.to_json() == phase_sweep(x, y, base, workers=2).to_json()


def test_sweep_topology_at_half_omega0():
    # the g_t2 / g_t4 split opens at omega_z = omega0 / 2 and g_t1 meets g_t2 at omega_z = omega0
    for wz, expect in ((0.49, 0.0), (0.51, 1.0)):
        p = ModelParams(omega_q=wz, lam=0.5)
        assert (F.g_t2(p) - F.g_t4(p) > 1e-9) == bool(expect)
    p = ModelParams(omega_q=1.0, lam=0.5)
    assert F.g_t1(p) == pytest.approx(F.g_t2(p))


def test_sweep_rejects_bad_axes():
    with pytest.raises(ValueError):
        phase_sweep(Axis.linspace("g", 0, 1, 3), Axis.linspace("g", 0, 1, 3), ModelParams())
    with pytest.raises(ValueError):
        Axis("bogus", (1.0,))


def test_bifurcation_grid_must_be_monotone():
    with pytest.raises(ValueError):
        bifurcation_scan(ModelParams(), [0.9, 0.8, 1.0], MeanFieldState.from_spin(-0.99))
