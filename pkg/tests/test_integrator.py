import numpy as np
import pytest

from dicke2.integrator import IntegratorConfig, Trajectory, integrate, integrate_with_tangent
from dicke2.model import MeanFieldState, ModelParams, parity_transform


def test_config_validation():
    for bad in ({"rel_tol": 0}, {"sample_dt": -1}, {"n_max": 1}, {"t_end": 0}, {"max_step": 0}):
        with pytest.raises(ValueError):
            IntegratorConfig(**bad)


def test_uniform_sampling():
    p = ModelParams(omega_q=0.2, g=0.5, lam=0.5)
    traj = integrate(MeanFieldState.from_spin(-0.5), p, IntegratorConfig(t_end=10, sample_dt=0.1))
    assert len(traj) == 101
    np.testing.assert_allclose(np.diff(traj.times), 0.1, atol=1e-12)
    assert not traj.diverged


@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
def test_uncoupled_photon_decay(kappa):
    p = ModelParams(omega_q=0.3, g=0.0, kappa=kappa)
    s0 = MeanFieldState.from_spin(0.3, n=4.0, x=1.0, y=-0.5)
    traj = integrate(s0, p, IntegratorConfig(t_end=10.0, sample_dt=0.05))
    expect = 4.0 * np.exp(-2 * kappa * traj.times)
    assert np.abs(traj["n"] - expect).max() <= 1e-8
    np.testing.assert_allclose(traj["sz"], 0.3, atol=1e-12)


def test_spin_norm_drift():
    p = ModelParams.from_omega_z(1.5, n_qubits=10, g=1.1, lam=1.4)
    traj = integrate(MeanFieldState.from_spin(-0.99), p, IntegratorConfig(t_end=400.0))
    assert not traj.diverged
    assert np.abs(traj.spin_norm() - 1).max() <= 1e-8


@pytest.mark.parametrize("g,lam", [(0.669, 1.11), (1.0, 1.4)])
def test_parity_pair(g, lam):
    p = ModelParams.from_omega_z(1.5, n_qubits=10, g=g, lam=lam)
    s0 = MeanFieldState.from_spin(-0.5, n=2.0, x=0.3, y=-0.2)
    cfg = IntegratorConfig(t_end=50.0)
    a = integrate(s0, p, cfg)
    b = integrate(parity_transform(s0), p, cfg)
    mirrored = np.array([parity_transform(s) for s in a.states])
    assert np.abs(mirrored - b.states).max() <= 1e-9


def test_bit_identical_reruns():
    p = ModelParams.from_omega_z(1.5, n_qubits=10, g=1.1, lam=1.4)
    s0 = MeanFieldState.from_spin(-0.99)
    a = integrate(s0, p, IntegratorConfig(t_end=50.0))
    b = integrate(s0, p, IntegratorConfig(t_end=50.0))
    assert np.array_equal(a.states, b.states)


def test_convergence_order():
    p = ModelParams(omega_q=0.8, g=0.5, lam=1.2)
    s0 = MeanFieldState.from_spin(-0.5, n=1.0)
    ref = integrate(s0, p, IntegratorConfig(t_end=5.0, sample_dt=5.0, rel_tol=1e-14, abs_tol=1e-16))
    errs = []
    for tol in (1e-5, 1e-6, 1e-7, 1e-8):
        tr = integrate(s0, p, IntegratorConfig(t_end=5.0, sample_dt=5.0, rel_tol=tol, abs_tol=tol * 1e-2,
                                               max_step=10.0))
        errs.append(np.abs(tr.states[-1] - ref.states[-1]).max())
    errs = np.array(errs)
    assert np.all(np.diff(np.log10(errs)) < 0)
    # tolerance-proportional error: about one decade per decade of tolerance
    slope = np.polyfit(np.log10([1e-5, 1e-6, 1e-7, 1e-8]), np.log10(errs), 1)[0]
    assert 0.6 < slope < 1.4


def test_divergence_flagged_without_samples_beyond():
    p = ModelParams.from_omega_z(0.2, g=1.3, lam=0.5)
    traj = integrate(MeanFieldState.from_spin(-0.3), p, IntegratorConfig(t_end=400.0))
    assert traj.diverged and traj.t_div is not None
    assert traj.times[-1] <= traj.t_div + 1e-12


def test_csv_round_trip(tmp_path):
    p = ModelParams(omega_q=0.2, g=0.5, lam=0.5)
    traj = integrate(MeanFieldState.from_spin(-0.5), p, IntegratorConfig(t_end=2.0, sample_dt=0.1))
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    back = Trajectory.from_csv(path)
    assert np.array_equal(back.states, traj.states) and np.array_equal(back.times, traj.times)


def test_tangent_requires_unit_vector():
    p = ModelParams(omega_q=0.2, g=0.5)
    with pytest.raises(ValueError):
        integrate_with_tangent(MeanFieldState.np_down(), np.ones(6), p)
