import warnings

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from dicke2 import lindblad as lb
from dicke2.integrator import IntegratorConfig, integrate
from dicke2.model import MeanFieldState, ModelParams

HIL = lb.HilbertConfig(3, 10)
PAR = ModelParams.from_omega_z(0.2, n_qubits=3, g=0.7, lam=0.5)


def random_density(dim, rng):
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def test_hilbert_limits():
    with pytest.raises(ValueError):
        lb.HilbertConfig(10, 400)
    with pytest.raises(ValueError):
        lb.HilbertConfig(2, 4)
    assert lb.HilbertConfig(4, 40).dim == 200


def test_hamiltonian_hermitian_and_parity_symmetric():
    H = lb.build_hamiltonian(PAR, HIL).toarray()
    assert np.abs(H - H.conj().T).max() == 0
    P = lb.parity_operator(HIL).toarray()
    assert np.abs(H @ P - P @ H).max() < 1e-13
    np.testing.assert_allclose(P.conj().T @ P, np.eye(HIL.dim), atol=1e-14)


def test_rhs_preserves_trace_and_hermiticity(rng):
    rho = random_density(HIL.dim, rng)
    H = lb.build_hamiltonian(PAR, HIL)
    d = lb.lindblad_rhs(rho, H, PAR, HIL)
    assert abs(np.trace(d)) < 1e-12
    assert np.abs(d - d.conj().T).max() < 1e-12


def test_rhs_parity_covariant(rng):
    rho = random_density(HIL.dim, rng)
    H = lb.build_hamiltonian(PAR, HIL)
    P = lb.parity_operator(HIL).toarray()
    conj = lambda r: P.conj().T @ r @ P
    lhs = lb.lindblad_rhs(conj(rho), H, PAR, HIL)
    rhs = conj(lb.lindblad_rhs(rho, H, PAR, HIL))
    assert np.abs(lhs - rhs).max() < 1e-12


def test_liouvillian_matches_rhs(rng):
    rho = random_density(HIL.dim, rng)
    H = lb.build_hamiltonian(PAR, HIL)
    L = lb.liouvillian(PAR, HIL)
    np.testing.assert_allclose((L @ rho.ravel()).reshape(rho.shape), lb.lindblad_rhs(rho, H, PAR, HIL),
                               atol=1e-12)


def test_spin_coherent_expectations():
    hil = lb.HilbertConfig(4, 8)
    s = MeanFieldState.from_bloch(1.1, 2.3)
    e = lb.expectations(lb.initial_density(hil, s), hil)
    np.testing.assert_allclose([e["jx"], e["jy"], e["jz"]], 2 * np.array([s.sx, s.sy, s.sz]), atol=1e-12)
    assert e["n"] == pytest.approx(0, abs=1e-15)


@pytest.mark.filterwarnings("ignore::dicke2.lindblad.CutoffSuspect")
@pytest.mark.parametrize("dt", [1e-3, 5e-3])
def test_rk4_matches_exponential(dt):
    rho0 = lb.initial_density(HIL, MeanFieldState(0, 0, 0, 1, 0, 0))
    ser = lb.evolve(rho0, PAR, HIL, t_end=2.0, dt_sample=1.0, dt=dt)
    ref = spla.expm_multiply(lb.liouvillian(PAR, HIL) * 2.0, rho0.ravel()).reshape(rho0.shape)
    assert np.abs(ser.final_rho - ref).max() < 1e-10
    assert ser.trace_drift < 1e-12 and ser.hermiticity < 1e-12


def test_uncoupled_spin_follows_mean_field():
    p = ModelParams.from_omega_z(0.7, n_qubits=4, g=0.0, lam=0.5)
    hil = lb.HilbertConfig(4, 8)
    s0 = MeanFieldState.from_bloch(1.0, 0.4)
    ser = lb.evolve(lb.initial_density(hil, s0), p, hil, t_end=3.0, dt_sample=0.5)
    mf = integrate(s0, p, IntegratorConfig(t_end=3.0, sample_dt=0.5))
    for ax in "xyz":
        np.testing.assert_allclose(ser.spin(ax), mf["s" + ax], atol=1e-9)
    np.testing.assert_allclose(ser.values["n"], 0, atol=1e-15)


def test_cutoff_convergence_normal_phase():
    p = ModelParams.from_omega_z(0.2, n_qubits=2, g=0.2, lam=0.5)
    s0 = MeanFieldState(0, 0, 0, 0, 0, -1)
    vals = []
    for nc in (10, 20):
        hil = lb.HilbertConfig(2, nc)
        vals.append(lb.evolve(lb.initial_density(hil, s0), p, hil, t_end=4.0, dt_sample=1.0).values)
    for key in ("n", "jz", "jx2"):
        assert np.abs(vals[0][key] - vals[1][key]).max() < 1e-6


def test_cutoff_suspect_warns():
    p = ModelParams.from_omega_z(0.2, n_qubits=2, g=1.3, lam=0.5)
    hil = lb.HilbertConfig(2, 8)
    with pytest.warns(lb.CutoffSuspect):
        lb.evolve(lb.initial_density(hil, MeanFieldState(0, 0, 0, 0, 0, -1)), p, hil, t_end=3.0, dt_sample=1.0)


def test_vacuum_only_initial_state():
    with pytest.raises(ValueError):
        lb.initial_density(HIL, MeanFieldState(0, 0, 1.0, 0, 0, -1))


def test_stationary_methods_agree():
    p = ModelParams.from_omega_z(0.2, n_qubits=2, g=0.4, lam=0.5)
    a = lb.stationary_state(p, 8, method="solve")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", lb.CutoffSuspect)
        b = lb.stationary_state(p, a.fock_cutoff, method="evolve", max_cutoff=a.fock_cutoff)
    for key in ("n", "jz", "jx2"):
        assert a.values[key] == pytest.approx(b.values[key], abs=1e-6)
    assert a.residual < 1e-10


def test_n_scan_report_is_deterministic():
    base = ModelParams.from_omega_z(0.2, g=0.4, lam=0.5)
    a = lb.to_json(lb.n_scan(base, (2, 3)))
    b = lb.to_json(lb.n_scan(base, (2, 3)))
    assert a == b and "n_loglog_slope" in a
