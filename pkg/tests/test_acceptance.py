"""Acceptance suite: one test per criterion, each recording a pass/fail line."""

import math
import time

import numpy as np

from dicke2 import fixed_points as F
from dicke2 import lindblad as lb
from dicke2.analysis.basins import BlochGrid, basin_map
from dicke2.analysis.bifurcation import bifurcation_scan
from dicke2.analysis.classify import classify_attractor
from dicke2.analysis.spectrum import peak_to_floor_db, power_spectrum
from dicke2.analysis.support import attractor_support
from dicke2.fixed_points import FixedPointKind
from dicke2.integrator import IntegratorConfig, integrate
from dicke2.model import MeanFieldState, ModelParams, jacobian, parity_transform, rhs

from conftest import record_criterion


def _warm():
    # compile the kernels outside the timed regions
    p = ModelParams(omega_q=0.2, g=0.5, lam=0.5)
    integrate(MeanFieldState.from_spin(-0.5), p, IntegratorConfig(t_end=1.0))
    F.sp_fixed_points(p)


def test_c01_fixed_point_exactness():
    rng = np.random.default_rng(1)
    _warm()
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    while count < 10_000:
        n = int(rng.integers(1, 11))
        p = ModelParams(omega_q=rng.uniform(0.01, 2.0) / n, n_qubits=n, lam=rng.uniform(0.0, 2.5))
        if not F.in_lambda_window(p):
            continue
        try:
            lo, hi = F.g_t4(p), F.g_t1(p)
        except F.NotDefined:
            continue
        if not lo < hi:
            continue
        p = p.with_(g=rng.uniform(lo, hi))
        for fp in F.sp_fixed_points(p):
            worst = max(worst, float(np.linalg.norm(rhs(fp.state, p))))
        count += 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 5.0
    record_criterion(1, ok, f"max |rhs(SP)| = {worst:.2e} over {count} sets, {dt:.2f} s")
    assert ok


def test_c02_boundary_eigenvalue_agreement():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    d2 = d3 = dl = 0.0
    slices = 0
    while slices < 100:
        n = int(rng.integers(1, 11))
        # the re-entrant window g_t2 < g < g_t3 exists for lam < 1
        p = ModelParams(omega_q=rng.uniform(0.02, 2.0) / n, n_qubits=n, lam=rng.uniform(0.05, 0.98))
        try:
            a, b = F.g_t2(p), F.g_t3(p)
        except F.NotDefined:
            continue
        if not a < 0.98 * b:
            continue
        mid = 0.5 * (a + b)
        c2 = F.stability_crossing(FixedPointKind.NP_DOWN, p, "g", 0.5 * a, mid)
        c3 = F.stability_crossing(FixedPointKind.NP_DOWN, p, "g", mid, 2 * b)
        lt = F.lambda_t(p)
        g_low = 0.5 * F.g_t2(p.with_(lam=lt))
        cl = F.stability_crossing(FixedPointKind.NP_DOWN, p.with_(g=g_low), "lam", lt - 0.05, lt + 0.05)
        d2, d3, dl = max(d2, abs(c2 - a)), max(d3, abs(c3 - b)), max(dl, abs(cl - lt))
        slices += 1
    dt = time.perf_counter() - t0
    ok = max(d2, d3, dl) <= 1e-6 and dt < 30.0
    record_criterion(2, ok, f"|dg_t2|={d2:.1e} |dg_t3|={d3:.1e} |dlambda_t|={dl:.1e} on {slices} slices, {dt:.1f} s")
    assert ok


def test_c03_hopf_signatures():
    p3 = ModelParams.from_omega_z(0.8, n_qubits=1, lam=1.2)

    def sp_lead(g):
        q = p3.with_(g=g)
        return F.restricted_eigenvalues(F.sp_fixed_points(q)[0].state, q)

    lo, hi = sp_lead(0.579)[0].real, sp_lead(0.64)[0].real
    gh = F.stability_crossing(FixedPointKind.SP_PLUS, p3, "g", 0.579, 0.64)
    pair = sp_lead(gh)[:2]
    complex_pair = abs(pair[0].imag) > 1e-6 and abs(pair[0] - pair[1].conjugate()) < 1e-9
    p5 = ModelParams.from_omega_z(1.5, n_qubits=10, g=0.63)
    lam_c = F.stability_crossing(FixedPointKind.NP_DOWN, p5, "lam", 1.0, 1.1)
    dl = abs(lam_c - F.lambda_t(p5))
    ok = (lo > 0) != (hi > 0) and complex_pair and 1.0 < lam_c < 1.1 and dl <= 1e-6
    record_criterion(3, ok, f"SP Hopf at g={gh:.6f} (Im={abs(pair[0].imag):.3f}), "
                            f"NP-down crossing lambda={lam_c:.7f}, |dlambda_t|={dl:.1e}")
    assert ok


CASCADE = ModelParams.from_omega_z(1.5, n_qubits=10, lam=1.4)
CASCADE_START = MeanFieldState.from_spin(-0.99)


def test_c04_period_doubling_cascade():
    t0 = time.perf_counter()
    pts = bifurcation_scan(CASCADE, [0.9, 1.0, 1.1], CASCADE_START, with_lyapunov=True)
    dt = time.perf_counter() - t0
    c = [pt.count for pt in pts]
    le = [pt.lyapunov for pt in pts]
    ok = (c[0] == 1 and c[1] == 2 and c[2] > 32 and le[2] > 0.01 and abs(le[0]) <= 0.01 and dt < 120)
    record_criterion(4, ok, f"counts {c}, LE(0.9)={le[0]:+.4f} LE(1.1)={le[2]:+.4f}, {dt:.1f} s")
    assert ok


def test_c05_psd_discrimination():
    db = {}
    for g in (0.9, 1.1):
        traj = integrate(CASCADE_START, CASCADE.with_(g=g), IntegratorConfig(t_end=400.0))
        db[g] = peak_to_floor_db(*power_spectrum(traj))
    ok = db[0.9] >= 20 and db[1.1] < 10
    record_criterion(5, ok, f"peak/floor {db[0.9]:.1f} dB at g=0.9 (>=20), {db[1.1]:.1f} dB at g=1.1 (<10)")
    assert ok


def test_c06_attractor_merging():
    base = ModelParams.from_omega_z(1.5, n_qubits=10, lam=1.25)
    plus = MeanFieldState.from_spin(-0.99)
    pair = (plus, parity_transform(plus))
    cfg = IntegratorConfig(t_end=6000.0)
    res = {}
    for g in (1.8, 2.0, 2.2):
        res[g] = [attractor_support(integrate(s, base.with_(g=g), cfg)) for s in pair]
    iso = lambda ss: all(not s.merged for s in ss) and {s.sign for s in ss} == {1, -1}
    merged = all(s.merged and s.transitions >= 10 for s in res[2.0])
    ok = iso(res[1.8]) and merged and iso(res[2.2])
    detail = "; ".join(f"g={g}: " + "/".join(f"{s.label}({s.transitions})" for s in ss) for g, ss in res.items())
    record_criterion(6, ok, detail)
    assert ok


def test_c07_bistability():
    p = ModelParams.from_omega_z(0.2, n_qubits=1, g=0.85, lam=0.5)
    start = lambda sz: MeanFieldState.from_spin(sz, 0.0, math.sqrt(1 - sz * sz))
    zs = np.round(np.arange(-0.71, -0.6599, 0.005), 4)
    fate = {float(z): classify_attractor(start(z), p).label for z in zs}
    exact = fate[-0.69] == "SP" and fate[-0.68] == "NPdown"
    # the same split anywhere within +-0.02: SP at sz_a, NP-down at sz_b > sz_a
    near = any(fate[a] == "SP" and fate[b] == "NPdown"
               for a in fate for b in fate
               if a < b and abs(a + 0.69) <= 0.02 + 1e-9 and abs(b + 0.68) <= 0.02 + 1e-9)
    observed = f"observed -0.69->{fate[-0.69]}, -0.68->{fate[-0.68]}"

    pb = ModelParams.from_omega_z(0.2, n_qubits=1, g=0.45, lam=1.8)
    t0 = time.perf_counter()
    bm = basin_map(pb, BlochGrid(181, 91))
    areas = bm.area_fractions()
    np_up, sp_area = areas.get("NPup", 0.0), areas.get("SP", 0.0)
    ok = (exact or near) and np_up > sp_area
    record_criterion(7, ok, f"B1 split SP-below/NP-down-above: {exact or near} ({observed}); "
                            f"B2 NPup {np_up:.3f} vs SP {sp_area:.3f} ({time.perf_counter() - t0:.0f} s)")
    assert ok


def test_c08_u0_capture():
    p = ModelParams.from_omega_z(0.2, n_qubits=1, g=1.3, lam=0.5)
    a = integrate(MeanFieldState.from_spin(-0.3), p)
    b = classify_attractor(MeanFieldState.from_spin(-0.35), p)
    ok = a.diverged and b.label == "NPdown"
    record_criterion(8, ok, f"s_z=-0.3: {a.terminal_tag()}; s_z=-0.35: {b.label}")
    assert ok


def test_c09_lindblad_invariants():
    hil = lb.HilbertConfig(4, 40)
    p = ModelParams.from_omega_z(0.2, n_qubits=4, g=0.4, lam=0.5)
    P = lb.parity_operator(hil).toarray()
    conj = lambda r: P.conj().T @ r @ P
    rho0 = lb.initial_density(hil, MeanFieldState(0, 0, 0, 1, 0, 0))
    t0 = time.perf_counter()
    # fixed RK4 step 5e-3: tested against the exponential of the superoperator below
    a = lb.evolve(rho0, p, hil, t_end=20.0, dt_sample=1.0, dt=5e-3)
    b = lb.evolve(conj(rho0), p, hil, t_end=20.0, dt_sample=1.0, dt=5e-3)
    dt = time.perf_counter() - t0
    par = float(np.abs(conj(a.final_rho) - b.final_rho).max())
    drift = max(a.trace_drift, b.trace_drift)
    herm = max(a.hermiticity, b.hermiticity)
    ok = drift <= 1e-8 and herm <= 1e-10 and par <= 1e-9 and dt < 60
    record_criterion(9, ok, f"trace drift {drift:.1e}, hermiticity {herm:.1e}, parity {par:.1e}, {dt:.1f} s")
    assert ok


def test_c10_mean_field_scaling():
    t0 = time.perf_counter()
    base = ModelParams.from_omega_z(0.2, g=0.4, lam=0.5)
    low = lb.n_scan(base, (2, 4, 6, 8, 10))
    high = lb.n_scan(base.with_(g=0.7), (2, 4, 6, 8, 10))
    dt = time.perf_counter() - t0
    slope = low["n_loglog_slope"]
    fit = high["jx2_deviation_fit"]
    ok = abs(slope + 1) <= 0.2 and fit["slope"] > 0 and fit["r"] >= 0.95 and dt < 600
    record_criterion(10, ok, f"<n> log-log slope {slope:+.3f} (want -1+-0.2); <Jx^2> deviation slope "
                             f"{fit['slope']:+.3f}, r={fit['r']:+.3f}; {dt:.0f} s")
    assert ok


def test_c11_property_suites():
    rng = np.random.default_rng(11)
    # spin norm over t=400
    p = CASCADE.with_(g=1.1)
    tr = integrate(CASCADE_START, p, IntegratorConfig(t_end=400.0))
    drift = float(np.abs(tr.spin_norm() - 1).max())
    # parity pairs
    cfg = IntegratorConfig(t_end=100.0)
    s0 = MeanFieldState.from_spin(-0.5, n=1.0, x=0.2, y=-0.1)
    a = integrate(s0, p, cfg)
    b = integrate(parity_transform(s0), p, cfg)
    par = float(np.abs(a.states * np.array([-1, -1, 1, -1, -1, 1]) - b.states).max())
    # Jacobian against central differences
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 11))
        q = ModelParams(omega0=rng.uniform(0.2, 3), omega_q=rng.uniform(0.01, 2), g=rng.uniform(0, 2.5),
                        lam=rng.uniform(0, 2.5), kappa=rng.uniform(0, 2), n_qubits=n)
        v = rng.normal(size=3)
        x = np.r_[rng.uniform(-5, 5, 2), rng.uniform(0, 20), v / np.linalg.norm(v)]
        J = jacobian(x, q)
        fd = np.column_stack([(rhs(x + e, q) - rhs(x - e, q)) / 2e-6 for e in np.eye(6) * 1e-6])
        worst = max(worst, float(np.abs(J - fd).max() / max(1.0, np.abs(J).max())))
    # uncoupled photon decay
    q = ModelParams(omega_q=0.3, g=0.0, kappa=1.0)
    d = integrate(MeanFieldState.from_spin(0.3, n=4.0, x=1.0), q, IntegratorConfig(t_end=10.0))
    decay = float(np.abs(d["n"] - 4.0 * np.exp(-2 * d.times)).max())
    ok = drift <= 1e-8 and par <= 1e-8 and worst <= 1e-5 and decay <= 1e-8
    record_criterion(11, ok, f"spin drift {drift:.1e}, parity {par:.1e}, jacobian {worst:.1e}, decay {decay:.1e}")
    assert ok
