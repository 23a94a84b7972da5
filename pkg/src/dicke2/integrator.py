"""Adaptive Dormand-Prince 5(4) integration of the mean-field flow.

The stepping loop is compiled with numba; sampling onto the uniform output
grid uses the scheme's 4th-order continuous extension, so the emitted grid
never influences the step sequence.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .model import STATE_NAMES, MeanFieldState, ModelParams, jacobian_kernel, rhs_kernel


class IntegrationError(RuntimeError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings. Times are in the same units as ``1/omega0``.

    ``max_step=None`` resolves to ``0.05 / omega0``.
    """

    t_end: float = 400.0
    sample_dt: float = 0.02
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    max_step: float | None = None
    n_max: float = 1e8
    n_capture: float = 1e4

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be > 0")
        if not self.sample_dt > 0:
            raise ValueError("sample_dt must be > 0")
        if not self.t_end > 0:
            raise ValueError("t_end must be > 0")
        if not self.n_max > 1:
            raise ValueError("n_max must be > 1")
        if not 1 < self.n_capture <= self.n_max:
            raise ValueError("n_capture must lie in (1, n_max]")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be > 0")

    def resolved_max_step(self, params: ModelParams) -> float:
        return self.max_step if self.max_step is not None else 0.05 / params.omega0

    def with_(self, **changes) -> "IntegratorConfig":
        from dataclasses import replace

        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "t_end": self.t_end,
            "sample_dt": self.sample_dt,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_step": self.max_step,
            "n_max": self.n_max,
            "n_capture": self.n_capture,
        }


class Terminal(enum.Enum):
    COMPLETED = "completed"
    DIVERGED = "diverged"


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), 6)
    terminal: Terminal = Terminal.COMPLETED
    t_div: float | None = None
    params: ModelParams | None = field(default=None, repr=False)

    @property
    def diverged(self) -> bool:
        return self.terminal is Terminal.DIVERGED

    @property
    def sample_dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def __len__(self):
        return len(self.times)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.states[:, STATE_NAMES.index(name)]

    def state_at(self, i: int) -> MeanFieldState:
        return MeanFieldState.from_array(self.states[i])

    def after(self, t_start: float) -> "Trajectory":
        """Samples with ``t >= t_start`` (the post-transient window)."""
        i = int(np.searchsorted(self.times, t_start - 1e-9 * max(1.0, abs(t_start))))
        return Trajectory(self.times[i:], self.states[i:], self.terminal, self.t_div, self.params)

    def spin_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.states[:, 3:6] ** 2, axis=1))

    def terminal_tag(self) -> str:
        if self.diverged:
            return f"diverged(t_div={self.t_div!r})"
        return "completed"

    def to_csv(self, path_or_buf=None) -> str | None:
        """Write ``t,x,y,n,sx,sy,sz`` rows plus a trailing ``# terminal=...`` line."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("t",) + STATE_NAMES)
        for t, row in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        buf.write(f"# terminal={self.terminal_tag()}\n")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path) as fh:
            lines = fh.read().splitlines()
        tail = [ln for ln in lines if ln.startswith("# terminal=")]
        rows = [ln for ln in lines[1:] if ln and not ln.startswith("#")]
        data = np.array([[float(v) for v in r.split(",")] for r in rows]).reshape(-1, 7)
        terminal, t_div = Terminal.COMPLETED, None
        if tail and tail[-1].startswith("# terminal=diverged"):
            terminal = Terminal.DIVERGED
            t_div = float(tail[-1].split("t_div=")[1].rstrip(")"))
        return cls(data[:, 0], data[:, 1:], terminal, t_div)


# -- Dormand-Prince tableau ------------------------------------------------------

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
# 5th-order minus embedded 4th-order weights
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension: y(t + th*h) = y + h * sum_i K_i * sum_j P[i, j] th^(j+1)
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

STATUS_COMPLETED = 0
STATUS_DIVERGED = 1
STATUS_UNDERFLOW = 2
STATUS_NONFINITE = 3

# Divergence guard: past n_capture the photon number must have been
# non-decreasing for GUARD_TIME / omega0 (independent of the sampling grid).
GUARD_TIME = 1.0


@numba.njit(cache=True)
def _deriv(y, p, ntan, out, J):
    rhs_kernel(y, p, out)
    if ntan > 0:
        jacobian_kernel(y, p, J)
        for i in range(6):
            acc = 0.0
            for j in range(6):
                acc += J[i, j] * y[6 + j]
            out[6 + i] = acc


@numba.njit(cache=True)
def _err_norm(y, ynew, err, rtol, atol):
    acc = 0.0
    d = y.shape[0]
    for i in range(d):
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        acc += (err[i] / sc) ** 2
    return math.sqrt(acc / d)


@numba.njit(cache=True)
def dopri_kernel(y0, p, ntan, t_end, sample_dt, rtol, atol, max_step, h_min, n_max,
                 n_capture, renorm_dt, samples, log_stretch):
    """Run the integration; fills ``samples`` (6 state columns) and, in tangent
    mode (``ntan=1``), ``log_stretch`` with ln|delta| at every renormalization.

    Returns (samples_written, status, t_stop, renorms_written).
    """
    d = y0.shape[0]
    n_samples = samples.shape[0]
    y = y0.copy()
    ynew = np.empty(d)
    ytmp = np.empty(d)
    err = np.empty(d)
    K = np.empty((7, d))
    J = np.empty((6, 6))
    t = 0.0

    for i in range(6):
        samples[0, i] = y[i]
    written = 1
    renorms = 0
    next_renorm = renorm_dt if ntan > 0 else np.inf
    guard = GUARD_TIME / p[0]
    t_grow = 0.0  # time since n last decreased

    _deriv(y, p, ntan, K[0], J)
    # initial step (Hairer & Wanner heuristic, simplified)
    d0 = 0.0
    d1 = 0.0
    for i in range(d):
        sc = atol + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (K[0, i] / sc) ** 2
    d0 = math.sqrt(d0 / d)
    d1 = math.sqrt(d1 / d)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, max_step, t_end)

    beta = 0.04
    expo1 = 0.2 - 0.75 * beta
    errold = 1e-4
    safe = 0.9
    status = STATUS_COMPLETED

    while t < t_end:
        if h < h_min:
            return written, STATUS_UNDERFLOW, t, renorms
        hit_renorm = False
        if t + h >= next_renorm:
            h = next_renorm - t
            hit_renorm = True
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True

        for s in range(1, 7):
            for i in range(d):
                acc = y[i]
                for r in range(s):
                    acc += h * _A[s, r] * K[r, i]
                ytmp[i] = acc
            _deriv(ytmp, p, ntan, K[s], J)
        for i in range(d):
            ynew[i] = ytmp[i]
        # FSAL: K[6] = f(ynew)
        for i in range(d):
            acc = 0.0
            for s in range(7):
                acc += _E[s] * K[s, i]
            err[i] = h * acc
        e = _err_norm(y, ynew, err, rtol, atol)
        if not math.isfinite(e):
            h *= 0.1
            if h < h_min:
                return written, STATUS_NONFINITE, t, renorms
            continue

        fac11 = e ** expo1
        if e <= 1.0:
            fac = fac11 / errold ** beta
            fac = max(0.1, min(5.0, fac / safe))
            hnew = h / fac
            errold = max(e, 1e-4)
            t_new = t_end if last else (next_renorm if hit_renorm else t + h)

            # dense output onto the sample grid
            while written < n_samples:
                ts = written * sample_dt
                if ts > t_new + 1e-12 * max(1.0, t_new):
                    break
                th = (ts - t) / h
                if th > 1.0:
                    th = 1.0
                for i in range(6):
                    acc = 0.0
                    for s in range(7):
                        q = th * (_P[s, 0] + th * (_P[s, 1] + th * (_P[s, 2] + th * _P[s, 3])))
                        acc += K[s, i] * q
                    samples[written, i] = y[i] + h * acc
                written += 1

            if ynew[2] < y[2]:
                t_grow = t_new
            t = t_new
            for i in range(d):
                y[i] = ynew[i]
                K[0, i] = K[6, i]

            if y[2] > n_max or (y[2] > n_capture and t - t_grow >= guard):
                return written, STATUS_DIVERGED, t, renorms

            if hit_renorm:
                # drop the component along the spin normal: it is neutral under
                # the flow and roundoff there would otherwise mask decay
                ss = y[3] * y[3] + y[4] * y[4] + y[5] * y[5]
                proj = (y[3] * y[9] + y[4] * y[10] + y[5] * y[11]) / ss
                for i in range(3):
                    y[9 + i] -= proj * y[3 + i]
                nrm = 0.0
                for i in range(6, d):
                    nrm += y[i] * y[i]
                nrm = math.sqrt(nrm)
                if renorms < log_stretch.shape[0]:
                    log_stretch[renorms] = math.log(nrm)
                    renorms += 1
                for i in range(6, d):
                    y[i] /= nrm
                _deriv(y, p, ntan, K[0], J)
                next_renorm = (renorms + 1) * renorm_dt
                if next_renorm > t_end + 1e-12 * t_end:
                    next_renorm = np.inf
            h = min(hnew, max_step)
        else:
            h = h / min(5.0, fac11 / safe)
    return written, status, t, renorms


def _n_samples(config: IntegratorConfig) -> int:
    return int(math.floor(config.t_end / config.sample_dt + 1e-9)) + 1


def _run(y0: np.ndarray, params: ModelParams, config: IntegratorConfig, ntan: int,
         renorm_dt: float):
    samples = np.empty((_n_samples(config), 6))
    n_log = int(math.floor(config.t_end / renorm_dt + 1e-9)) if ntan else 0
    log_stretch = np.empty(max(n_log, 1))
    written, status, t_stop, renorms = dopri_kernel(
        y0, params.as_array(), ntan, float(config.t_end), float(config.sample_dt),
        float(config.rel_tol), float(config.abs_tol),
        float(config.resolved_max_step(params)), 1e-14 / params.omega0,
        float(config.n_max), float(config.n_capture), float(renorm_dt), samples, log_stretch,
    )
    if status in (STATUS_UNDERFLOW, STATUS_NONFINITE):
        raise StepSizeUnderflow(
            f"step size fell below 1e-14/omega0 at t={t_stop:.6g} without divergence"
        )
    times = np.arange(written) * config.sample_dt
    terminal = Terminal.DIVERGED if status == STATUS_DIVERGED else Terminal.COMPLETED
    traj = Trajectory(times, samples[:written].copy(), terminal,
                      float(t_stop) if terminal is Terminal.DIVERGED else None, params)
    return traj, log_stretch[:renorms].copy()


def _initial_vector(initial) -> np.ndarray:
    if isinstance(initial, MeanFieldState):
        return initial.as_array()
    return MeanFieldState.from_array(initial).as_array()


def integrate(initial, params: ModelParams, config: IntegratorConfig | None = None) -> Trajectory:
    """Integrate from ``initial`` to ``config.t_end``, sampled every ``sample_dt``.

    Stops early with ``terminal=DIVERGED`` when the photon number passes
    ``config.n_max``, or passes ``config.n_capture`` after growing monotonically
    for ``1 / omega0`` (capture by the localized point). Past the capture
    scale the spin precesses at a rate proportional to ``n`` and explicit
    stepping to ``n_max`` becomes impractically slow.
    """
    config = config or IntegratorConfig()
    traj, _ = _run(_initial_vector(initial), params, config, 0, math.inf)
    return traj


def integrate_with_tangent(initial, tangent0, params: ModelParams,
                           config: IntegratorConfig | None = None, renorm_dt: float = 1.0):
    """Co-integrate a tangent vector with the flow.

    The tangent is renormalized every ``renorm_dt`` and ``ln|delta|`` before each
    renormalization is returned alongside the trajectory. At each renormalization
    the component along the spin normal ``(0, 0, 0, sx, sy, sz)`` is removed, so
    the recorded stretch is that of perturbations tangent to the sphere.
    """
    config = config or IntegratorConfig()
    tangent0 = np.asarray(tangent0, dtype=float)
    if tangent0.shape != (6,):
        raise ValueError("tangent0 must be a 6-vector")
    if abs(np.linalg.norm(tangent0) - 1.0) > 1e-12:
        raise ValueError("tangent0 must have unit norm")
    y0 = np.concatenate([_initial_vector(initial), tangent0])
    return _run(y0, params, config, 1, float(renorm_dt))
