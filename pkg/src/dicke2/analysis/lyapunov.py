"""Largest Lyapunov exponent by tangent co-integration."""

from __future__ import annotations

import numpy as np

from ..integrator import IntegratorConfig, integrate_with_tangent
from ..model import MeanFieldState, ModelParams

TRANSIENT = 200.0
SPAN = 2000.0


class Localized(RuntimeError):
    """The trajectory was captured by the localized point; no exponent exists."""

    def __init__(self, t_div):
        super().__init__(f"trajectory diverged at t={t_div:.6g}")
        self.t_div = t_div


def default_tangent(initial) -> np.ndarray:
    """Deterministic unit tangent with no component along the spin normal."""
    s = initial.as_array() if isinstance(initial, MeanFieldState) else np.asarray(initial, float)
    v = np.ones(6)
    spin = s[3:6] / np.linalg.norm(s[3:6])
    v[3:6] -= spin * (spin @ v[3:6])
    return v / np.linalg.norm(v)


def lyapunov_exponent(initial, params: ModelParams, config: IntegratorConfig | None = None, *,
                      transient: float = TRANSIENT, span: float = SPAN,
                      renorm_dt: float = 1.0, tangent0=None) -> float:
    """Benettin estimate of the largest exponent.

    The tangent is renormalized every ``renorm_dt``; stretches recorded before
    ``transient`` are discarded and the rest averaged over ``span``. Times are in
    units of ``1/omega0``.

    Raises
    ------
    Localized
        If the orbit diverges before the end of the averaging span.
    """
    transient, span, renorm_dt = (v / params.omega0 for v in (transient, span, renorm_dt))
    cfg = (config or IntegratorConfig()).with_(t_end=transient + span)
    # samples are not used here; keep the buffer small
    cfg = cfg.with_(sample_dt=max(cfg.sample_dt, renorm_dt))
    tan = default_tangent(initial) if tangent0 is None else np.asarray(tangent0, float)
    traj, logs = integrate_with_tangent(initial, tan, params, cfg, renorm_dt)
    if traj.diverged:
        raise Localized(traj.t_div)
    skip = int(round(transient / renorm_dt))
    kept = logs[skip:]
    return float(np.sum(kept) / (kept.size * renorm_dt))
