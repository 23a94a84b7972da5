"""Scans of oscillation amplitudes and Lyapunov exponents along the coupling."""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from ..integrator import IntegratorConfig, integrate
from ..model import ModelParams
from .extrema import AMPLITUDE_REL_TOL, cluster_amplitudes, local_maxima
from .lyapunov import Localized, lyapunov_exponent
from .parallel import ordered_map

# a longer run than the classifier default resolves dense amplitude sets better
SCAN_T_END = 1000.0


@dataclass(frozen=True)
class BifurcationPoint:
    g: float
    status: str  # "ok" or "Localized"
    amplitudes: tuple
    lyapunov: float | None = None

    @property
    def count(self) -> int:
        return len(self.amplitudes)

    def to_dict(self) -> dict:
        return {"g": self.g, "status": self.status, "count": self.count,
                "amplitudes": list(self.amplitudes), "lyapunov": self.lyapunov}


def amplitudes(traj, t_start=None, rel_tol: float = AMPLITUDE_REL_TOL) -> np.ndarray:
    """Distinct levels of the local maxima of ``n`` after ``t_start`` (default:
    half the span)."""
    if t_start is None:
        t_start = 0.5 * traj.times[-1]
    _, peaks = local_maxima(traj.after(t_start)["n"])
    return cluster_amplitudes(peaks, rel_tol)


def _scan_point(g, base, initial, config, with_lyapunov, rel_tol):
    p = base.with_(g=g)
    traj = integrate(initial, p, config)
    if traj.diverged:
        return BifurcationPoint(g, "Localized", ())
    amps = tuple(float(a) for a in amplitudes(traj, rel_tol=rel_tol))
    le = None
    if with_lyapunov:
        try:
            le = lyapunov_exponent(initial, p, config)
        except Localized:
            return BifurcationPoint(g, "Localized", amps)
    return BifurcationPoint(g, "ok", amps, le)


def bifurcation_scan(base: ModelParams, g_grid, initial, config: IntegratorConfig | None = None,
                     *, with_lyapunov: bool = False, rel_tol: float = AMPLITUDE_REL_TOL,
                     workers: int = 1, progress: bool = False) -> list[BifurcationPoint]:
    """Post-transient maxima of ``n`` for each coupling on a monotone grid.

    Diverging points are flagged ``Localized`` and carry no amplitudes.
    """
    g_grid = np.asarray(g_grid, dtype=float)
    d = np.diff(g_grid)
    if g_grid.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("g grid must be strictly monotone")
    config = config or IntegratorConfig(t_end=SCAN_T_END)
    fn = partial(_scan_point, base=base, initial=initial, config=config,
                 with_lyapunov=with_lyapunov, rel_tol=rel_tol)
    return ordered_map(fn, [float(g) for g in g_grid], workers, progress)
