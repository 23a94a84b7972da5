"""Local maxima of sampled series and amplitude clustering."""

from __future__ import annotations

import numpy as np

AMPLITUDE_REL_TOL = 1e-4


def local_maxima(values, times=None):
    """Interior local maxima by three-point comparison, refined by a parabola
    through the neighbouring samples.

    Returns ``(t_peak, v_peak)``; ``t_peak`` is in sample-index units when
    ``times`` is not given (the grid must be uniform).
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return np.empty(0), np.empty(0)
    a, b, c = v[:-2], v[1:-1], v[2:]
    idx = np.nonzero((b > a) & (b >= c))[0]
    a, b, c = a[idx], b[idx], c[idx]
    curv = a - 2 * b + c
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(curv < 0, 0.5 * (a - c) / curv, 0.0)
    off = np.clip(off, -0.5, 0.5)
    peak = b - 0.25 * (a - c) * off
    pos = idx + 1 + off
    if times is not None:
        t = np.asarray(times, dtype=float)
        pos = t[0] + pos * (t[1] - t[0])
    return pos, peak


def cluster_amplitudes(maxima, rel_tol: float = AMPLITUDE_REL_TOL) -> np.ndarray:
    """Distinct amplitude levels: sorted maxima split wherever the gap exceeds
    ``rel_tol * max|maxima|``; each cluster is reported by its mean."""
    m = np.sort(np.asarray(maxima, dtype=float))
    if m.size == 0:
        return m
    tol = rel_tol * np.max(np.abs(m))
    breaks = np.nonzero(np.diff(m) > tol)[0] + 1
    return np.array([grp.mean() for grp in np.split(m, breaks)])
