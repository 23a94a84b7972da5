"""Sign support of the X quadrature, used to detect merged symmetric attractors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEAD_BAND = 1e-3


@dataclass(frozen=True)
class Support:
    merged: bool
    sign: int  # +1 / -1 for isolated supports, 0 when merged or empty
    transitions: int

    @property
    def label(self) -> str:
        if self.merged:
            return "Merged"
        return "Isolated" + ("+" if self.sign > 0 else "-" if self.sign < 0 else "")

    def to_dict(self) -> dict:
        return {"label": self.label, "merged": self.merged, "sign": self.sign,
                "transitions": self.transitions}


def attractor_support(trajectory, t_start=None, dead_band: float = DEAD_BAND) -> Support:
    """Count sign changes of ``x`` after ``t_start`` (default: half the span),
    ignoring samples with ``|x| < dead_band``."""
    if t_start is None:
        t_start = 0.5 * trajectory.times[-1]
    x = trajectory.after(t_start)["x"]
    s = np.sign(x[np.abs(x) >= dead_band])
    if s.size == 0:
        return Support(False, 0, 0)
    k = int(np.count_nonzero(s[1:] != s[:-1]))
    if k:
        return Support(True, 0, k)
    return Support(False, int(s[0]), 0)
