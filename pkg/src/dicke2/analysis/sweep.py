"""Two-parameter phase diagrams, from fixed-point analysis or from dynamics."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ..fixed_points import stable_phase
from ..model import MeanFieldState, ModelParams
from .classify import ClassifierConfig, classify_attractor
from .parallel import ordered_map

SWEEPABLE = ("g", "lam", "omega_z", "omega_q", "kappa", "omega0", "n_qubits")

# Fixed legend for rendered diagrams, keyed by label.
LEGEND = {
    "NPdown": "#3b6fb6",
    "NPup": "#1f2f8f",
    "SP": "#f28e2b",
    "Bdown": "#59a14f",
    "Bup": "#edc948",
    "U0": "#8c564b",
    "Cdown": "#b07aa1",
    "Cup": "#76b7b2",
    "LC": "#9ecae9",
    "LC_NP": "#c994c7",
    "LC_SP": "#e15759",
    "Chaos": "#ffd92f",
    "none": "#d9d9d9",
    "Unresolved": "#ffffff",
    "error": "#000000",
}

STATUS_OK = "ok"


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    def __post_init__(self):
        if self.name not in SWEEPABLE:
            raise ValueError(f"cannot sweep {self.name!r}; choose from {SWEEPABLE}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError(f"axis {self.name!r} is empty")

    @classmethod
    def linspace(cls, name, lo, hi, num):
        return cls(name, tuple(np.linspace(lo, hi, int(num))))


@dataclass
class PhaseDiagram:
    """Grid of cell results; ``cells[i][j]`` sits at ``y.values[i]``, ``x.values[j]``."""

    x: Axis
    y: Axis
    base: ModelParams
    mode: str
    cells: list
    initial: tuple | None = None
    classifier: dict | None = field(default=None)
    seed: int | None = None

    @property
    def labels(self) -> np.ndarray:
        return np.array([[c["label"] for c in row] for row in self.cells], dtype=object)

    def resolved_fraction(self) -> float:
        flat = [c for row in self.cells for c in row]
        ok = sum(c["status"] == STATUS_OK and c["label"] != "Unresolved" for c in flat)
        return ok / len(flat)

    def counts(self) -> dict:
        lab, cnt = np.unique(self.labels.ravel().astype(str), return_counts=True)
        return {str(k): int(v) for k, v in zip(lab, cnt)}

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "x_axis": {"name": self.x.name, "values": list(self.x.values)},
            "y_axis": {"name": self.y.name, "values": list(self.y.values)},
            "base_params": self.base.to_dict(),
            "initial": None if self.initial is None else list(self.initial),
            "seed": self.seed,
            "classifier": self.classifier,
            "legend": LEGEND,
            "counts": self.counts(),
            "cells": self.cells,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j", self.y.name, self.x.name, "label", "status", "lyapunov", "n_amplitudes"])
        for i, row in enumerate(self.cells):
            for j, c in enumerate(row):
                le = c.get("lyapunov")
                w.writerow([i, j, repr(self.y.values[i]), repr(self.x.values[j]), c["label"],
                            c["status"], "" if le is None else repr(le),
                            len(c.get("extrema_amplitudes", []))])
        return buf.getvalue()

    def to_svg(self, path) -> None:
        """Heatmap with the fixed :data:`LEGEND`; requires matplotlib."""
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        from matplotlib.colors import ListedColormap
        from matplotlib.patches import Patch

        names = list(LEGEND)
        idx = np.vectorize(lambda s: names.index(s) if s in LEGEND else names.index("error"))(self.labels)
        fig, ax = plt.subplots(figsize=(6, 4.5))
        xv, yv = np.array(self.x.values), np.array(self.y.values)
        ax.pcolormesh(xv, yv, idx, cmap=ListedColormap([LEGEND[n] for n in names]),
                      vmin=-0.5, vmax=len(names) - 0.5, shading="nearest")
        ax.set_xlabel(self.x.name)
        ax.set_ylabel(self.y.name)
        present = [n for n in names if n in set(self.labels.ravel())]
        ax.legend(handles=[Patch(color=LEGEND[n], label=n) for n in present],
                  loc="upper left", bbox_to_anchor=(1.01, 1), fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg")
        plt.close(fig)


def _cell_params(base: ModelParams, xname, xv, yname, yv) -> ModelParams:
    ch = {}
    for name, v in ((xname, xv), (yname, yv)):
        ch[name] = int(round(v)) if name == "n_qubits" else v
    if "omega_z" in ch and "n_qubits" not in ch:
        ch["omega_q"] = ch.pop("omega_z") / base.n_qubits
    elif "omega_z" in ch:
        ch["omega_q"] = ch.pop("omega_z") / ch["n_qubits"]
    return base.with_(**ch)


def _analytic_cell(cell, base, xname, yname):
    xv, yv = cell
    try:
        ph = stable_phase(_cell_params(base, xname, xv, yname, yv))
    except Exception as exc:  # recorded per cell, the sweep goes on
        return {"label": "error", "status": f"error: {exc}"}
    return {"label": ph.label, "status": STATUS_OK, "stable": sorted(ph.stable), "u0": ph.u0}


def _dynamics_cell(cell, base, xname, yname, initial, config):
    xv, yv = cell
    try:
        v = classify_attractor(initial, _cell_params(base, xname, xv, yname, yv), config)
    except Exception as exc:
        return {"label": "error", "status": f"error: {exc}"}
    d = v.to_dict()
    d["status"] = STATUS_OK
    return d


def phase_sweep(x: Axis, y: Axis, base: ModelParams, mode: str = "analytic", initial=None,
                config: ClassifierConfig | None = None, workers: int = 1,
                progress: bool = False) -> PhaseDiagram:
    """Label every ``(x, y)`` grid point.

    ``mode="analytic"`` uses the stable-fixed-point phase; ``mode="dynamics"``
    classifies the orbit started from ``initial`` at each point.
    """
    if x.name == y.name:
        raise ValueError("axes must differ")
    cells = [(xv, yv) for yv in y.values for xv in x.values]
    if mode == "analytic":
        fn = partial(_analytic_cell, base=base, xname=x.name, yname=y.name)
        init, cls = None, None
    elif mode == "dynamics":
        if initial is None:
            raise ValueError("dynamics mode needs an initial state")
        init = initial.as_array() if isinstance(initial, MeanFieldState) else np.asarray(initial, float)
        config = config or ClassifierConfig()
        fn = partial(_dynamics_cell, base=base, xname=x.name, yname=y.name,
                     initial=init, config=config)
        init, cls = tuple(float(v) for v in init), config.to_dict()
    else:
        raise ValueError(f"unknown mode {mode!r}")
    flat = ordered_map(fn, cells, workers, progress)
    nx = len(x.values)
    grid = [flat[i * nx:(i + 1) * nx] for i in range(len(y.values))]
    return PhaseDiagram(x, y, base, mode, grid, init, cls)
