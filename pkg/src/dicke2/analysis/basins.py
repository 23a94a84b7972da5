"""Basins of attraction on the Bloch sphere."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import partial

import numpy as np

from ..model import MeanFieldState, ModelParams
from .classify import AttractorVerdict, ClassifierConfig, classify_attractor
from .parallel import ordered_map


@dataclass(frozen=True)
class BlochGrid:
    """Equiangular longitude x latitude grid; each pole is one cell.

    Latitudes run from -pi/2 (the south pole, ``sz = -1``) to +pi/2 inclusive;
    longitudes are ``2 pi k / n_lon`` measured from +x towards +y.
    """

    n_lon: int = 181
    n_lat: int = 91

    def __post_init__(self):
        if self.n_lon < 1 or self.n_lat < 3:
            raise ValueError("need n_lon >= 1 and n_lat >= 3")

    @property
    def lons(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_lon) / self.n_lon

    @property
    def lats(self) -> np.ndarray:
        return np.linspace(-np.pi / 2, np.pi / 2, self.n_lat)

    def nodes(self):
        """``(lat_index, lon_index, lat, lon)`` per cell; poles have lon index 0."""
        lats, lons = self.lats, self.lons
        out = [(0, 0, lats[0], 0.0)]
        for i in range(1, self.n_lat - 1):
            out.extend((i, j, lats[i], lons[j]) for j in range(self.n_lon))
        out.append((self.n_lat - 1, 0, lats[-1], 0.0))
        return out

    def weights(self) -> np.ndarray:
        """Solid angle of each cell in :meth:`nodes` order (sums to 4 pi)."""
        lats = self.lats
        edges = np.concatenate([[-np.pi / 2], 0.5 * (lats[1:] + lats[:-1]), [np.pi / 2]])
        band = 2 * np.pi * (np.sin(edges[1:]) - np.sin(edges[:-1]))
        w = [band[0]]
        for i in range(1, self.n_lat - 1):
            w.extend([band[i] / self.n_lon] * self.n_lon)
        w.append(band[-1])
        return np.array(w)

    @staticmethod
    def spin(lat: float, lon: float) -> tuple[float, float, float]:
        c = np.cos(lat)
        return c * np.cos(lon), c * np.sin(lon), np.sin(lat)


@dataclass
class BasinMap:
    params: ModelParams
    grid: BlochGrid
    cavity: tuple
    nodes: list
    verdicts: list
    classifier: ClassifierConfig | None = None

    @property
    def labels(self) -> list[str]:
        return [v.label for v in self.verdicts]

    def area_fractions(self, fine: bool = False) -> dict[str, float]:
        """Fraction of the sphere's solid angle per label."""
        w = self.grid.weights()
        acc: Counter = Counter()
        for wi, v in zip(w, self.verdicts):
            acc[v.fine_label if fine else v.label] += wi
        tot = w.sum()
        return {k: float(acc[k] / tot) for k in sorted(acc)}

    def label_grid(self) -> np.ndarray:
        """``(n_lat, n_lon)`` array of labels; pole rows repeat the pole cell."""
        g = np.empty((self.grid.n_lat, self.grid.n_lon), dtype=object)
        for (i, j, _, _), v in zip(self.nodes, self.verdicts):
            if i in (0, self.grid.n_lat - 1):
                g[i, :] = v.label
            else:
                g[i, j] = v.label
        return g

    def unresolved_fraction(self) -> float:
        return sum(v.label == "Unresolved" for v in self.verdicts) / len(self.verdicts)

    def to_json(self) -> str:
        x, y, n = self.cavity
        cells = []
        for (i, j, lat, lon), v in zip(self.nodes, self.verdicts):
            sx, sy, sz = BlochGrid.spin(lat, lon)
            cells.append({"i_lat": i, "i_lon": j, "sx": sx, "sy": sy, "sz": sz,
                          "initial": [x, y, n, sx, sy, sz], **v.to_dict()})
        return json.dumps({
            "params": self.params.to_dict(),
            "grid": {"n_lon": self.grid.n_lon, "n_lat": self.grid.n_lat},
            "cavity": {"x": x, "y": y, "n": n},
            "classifier": self.classifier.to_dict() if self.classifier else None,
            "area_fractions": self.area_fractions(),
            "cells": cells,
        }, indent=1)

    def to_csv(self) -> str:
        rows = ["i_lat,i_lon,sx,sy,sz,label,fine_label,lyapunov"]
        for (i, j, lat, lon), v in zip(self.nodes, self.verdicts):
            sx, sy, sz = BlochGrid.spin(lat, lon)
            le = "" if v.lyapunov is None else repr(v.lyapunov)
            rows.append(f"{i},{j},{sx!r},{sy!r},{sz!r},{v.label},{v.fine_label},{le}")
        return "\n".join(rows) + "\n"


def _classify_node(node, params, cavity, config) -> AttractorVerdict:
    _, _, lat, lon = node
    sx, sy, sz = BlochGrid.spin(lat, lon)
    x, y, n = cavity
    return classify_attractor(MeanFieldState(x, y, n, sx, sy, sz), params, config)


def basin_map(params: ModelParams, grid: BlochGrid | None = None, cavity=(0.0, 0.0, 0.0),
              config: ClassifierConfig | None = None, workers: int = 1,
              progress: bool = False) -> BasinMap:
    """Classify the long-time fate of every grid node, the cavity starting from
    ``cavity = (x, y, n)`` (vacuum by default)."""
    grid = grid or BlochGrid()
    nodes = grid.nodes()
    fn = partial(_classify_node, params=params, cavity=tuple(cavity), config=config)
    verdicts = ordered_map(fn, nodes, workers, progress)
    return BasinMap(params, grid, tuple(cavity), nodes, verdicts, config)
