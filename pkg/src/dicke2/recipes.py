"""Named preset configurations.

Each recipe is a partial run configuration (same layout as a config file) plus
the subcommand it is meant for. Energies are in units of ``omega0 = 1`` and
the cavity decay is ``kappa = 1`` unless stated. Grid extents of phase
diagrams are chosen to frame the regions of interest; they are presets, not
measured values.
"""

from __future__ import annotations

import copy
import math

_SPIN_M099 = {"sz": -0.99, "sy": 0.0, "sx_sign": 1.0}


def _grid(name, lo, hi, num):
    return {"name": name, "lo": lo, "hi": hi, "num": num}


RECIPES = {
    "fig1a": {
        "command": "sweep",
        "params": {"lam": 0.5, "n_qubits": 1},
        "sweep": {"mode": "analytic", "x": _grid("omega_z", 0.01, 2.0, 200),
                  "y": _grid("g", 0.0, 2.0, 200)},
    },
    "fig1b": {
        "command": "evolve",
        "params": {"omega_z": 0.2, "g": 0.6, "lam": 0.5, "n_qubits": 10},
        "initial": {"sz": -0.5, "sy": 0.0},
        "integrator": {"t_end": 400.0},
    },
    "fig2a1": {
        "command": "sweep",
        "params": {"omega_z": 0.2, "n_qubits": 1},
        "sweep": {"mode": "analytic", "x": _grid("lam", 0.0, 2.5, 250), "y": _grid("g", 0.0, 1.5, 150)},
    },
    "fig2a2": {
        "command": "sweep",
        "params": {"omega_z": 0.2, "n_qubits": 10},
        "sweep": {"mode": "analytic", "x": _grid("lam", 0.0, 2.5, 250), "y": _grid("g", 0.0, 1.5, 150)},
    },
    "fig2b1": {
        "command": "sweep",
        "params": {"omega_z": 1.5, "n_qubits": 1},
        "sweep": {"mode": "analytic", "x": _grid("lam", 0.0, 2.5, 250), "y": _grid("g", 0.0, 2.5, 250)},
    },
    "fig2b2": {
        "command": "sweep",
        "params": {"omega_z": 1.5, "n_qubits": 10},
        "sweep": {"mode": "analytic", "x": _grid("lam", 0.0, 2.5, 250), "y": _grid("g", 0.0, 2.5, 250)},
    },
    "fig3": {
        "command": "evolve",
        "params": {"omega_z": 0.8, "g": 0.64, "lam": 1.2, "n_qubits": 1},
        "initial": {"sz": -0.5, "sy": 0.0},
        "integrator": {"t_end": 400.0},
    },
    "fig4": {
        "command": "evolve",
        "params": {"omega_z": 1.5, "g": 0.669, "lam": 1.11, "n_qubits": 1},
        "initial": {"sz": -0.5, "sy": 0.0, "n": 5.0},
        "integrator": {"t_end": 400.0},
    },
    "fig5": {
        "command": "evolve",
        "params": {"omega_z": 1.5, "g": 0.63, "lam": 1.1, "n_qubits": 10},
        "initial": {"sz": 0.2, "sy": 0.0, "sx_sign": -1.0},
        "integrator": {"t_end": 400.0},
    },
    "fig6a": {
        "command": "evolve",
        "params": {"omega_z": 1.5, "g": 0.9, "lam": 1.4, "n_qubits": 10},
        "initial": dict(_SPIN_M099),
        "integrator": {"t_end": 400.0},
        "psd": True,
    },
    "fig6b": {
        "command": "evolve",
        "params": {"omega_z": 1.5, "g": 1.0, "lam": 1.4, "n_qubits": 10},
        "initial": dict(_SPIN_M099),
        "integrator": {"t_end": 400.0},
        "psd": True,
    },
    "fig6c": {
        "command": "evolve",
        "params": {"omega_z": 1.5, "g": 1.1, "lam": 1.4, "n_qubits": 10},
        "initial": dict(_SPIN_M099),
        "integrator": {"t_end": 400.0},
        "psd": True,
    },
    "fig7": {
        "command": "bifurcation",
        "params": {"omega_z": 1.5, "lam": 1.4, "n_qubits": 10},
        "initial": dict(_SPIN_M099),
        "integrator": {"t_end": 1000.0},
        "bifurcation": {"g": _grid("g", 0.8, 1.3, 251), "lyapunov": True},
    },
    "fig8a": {
        "command": "sweep",
        "params": {"omega_z": 1.5, "n_qubits": 1},
        "initial": dict(_SPIN_M099),
        "sweep": {"mode": "dynamics", "x": _grid("lam", 1.1, 2.5, 57), "y": _grid("g", 0.1, 2.5, 49)},
    },
    "fig8b": {
        "command": "sweep",
        "params": {"omega_z": 1.5, "n_qubits": 1},
        "initial": {"sz": 0.5, "sy": 0.0},
        "sweep": {"mode": "dynamics", "x": _grid("lam", 1.1, 2.5, 57), "y": _grid("g", 0.1, 2.5, 49)},
    },
    "fig8c": {
        "command": "sweep",
        "params": {"omega_z": 1.5, "n_qubits": 10},
        "initial": dict(_SPIN_M099),
        "sweep": {"mode": "dynamics", "x": _grid("lam", 1.1, 2.5, 57), "y": _grid("g", 0.1, 2.5, 49)},
    },
    "fig8d": {
        "command": "sweep",
        "params": {"omega_z": 1.5, "n_qubits": 10},
        "initial": {"sz": 0.5, "sy": 0.0},
        "sweep": {"mode": "dynamics", "x": _grid("lam", 1.1, 2.5, 57), "y": _grid("g", 0.1, 2.5, 49)},
    },
    "fig9": {
        "command": "evolve",
        "params": {"omega_z": 1.5, "g": 2.0, "lam": 1.25, "n_qubits": 10},
        "initial": dict(_SPIN_M099),
        "integrator": {"t_end": 6000.0},
        "pair": True,
    },
    "figA1": {
        "command": "validate-lindblad",
        "params": {"omega_z": 0.2, "g": 0.4, "lam": 0.5},
        "lindblad": {"ns": [2, 4, 6, 8, 10], "fock_cutoff": 8, "compare_t_end": 10.0,
                     "compare_ns": [2, 10], "compare_cutoff": 16},
    },
    "figA2": {
        "command": "validate-lindblad",
        "params": {"omega_z": 0.2, "g": 0.7, "lam": 0.5},
        "lindblad": {"ns": [2, 4, 6, 8, 10], "fock_cutoff": 16, "compare_t_end": 10.0,
                     "compare_ns": [2, 10], "compare_cutoff": 24},
    },
    "figB1": {
        "command": "evolve",
        "params": {"omega_z": 0.2, "g": 0.85, "lam": 0.5, "n_qubits": 1},
        "initial": {"sz": -0.68, "sx": 0.0, "sy": math.sqrt(1 - 0.68**2)},
        "integrator": {"t_end": 400.0},
    },
    "figB2": {
        "command": "basin",
        "params": {"omega_z": 0.2, "g": 0.45, "lam": 1.8, "n_qubits": 1},
        "basin": {"n_lon": 181, "n_lat": 91},
    },
    "figB3": {
        "command": "evolve",
        "params": {"omega_z": 0.2, "g": 1.3, "lam": 0.5, "n_qubits": 1},
        "initial": {"sz": -0.3, "sy": 0.0},
        "integrator": {"t_end": 400.0},
    },
}


def recipe(name: str) -> dict:
    try:
        return copy.deepcopy(RECIPES[name])
    except KeyError:
        raise KeyError(f"unknown recipe {name!r}; available: {', '.join(sorted(RECIPES))}") from None
