"""Classification of long-time dynamics from a single initial condition."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..fixed_points import sp_fixed_points
from ..integrator import IntegratorConfig, Trajectory, integrate
from ..model import MeanFieldState, ModelParams, rhs_kernel
from .extrema import cluster_amplitudes, local_maxima
from .lyapunov import Localized, lyapunov_exponent
from .spectrum import MIN_SAMPLES, dominant_frequency, power_spectrum
from .support import Support, attractor_support


class AttractorKind(str, enum.Enum):
    FIXED_POINT = "FixedPoint"
    LIMIT_CYCLE = "LimitCycle"
    CHAOS = "Chaos"
    LOCALIZED = "Localized"
    UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class ClassifierConfig:
    """Thresholds for the decision cascade; rates and times in units of omega0."""

    t_end: float = 400.0
    eps_fp: float = 1e-8
    lambda_zero_band: float = 0.01
    lambda_chaos: float = 0.01
    # total integration allowed while a fixed-point approach is still under way
    max_t_total: float = 8000.0
    # peak-to-peak ratio (late / early half) above which oscillations persist
    persistence: float = 0.9
    min_oscillation: float = 1e-6
    # stationarity if the late/early median field-norm ratio drops below this
    decay_ratio: float = 0.8
    fp_match_tol: float = 1e-3
    le_transient: float = 200.0
    le_span: float = 2000.0
    compute_lyapunov: bool = True
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["integrator"] = self.integrator.to_dict()
        return d


@dataclass(frozen=True)
class AttractorVerdict:
    kind: AttractorKind
    fixed_point: str | None = None
    sublabel: str | None = None
    lyapunov: float | None = None
    extrema_amplitudes: tuple = ()
    dominant_frequency: float | None = None
    support: Support | None = None
    t_div: float | None = None
    t_total: float = 0.0
    note: str = ""

    @property
    def label(self) -> str:
        """Short label of the kind used in phase diagrams and basin maps."""
        if self.kind is AttractorKind.FIXED_POINT:
            if self.fixed_point in ("SPplus", "SPminus"):
                return "SP"
            return self.fixed_point or "FixedPoint"
        if self.kind is AttractorKind.LIMIT_CYCLE:
            return self.sublabel or "LC"
        if self.kind is AttractorKind.CHAOS:
            return "Chaos"
        if self.kind is AttractorKind.LOCALIZED:
            return "U0"
        return "Unresolved"

    @property
    def fine_label(self) -> str:
        """Like :attr:`label` but keeps the SP branch."""
        if self.kind is AttractorKind.FIXED_POINT and self.fixed_point:
            return self.fixed_point
        return self.label

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "label": self.label,
            "fixed_point": self.fixed_point,
            "sublabel": self.sublabel,
            "lyapunov": self.lyapunov,
            "extrema_amplitudes": [float(a) for a in self.extrema_amplitudes],
            "dominant_frequency": self.dominant_frequency,
            "support": self.support.to_dict() if self.support else None,
            "t_div": self.t_div,
            "t_total": self.t_total,
            "note": self.note,
        }


def field_norms(states: np.ndarray, params: ModelParams) -> np.ndarray:
    p = params.as_array()
    out = np.empty(6)
    res = np.empty(len(states))
    for i, s in enumerate(states):
        rhs_kernel(s, p, out)
        res[i] = math.sqrt(out @ out)
    return res


def _candidates(params: ModelParams) -> dict:
    c = {"NPdown": np.array([0, 0, 0, 0, 0, -1.0]), "NPup": np.array([0, 0, 0, 0, 0, 1.0])}
    for fp in sp_fixed_points(params):
        c[fp.kind.value] = fp.state.as_array()
    return c


def nearest_fixed_point(state, params: ModelParams):
    """Name of and distance to the closest analytic fixed point."""
    cands = _candidates(params)
    name = min(cands, key=lambda k: np.linalg.norm(state - cands[k]))
    return name, float(np.linalg.norm(state - cands[name]))


def winding(spin: np.ndarray, axis: np.ndarray) -> float:
    """Accumulated turns of the spin orbit about ``axis``."""
    axis = axis / np.linalg.norm(axis)
    e1 = np.cross(axis, [1.0, 0, 0] if abs(axis[0]) < 0.9 else [0, 1.0, 0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    ang = np.unwrap(np.arctan2(spin @ e2, spin @ e1))
    return float((ang[-1] - ang[0]) / (2 * np.pi))


def limit_cycle_label(window: Trajectory, params: ModelParams, min_turns: float = 2.0) -> str:
    """``LC_NP`` / ``LC_SP`` for cycles around NP-down / SP, ``LC`` for cycles
    enclosing both. A cycle enclosing neither goes to whichever point is closer
    on average."""
    spin = window.states[:, 3:6]
    np_axis = np.array([0, 0, -1.0])
    sps = [fp.state.as_array()[3:6] for fp in sp_fixed_points(params)]
    around_np = abs(winding(spin, np_axis)) >= min_turns
    # only the SP branch nearest to the orbit is relevant
    sp_axis = None
    if sps:
        sp_axis = min(sps, key=lambda a: np.mean(np.linalg.norm(spin - a, axis=1)))
    around_sp = sp_axis is not None and abs(winding(spin, sp_axis)) >= min_turns
    if around_np and around_sp:
        return "LC"
    if around_np:
        return "LC_NP"
    if around_sp:
        return "LC_SP"
    d_np = np.mean(np.linalg.norm(spin - np_axis, axis=1))
    if sp_axis is None:
        return "LC_NP"
    d_sp = np.mean(np.linalg.norm(spin - sp_axis, axis=1))
    return "LC_NP" if d_np <= d_sp else "LC_SP"


def _oscillation_ratio(n: np.ndarray) -> tuple[float, float]:
    h = n.size // 2
    early, late = np.ptp(n[:h]), np.ptp(n[h:])
    return late, (late / early if early > 0 else (1.0 if late == 0 else math.inf))


def _extend(traj: Trajectory, params, cfg: IntegratorConfig) -> Trajectory:
    nxt = integrate(traj.states[-1], params, cfg)
    return Trajectory(nxt.times + traj.times[-1], nxt.states, nxt.terminal,
                      None if nxt.t_div is None else nxt.t_div + traj.times[-1], params)


def classify_attractor(initial, params: ModelParams,
                       config: ClassifierConfig | None = None) -> AttractorVerdict:
    """Decide what the orbit from ``initial`` settles on.

    The cascade is: divergence (``Localized``); a persistently vanishing field
    (``FixedPoint``, matched to the nearest analytic point); persistent
    oscillation with a Lyapunov exponent in the zero band (``LimitCycle``); an
    exponent above the chaos threshold (``Chaos``). Orbits still visibly
    approaching a fixed point are integrated further, up to
    ``config.max_t_total``. Anything else is ``Unresolved``.
    """
    cfg = config or ClassifierConfig()
    t_end = cfg.t_end / params.omega0
    icfg = cfg.integrator.with_(t_end=t_end)
    if isinstance(initial, MeanFieldState):
        initial = initial.as_array()
    traj = integrate(initial, params, icfg)
    t_total = t_end
    while True:
        if traj.diverged:
            return AttractorVerdict(AttractorKind.LOCALIZED, t_div=traj.t_div, t_total=traj.t_div)
        window = traj.after(traj.times[0] + 0.5 * (traj.times[-1] - traj.times[0]))
        fn = field_norms(window.states[:: max(1, len(window) // 200)], params)
        tail = fn[-max(1, fn.size // 10):]
        if np.max(tail) < cfg.eps_fp * params.omega0:
            name, _ = nearest_fixed_point(window.states[-1], params)
            return AttractorVerdict(AttractorKind.FIXED_POINT, fixed_point=name, t_total=t_total)
        ptp, ratio = _oscillation_ratio(window["n"])
        h = fn.size // 2
        decaying = np.median(fn[h:]) < cfg.decay_ratio * np.median(fn[:h])
        persistent = ptp > cfg.min_oscillation and ratio > cfg.persistence
        if decaying and not persistent and t_total + t_end <= cfg.max_t_total / params.omega0 + 1e-9:
            traj = _extend(traj, params, icfg)
            t_total += t_end
            continue
        break

    _, amps = local_maxima(window["n"])
    amps = tuple(cluster_amplitudes(amps))
    freq = None
    if len(window) >= MIN_SAMPLES:
        freq = dominant_frequency(*power_spectrum(window["n"], dt=window.sample_dt))
    support = attractor_support(window, t_start=window.times[0])
    common = dict(extrema_amplitudes=amps, dominant_frequency=freq, support=support,
                  t_total=t_total)
    if not cfg.compute_lyapunov:
        return AttractorVerdict(AttractorKind.UNRESOLVED, note="lyapunov disabled", **common)
    try:
        le = lyapunov_exponent(initial, params, cfg.integrator,
                               transient=cfg.le_transient, span=cfg.le_span)
    except Localized as exc:
        return AttractorVerdict(AttractorKind.LOCALIZED, t_div=exc.t_div, t_total=exc.t_div,
                                note="diverged during exponent estimate")
    zero = abs(le) <= cfg.lambda_zero_band * params.omega0
    if persistent and zero:
        return AttractorVerdict(AttractorKind.LIMIT_CYCLE, sublabel=limit_cycle_label(window, params),
                                lyapunov=le, **common)
    if le > cfg.lambda_chaos * params.omega0:
        return AttractorVerdict(AttractorKind.CHAOS, lyapunov=le, **common)
    note = "non-persistent oscillation" if zero else "stable exponent without stationarity"
    return AttractorVerdict(AttractorKind.UNRESOLVED, lyapunov=le, note=note, **common)


def verdict_from_dict(d: dict) -> AttractorVerdict:
    sup = d.get("support")
    support = Support(sup["merged"], sup["sign"], sup["transitions"]) if sup else None
    return AttractorVerdict(
        AttractorKind(d["kind"]), d.get("fixed_point"), d.get("sublabel"), d.get("lyapunov"),
        tuple(d.get("extrema_amplitudes", ())), d.get("dominant_frequency"), support,
        d.get("t_div"), d.get("t_total", 0.0), d.get("note", ""),
    )


__all__ = [
    "AttractorKind", "AttractorVerdict", "ClassifierConfig", "classify_attractor",
    "nearest_fixed_point", "limit_cycle_label", "winding", "verdict_from_dict",
]
