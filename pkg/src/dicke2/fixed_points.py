"""Analytic fixed points, phase boundaries and linear stability."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .model import MeanFieldState, ModelParams, jacobian, parity_transform, rhs

EPS_MARGINAL = 1e-9


class NotDefined(ValueError):
    """Raised when a boundary's inner square root is negative (outside the SP window)."""


class SingularJacobian(np.linalg.LinAlgError):
    pass


class FixedPointKind(str, enum.Enum):
    NP_DOWN = "NPdown"
    NP_UP = "NPup"
    SP_PLUS = "SPplus"
    SP_MINUS = "SPminus"
    U0 = "U0"


class Stability(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class FixedPoint:
    kind: FixedPointKind
    state: MeanFieldState
    stability: Stability | None = None
    leading_eigenvalues: tuple = field(default=(), compare=False)

    @property
    def is_sp(self) -> bool:
        return self.kind in (FixedPointKind.SP_PLUS, FixedPointKind.SP_MINUS)

    def to_dict(self) -> dict:
        st = self.state
        return {
            "kind": self.kind.value,
            "state": {k: _jsonable(getattr(st, k)) for k in ("x", "y", "n", "sx", "sy", "sz")},
            "stability": self.stability.value if self.stability else None,
            "leading_eigenvalues": [[float(z.real), float(z.imag)] for z in self.leading_eigenvalues],
        }


def _jsonable(v):
    v = float(v)
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


# -- boundaries --------------------------------------------------------------------


def lambda_t(params: ModelParams) -> float:
    """Pole-flip anisotropy: NP-down is stable below it, NP-up above it."""
    k, w0, wq = params.kappa, params.omega0, params.omega_q
    return math.sqrt((4 * k**2 + (2 * w0 + wq) ** 2) / (4 * k**2 + (2 * w0 - wq) ** 2))


def lambda_window(params: ModelParams) -> tuple[float, float]:
    """Open interval of anisotropies admitting SP solutions."""
    k, w0 = params.kappa, params.omega0
    if k == 0:
        return 0.0, math.inf
    r = math.hypot(w0, k)
    return (r - w0) / k, (r + w0) / k


def in_lambda_window(params: ModelParams) -> bool:
    lo, hi = lambda_window(params)
    return lo < params.lam < hi


def g_t1(params: ModelParams) -> float:
    """Coupling at which SP runs into the localized point (photon number diverges)."""
    w0, k, lam = params.omega0, params.kappa, params.lam
    inner = (2 * lam) ** 2 - (k / w0) ** 2 * (1 - lam**2) ** 2
    if inner < 0:
        raise NotDefined(f"g_t1 undefined at lam={lam}, kappa={k}, omega0={w0}")
    return math.sqrt((w0**2 + k**2) / (1 + lam**2 + math.sqrt(inner)))


def g_t2(params: ModelParams) -> float:
    """Lower edge of the NP-down instability window."""
    return math.sqrt(params.omega_z / params.omega0) * g_t1(params)


def g_t3(params: ModelParams) -> float:
    """Upper edge of the NP-down instability window (re-entrant normal phase).

    Only a re-stabilization for ``lam < 1``. For ``1 < lam < lambda_t`` the same
    root marks a second eigenvalue entering the right half-plane, and NP-down
    stays unstable above it.
    """
    gt1 = g_t1(params)
    w0, k, wz, lam = params.omega0, params.kappa, params.omega_z, params.lam
    d = (1 - lam**2) ** 2
    if d == 0:
        return math.inf
    return math.sqrt(w0 * wz * (w0**2 + k**2) / d) / gt1


def g_t4(params: ModelParams) -> float:
    """Existence threshold of a physical SP solution."""
    w0, wz = params.omega0, params.omega_z
    if wz <= w0 / 2:
        return g_t2(params)
    return math.sqrt(4 * wz**2 / (4 * wz**2 + w0**2)) * g_t1(params)


@dataclass(frozen=True)
class PhaseBoundaries:
    lambda_t: float
    g_t1: float | None
    g_t2: float | None
    g_t3: float | None
    g_t4: float | None
    lambda_lo: float
    lambda_hi: float

    def to_dict(self) -> dict:
        return {
            "lambda_t": _jsonable(self.lambda_t),
            "g_t1": None if self.g_t1 is None else _jsonable(self.g_t1),
            "g_t2": None if self.g_t2 is None else _jsonable(self.g_t2),
            "g_t3": None if self.g_t3 is None else _jsonable(self.g_t3),
            "g_t4": None if self.g_t4 is None else _jsonable(self.g_t4),
            "lambda_window": [_jsonable(self.lambda_lo), _jsonable(self.lambda_hi)],
        }


def boundaries(params: ModelParams) -> PhaseBoundaries:
    """All analytic boundaries; g-boundaries are ``None`` where undefined."""
    lo, hi = lambda_window(params)
    try:
        vals = g_t1(params), g_t2(params), g_t3(params), g_t4(params)
    except NotDefined:
        vals = (None,) * 4
    return PhaseBoundaries(lambda_t(params), *vals, lambda_lo=lo, lambda_hi=hi)


# -- fixed points ------------------------------------------------------------------


def normal_fixed_points(params: ModelParams) -> list[FixedPoint]:
    return [
        FixedPoint(FixedPointKind.NP_DOWN, MeanFieldState.np_down()),
        FixedPoint(FixedPointKind.NP_UP, MeanFieldState.np_up()),
    ]


def sp_fixed_points(params: ModelParams) -> list[FixedPoint]:
    """The parity pair of superradiant-like fixed points, or ``[]`` if none exists.

    ``sz`` and ``n`` are closed form; the quadratures and transverse spin follow
    from the linear stationarity conditions at that ``(sz, n)``.
    """
    if not in_lambda_window(params):
        return []
    try:
        gt1, gt4 = g_t1(params), g_t4(params)
    except NotDefined:
        return []
    g = params.g
    if not gt4 < g < gt1:
        return []
    w0, wz, lam, k = params.omega0, params.omega_z, params.lam, params.kappa
    ratio = gt1**2 / g**2
    disc = (w0 / (2 * wz)) ** 2 + 1 - ratio
    if disc < 0:
        return []
    sz = -w0 / (2 * wz) + math.sqrt(disc)
    if not -1 <= sz < 0:
        return []
    n = -0.5 * (wz / w0 * ratio / sz + 1)
    if n < 0:
        return []

    # with sx = g(1+lam) x sz/wz and sy = g(1-lam) y sz/wz, (x, y) spans the
    # null space of M; the combination g^2 (2n+1) sz / wz equals -g_t1^2/w0.
    a = -(gt1**2) / w0
    M = np.array([[-k, -(w0 + a * (1 - lam) ** 2)], [w0 + a * (1 + lam) ** 2, -k]])
    u, v = np.linalg.svd(M)[2][-1]
    c = g * sz / wz
    scale2 = (1 - sz**2) / (c**2 * ((1 + lam) ** 2 * u**2 + (1 - lam) ** 2 * v**2))
    amp = math.sqrt(scale2)
    x, y = amp * u, amp * v
    sx, sy = g * (1 + lam) * x * sz / wz, g * (1 - lam) * y * sz / wz
    if sx < 0 or (sx == 0 and sy < 0):
        x, y, sx, sy = -x, -y, -sx, -sy
    plus = MeanFieldState.from_array([x, y, n, sx, sy, sz])
    # mirror after normalization so the pair is exchanged exactly by parity
    minus = MeanFieldState.from_array(parity_transform(plus.as_array()))
    return [FixedPoint(FixedPointKind.SP_PLUS, plus), FixedPoint(FixedPointKind.SP_MINUS, minus)]


def u0_fixed_points(params: ModelParams) -> list[FixedPoint]:
    """Localized limit directions, present for ``g > g_t1``. ``n`` is infinite and
    the quadratures are left undefined (NaN)."""
    try:
        if params.g <= g_t1(params):
            return []
    except NotDefined:
        return []
    nan = math.nan
    return [
        FixedPoint(FixedPointKind.U0, MeanFieldState(nan, nan, math.inf, 1.0, 0.0, 0.0)),
        FixedPoint(FixedPointKind.U0, MeanFieldState(nan, nan, math.inf, -1.0, 0.0, 0.0)),
    ]


# -- stability ---------------------------------------------------------------------


def _tangent_basis(state) -> np.ndarray:
    """Orthonormal 6x5 basis of the complement of the spin-norm normal."""
    s = np.asarray(state, dtype=float)
    nu = np.zeros(6)
    nu[3:] = s[3:6]
    nu /= np.linalg.norm(nu)
    q, _ = np.linalg.qr(np.column_stack([nu, np.eye(6)]))
    return q[:, 1:6]


def restricted_eigenvalues(state, params: ModelParams) -> np.ndarray:
    """Jacobian eigenvalues at a fixed point with the structural zero removed.

    At any fixed point the spin-norm gradient is a left null vector of the
    Jacobian, so its orthogonal complement is invariant; the eigenvalues of the
    Jacobian restricted there are the full spectrum minus that zero mode.
    Sorted by descending real part.
    """
    s = state.as_array() if isinstance(state, MeanFieldState) else np.asarray(state, float)
    J = jacobian(s, params)
    Q = _tangent_basis(s)
    Jr = Q.T @ J @ Q
    if not np.all(np.isfinite(Jr)):
        raise SingularJacobian("non-finite Jacobian entries")
    try:
        ev = np.linalg.eigvals(Jr)
    except np.linalg.LinAlgError as exc:
        raise SingularJacobian(str(exc)) from exc
    return ev[np.lexsort((-ev.imag, -ev.real))]


def leading_real_part(state, params: ModelParams) -> float:
    return float(restricted_eigenvalues(state, params)[0].real)


def verdict(eigs, eps: float = EPS_MARGINAL) -> Stability:
    re = np.asarray(eigs).real
    if np.all(re < -eps):
        return Stability.STABLE
    if np.any(re > eps):
        return Stability.UNSTABLE
    return Stability.MARGINAL


def classify_stability(fp: FixedPoint, params: ModelParams, eps: float = EPS_MARGINAL) -> FixedPoint:
    if fp.kind is FixedPointKind.U0:
        raise ValueError("U0 is classified by divergence detection, not linearization")
    ev = restricted_eigenvalues(fp.state, params)
    return FixedPoint(fp.kind, fp.state, verdict(ev, eps), tuple(complex(z) for z in ev))


def analytic_fixed_points(params: ModelParams, classify: bool = True) -> list[FixedPoint]:
    """NP-down, NP-up and (when they exist) the SP pair; U0 is not included."""
    fps = normal_fixed_points(params) + sp_fixed_points(params)
    if classify:
        fps = [classify_stability(fp, params) for fp in fps]
    return fps


@dataclass(frozen=True)
class StablePhase:
    stable: frozenset
    u0: bool
    label: str


def phase_label(stable: set, u0: bool) -> str:
    """Map a set of stable kinds ({"NPdown", "NPup", "SP"}) plus U0 reachability
    to the phase acronym."""
    down, up, sp = "NPdown" in stable, "NPup" in stable, "SP" in stable
    if u0:
        if down:
            return "Cdown"
        if up:
            return "Cup"
        return "U0"
    if sp and down:
        return "Bdown"
    if sp and up:
        return "Bup"
    if sp:
        return "SP"
    if down:
        return "NPdown"
    if up:
        return "NPup"
    return "none"


def stable_phase(params: ModelParams) -> StablePhase:
    """Stable-fixed-point phase of ``params``.

    Label ``none`` means no fixed point is stable and no localized point exists;
    the long-time dynamics there is oscillatory or chaotic.
    """
    stable = set()
    for fp in analytic_fixed_points(params):
        if fp.stability is Stability.STABLE:
            stable.add("SP" if fp.is_sp else fp.kind.value)
    u0 = bool(u0_fixed_points(params))
    return StablePhase(frozenset(stable), u0, phase_label(stable, u0))


def bisect_crossing(func, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Root of a sign change of ``func`` on ``[lo, hi]`` by bisection."""
    flo, fhi = func(lo), func(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = func(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def stability_crossing(kind: FixedPointKind, params: ModelParams, axis: str,
                       lo: float, hi: float, tol: float = 1e-12) -> float:
    """Parameter value on ``axis`` (``"g"`` or ``"lam"``) where the leading
    restricted eigenvalue of fixed point ``kind`` crosses zero.

    For SP this traces Hopf lines numerically; the SP state is recomputed at
    each trial value.
    """

    def f(v):
        p = params.with_(**{axis: v})
        if kind is FixedPointKind.NP_DOWN:
            st = MeanFieldState.np_down()
        elif kind is FixedPointKind.NP_UP:
            st = MeanFieldState.np_up()
        else:
            sps = {fp.kind: fp for fp in sp_fixed_points(p)}
            if kind not in sps:
                raise ValueError(f"{kind.value} does not exist at {axis}={v}")
            st = sps[kind].state
        return leading_real_part(st, p)

    return bisect_crossing(f, lo, hi, tol)


def residual(fp: FixedPoint, params: ModelParams) -> float:
    return float(np.linalg.norm(rhs(fp.state, params)))
