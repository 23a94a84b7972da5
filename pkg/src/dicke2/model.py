"""Mean-field flow of the dissipative anisotropic two-photon Dicke model.

The state vector is always ordered ``(x, y, n, sx, sy, sz)``:

* ``x = <a^2 + a^+2>`` and ``y = <i(a^2 - a^+2)>`` are the two-photon quadratures,
* ``n = <a^+ a>`` is the photon number,
* ``s = <2J>/N`` is the rescaled collective spin, living on the unit sphere.

Jacobian rows and columns use the same ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numba
import numpy as np

STATE_NAMES = ("x", "y", "n", "sx", "sy", "sz")

# Renormalization window at construction; anything further off is rejected.
NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters. All energies and rates share one unit (hbar = 1).

    ``omega_q`` is the single-qubit splitting; the collective frequency
    ``omega_z = n_qubits * omega_q`` is what enters the spin equations.
    """

    omega0: float = 1.0
    omega_q: float = 0.1
    g: float = 0.0
    lam: float = 1.0
    kappa: float = 1.0
    n_qubits: int = 1

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be > 0, got {self.omega0}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.g < 0:
            raise ValueError(f"g must be >= 0, got {self.g}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 1:
            raise ValueError(f"n_qubits must be a positive integer, got {self.n_qubits}")
        object.__setattr__(self, "n_qubits", int(self.n_qubits))
        for name in ("omega0", "omega_q", "g", "lam", "kappa"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def from_omega_z(cls, omega_z: float, n_qubits: int = 1, **kwargs) -> "ModelParams":
        """Build parameters from the collective frequency instead of ``omega_q``."""
        return cls(omega_q=omega_z / n_qubits, n_qubits=n_qubits, **kwargs)

    @property
    def omega_z(self) -> float:
        return self.n_qubits * self.omega_q

    def with_(self, **changes) -> "ModelParams":
        """Copy with some fields replaced. ``omega_z`` is accepted and kept fixed
        against a simultaneous change of ``n_qubits``."""
        if "omega_z" in changes:
            omega_z = changes.pop("omega_z")
            n = changes.get("n_qubits", self.n_qubits)
            changes["omega_q"] = omega_z / n
        return replace(self, **changes)

    def as_array(self) -> np.ndarray:
        """Packed form consumed by the compiled kernels."""
        return np.array(
            [self.omega0, self.omega_z, self.g, self.lam, self.kappa, float(self.n_qubits)]
        )

    def to_dict(self) -> dict:
        return {
            "omega0": self.omega0,
            "omega_q": self.omega_q,
            "omega_z": self.omega_z,
            "g": self.g,
            "lam": self.lam,
            "kappa": self.kappa,
            "n_qubits": self.n_qubits,
        }


@dataclass(frozen=True)
class MeanFieldState:
    x: float
    y: float
    n: float
    sx: float
    sy: float
    sz: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"photon number must be >= 0 at initialization, got {self.n}")
        norm = math.sqrt(self.sx**2 + self.sy**2 + self.sz**2)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"spin norm {norm!r} is not within {NORM_TOLERANCE} of 1")
        object.__setattr__(self, "sx", self.sx / norm)
        object.__setattr__(self, "sy", self.sy / norm)
        object.__setattr__(self, "sz", self.sz / norm)

    @classmethod
    def from_array(cls, arr) -> "MeanFieldState":
        a = np.asarray(arr, dtype=float)
        if a.shape != (6,):
            raise ValueError(f"expected a 6-vector, got shape {a.shape}")
        return cls(*(float(v) for v in a))

    @classmethod
    def from_spin(
        cls, sz: float, sx: float | None = None, sy: float = 0.0, *,
        n: float = 0.0, x: float = 0.0, y: float = 0.0, sx_sign: float = 1.0,
    ) -> "MeanFieldState":
        """Spin given by ``sz`` (and ``sy``); ``sx`` fills the unit norm unless given."""
        if sx is None:
            rest = 1.0 - sz * sz - sy * sy
            if rest < -NORM_TOLERANCE:
                raise ValueError("sz^2 + sy^2 exceeds 1")
            sx = math.copysign(math.sqrt(max(rest, 0.0)), sx_sign)
        return cls(x, y, n, sx, sy, sz)

    @classmethod
    def from_bloch(cls, theta: float, phi: float, *, n=0.0, x=0.0, y=0.0) -> "MeanFieldState":
        """Polar angle ``theta`` measured from +z."""
        st = math.sin(theta)
        return cls(x, y, n, st * math.cos(phi), st * math.sin(phi), math.cos(theta))

    @classmethod
    def np_down(cls) -> "MeanFieldState":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, -1.0)

    @classmethod
    def np_up(cls) -> "MeanFieldState":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 1.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.n, self.sx, self.sy, self.sz])

    @property
    def spin_norm(self) -> float:
        return math.sqrt(self.sx**2 + self.sy**2 + self.sz**2)


# -- compiled kernels (p = [omega0, omega_z, g, lam, kappa, N]) --------------------


@numba.njit(cache=True)
def rhs_kernel(s, p, out):
    w0, wz, g, lam, k, N = p[0], p[1], p[2], p[3], p[4], p[5]
    x, y, n, sx, sy, sz = s[0], s[1], s[2], s[3], s[4], s[5]
    gp = g * (1.0 + lam)
    gm = g * (1.0 - lam)
    m = 2.0 * n + 1.0
    out[0] = -2.0 * k * x - 2.0 * w0 * y - 2.0 * gm * m * sy
    out[1] = -2.0 * k * y + 2.0 * w0 * x + 2.0 * gp * m * sx
    out[2] = -2.0 * k * n + gp * y * sx - gm * x * sy
    out[3] = (-wz * sy + gm * y * sz) / N
    out[4] = (wz * sx - gp * x * sz) / N
    out[5] = (gp * x * sy - gm * sx * y) / N


@numba.njit(cache=True)
def jacobian_kernel(s, p, J):
    w0, wz, g, lam, k, N = p[0], p[1], p[2], p[3], p[4], p[5]
    x, y, n, sx, sy, sz = s[0], s[1], s[2], s[3], s[4], s[5]
    gp = g * (1.0 + lam)
    gm = g * (1.0 - lam)
    m = 2.0 * n + 1.0
    J[:, :] = 0.0
    J[0, 0] = -2.0 * k
    J[0, 1] = -2.0 * w0
    J[0, 2] = -4.0 * gm * sy
    J[0, 4] = -2.0 * gm * m
    J[1, 0] = 2.0 * w0
    J[1, 1] = -2.0 * k
    J[1, 2] = 4.0 * gp * sx
    J[1, 3] = 2.0 * gp * m
    J[2, 0] = -gm * sy
    J[2, 1] = gp * sx
    J[2, 2] = -2.0 * k
    J[2, 3] = gp * y
    J[2, 4] = -gm * x
    J[3, 1] = gm * sz / N
    J[3, 4] = -wz / N
    J[3, 5] = gm * y / N
    J[4, 0] = -gp * sz / N
    J[4, 3] = wz / N
    J[4, 5] = -gp * x / N
    J[5, 0] = gp * sy / N
    J[5, 1] = -gm * sx / N
    J[5, 3] = -gm * y / N
    J[5, 4] = gp * x / N


def _as_vec(state) -> np.ndarray:
    if isinstance(state, MeanFieldState):
        return state.as_array()
    return np.ascontiguousarray(state, dtype=float)


def rhs(state, params: ModelParams) -> np.ndarray:
    """Time derivative of ``(x, y, n, sx, sy, sz)``.

    ``state`` may be a :class:`MeanFieldState` or a raw 6-vector; raw vectors are
    not validated, which lets callers evaluate the field off the sphere.
    """
    out = np.empty(6)
    rhs_kernel(_as_vec(state), params.as_array(), out)
    return out


def jacobian(state, params: ModelParams) -> np.ndarray:
    """Analytic 6x6 Jacobian ``d rhs_i / d state_j``."""
    J = np.empty((6, 6))
    jacobian_kernel(_as_vec(state), params.as_array(), J)
    return J


_PARITY = np.array([-1.0, -1.0, 1.0, -1.0, -1.0, 1.0])


def parity_transform(state):
    """Apply the discrete symmetry ``(x, y, n, sx, sy, sz) -> (-x, -y, n, -sx, -sy, sz)``.

    Returns the same type it was given.
    """
    if isinstance(state, MeanFieldState):
        return MeanFieldState.from_array(_PARITY * state.as_array())
    return _PARITY * np.asarray(state, dtype=float)
