"""Hamiltonians of the oscillator/Kepler correspondence and their fields.

States are flat arrays: positions first, then conjugate momenta, in the
order given by :data:`STATE_LABELS`.  ``ham_field`` returns
``(dH/dmomenta, -dH/dpositions)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError
from .observables import numeric_gradient

STATE_LABELS = {
    "osc4": ("q1", "q2", "q3", "q4", "p1", "p2", "p3", "p4"),
    "kepler3": ("x1", "x2", "x3", "y1", "y2", "y3"),
    "kepler2": ("x1", "x2", "y1", "y2"),
    "aux_kepler2": ("x1", "x2", "y1", "y2"),
    "euler_osc": ("rho", "phi", "theta", "psi", "P", "Phi", "Theta", "Psi"),
    "euler_separable": ("rho", "phi", "theta", "psi", "P", "Phi", "Theta", "Psi"),
    "euler_separable_rho": ("rho", "P"),
    "euler_separable_theta": ("phi", "theta", "psi", "Phi", "Theta", "Psi"),
    "euler_regularized": ("rho", "phi", "theta", "psi", "P", "Phi", "Theta", "Psi"),
    "kepler_spherical": ("rho", "theta", "phi", "P", "Theta", "Phi"),
    "andoyer_regularized": ("rho", "lambda", "mu", "nu", "P", "Lambda", "M", "N"),
}
KINDS = tuple(STATE_LABELS)

MIN_SIN_THETA = 1e-8


@dataclass(frozen=True)
class HamiltonianSpec:
    """Immutable description of one Hamiltonian.

    ``gamma`` is always ``h / 4`` and cannot be set independently.
    """

    kind: str
    omega: float = 1.0
    grav_param: float = 1.0
    h: float = 0.0

    def __post_init__(self):
        if self.kind not in STATE_LABELS:
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}")
        for name in ("omega", "grav_param", "h"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.omega < 0:
            raise ValueError("omega must be >= 0")
        if not self.grav_param > 0:
            raise ValueError("grav_param must be > 0")
        if self.kind == "aux_kepler2" and self.h == 0:
            raise ValueError("aux_kepler2 needs h != 0")

    @property
    def gamma(self) -> float:
        return self.h / 4.0

    @property
    def dim(self) -> int:
        return len(STATE_LABELS[self.kind])

    @property
    def labels(self) -> tuple[str, ...]:
        return STATE_LABELS[self.kind]

    def split(self) -> tuple["HamiltonianSpec", "HamiltonianSpec"]:
        """The two 1-DOF pieces of an ``euler_separable`` Hamiltonian."""
        if self.kind != "euler_separable":
            raise ValueError("only euler_separable splits")
        return replace(self, kind="euler_separable_rho"), replace(self, kind="euler_separable_theta")

    @classmethod
    def from_dict(cls, d: dict) -> "HamiltonianSpec":
        keys = {"kind", "omega", "grav_param", "h"}
        return cls(**{k: (v if k == "kind" else float(v)) for k, v in d.items() if k in keys})


def _state(spec: HamiltonianSpec, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape != (spec.dim,):
        raise ValueError(f"{spec.kind} state needs {spec.dim} components, got shape {s.shape}")
    return s


def _positive(value: float, name: str):
    if not value > 0:
        raise DomainError(f"{name} must be positive, got {value}", coordinate=name)


def _sin_theta(theta: float) -> float:
    st = math.sin(theta)
    if abs(st) < MIN_SIN_THETA:
        raise DomainError(f"sin(theta) = {st:.3g} is below {MIN_SIN_THETA}", coordinate="theta")
    return st


def _rotor_term(theta, Phi, Psi):
    """``G = (Phi^2 + Psi^2 - 2 Phi Psi cos(theta)) / sin(theta)^2`` and its partials."""
    st = _sin_theta(theta)
    ct = math.cos(theta)
    w = Phi * Phi + Psi * Psi - 2.0 * Phi * Psi * ct
    g = w / (st * st)
    g_theta = 2.0 * Phi * Psi / st - 2.0 * w * ct / st ** 3
    g_Phi = 2.0 * (Phi - Psi * ct) / (st * st)
    g_Psi = 2.0 * (Psi - Phi * ct) / (st * st)
    return g, g_theta, g_Phi, g_Psi


def _value_and_grad(spec: HamiltonianSpec, s: np.ndarray):
    k = spec.kind
    grad = np.zeros_like(s)

    if k == "osc4":
        q, p = s[:4], s[4:]
        val = 0.5 * (p @ p + spec.omega * (q @ q))
        grad[:4] = spec.omega * q
        grad[4:] = p
        return val, grad

    if k in ("kepler3", "kepler2"):
        n = spec.dim // 2
        x, y = s[:n], s[n:]
        r = float(np.linalg.norm(x))
        _positive(r, "|x|")
        mu = spec.grav_param
        val = 0.5 * (y @ y) - mu / r
        grad[:n] = mu * x / r ** 3
        grad[n:] = y
        return val, grad

    if k == "aux_kepler2":
        x, y = s[:2], s[2:]
        r = float(np.linalg.norm(x))
        _positive(r, "|x|")
        mu, h = spec.grav_param, spec.h
        kep = 0.5 * (y @ y) - mu / r
        val = (r / h) * (kep + 2.0 * h * h) + mu / h
        grad[:2] = (x / r) / h * (kep + 2.0 * h * h) + (r / h) * mu * x / r ** 3
        grad[2:] = (r / h) * y
        return val, grad

    if k in ("euler_osc", "euler_separable", "euler_regularized"):
        rho, _, theta, _, P, Phi, Theta, Psi = s
        _positive(rho, "rho")
        g, g_th, g_Ph, g_Ps = _rotor_term(theta, Phi, Psi)
        om, h = spec.omega, spec.h
        if k == "euler_osc":
            ang = Theta * Theta + g
            val = rho * om / 2 + 2 * rho * P * P + 2 / rho * ang
            grad[:] = [om / 2 + 2 * P * P - 2 * ang / rho ** 2, 0.0, 2 / rho * g_th, 0.0,
                       4 * rho * P, 2 / rho * g_Ph, 4 * Theta / rho, 2 / rho * g_Ps]
        elif k == "euler_separable":
            val = om * rho ** 2 / 8 + rho ** 2 * P * P / 2 - h * rho / 4 + 0.5 * (Theta * Theta + g)
            grad[:] = [om * rho / 4 + rho * P * P - h / 4, 0.0, 0.5 * g_th, 0.0,
                       rho ** 2 * P, 0.5 * g_Ph, Theta, 0.5 * g_Ps]
        else:
            ang = Theta * Theta + g
            val = 0.5 * (P * P + ang / rho ** 2) - h / (4 * rho)
            grad[:] = [-ang / rho ** 3 + h / (4 * rho ** 2), 0.0, g_th / (2 * rho ** 2), 0.0,
                       P, g_Ph / (2 * rho ** 2), Theta / rho ** 2, g_Ps / (2 * rho ** 2)]
        return val, grad

    if k == "euler_separable_rho":
        rho, P = s
        om, h = spec.omega, spec.h
        val = om * rho ** 2 / 8 + rho ** 2 * P * P / 2 - h * rho / 4
        grad[:] = [om * rho / 4 + rho * P * P - h / 4, rho ** 2 * P]
        return val, grad

    if k == "euler_separable_theta":
        _, theta, _, Phi, Theta, Psi = s
        g, g_th, g_Ph, g_Ps = _rotor_term(theta, Phi, Psi)
        val = 0.5 * (Theta * Theta + g)
        grad[:] = [0.0, 0.5 * g_th, 0.0, 0.5 * g_Ph, Theta, 0.5 * g_Ps]
        return val, grad

    if k == "kepler_spherical":
        rho, theta, _, P, Theta, Phi = s
        _positive(rho, "rho")
        st = _sin_theta(theta)
        ct = math.cos(theta)
        gam = spec.gamma
        val = 0.5 * (P * P + Theta * Theta / rho ** 2 + Phi * Phi / (rho * st) ** 2) - gam / rho
        grad[:] = [-(Theta * Theta + Phi * Phi / st ** 2) / rho ** 3 + gam / rho ** 2,
                   -Phi * Phi * ct / (rho ** 2 * st ** 3), 0.0,
                   P, Theta / rho ** 2, Phi / (rho * st) ** 2]
        return val, grad

    if k == "andoyer_regularized":
        rho, _, _, _, P, _, M, _ = s
        _positive(rho, "rho")
        gam = spec.gamma
        val = 0.5 * (P * P + M * M / rho ** 2) - gam / rho
        grad[:] = [-M * M / rho ** 3 + gam / rho ** 2, 0, 0, 0, P, 0, M / rho ** 2, 0]
        return val, grad

    raise ValueError(f"unknown Hamiltonian kind {k!r}")


def ham_value(spec: HamiltonianSpec, s) -> float:
    return float(_value_and_grad(spec, _state(spec, s))[0])


def ham_gradient(spec: HamiltonianSpec, s) -> np.ndarray:
    return _value_and_grad(spec, _state(spec, s))[1]


def _symplectic(spec: HamiltonianSpec, grad: np.ndarray) -> np.ndarray:
    n = spec.dim // 2
    return np.concatenate([grad[n:], -grad[:n]])


def ham_field(spec: HamiltonianSpec, s) -> np.ndarray:
    """Canonical equations from the analytic gradient."""
    return _symplectic(spec, ham_gradient(spec, s))


def ham_field_fd(spec: HamiltonianSpec, s) -> np.ndarray:
    """Same field from central differences, for cross-checking."""
    s = _state(spec, s)
    return _symplectic(spec, numeric_gradient(lambda v: ham_value(spec, v), s))


REGULARIZATION_MODES = ("poincare_rho_over_4", "poincare_inv_4rho")


def regularize(spec: HamiltonianSpec, mode: str, h: float) -> HamiltonianSpec:
    """Fix the oscillator energy ``h`` and rescale time.

    ``poincare_rho_over_4`` gives ``(rho/4)(H - h)``, which separates into
    ``K_rho + K_theta`` (use :meth:`HamiltonianSpec.split`).
    ``poincare_inv_4rho`` gives the Kepler-like Hamiltonian whose value on
    the ``H = h`` level is ``-omega/8``.
    """
    if spec.kind not in ("euler_osc", "osc4"):
        raise ValueError(f"can only regularize the oscillator, got {spec.kind!r}")
    if mode == "poincare_rho_over_4":
        return replace(spec, kind="euler_separable", h=float(h))
    if mode == "poincare_inv_4rho":
        return replace(spec, kind="euler_regularized", h=float(h))
    raise ValueError(f"unknown regularization mode {mode!r}")


def ring_term(s) -> float:
    """``(Psi^2 - 2 Phi Psi cos(theta)) / (2 rho^2 sin(theta)^2)`` on an Euler state."""
    rho, _, theta, _, _, Phi, _, Psi = np.asarray(s, dtype=float)
    st = _sin_theta(theta)
    return (Psi * Psi - 2 * Phi * Psi * math.cos(theta)) / (2 * rho ** 2 * st ** 2)


def euler_to_spherical_state(s) -> np.ndarray:
    """Reorder an Euler state into the ``kepler_spherical`` state (drops psi, Psi)."""
    rho, phi, theta, _, P, Phi, Theta, _ = np.asarray(s, dtype=float)
    return np.array([rho, theta, phi, P, Theta, Phi])


def quadratures(spec: HamiltonianSpec, trajectory, drift_tol: float = 1e-8):
    """Recover ``phi`` and ``psi`` by trapezoidal quadrature along a trajectory.

    Integrates ``dH/dPhi`` and ``dH/dPsi`` over the trajectory's integration
    variable, starting from the initial angles.
    """
    if spec.kind not in ("euler_osc", "euler_separable", "euler_regularized"):
        raise ValueError(f"quadratures need an Euler-chart Hamiltonian, got {spec.kind!r}")
    states = np.asarray(trajectory.states)[:, : spec.dim]
    s = np.asarray(trajectory.s)
    for idx, name in ((5, "Phi"), (7, "Psi")):
        drift = float(np.max(np.abs(states[:, idx] - states[0, idx])))
        if drift > drift_tol:
            raise ValueError(f"{name} drifts by {drift:.3g} > {drift_tol}")
    grads = np.array([ham_gradient(spec, st) for st in states])
    phi = states[0, 1] + cumulative_trapezoid(grads[:, 5], s, initial=0.0)
    psi = states[0, 3] + cumulative_trapezoid(grads[:, 7], s, initial=0.0)
    return phi, psi
