"""Projective Euler and Projective Andoyer charts on T*H_0.

Also the classical spherical chart of T*R^3_0 and the planar polar chart,
which close the commutative diagrams against the KS map.

Angle conventions: ``phi`` is reduced to ``[0, 2pi)`` and ``psi`` to
``[0, 4pi)``.  The half-angles ``(phi +- psi)/2`` enter the quaternion, so a
``2pi`` range for both angles only reaches half of the 3-sphere (``q`` and
``-q`` would share coordinates).
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields
from typing import NamedTuple

import numpy as np

from . import quat as Q
from .errors import DomainError

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi


class _Record:
    """Fixed-order float record that round-trips through arrays and dicts."""

    columns: tuple[str, ...] = ()

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=float)
        if a.shape != (len(fields(cls)),):
            raise ValueError(f"{cls.__name__} needs {len(fields(cls))} values, got shape {a.shape}")
        return cls(*(float(v) for v in a))

    def to_dict(self) -> dict:
        return dict(zip(self.columns, astuple(self)))

    @classmethod
    def from_dict(cls, d: dict):
        return cls(*(float(d[c]) for c in cls.columns))


@dataclass(frozen=True)
class EulerChart(_Record):
    rho: float
    phi: float
    theta: float
    psi: float
    P: float
    Phi: float
    Theta: float
    Psi: float

    columns = ("rho", "phi", "theta", "psi", "P", "Phi", "Theta", "Psi")


@dataclass(frozen=True)
class AndoyerChart(_Record):
    rho: float
    lam: float
    mu_angle: float
    nu: float
    P: float
    Lambda: float
    M: float
    N: float

    columns = ("rho", "lambda", "mu", "nu", "P", "Lambda", "M", "N")


@dataclass(frozen=True)
class SphericalChart(_Record):
    rho: float
    theta: float
    phi: float
    P: float
    Theta: float
    Phi: float

    columns = ("rho", "theta", "phi", "P", "Theta", "Phi")


EULER_COLUMNS = EulerChart.columns
ANDOYER_COLUMNS = AndoyerChart.columns
SPHERICAL_COLUMNS = SphericalChart.columns


class PhasePoint6(NamedTuple):
    x: np.ndarray
    y: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


class PhasePoint4(NamedTuple):
    x: np.ndarray
    y: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


# ---------------------------------------------------------------- Euler chart


def _euler_q_and_jacobian(rho, phi, theta, psi):
    r = np.sqrt(rho)
    a = 0.5 * (phi + psi)
    b = 0.5 * (phi - psi)
    c, s = np.cos(0.5 * theta), np.sin(0.5 * theta)
    sa, ca, sb, cb = np.sin(a), np.cos(a), np.sin(b), np.cos(b)
    q = np.array([r * c * sa, r * s * cb, r * s * sb, r * c * ca])
    h = 0.5 * r
    # columns: d/drho, d/dphi, d/dtheta, d/dpsi
    jac = np.array([
        [q[0] / (2 * rho), h * c * ca, -h * s * sa, h * c * ca],
        [q[1] / (2 * rho), -h * s * sb, h * c * cb, h * s * sb],
        [q[2] / (2 * rho), h * s * cb, h * c * sb, -h * s * cb],
        [q[3] / (2 * rho), -h * c * sa, -h * s * ca, -h * c * sa],
    ])
    return q, jac


def euler_to_phase_array(a) -> np.ndarray:
    """Unchecked array form of :func:`euler_to_phase` (complex-step safe)."""
    rho, phi, theta, psi, P, Phi, Theta, Psi = a
    q, jac = _euler_q_and_jacobian(rho, phi, theta, psi)
    p = np.linalg.solve(jac.T, np.array([P, Phi, Theta, Psi]))
    return np.concatenate([q, p])


def euler_to_phase(c: EulerChart) -> np.ndarray:
    """Projective Euler chart to ``(q, p)``.

    ``p`` is the cotangent lift: the solution of ``(dq/dchart)^T p = momenta``.
    """
    if not c.rho > 0:
        raise DomainError(f"rho must be positive, got {c.rho}", coordinate="rho")
    if abs(math.sin(c.theta)) < 1e-13:
        raise DomainError("Euler chart is singular at sin(theta) = 0", coordinate="theta")
    return euler_to_phase_array(c.as_array())


def euler_delta(q) -> float:
    q = np.asarray(q, dtype=float)
    return math.sqrt((q[0] ** 2 + q[3] ** 2) * (q[1] ** 2 + q[2] ** 2))


def phase_to_euler(z) -> EulerChart:
    """Inverse of :func:`euler_to_phase` off the manifolds ``q1=q4=0``, ``q2=q3=0``."""
    z = np.asarray(z, dtype=float)
    q, p = z[:4], z[4:]
    q1, q2, q3, q4 = q
    p1, p2, p3, p4 = p
    rho = float(q @ q)
    delta = euler_delta(q)
    if not delta >= 1e-13 * rho or rho == 0.0:
        raise DomainError("point lies on an Euler exclusion manifold (Delta = 0)", coordinate="q")
    theta = math.atan2(2.0 * delta, q1 * q1 - q2 * q2 - q3 * q3 + q4 * q4)
    half_sum = math.atan2(q1, q4)  # (phi + psi) / 2
    half_diff = math.atan2(q3, q2)  # (phi - psi) / 2
    phi = half_sum + half_diff
    psi = half_sum - half_diff
    turns = math.floor(phi / TWO_PI)
    phi -= turns * TWO_PI
    psi = (psi - turns * TWO_PI) % FOUR_PI

    n14 = q1 * q1 + q4 * q4
    n23 = q2 * q2 + q3 * q3
    P = float(q @ p) / (2.0 * rho)
    Theta = ((q2 * p2 + q3 * p3) * n14 - (q1 * p1 + q4 * p4) * n23) / (2.0 * delta)
    Phi = 0.5 * (p1 * q4 - p4 * q1 + p3 * q2 - p2 * q3)
    Psi = 0.5 * (p1 * q4 - p4 * q1 + p2 * q3 - p3 * q2)
    return EulerChart(rho, phi, theta, psi, P, Phi, Theta, Psi)


def printed_theta_momentum(z) -> float:
    """The legacy Theta formula, kept for comparison only.

    It pairs ``q1 p4 + q4 p1`` where the cotangent lift needs ``q1 p1 + q4 p4``
    and does not invert :func:`euler_to_phase`.
    """
    q1, q2, q3, q4, p1, p2, p3, p4 = np.asarray(z, dtype=float)
    delta = euler_delta([q1, q2, q3, q4])
    return ((q1 * p4 + q4 * p1) * (q3 ** 2 + q2 ** 2) - (q2 * p3 + q3 * p2) * (q1 ** 2 + q4 ** 2)) / (2.0 * delta)


def euler_sincos(z) -> dict[str, tuple[float, float]]:
    """The (sin, cos) pairs of theta, phi, psi read directly off ``q``."""
    q1, q2, q3, q4 = np.asarray(z, dtype=float)[:4]
    rho = q1 * q1 + q2 * q2 + q3 * q3 + q4 * q4
    d = euler_delta([q1, q2, q3, q4])
    return {
        "theta": (2.0 * d / rho, (q1 * q1 - q2 * q2 - q3 * q3 + q4 * q4) / rho),
        "phi": ((q1 * q2 + q3 * q4) / d, (q2 * q4 - q1 * q3) / d),
        "psi": ((q1 * q2 - q3 * q4) / d, (q2 * q4 + q1 * q3) / d),
    }


def project_euler(c: EulerChart) -> SphericalChart:
    """Drop ``(psi, Psi)``: the projection onto the spherical chart."""
    return SphericalChart(c.rho, c.theta, c.phi, c.P, c.Theta, c.Phi)


# ------------------------------------------------------------ spherical/polar


def spherical_to_cartesian(c: SphericalChart) -> PhasePoint6:
    if not c.rho > 0:
        raise DomainError(f"rho must be positive, got {c.rho}", coordinate="rho")
    st, ct = math.sin(c.theta), math.cos(c.theta)
    if abs(st) < 1e-13:
        raise DomainError("spherical chart is singular at sin(theta) = 0", coordinate="theta")
    sp, cp = math.sin(c.phi), math.cos(c.phi)
    rho, P, Th, Ph = c.rho, c.P, c.Theta, c.Phi
    x = np.array([rho * st * cp, rho * st * sp, rho * ct])
    k = 1.0 / (2.0 * rho * st)
    radial = Th * math.sin(2.0 * c.theta) + 2.0 * P * rho * st * st
    y = np.array([
        k * (cp * radial - 2.0 * Ph * sp),
        k * (sp * radial + 2.0 * Ph * cp),
        P * ct - Th * st / rho,
    ])
    return PhasePoint6(x, y)


def cartesian_to_spherical(pt: PhasePoint6) -> SphericalChart:
    x = np.asarray(pt.x, dtype=float)
    y = np.asarray(pt.y, dtype=float)
    rho = float(np.linalg.norm(x))
    planar = math.hypot(x[0], x[1])
    if rho == 0.0 or planar <= 1e-13 * rho:
        raise DomainError("point lies on the polar axis x1 = x2 = 0", coordinate="x")
    theta = math.atan2(planar, x[2])
    phi = math.atan2(x[1], x[0]) % TWO_PI
    P = float(x @ y) / rho
    ct, st = x[2] / rho, planar / rho
    Theta = rho * (ct * (x[0] * y[0] + x[1] * y[1]) / planar - st * y[2])
    Phi = x[0] * y[1] - x[1] * y[0]
    return SphericalChart(rho, theta, phi, P, Theta, Phi)


def polar_to_cartesian2(rho: float, mu_angle: float, P: float, M: float) -> PhasePoint4:
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}", coordinate="rho")
    u = np.array([math.cos(mu_angle), math.sin(mu_angle)])
    n = np.array([-u[1], u[0]])
    return PhasePoint4(rho * u, P * u + (M / rho) * n)


# -------------------------------------------------------------- Andoyer chart

ANDOYER_CONVENTIONS = ("printed", "calibrated")

# Candidates swept by calibrate_andoyer(); the winner is frozen below.
PREFACTORS = {
    "1/(4rho^2)": lambda rho: 1.0 / (4.0 * rho * rho),
    "1/(2rho)": lambda rho: 1.0 / (2.0 * rho),
    "1/rho": lambda rho: 1.0 / rho,
}
W1_CHOICES = {
    "rho*P": lambda rho, P: rho * P,
    "2*rho*P": lambda rho, P: 2.0 * rho * P,
}
CALIBRATED_PREFACTOR = "1/rho"
CALIBRATED_W1 = "2*rho*P"


def _check_andoyer(c: AndoyerChart):
    if not c.rho > 0:
        raise DomainError(f"rho must be positive, got {c.rho}", coordinate="rho")
    if not c.M > 0:
        raise DomainError("Andoyer chart is undefined for M <= 0 (rectilinear motion)", coordinate="M")
    if abs(c.N) > c.M:
        raise DomainError("|N| must not exceed M", coordinate="N")
    if abs(c.Lambda) > c.M:
        raise DomainError("|Lambda| must not exceed M", coordinate="Lambda")


def andoyer_w(c: AndoyerChart, w1: float) -> np.ndarray:
    """``(w1, 2 sqrt(M^2-N^2) sin nu, 2 sqrt(M^2-N^2) cos nu, 2N)``."""
    t = 2.0 * math.sqrt(max(c.M * c.M - c.N * c.N, 0.0))
    return np.array([w1, t * math.sin(c.nu), t * math.cos(c.nu), 2.0 * c.N])


def _rotor_chain(a, half: bool) -> np.ndarray:
    rho, lam, mu, nu, _, Lambda, M, N = a
    inc_i = np.arccos(Lambda / M)
    inc_j = np.arccos(N / M)
    f = 0.5 if half else 1.0
    u = Q.rotor("k", f * nu)
    for axis, angle in (("i", inc_j), ("k", mu), ("i", inc_i), ("k", lam)):
        u = Q.mul(u, Q.rotor(axis, f * angle))
    return np.sqrt(rho) * u


def andoyer_printed_structure(c: AndoyerChart, prefactor: str, w1: str) -> np.ndarray:
    """``q`` from the full-angle rotor chain and ``p = f(rho) q w*``."""
    _check_andoyer(c)
    q = _rotor_chain(c.as_array(), half=False)
    w = andoyer_w(c, W1_CHOICES[w1](c.rho, c.P))
    p = PREFACTORS[prefactor](c.rho) * Q.mul(q, Q.conj(w))
    return np.concatenate([q, p])


def andoyer_calibrated_array(a) -> np.ndarray:
    """Unchecked array form of the calibrated chart (complex-step safe)."""
    rho, lam, mu, nu, P, Lambda, M, N = a
    q = _rotor_chain(a, half=True)
    s = 2.0 * np.sqrt(M * M - N * N)
    w = np.array([W1_CHOICES[CALIBRATED_W1](rho, P), s * np.sin(nu), -s * np.cos(nu), 2.0 * N])
    p = PREFACTORS[CALIBRATED_PREFACTOR](rho) * Q.mul(w, q)
    return np.concatenate([q, p])


def andoyer_printed_array(a) -> np.ndarray:
    rho, lam, mu, nu, P, Lambda, M, N = a
    q = _rotor_chain(a, half=False)
    t = 2.0 * np.sqrt(M * M - N * N)
    w = np.array([W1_CHOICES["rho*P"](rho, P), t * np.sin(nu), t * np.cos(nu), 2.0 * N])
    p = PREFACTORS["1/(4rho^2)"](rho) * Q.mul(q, Q.conj(w))
    return np.concatenate([q, p])


def andoyer_to_phase(c: AndoyerChart, convention: str = "calibrated") -> np.ndarray:
    """Projective Andoyer chart to ``(q, p)``.

    ``printed`` is the legacy formula verbatim.  ``calibrated`` is the
    canonical version: the rotor angles are halved (each rotor then turns
    vectors by the full Andoyer angle) and the momentum is ``p = w q / rho``
    with the space-frame vector ``w = (2 rho P, S)``, where
    ``S = 2M (sin J sin nu, -sin J cos nu, cos J)``.  On this chart
    ``sum p dq = P drho + Lambda dlambda + M dmu + N dnu``, the centralizer
    equals ``M`` and ``|p|^2 = 4 rho P^2 + 4 M^2 / rho``.
    """
    if convention not in ANDOYER_CONVENTIONS:
        raise ValueError(f"unknown Andoyer convention {convention!r}")
    _check_andoyer(c)
    if convention == "printed":
        return andoyer_printed_array(c.as_array())
    return andoyer_calibrated_array(c.as_array())
