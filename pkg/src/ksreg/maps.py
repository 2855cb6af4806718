"""Levi-Civita and Kustaanheimo-Stiefel maps and the two circle actions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import quat as Q
from .errors import DomainError


@dataclass(frozen=True)
class DefiningVector:
    """Unit pure quaternion ``sign * axis`` inserted in ``q* (.) q``.

    ``permuted=True`` selects the matrix-form definition of 1965, which
    differs from the quaternion one by swapping components 1 and 4 of both
    ``q`` and ``p`` before the product is taken.
    """

    sign: int = 1
    axis: str = "k"
    permuted: bool = False

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.axis not in Q.AXES:
            raise ValueError(f"axis must be one of i, j, k, got {self.axis!r}")

    @property
    def quat(self) -> np.ndarray:
        return self.sign * Q.AXES[self.axis]

    @classmethod
    def parse(cls, text: str) -> "DefiningVector":
        """Accepts ``+k``, ``-i``, ``j`` and ``ks1965``."""
        t = text.strip().lower()
        if t == "ks1965":
            return cls(1, "k", permuted=True)
        sign = -1 if t.startswith("-") else 1
        axis = t.lstrip("+-")
        return cls(sign, axis)

    def __str__(self) -> str:
        if self.permuted:
            return "ks1965"
        return ("+" if self.sign > 0 else "-") + self.axis


PLUS_K = DefiningVector()
KS1965 = DefiningVector(permuted=True)
ALL_DEFINING_VECTORS = tuple(DefiningVector(s, a) for a in "ijk" for s in (1, -1))

# Multipliers m of x = q m q in the complex plane.
LC_VARIANTS = (1.0 + 0j, -1.0 + 0j, 1j, -1j)


class KSImage(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    real_defect: np.ndarray | float


_SWAP14 = np.array([3, 1, 2, 0])


def _swap14(a: np.ndarray) -> np.ndarray:
    return a[..., _SWAP14]


def _check_q(q: np.ndarray, name: str = "q") -> np.ndarray:
    n2 = Q.norm2(q)
    if np.any(n2 == 0.0) or not np.all(np.isfinite(q)):
        raise DomainError(f"{name} must be nonzero and finite", coordinate=name)
    return n2


def lc_map_array(a, variant: complex = 1.0) -> np.ndarray:
    """Unchecked ``(q1, q2, p1, p2) -> (x1, x2, y1, y2)`` in real arithmetic."""
    mr, mi = complex(variant).real, complex(variant).imag
    q1, q2, p1, p2 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    n2 = q1 * q1 + q2 * q2
    s1, s2 = q1 * q1 - q2 * q2, 2.0 * q1 * q2  # q^2
    x1, x2 = mr * s1 - mi * s2, mr * s2 + mi * s1
    u1, u2 = p1 * mr - p2 * mi, p1 * mi + p2 * mr  # p m
    y1 = (u1 * q1 - u2 * q2) / (2.0 * n2)
    y2 = (u1 * q2 + u2 * q1) / (2.0 * n2)
    return np.stack([x1, x2, y1, y2], axis=-1)


def lc_map(q2, p2, variant: complex = 1.0):
    """Levi-Civita map ``x = m q^2`` lifted by ``p.dq = y.dx``.

    ``q2``, ``p2`` are real 2-vectors (or ``(..., 2)`` arrays); ``variant`` is
    the multiplier ``m``, one of ``1, -1, 1j, -1j``.  The lift is
    ``y = p m q / (2|q|^2)`` in complex arithmetic.
    """
    if complex(variant) not in LC_VARIANTS:
        raise ValueError(f"LC variant must be one of {LC_VARIANTS}, got {variant!r}")
    q2 = np.asarray(q2, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if np.any(np.sum(q2 * q2, axis=-1) == 0.0):
        raise DomainError("Levi-Civita lift is undefined at q = 0", coordinate="q")
    out = lc_map_array(np.concatenate([q2, p2], axis=-1), variant)
    return out[..., :2], out[..., 2:]


def ks_point(q, dv: DefiningVector = PLUS_K) -> np.ndarray:
    """``q* v q`` as a quaternion; the scalar part vanishes analytically."""
    q = np.asarray(q, dtype=float)
    _check_q(q)
    if dv.permuted:
        q = _swap14(q)
    return Q.sandwich(Q.conj(q), dv.quat, q)


def ks_map(z, dv: DefiningVector = PLUS_K) -> KSImage:
    """KS map ``(q, p) -> (q* v q, q* v p / 2|q|^2)``.

    The scalar part of the momentum quaternion is returned as
    ``real_defect`` instead of being dropped; for ``+k`` it equals
    ``Xi0 / (2|q|^2)`` and vanishes exactly on the twin-bilinear constraint.
    """
    z = np.asarray(z, dtype=float)
    q, p = z[..., :4], z[..., 4:]
    n2 = _check_q(q)
    if dv.permuted:
        q, p = _swap14(q), _swap14(p)
    v = dv.quat
    qs = Q.conj(q)
    xq = Q.sandwich(qs, v, q)
    yq = Q.sandwich(qs, v, p) / (2.0 * n2)[..., None]
    return KSImage(xq[..., 1:], yq[..., 1:], yq[..., 0])


def ks_jacobian(z, dv: DefiningVector = PLUS_K) -> np.ndarray:
    """Exact ``(6, 8)`` Jacobian of ``(x, y)`` with respect to ``(q, p)``."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        return np.stack([ks_jacobian(zi, dv) for zi in z.reshape(-1, 8)]).reshape(z.shape[:-1] + (6, 8))
    q, p = z[:4], z[4:]
    n2 = _check_q(q)
    perm = _SWAP14 if dv.permuted else np.arange(4)
    q, p = q[perm], p[perm]
    v = dv.quat
    qs = Q.conj(q)
    yq = Q.sandwich(qs, v, p) / (2.0 * n2)
    jac = np.zeros((6, 8))
    for m in range(4):
        e = np.zeros(4)
        e[m] = 1.0
        dx = Q.sandwich(Q.conj(e), v, q) + Q.sandwich(qs, v, e)
        dy_q = Q.sandwich(Q.conj(e), v, p) / (2.0 * n2) - yq * (2.0 * q[m] / n2)
        dy_p = Q.sandwich(qs, v, e) / (2.0 * n2)
        col = perm[m]
        jac[:3, col] = dx[1:]
        jac[3:, col] = dy_q[1:]
        jac[3:, 4 + col] = dy_p[1:]
    return jac


def chi_matrix(which: int, alpha: float) -> np.ndarray:
    """Rotation matrix of the circle action ``chi_0`` or ``chi_1``."""
    c, s = np.cos(alpha), np.sin(alpha)
    if which == 0:
        return np.array([[c, 0, 0, -s], [0, c, -s, 0], [0, s, c, 0], [s, 0, 0, c]])
    if which == 1:
        return np.array([[c, 0, 0, -s], [0, c, s, 0], [0, -s, c, 0], [s, 0, 0, c]])
    raise ValueError("which must be 0 or 1")


def chi_action(which: int, alpha: float, z) -> np.ndarray:
    """Apply the same rotation to ``q`` and ``p``.

    ``chi_0`` is left multiplication by ``cos a + k sin a`` and ``chi_1`` is
    right multiplication by it.
    """
    r = chi_matrix(which, alpha)
    z = np.asarray(z, dtype=float)
    return np.concatenate([z[..., :4] @ r.T, z[..., 4:] @ r.T], axis=-1)


def ks_preimage(x, y, gauge_psi: float = 0.0) -> np.ndarray:
    """A point of ``Xi0 = 0`` whose KS image is ``(x, y)``.

    Built by reading ``(x, y)`` in spherical coordinates and feeding them to
    the Euler chart with ``Psi = 0``; ``gauge_psi`` is the free fiber angle.
    Shifting it by ``d`` moves the result along the ``chi_0`` orbit by
    ``-d/2``.
    """
    from .charts import EulerChart, PhasePoint6, cartesian_to_spherical, euler_to_phase

    sph = cartesian_to_spherical(PhasePoint6(np.asarray(x, float), np.asarray(y, float)))
    chart = EulerChart(
        rho=sph.rho, phi=sph.phi, theta=sph.theta, psi=gauge_psi,
        P=sph.P, Phi=sph.Phi, Theta=sph.Theta, Psi=0.0,
    )
    return euler_to_phase(chart)
