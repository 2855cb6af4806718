"""Seeded samplers for phase points and chart points."""

from __future__ import annotations

import math

import numpy as np

from .charts import ANDOYER_COLUMNS, EULER_COLUMNS, euler_to_phase_array
from .observables import Observable, gradient

PHASE_COLUMNS = ("q1", "q2", "q3", "q4", "p1", "p2", "p3", "p4")
MANIFOLDS = ("phase8", "xi0-zero", "xi1-zero", "euler-domain", "andoyer-domain")

MIN_Q = 0.1
MIN_SIN_THETA = 0.05


def _phase(rng: np.random.Generator, n: int, low: float = -2.0, high: float = 2.0) -> np.ndarray:
    """Uniform in ``[low, high]^8``, rejecting ``|q| < 0.1``."""
    out = np.empty((0, 8))
    while len(out) < n:
        z = rng.uniform(low, high, size=(2 * (n - len(out)) + 4, 8))
        z = z[np.linalg.norm(z[:, :4], axis=1) >= MIN_Q]
        out = np.vstack([out, z])
    return out[:n]


def project_bilinear(z: np.ndarray, obs: Observable) -> np.ndarray:
    """Move ``p`` orthogonally onto the zero set of a bilinear (linear in ``p``)."""
    z = np.array(z, dtype=float)
    v = gradient(obs, z)[..., 4:]
    val = np.sum(z[..., 4:] * v, axis=-1)  # a bilinear equals p . dB/dp
    z[..., 4:] -= (val / np.sum(v * v, axis=-1))[..., None] * v
    return z


def phase_points(rng: np.random.Generator, n: int, constraint: str | None = None) -> np.ndarray:
    z = _phase(rng, n)
    if constraint == "xi0":
        z = project_bilinear(z, Observable.xi0)
    elif constraint == "xi1":
        z = project_bilinear(z, Observable.xi1)
    elif constraint is not None:
        raise ValueError(f"unknown constraint {constraint!r}")
    return z


def euler_charts(rng: np.random.Generator, n: int, Psi_zero: bool = False) -> np.ndarray:
    """Rows ``(rho, phi, theta, psi, P, Phi, Theta, Psi)`` inside the chart domain."""
    th_lo = math.asin(MIN_SIN_THETA)
    c = np.column_stack([
        rng.uniform(0.2, 2.0, n),
        rng.uniform(0.0, 2 * math.pi, n),
        rng.uniform(th_lo, math.pi - th_lo, n),
        rng.uniform(0.0, 4 * math.pi, n),
        rng.uniform(-2.0, 2.0, (n, 4)),
    ])
    if Psi_zero:
        c[:, 7] = 0.0
    return c


def andoyer_charts(rng: np.random.Generator, n: int) -> np.ndarray:
    """Rows ``(rho, lambda, mu, nu, P, Lambda, M, N)`` with ``M > 0``, ``|Lambda|, |N| <= M``."""
    M = rng.uniform(0.1, 2.0, n)
    return np.column_stack([
        rng.uniform(0.2, 2.0, n),
        rng.uniform(0.0, 2 * math.pi, (n, 3)),
        rng.uniform(-2.0, 2.0, n),
        M * rng.uniform(-1.0, 1.0, n),
        M,
        M * rng.uniform(-1.0, 1.0, n),
    ])


def sample(manifold: str, count: int, seed: int) -> tuple[tuple[str, ...], np.ndarray]:
    """Column names and rows for one of :data:`MANIFOLDS`."""
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = np.random.default_rng(seed)
    if manifold == "phase8":
        return PHASE_COLUMNS, phase_points(rng, count)
    if manifold == "xi0-zero":
        return PHASE_COLUMNS, phase_points(rng, count, "xi0")
    if manifold == "xi1-zero":
        return PHASE_COLUMNS, phase_points(rng, count, "xi1")
    if manifold == "euler-domain":
        return EULER_COLUMNS, euler_charts(rng, count)
    if manifold == "andoyer-domain":
        return ANDOYER_COLUMNS, andoyer_charts(rng, count)
    raise ValueError(f"unknown manifold {manifold!r}; choose from {MANIFOLDS}")


def euler_phase_points(rng: np.random.Generator, n: int, Psi_zero: bool = True):
    """Charts and their phase images; with ``Psi_zero`` the images lie on ``Xi0 = 0``."""
    c = euler_charts(rng, n, Psi_zero)
    return c, np.array([euler_to_phase_array(row) for row in c])
