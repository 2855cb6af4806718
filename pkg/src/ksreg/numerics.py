"""Finite-difference Jacobians and symplecticity defects."""

from __future__ import annotations

import numpy as np


def omega(n: int) -> np.ndarray:
    """Canonical structure matrix for ``n`` positions followed by ``n`` momenta."""
    o = np.zeros((2 * n, 2 * n))
    o[:n, n:] = np.eye(n)
    o[n:, :n] = -np.eye(n)
    return o


def jacobian(f, x, h: float = 1e-3) -> np.ndarray:
    """Fourth-order central-difference Jacobian of ``f`` at ``x``.

    The step is ``h * max(1, |x_i|)``; truncation error is ``O(h^4)``.
    """
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        step = h * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = step
        d = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * step)
        cols.append(np.asarray(d, dtype=float))
    return np.stack(cols, axis=-1)


def symplectic_defect(jac: np.ndarray) -> float:
    """``max |J^T Omega J - Omega|`` for a square Jacobian."""
    n = jac.shape[0] // 2
    o = omega(n)
    return float(np.max(np.abs(jac.T @ o @ jac - o)))


def poisson_matrix(jac: np.ndarray) -> np.ndarray:
    """Brackets ``{F_a, F_b}`` of the components of a map with Jacobian ``jac``."""
    n = jac.shape[1] // 2
    return jac @ omega(n) @ jac.T


def scale_rel(err, scale):
    """``err / max(1, |scale|)``, elementwise."""
    return np.abs(err) / np.maximum(1.0, np.abs(scale))


def jacobian_cs(f, x, h: float = 1e-30) -> np.ndarray:
    """Complex-step Jacobian, exact to rounding for real-analytic ``f``.

    ``f`` must propagate complex inputs (numpy ufuncs, no ``abs`` or
    ``math`` calls on the perturbed values).
    """
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        xc = x.astype(complex)
        xc[i] += 1j * h
        cols.append(np.imag(f(xc)) / h)
    return np.stack(cols, axis=-1)
